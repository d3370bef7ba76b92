use std::fs;
use std::path::Path;

use hedonic::data::builtin_atl;
use hedonic::error::Error;
use hedonic::panel::{CityCode, CityPanel, YearRow};
use hedonic::pipeline::{run_pipeline, PipelineConfig};
use hedonic::regression::Model;
use hedonic::report::{emit_tables, report_tables};

fn code(s: &str) -> CityCode {
    CityCode::new(s).unwrap()
}

/// ATL with a deterministic wobble on every column, under another code.
fn variant(city: &str, k: u64) -> CityPanel {
    let rows = builtin_atl()
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let w = ((i as u64 * (3 + k)) % 7) as f64;
            YearRow {
                year: r.year,
                av_price: r.av_price * (1.0 + 0.01 * k as f64) + 1500.0 * w,
                new_homes: r.new_homes + (i as u64 * (5 + k)) % 11,
                accessible: r.accessible + (i as u64 * 7) % (5 + k),
                central_ac: r.central_ac + (i as u64 * (2 + k)) % 13,
                green: r.green + (i as u64 * 3) % (4 + k),
                waterfront: r.waterfront + (i as u64 * (1 + k)) % 5,
            }
        })
        .collect();
    CityPanel::new(code(city), rows).unwrap()
}

fn write_panel(dir: &Path, panel: &CityPanel) {
    let f = fs::File::create(dir.join(format!("{}.csv", panel.city()))).unwrap();
    panel.write_csv(f).unwrap();
}

fn data_dir(panels: &[CityPanel]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for p in panels {
        write_panel(dir.path(), p);
    }
    dir
}

fn config(dir: &Path, cities: &[&str]) -> PipelineConfig {
    PipelineConfig {
        data_dir: Some(dir.to_owned()),
        cities: cities.iter().map(|c| code(c)).collect(),
        ..PipelineConfig::default()
    }
}

#[test]
fn single_builtin_city_has_no_pca() {
    let report = run_pipeline(&PipelineConfig::default()).unwrap();
    assert!(report.all_completed());
    let atl = report.city(&code("ATL")).unwrap();
    assert_eq!(atl.innovation.innovations.len(), 22);
    assert_eq!(atl.glm.residuals.len(), 22);
    assert_eq!(atl.gam.residuals.len(), 22);
    assert!(report.pca.is_none());
    assert!(report.warnings.iter().any(|w| w.contains("PCA stage skipped")));
}

#[test]
fn three_cities_fill_every_section() {
    let dir = data_dir(&[builtin_atl(), variant("BBB", 1), variant("CCC", 2)]);
    let report = run_pipeline(&config(dir.path(), &["CCC", "ATL", "BBB", "ATL"])).unwrap();
    assert!(report.all_completed(), "{:?}", report.failures);
    let names: Vec<&str> = report.cities.iter().map(|c| c.city.as_str()).collect();
    assert_eq!(names, ["ATL", "BBB", "CCC"]);
    let r = report.residuals.as_ref().unwrap();
    assert_eq!(r.glm.cities(), [code("ATL"), code("BBB"), code("CCC")]);
    assert_eq!(r.gam.n_years(), 22);
    let pca = report.pca.as_ref().unwrap();
    assert_eq!(pca.get(Model::Gam).explained.len(), 3);
    // three proportions are too few for the decay fits
    assert!(report.decay.is_none());
    assert!(report.warnings.iter().any(|w| w.starts_with("decay fit of glm")));
    let sig = report.significance.as_ref().unwrap();
    assert_eq!(sig.cities.len(), 3);
    let names: Vec<String> = report_tables(&report).into_iter().map(|t| t.name).collect();
    for want in ["explained_variance", "residuals_gam", "factor_significance", "significance_tallies"] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
}

#[test]
fn four_cities_add_decay_fits() {
    let dir = data_dir(&[builtin_atl(), variant("BBB", 1), variant("CCC", 2), variant("DDD", 3)]);
    let report = run_pipeline(&config(dir.path(), &["ATL", "BBB", "CCC", "DDD"])).unwrap();
    let decay = report.decay.as_ref().expect("decay fits");
    assert_eq!(decay.glm.exponential.fitted_curve.len(), 4);
    let names: Vec<String> = report_tables(&report).into_iter().map(|t| t.name).collect();
    for want in ["decay_fits", "decay_plot_glm", "decay_plot_gam"] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
}

#[test]
fn cities_are_separable() {
    let dir = data_dir(&[builtin_atl(), variant("BBB", 1)]);
    let both = run_pipeline(&config(dir.path(), &["ATL", "BBB"])).unwrap();
    for city in ["ATL", "BBB"] {
        let alone = run_pipeline(&config(dir.path(), &[city])).unwrap();
        assert_eq!(alone.cities[0], *both.city(&code(city)).unwrap());
    }
}

#[test]
fn missing_city_is_recorded_and_others_continue() {
    let dir = data_dir(&[builtin_atl()]);
    let report = run_pipeline(&config(dir.path(), &["ATL", "ZZZ"])).unwrap();
    assert!(!report.all_completed());
    assert_eq!(report.cities.len(), 1);
    assert_eq!(report.failures[0].city, code("ZZZ"));
    assert_eq!(report.failures[0].stage, "ingest");
    assert!(report.warnings.iter().any(|w| w.starts_with("ZZZ failed at ingest")));
}

#[test]
fn empty_city_list_is_rejected() {
    let cfg = PipelineConfig {
        cities: Vec::new(),
        ..PipelineConfig::default()
    };
    assert!(matches!(run_pipeline(&cfg), Err(Error::Precondition(_))));
}

#[test]
fn reruns_are_byte_identical() {
    let data = data_dir(&[builtin_atl(), variant("BBB", 1), variant("CCC", 2)]);
    let cfg = config(data.path(), &["ATL", "BBB", "CCC"]);
    let snapshot = || {
        let out = tempfile::tempdir().unwrap();
        let report = run_pipeline(&cfg).unwrap();
        emit_tables(&report, out.path(), &cfg.formats)
            .unwrap()
            .into_iter()
            .map(|p| (p.file_name().unwrap().to_owned(), fs::read(&p).unwrap()))
            .collect::<Vec<_>>()
    };
    let a = snapshot();
    assert!(a.len() > 10);
    assert_eq!(a, snapshot());
}

#[test]
fn config_hash_ignores_output_settings() {
    let a = PipelineConfig::default();
    let mut b = a.clone();
    b.output_dir = Some("elsewhere".into());
    b.formats.pop();
    assert_eq!(a.hash(), b.hash());
    b.adf_significance = 0.05;
    assert_ne!(a.hash(), b.hash());
}
