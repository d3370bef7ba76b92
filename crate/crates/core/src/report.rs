//! Tabular output of pipeline results.
//!
//! Every table is built in memory as strings and written in a fixed order,
//! so identical reports produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::diagnostics::{DecayReport, PcaResult, QuadrantReport, ResidualMatrix};
use crate::error::Result;
use crate::pipeline::{OutputFormat, PipelineReport};
use crate::regression::{Model, SignificanceTable};

/// Below this a p-value is printed as `**`.
pub const STARRED_BELOW: f64 = 0.01;

/// `**` for p < 0.01, otherwise three decimals.
pub fn format_p_value(p: f64) -> String {
    if p < STARRED_BELOW {
        "**".to_owned()
    } else {
        format!("{p:.3}")
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        String::new()
    }
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_owned(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 table")
    }
}

pub fn transform_plan_table(report: &PipelineReport) -> Table {
    let mut t = Table::new("transform_plan", &["city", "factor", "transform"]);
    for c in &report.cities {
        for (f, k) in &c.plan.entries {
            t.push(vec![c.city.to_string(), f.label().into(), k.tag().into()]);
        }
    }
    t
}

/// Transformed factor series in long form.
pub fn transformed_series_table(report: &PipelineReport) -> Table {
    let mut t = Table::new("transformed_factors", &["city", "factor", "transform", "year", "value"]);
    for c in &report.cities {
        for (f, s) in &c.factors {
            for (y, v) in s.years().iter().zip(&s.values) {
                t.push(vec![c.city.to_string(), f.label().into(), s.kind.tag().into(), y.to_string(), num(*v)]);
            }
        }
    }
    t
}

pub fn stationarity_table(report: &PipelineReport) -> Table {
    let mut t = Table::new(
        "stationarity",
        &["city", "series", "transform", "statistic", "p_value", "lag", "reject_unit_root"],
    );
    for c in &report.cities {
        let s = &c.stationarity;
        let mut push = |series: &str, kind: &str, o: &crate::adf::AdfOutcome| {
            t.push(vec![
                c.city.to_string(),
                series.to_owned(),
                kind.to_owned(),
                num(o.result.statistic),
                format_p_value(o.result.p_value),
                o.result.lag_order.to_string(),
                o.verdict.reject_unit_root.to_string(),
            ]);
        };
        for (label, o) in &s.levels {
            push(label, "level", o);
        }
        push("Av Price", "rtn", &s.price_returns);
        for row in &s.transformed.rows {
            push(&row.label, row.kind.tag(), &row.outcome);
        }
    }
    t
}

pub fn innovation_fit_table(report: &PipelineReport) -> Table {
    let mut t = Table::new(
        "innovation_fits",
        &[
            "city", "q", "stationary", "adf_p_value", "mu", "phi", "omega", "alpha1", "nu", "log_likelihood", "converged",
        ],
    );
    for c in &report.cities {
        let sel = &c.innovation;
        let p = &sel.fit.params;
        let adf = sel.adf_for(sel.chosen_q).map_or(f64::NAN, |a| a.p_value);
        t.push(vec![
            c.city.to_string(),
            sel.chosen_q.to_string(),
            sel.stationary.to_string(),
            format_p_value(adf),
            num(p.mu),
            p.phi.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "),
            num(p.omega),
            num(p.alpha1),
            num(p.nu),
            num(sel.fit.log_likelihood),
            sel.fit.converged.to_string(),
        ]);
    }
    t
}

pub fn innovations_table(report: &PipelineReport) -> Table {
    let mut t = Table::new("innovations", &["city", "year", "innovation", "sigma"]);
    for c in &report.cities {
        let s = &c.innovation.innovations;
        for (i, (z, sd)) in s.values.iter().zip(&c.innovation.fit.sigma).enumerate() {
            t.push(vec![c.city.to_string(), (s.start_year + i as i32).to_string(), num(*z), num(*sd)]);
        }
    }
    t
}

/// Factor rows by city columns, one block per model, adjusted R² last.
pub fn significance_table(sig: &SignificanceTable) -> Table {
    let mut header = vec!["model", "factor"];
    let cities: Vec<String> = sig.cities.iter().map(|c| c.to_string()).collect();
    header.extend(cities.iter().map(|s| s.as_str()));
    let mut t = Table::new("factor_significance", &header);
    for model in [Model::Gam, Model::Glm] {
        for (f, row) in sig.factors.iter().zip(sig.p_values(model)) {
            let mut r = vec![model.to_string(), f.clone()];
            r.extend(row.iter().map(|p| format_p_value(*p)));
            t.push(r);
        }
        let adj = match model {
            Model::Glm => &sig.glm_adjusted_r2,
            Model::Gam => &sig.gam_adjusted_r2,
        };
        let mut r = vec![model.to_string(), "Adj. R2".to_owned()];
        r.extend(adj.iter().map(|v| format!("{v:.3}")));
        t.push(r);
    }
    t
}

pub fn tally_table(sig: &SignificanceTable) -> Table {
    let mut t = Table::new("significance_tallies", &["model", "axis", "name", "count", "threshold"]);
    for model in [Model::Gam, Model::Glm] {
        let tl = sig.tallies(model);
        for (c, n) in sig.cities.iter().zip(&tl.per_city) {
            t.push(vec![model.to_string(), "city".into(), c.to_string(), n.to_string(), sig.threshold.to_string()]);
        }
        for (f, n) in sig.factors.iter().zip(&tl.per_factor) {
            t.push(vec![model.to_string(), "factor".into(), f.clone(), n.to_string(), sig.threshold.to_string()]);
        }
    }
    t
}

pub fn smoother_table(report: &PipelineReport) -> Table {
    let mut t = Table::new("gam_smoothers", &["city", "factor", "lambda", "edf"]);
    for c in &report.cities {
        for s in &c.gam.smoothers {
            t.push(vec![
                c.city.to_string(),
                s.factor.clone(),
                s.lambda.map_or_else(|| "inf".to_owned(), |l| format!("{l:e}")),
                num(s.edf),
            ]);
        }
    }
    t
}

pub fn residual_table(model: Model, m: &ResidualMatrix) -> Table {
    let mut header = vec!["year".to_owned()];
    header.extend(m.cities().iter().map(|c| c.to_string()));
    let mut t = Table {
        name: format!("residuals_{model}"),
        header,
        rows: Vec::new(),
    };
    for (y, row) in m.years().iter().zip(m.rows()) {
        let mut r = vec![y.to_string()];
        r.extend(row.iter().map(|v| format!("{v:.3}")));
        t.push(r);
    }
    t
}

pub fn explained_variance_table(results: &[(Model, &PcaResult)]) -> Table {
    let k = results.iter().map(|(_, p)| p.explained.len()).max().unwrap_or(0);
    let mut header = vec!["model".to_owned(), "scaling".to_owned()];
    header.extend((1..=k).map(|i| format!("pc{i}")));
    let mut t = Table {
        name: "explained_variance".into(),
        header,
        rows: Vec::new(),
    };
    for (model, p) in results {
        let mut r = vec![model.to_string(), p.scaling.to_string()];
        r.extend(p.explained.iter().map(|v| format!("{v:.3}")));
        t.push(r);
    }
    t
}

pub fn decay_table(results: &[(Model, &DecayReport)]) -> Table {
    let mut t = Table::new(
        "decay_fits",
        &["model", "law", "amplitude", "rate", "beta", "r2", "mse", "log_r2", "verdict"],
    );
    for (model, d) in results {
        for fit in [&d.exponential, &d.power] {
            t.push(vec![
                model.to_string(),
                fit.model.to_string(),
                num(fit.amplitude),
                num(fit.rate),
                fit.beta.map(num).unwrap_or_default(),
                num(fit.r2),
                format!("{:.6e}", fit.mse),
                num(fit.log_r2),
                (fit.model == d.verdict).to_string(),
            ]);
        }
    }
    t
}

/// Proportion, its log and both fitted curves per component, for plotting.
pub fn decay_plot_table(explained: &[f64], decay: &DecayReport) -> Table {
    let mut t = Table::new(
        "decay_plot",
        &["component_index", "proportion", "ln_proportion", "exp_fit", "pow_fit"],
    );
    for (i, p) in explained.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            num(*p),
            num(p.ln()),
            num(decay.exponential.fitted_curve[i]),
            num(decay.power.fitted_curve[i]),
        ]);
    }
    t
}

/// City, proxy, p-value and quadrant label, for plotting.
pub fn quadrant_plot_table(name: &str, q: &QuadrantReport) -> Table {
    let mut t = Table::new(name, &["city", "proxy", "p_value", "quadrant"]);
    for e in &q.entries {
        t.push(vec![e.city.to_string(), num(e.proxy), num(e.p_value), e.quadrant.to_string()]);
    }
    t
}

pub fn warnings_table(report: &PipelineReport) -> Table {
    let mut t = Table::new("warnings", &["warning"]);
    for w in &report.warnings {
        t.push(vec![w.clone()]);
    }
    t
}

/// All CSV tables of a report, in output order.
pub fn report_tables(report: &PipelineReport) -> Vec<Table> {
    let mut tables = vec![
        transform_plan_table(report),
        transformed_series_table(report),
        stationarity_table(report),
        innovation_fit_table(report),
        innovations_table(report),
        smoother_table(report),
    ];
    if let Some(sig) = &report.significance {
        tables.push(significance_table(sig));
        tables.push(tally_table(sig));
    }
    if let Some(r) = &report.residuals {
        tables.push(residual_table(Model::Glm, &r.glm));
        tables.push(residual_table(Model::Gam, &r.gam));
    }
    if let Some(p) = &report.pca {
        tables.push(explained_variance_table(&[(Model::Glm, &p.glm), (Model::Gam, &p.gam)]));
        if let Some(d) = &report.decay {
            tables.push(decay_table(&[(Model::Glm, &d.glm), (Model::Gam, &d.gam)]));
            for model in [Model::Glm, Model::Gam] {
                let mut t = decay_plot_table(&p.get(model).explained, d.get(model));
                t.name = format!("decay_plot_{model}");
                tables.push(t);
            }
        }
    }
    for q in &report.quadrants {
        tables.push(quadrant_plot_table(&format!("quadrants_{}", q.proxy), &q.report));
    }
    tables.push(warnings_table(report));
    tables
}

/// Writes the report's tables into `dir` and returns the written paths.
pub fn emit_tables(report: &PipelineReport, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Csv) {
        for t in report_tables(report) {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv_string())?;
            written.push(path);
        }
    }
    if formats.contains(&OutputFormat::Json) {
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
