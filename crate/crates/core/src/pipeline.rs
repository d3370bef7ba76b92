//! End-to-end batch run over a set of cities.
//!
//! Per city: transform plan, stationarity checks, AR-ARCH innovations, GLM
//! and GAM fits. Across cities: significance tallies, residual matrices, PCA
//! with decay fits, and the quadrant proxy analysis. Per-city stages run in
//! parallel; everything in the report is deterministic.

use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adf::{adf_decision_table, adf_test, AdfOutcome, AdfTable, LagOrder, DEFAULT_MAX_LAG};
use crate::arch::{select_innovations, InnovationSelection};
use crate::data::{builtin_atl, city_meta};
use crate::diagnostics::{
    fit_decay, pca, quadrant_analysis, DecayReport, PcaResult, PcaScaling, ProxyKind, QuadrantReport, QuadrantThresholds,
    ResidualMatrix, DEFAULT_P_CUT,
};
use crate::error::{Error, Result};
use crate::panel::{CityCode, CityPanel, Factor};
use crate::regression::{
    fit_gam, fit_glm, significance_summary, CityPValues, GamFit, GlmFit, LambdaPolicy, Model, Regressor, SignificanceTable,
};
use crate::transforms::{apply_plan, plan_transforms, price_returns, TransformPlan, TransformedSeries};

/// Environment variable naming the default directory of `<CODE>.csv` panels.
pub const DATA_DIR_ENV: &str = "HEDONIC_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadrantConfig {
    pub model: Model,
    pub p_cut: f64,
    pub water_area_cut: f64,
    pub seniors_alone_cut: f64,
}

impl Default for QuadrantConfig {
    fn default() -> Self {
        QuadrantConfig {
            model: Model::Gam,
            p_cut: DEFAULT_P_CUT,
            water_area_cut: ProxyKind::WaterArea.default_cut(),
            seniors_alone_cut: ProxyKind::SeniorsAlone.default_cut(),
        }
    }
}

impl QuadrantConfig {
    pub fn thresholds(&self, proxy: ProxyKind) -> QuadrantThresholds {
        QuadrantThresholds {
            proxy_cut: match proxy {
                ProxyKind::WaterArea => self.water_area_cut,
                ProxyKind::SeniorsAlone => self.seniors_alone_cut,
            },
            p_cut: self.p_cut,
        }
    }
}

/// Run configuration; loadable from TOML, every field optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory of `<CODE>.csv` panels. Without one, only the built-in ATL
    /// panel is available.
    pub data_dir: Option<PathBuf>,
    pub cities: Vec<CityCode>,
    pub adf_significance: f64,
    pub adf_max_lag: usize,
    pub q_candidates: Vec<usize>,
    pub lambda_policy: LambdaPolicy,
    /// Threshold for the significance tallies.
    pub significance_threshold: f64,
    pub pca_scaling: PcaScaling,
    pub quadrant: QuadrantConfig,
    pub output_dir: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data_dir: None,
            cities: vec![CityCode::new("ATL").expect("valid code")],
            adf_significance: 0.10,
            adf_max_lag: DEFAULT_MAX_LAG,
            q_candidates: vec![1, 2],
            lambda_policy: LambdaPolicy::Gcv,
            significance_threshold: 0.10,
            pca_scaling: PcaScaling::default(),
            quadrant: QuadrantConfig::default(),
            output_dir: None,
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cities.is_empty() {
            return Err(Error::Precondition("no cities configured".into()));
        }
        for (name, v) in [
            ("adf_significance", self.adf_significance),
            ("significance_threshold", self.significance_threshold),
            ("quadrant.p_cut", self.quadrant.p_cut),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.q_candidates.is_empty() || self.q_candidates.windows(2).any(|w| w[0] >= w[1]) || self.q_candidates[0] == 0 {
            return Err(Error::Config("q_candidates must be positive and strictly ascending".into()));
        }
        Ok(())
    }

    /// SHA-256 of the settings that affect results (output location and
    /// formats excluded).
    pub fn hash(&self) -> String {
        let mut analysis = self.clone();
        analysis.output_dir = None;
        analysis.formats = Vec::new();
        analysis.cities.sort();
        analysis.cities.dedup();
        let json = serde_json::to_string(&analysis).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn lag(&self) -> LagOrder {
        LagOrder::Auto { max: self.adf_max_lag }
    }

    /// Resolves a city's panel: `<data_dir>/<CODE>.csv`, or the built-in
    /// ATL panel when no data directory is configured.
    pub fn load_panel(&self, city: &CityCode) -> Result<CityPanel> {
        match &self.data_dir {
            Some(dir) => {
                let path = dir.join(format!("{city}.csv"));
                let file = File::open(&path)
                    .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
                CityPanel::read_csv(file, city.clone())
            }
            None if city.as_str() == "ATL" => Ok(builtin_atl()),
            None => Err(Error::Config(format!(
                "no data directory for {city}; set data_dir or {DATA_DIR_ENV}"
            ))),
        }
    }
}

/// Stationarity checks for one city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// Levels of the price and every factor.
    pub levels: Vec<(String, AdfOutcome)>,
    pub price_returns: AdfOutcome,
    /// Transformed factors plus the price innovations.
    pub transformed: AdfTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityResult {
    pub city: CityCode,
    pub first_year: i32,
    pub plan: TransformPlan,
    pub factors: Vec<(Factor, TransformedSeries)>,
    pub stationarity: StationarityReport,
    pub innovation: InnovationSelection,
    pub glm: GlmFit,
    pub gam: GamFit,
    pub warnings: Vec<String>,
}

impl CityResult {
    pub fn p_values(&self, model: Model) -> CityPValues {
        let (p, adj) = match model {
            Model::Glm => (&self.glm.p_values, self.glm.adjusted_r2),
            Model::Gam => (&self.gam.p_values, self.gam.adjusted_r2),
        };
        CityPValues {
            city: self.city.clone(),
            model,
            p_values: p.iter().map(|f| (f.factor.clone(), f.p_value)).collect(),
            adjusted_r2: adj,
        }
    }

    pub fn residuals(&self, model: Model) -> &[f64] {
        match model {
            Model::Glm => &self.glm.residuals,
            Model::Gam => &self.gam.residuals,
        }
    }

    pub fn p_value(&self, model: Model, factor: Factor) -> Option<f64> {
        let p = match model {
            Model::Glm => &self.glm.p_values,
            Model::Gam => &self.gam.p_values,
        };
        p.iter().find(|f| f.factor == factor.label()).map(|f| f.p_value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityFailure {
    pub city: CityCode,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPair<T> {
    pub glm: T,
    pub gam: T,
}

impl<T> ModelPair<T> {
    pub fn get(&self, model: Model) -> &T {
        match model {
            Model::Glm => &self.glm,
            Model::Gam => &self.gam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantSection {
    pub proxy: ProxyKind,
    pub factor: Factor,
    pub model: Model,
    pub report: QuadrantReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_name: String,
    pub crate_version: String,
    pub config_hash: String,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub provenance: Provenance,
    /// Completed cities, alphabetical.
    pub cities: Vec<CityResult>,
    pub failures: Vec<CityFailure>,
    pub significance: Option<SignificanceTable>,
    pub residuals: Option<ModelPair<ResidualMatrix>>,
    pub pca: Option<ModelPair<PcaResult>>,
    pub decay: Option<ModelPair<DecayReport>>,
    pub quadrants: Vec<QuadrantSection>,
    pub warnings: Vec<String>,
}

impl PipelineReport {
    pub fn city(&self, city: &CityCode) -> Option<&CityResult> {
        self.cities.iter().find(|c| &c.city == city)
    }

    /// True when every requested city finished every stage.
    pub fn all_completed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn stage<T>(city: &CityCode, name: &str, r: Result<T>) -> std::result::Result<T, CityFailure> {
    r.map_err(|e| CityFailure {
        city: city.clone(),
        stage: name.to_owned(),
        message: e.to_string(),
    })
}

/// Factor regressors named by their display labels.
pub fn regressors(factors: &[(Factor, TransformedSeries)]) -> Vec<Regressor> {
    factors
        .iter()
        .map(|(f, s)| Regressor::new(f.label(), s.values.clone()))
        .collect()
}

/// Runs every per-city stage on one panel.
pub fn run_city(panel: &CityPanel, config: &PipelineConfig) -> std::result::Result<CityResult, CityFailure> {
    let city = panel.city();
    let lag = config.lag();
    let sig = config.adf_significance;
    let mut warnings = Vec::new();

    let plan = plan_transforms(panel);
    let factors = stage(city, "transform", apply_plan(panel, &plan))?;
    let returns = stage(city, "transform", price_returns(panel))?;

    let mut levels = Vec::new();
    let mut level_series = vec![("Av Price".to_owned(), panel.prices())];
    level_series.extend(Factor::ALL.iter().map(|f| (f.label().to_owned(), panel.factor_levels(*f))));
    for (label, series) in level_series {
        match adf_test(&series, lag, sig) {
            Ok(outcome) => levels.push((label, outcome)),
            Err(e) => warnings.push(format!("ADF on {label} levels skipped: {e}")),
        }
    }
    let price_adf = stage(city, "adf", adf_test(&returns.values, lag, sig))?;

    let innovation = stage(
        city,
        "innovate",
        select_innovations(&returns, &config.q_candidates, sig, lag),
    )?;
    warnings.extend(innovation.warnings.iter().cloned());
    let transformed = stage(
        city,
        "adf",
        adf_decision_table(&factors, Some(&innovation.innovations), lag, sig),
    )?;
    for row in &transformed.rows {
        if !row.outcome.verdict.reject_unit_root && row.label != "Av Price Innovations" {
            warnings.push(format!(
                "{} ({}) does not reject a unit root at {sig} (p = {:.3}); kept in the regression",
                row.label,
                row.kind.tag(),
                row.outcome.result.p_value
            ));
        }
    }

    let x = regressors(&factors);
    let y = &innovation.innovations.values;
    let glm = stage(city, "fit-glm", fit_glm(y, &x))?;
    let gam = stage(city, "fit-gam", fit_gam(y, &x, config.lambda_policy))?;
    warnings.extend(gam.warnings.iter().cloned());

    Ok(CityResult {
        city: city.clone(),
        first_year: returns.start_year,
        plan,
        factors,
        stationarity: StationarityReport {
            levels,
            price_returns: price_adf,
            transformed,
        },
        innovation,
        glm,
        gam,
        warnings,
    })
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    config.validate()?;
    let mut cities = config.cities.clone();
    cities.sort();
    cities.dedup();

    let outcomes: Vec<std::result::Result<CityResult, CityFailure>> = cities
        .par_iter()
        .map(|city| {
            let panel = stage(city, "ingest", config.load_panel(city))?;
            run_city(&panel, config)
        })
        .collect();
    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(c) => completed.push(c),
            Err(f) => failures.push(f),
        }
    }
    cross_city(config, completed, failures)
}

/// Cross-city stages over already completed per-city results.
pub fn cross_city(config: &PipelineConfig, cities: Vec<CityResult>, failures: Vec<CityFailure>) -> Result<PipelineReport> {
    let mut warnings: Vec<String> = Vec::new();
    for f in &failures {
        warnings.push(format!("{} failed at {}: {}", f.city, f.stage, f.message));
    }
    for c in &cities {
        warnings.extend(c.warnings.iter().map(|w| format!("{}: {w}", c.city)));
    }

    let significance = if cities.is_empty() {
        None
    } else {
        let entries: Vec<CityPValues> = cities
            .iter()
            .flat_map(|c| [c.p_values(Model::Glm), c.p_values(Model::Gam)])
            .collect();
        Some(significance_summary(&entries, config.significance_threshold)?)
    };

    let residuals = residual_matrices(&cities, &mut warnings)?;
    let (pca_pair, decay) = match &residuals {
        Some(r) if r.glm.n_cities() >= 2 => {
            let mut run = |m: &ResidualMatrix, model: Model| -> (Option<PcaResult>, Option<DecayReport>) {
                let p = match pca(m, config.pca_scaling) {
                    Ok(p) => p,
                    Err(e) => {
                        warnings.push(format!("PCA of {model} residuals skipped: {e}"));
                        return (None, None);
                    }
                };
                match fit_decay(&p.explained) {
                    Ok(d) => (Some(p), Some(d)),
                    Err(e) => {
                        warnings.push(format!("decay fit of {model} explained variance skipped: {e}"));
                        (Some(p), None)
                    }
                }
            };
            let (pg, dg) = run(&r.glm, Model::Glm);
            let (pa, da) = run(&r.gam, Model::Gam);
            (
                pg.zip(pa).map(|(glm, gam)| ModelPair { glm, gam }),
                dg.zip(da).map(|(glm, gam)| ModelPair { glm, gam }),
            )
        }
        _ => {
            warnings.push("PCA stage skipped: fewer than 2 cities completed".into());
            (None, None)
        }
    };

    let quadrants = quadrant_sections(config, &cities, &mut warnings)?;

    Ok(PipelineReport {
        provenance: Provenance {
            crate_name: env!("CARGO_PKG_NAME").to_owned(),
            crate_version: env!("CARGO_PKG_VERSION").to_owned(),
            config_hash: config.hash(),
            config: config.clone(),
        },
        cities,
        failures,
        significance,
        residuals,
        pca: pca_pair,
        decay,
        quadrants,
        warnings,
    })
}

fn residual_matrices(cities: &[CityResult], warnings: &mut Vec<String>) -> Result<Option<ModelPair<ResidualMatrix>>> {
    let Some(first) = cities.first() else {
        return Ok(None);
    };
    let (year, len) = (first.first_year, first.glm.residuals.len());
    if cities.iter().any(|c| c.first_year != year || c.glm.residuals.len() != len) {
        warnings.push("residual matrices skipped: cities cover different years".into());
        return Ok(None);
    }
    let build = |model: Model| {
        ResidualMatrix::from_columns(
            year,
            cities.iter().map(|c| (c.city.clone(), c.residuals(model).to_vec())).collect(),
        )
    };
    Ok(Some(ModelPair {
        glm: build(Model::Glm)?,
        gam: build(Model::Gam)?,
    }))
}

fn quadrant_sections(
    config: &PipelineConfig,
    cities: &[CityResult],
    warnings: &mut Vec<String>,
) -> Result<Vec<QuadrantSection>> {
    let with_meta: Vec<(&CityResult, _)> = cities
        .iter()
        .filter_map(|c| match city_meta(&c.city) {
            Some(m) => Some((c, m)),
            None => {
                warnings.push(format!("{}: no census proxies; left out of the quadrant analysis", c.city));
                None
            }
        })
        .collect();
    if with_meta.is_empty() {
        return Ok(Vec::new());
    }
    let model = config.quadrant.model;
    [ProxyKind::WaterArea, ProxyKind::SeniorsAlone]
        .into_iter()
        .map(|proxy| {
            let factor = proxy.factor();
            let p: Vec<(CityCode, f64)> = with_meta
                .iter()
                .map(|(c, _)| (c.city.clone(), c.p_value(model, factor).unwrap_or(f64::NAN)))
                .collect();
            let v: Vec<(CityCode, f64)> = with_meta.iter().map(|(c, m)| (c.city.clone(), proxy.value(m))).collect();
            Ok(QuadrantSection {
                proxy,
                factor,
                model,
                report: quadrant_analysis(&p, &v, config.quadrant.thresholds(proxy))?,
            })
        })
        .collect()
}
