//! Command-line front end over the `hedonic` library.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hedonic::data::{builtin_residuals, city_meta, published_factor_p_values};
use hedonic::diagnostics::{fit_decay, pca, quadrant_analysis, PcaScaling, ProxyKind, QuadrantReport, ResidualMatrix};
use hedonic::error::{Error, Result};
use hedonic::panel::{CityCode, CityPanel};
use hedonic::pipeline::{run_pipeline, OutputFormat, PipelineConfig, PipelineReport, DATA_DIR_ENV};
use hedonic::regression::{LambdaPolicy, Model};
use hedonic::report::{self, Table};

#[derive(Parser)]
#[command(name = "hedonic", version, about = "Hedonic price modeling for annual city panels")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Directory of `<CODE>.csv` panels (default: $HEDONIC_DATA_DIR).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a city panel and print it in canonical form.
    Ingest {
        #[arg(long)]
        city: String,
        /// Panel CSV; defaults to the configured data directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Transform plan and transformed factor series.
    Transform(CityArgs),
    /// Unit-root tests on levels, returns and transformed series.
    Adf(CityArgs),
    /// AR(q)-ARCH(1) innovations of the price returns.
    Innovate(CityArgs),
    /// GLM and/or GAM fits of innovations on the factors.
    Fit {
        #[command(flatten)]
        cities: CityArgs,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// gcv | df:<d> | linear | lambda:<v>
        #[arg(long)]
        lambda_policy: Option<LambdaPolicy>,
    },
    /// Explained variance of residual principal components.
    Pca(ResidualArgs),
    /// Exponential versus power-law decay of explained variance.
    Decay(ResidualArgs),
    /// Proxy by p-value quadrants.
    Quadrant(QuadrantArgs),
    /// Full pipeline with every table.
    Run {
        #[command(flatten)]
        cities: CityArgs,
    },
    /// CSV series for decay and quadrant charts.
    PlotData {
        #[command(flatten)]
        residuals: ResidualArgs,
        #[command(flatten)]
        quadrant: QuadrantArgs,
    },
}

#[derive(Args)]
struct CityArgs {
    /// City codes; repeatable. Overrides the configured list.
    #[arg(long = "city")]
    cities: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Glm,
    Gam,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Glm => Model::Glm,
            ModelArg::Gam => Model::Gam,
        }
    }
}

#[derive(Args)]
struct ResidualArgs {
    /// `year,<CITY>,...` residual table; defaults to the built-in study residuals.
    #[arg(long)]
    residuals: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    scaling: Option<PcaScaling>,
}

#[derive(Args)]
struct QuadrantArgs {
    /// water-area | seniors-alone; both when omitted.
    #[arg(long)]
    proxy: Option<ProxyKind>,
    /// Take p-values from a pipeline run instead of the published table.
    #[arg(long)]
    from_run: bool,
    #[arg(long)]
    proxy_cut: Option<f64>,
    #[arg(long)]
    p_cut: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Returns whether every requested city completed.
fn run(cli: Cli) -> Result<bool> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(d) = cli.data_dir.clone() {
        config.data_dir = Some(d);
    } else if config.data_dir.is_none() {
        config.data_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
    }
    if let Some(o) = cli.out.clone() {
        config.output_dir = Some(o);
    }
    if let Some(f) = cli.format {
        config.formats = vec![match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }];
    }
    let out = Output {
        dir: config.output_dir.clone(),
        formats: config.formats.clone(),
    };

    match cli.command {
        Command::Ingest { city, input } => {
            let code = CityCode::new(&city)?;
            let panel = match input {
                Some(p) => CityPanel::read_csv(fs::File::open(&p)?, code)?,
                None => config.load_panel(&code)?,
            };
            let mut buf = Vec::new();
            panel.write_csv(&mut buf)?;
            let table = csv_table(&format!("panel_{}", panel.city()), &buf)?;
            out.emit(&[table], "panel", &serde_json::to_value(&panel)?)?;
            eprintln!("{}: {} years from {}", panel.city(), panel.len(), panel.first_year());
            Ok(true)
        }
        Command::Transform(c) => {
            let rep = pipeline(&mut config, &c)?;
            let json = per_city(&rep, |r| json!({ "plan": r.plan, "factors": r.factors }));
            out.emit(&[report::transform_plan_table(&rep), report::transformed_series_table(&rep)], "transform", &json)?;
            Ok(rep.all_completed())
        }
        Command::Adf(c) => {
            let rep = pipeline(&mut config, &c)?;
            let json = per_city(&rep, |r| {
                let s = &r.stationarity;
                let mut rows: Vec<Value> = s.levels.iter().map(|(l, o)| adf_record(l, "level", o)).collect();
                rows.push(adf_record("Av Price", "rtn", &s.price_returns));
                rows.extend(s.transformed.rows.iter().map(|row| adf_record(&row.label, row.kind.tag(), &row.outcome)));
                Value::Array(rows)
            });
            out.emit(&[report::stationarity_table(&rep)], "adf", &json)?;
            Ok(rep.all_completed())
        }
        Command::Innovate(c) => {
            let rep = pipeline(&mut config, &c)?;
            let json = per_city(&rep, |r| serde_json::to_value(&r.innovation).unwrap_or(Value::Null));
            out.emit(&[report::innovation_fit_table(&rep), report::innovations_table(&rep)], "innovations", &json)?;
            Ok(rep.all_completed())
        }
        Command::Fit {
            cities,
            model,
            lambda_policy,
        } => {
            if let Some(p) = lambda_policy {
                config.lambda_policy = p;
            }
            let rep = pipeline(&mut config, &cities)?;
            let mut tables = Vec::new();
            if let Some(sig) = &rep.significance {
                let mut t = report::significance_table(sig);
                if let Some(m) = model {
                    let keep = Model::from(m).to_string();
                    t.rows.retain(|r| r[0] == keep);
                }
                tables.push(t);
            }
            if !matches!(model, Some(ModelArg::Glm)) {
                tables.push(report::smoother_table(&rep));
            }
            let json = per_city(&rep, |r| match model {
                Some(ModelArg::Glm) => json!({ "glm": r.glm }),
                Some(ModelArg::Gam) => json!({ "gam": r.gam }),
                None => json!({ "glm": r.glm, "gam": r.gam }),
            });
            out.emit(&tables, "fits", &json)?;
            Ok(rep.all_completed())
        }
        Command::Pca(a) => {
            let scaling = a.scaling.unwrap_or(config.pca_scaling);
            let mut results = Vec::new();
            for (model, m) in residual_sources(&a)? {
                results.push((model, pca(&m, scaling)?));
            }
            let refs: Vec<_> = results.iter().map(|(m, p)| (*m, p)).collect();
            let json = Value::Object(
                results
                    .iter()
                    .map(|(m, p)| Ok((m.to_string(), serde_json::to_value(p)?)))
                    .collect::<Result<_>>()?,
            );
            out.emit(&[report::explained_variance_table(&refs)], "pca", &json)?;
            Ok(true)
        }
        Command::Decay(a) => {
            let scaling = a.scaling.unwrap_or(config.pca_scaling);
            let mut results = Vec::new();
            for (model, m) in residual_sources(&a)? {
                results.push((model, fit_decay(&pca(&m, scaling)?.explained)?));
            }
            let refs: Vec<_> = results.iter().map(|(m, d)| (*m, d)).collect();
            let json = Value::Object(
                results
                    .iter()
                    .map(|(m, d)| Ok((m.to_string(), serde_json::to_value(d)?)))
                    .collect::<Result<_>>()?,
            );
            out.emit(&[report::decay_table(&refs)], "decay", &json)?;
            Ok(true)
        }
        Command::Quadrant(q) => {
            let (reports, ok) = quadrants(&mut config, &q)?;
            let tables: Vec<Table> = reports
                .iter()
                .map(|(p, r)| report::quadrant_plot_table(&format!("quadrants_{p}"), r))
                .collect();
            let json = Value::Object(
                reports
                    .iter()
                    .map(|(p, r)| Ok((p.to_string(), serde_json::to_value(r)?)))
                    .collect::<Result<_>>()?,
            );
            out.emit(&tables, "quadrants", &json)?;
            Ok(ok)
        }
        Command::Run { cities } => {
            let rep = pipeline(&mut config, &cities)?;
            match &out.dir {
                Some(dir) => {
                    for p in report::emit_tables(&rep, dir, &out.formats)? {
                        eprintln!("wrote {}", p.display());
                    }
                }
                None => out.emit(&report::report_tables(&rep), "report", &serde_json::to_value(&rep)?)?,
            }
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            Ok(rep.all_completed())
        }
        Command::PlotData { residuals, quadrant } => {
            let scaling = residuals.scaling.unwrap_or(config.pca_scaling);
            let mut tables = Vec::new();
            let mut json = serde_json::Map::new();
            for (model, m) in residual_sources(&residuals)? {
                let p = pca(&m, scaling)?;
                let d = fit_decay(&p.explained)?;
                let mut t = report::decay_plot_table(&p.explained, &d);
                t.name = format!("decay_plot_{model}");
                json.insert(t.name.clone(), table_json(&t));
                tables.push(t);
            }
            let (reports, ok) = quadrants(&mut config, &quadrant)?;
            for (proxy, r) in &reports {
                let t = report::quadrant_plot_table(&format!("quadrants_{proxy}"), r);
                json.insert(t.name.clone(), table_json(&t));
                tables.push(t);
            }
            out.emit(&tables, "plot_data", &Value::Object(json))?;
            Ok(ok)
        }
    }
}

struct Output {
    dir: Option<PathBuf>,
    formats: Vec<OutputFormat>,
}

impl Output {
    /// Writes tables as CSV and `json` as `<name>.json`, into the output
    /// directory or to stdout. Stdout gets a single format: JSON if it is
    /// the only one requested, CSV otherwise.
    fn emit(&self, tables: &[Table], name: &str, json: &Value) -> Result<()> {
        let csv = self.formats.contains(&OutputFormat::Csv);
        let js = self.formats.contains(&OutputFormat::Json);
        match &self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                if csv {
                    for t in tables {
                        write(&dir.join(format!("{}.csv", t.name)), &t.to_csv_string())?;
                    }
                }
                if js {
                    write(&dir.join(format!("{name}.json")), &pretty(json)?)?;
                }
            }
            None if js && !csv => print!("{}", pretty(json)?),
            None => {
                for (i, t) in tables.iter().enumerate() {
                    if tables.len() > 1 {
                        if i > 0 {
                            println!();
                        }
                        println!("# {}", t.name);
                    }
                    print!("{}", t.to_csv_string());
                }
            }
        }
        Ok(())
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn pipeline(config: &mut PipelineConfig, c: &CityArgs) -> Result<PipelineReport> {
    if !c.cities.is_empty() {
        config.cities = c.cities.iter().map(|s| CityCode::new(s)).collect::<Result<_>>()?;
    }
    let rep = run_pipeline(config)?;
    for f in &rep.failures {
        eprintln!("error: {} failed at {}: {}", f.city, f.stage, f.message);
    }
    Ok(rep)
}

fn per_city(rep: &PipelineReport, f: impl Fn(&hedonic::pipeline::CityResult) -> Value) -> Value {
    Value::Object(rep.cities.iter().map(|c| (c.city.to_string(), f(c))).collect())
}

fn adf_record(series: &str, transform: &str, o: &hedonic::adf::AdfOutcome) -> Value {
    json!({
        "series": series,
        "transform": transform,
        "statistic": o.result.statistic,
        "p_value": o.result.p_value,
        "lag": o.result.lag_order,
        "verdict": if o.verdict.reject_unit_root { "stationary" } else { "unit_root" },
    })
}

fn csv_table(name: &str, bytes: &[u8]) -> Result<Table> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut t = Table {
        name: name.to_owned(),
        header,
        rows: Vec::new(),
    };
    for rec in rdr.records() {
        t.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok(t)
}

fn table_json(t: &Table) -> Value {
    Value::Array(
        t.rows
            .iter()
            .map(|r| Value::Object(t.header.iter().cloned().zip(r.iter().map(|v| json!(v))).collect()))
            .collect(),
    )
}

fn residual_sources(a: &ResidualArgs) -> Result<Vec<(Model, ResidualMatrix)>> {
    match (&a.residuals, a.model) {
        (Some(path), m) => {
            let matrix = ResidualMatrix::read_csv(fs::File::open(path)?)?;
            Ok(vec![(m.map_or(Model::Gam, Model::from), matrix)])
        }
        (None, Some(m)) => Ok(vec![(m.into(), builtin_residuals(m.into()))]),
        (None, None) => Ok(vec![
            (Model::Glm, builtin_residuals(Model::Glm)),
            (Model::Gam, builtin_residuals(Model::Gam)),
        ]),
    }
}

fn quadrants(config: &mut PipelineConfig, q: &QuadrantArgs) -> Result<(Vec<(ProxyKind, QuadrantReport)>, bool)> {
    let proxies = match q.proxy {
        Some(p) => vec![p],
        None => vec![ProxyKind::WaterArea, ProxyKind::SeniorsAlone],
    };
    let run = if q.from_run {
        Some(pipeline(config, &CityArgs { cities: Vec::new() })?)
    } else {
        None
    };
    let mut out = Vec::new();
    for proxy in proxies {
        let mut th = config.quadrant.thresholds(proxy);
        if let Some(c) = q.proxy_cut {
            th.proxy_cut = c;
        }
        if let Some(c) = q.p_cut {
            th.p_cut = c;
        }
        let factor = proxy.factor();
        let model = config.quadrant.model;
        let p_values: Vec<(CityCode, f64)> = match &run {
            Some(rep) => rep
                .cities
                .iter()
                .filter_map(|c| c.p_value(model, factor).map(|p| (c.city.clone(), p)))
                .collect(),
            None => published_factor_p_values(model, factor),
        };
        // cities without census metadata drop out of the analysis
        let p_values: Vec<(CityCode, f64)> = p_values.into_iter().filter(|(c, _)| city_meta(c).is_some()).collect();
        let proxy_values: Vec<(CityCode, f64)> = p_values
            .iter()
            .filter_map(|(c, _)| city_meta(c).map(|m| (c.clone(), proxy.value(&m))))
            .collect();
        if proxy_values.is_empty() {
            return Err(Error::Precondition(format!("no city has {proxy} metadata")));
        }
        out.push((proxy, quadrant_analysis(&p_values, &proxy_values, th)?));
    }
    Ok((out, run.is_none_or(|r| r.all_completed())))
}
