//! End-to-end run with every table written to a directory.
//!
//!     cargo run --example full_pipeline [config.toml] [out_dir]

use std::path::PathBuf;

use hedonic::pipeline::{run_pipeline, PipelineConfig};
use hedonic::report::emit_tables;

fn main() -> hedonic::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = match args.next() {
        Some(p) => PipelineConfig::from_file(p.as_ref())?,
        None => PipelineConfig::default(),
    };
    let out: PathBuf = args
        .next()
        .map(PathBuf::from)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| std::env::temp_dir().join("hedonic-report"));

    let report = run_pipeline(&config)?;
    println!("config {}", report.provenance.config_hash);
    for c in &report.cities {
        println!(
            "{}: q = {}, adj. R2 GLM {:.3} GAM {:.3}",
            c.city, c.innovation.chosen_q, c.glm.adjusted_r2, c.gam.adjusted_r2
        );
    }
    for f in &report.failures {
        println!("{} failed at {}: {}", f.city, f.stage, f.message);
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for path in emit_tables(&report, &out, &config.formats)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
