//! Principal components of the cross-city residual matrix and the
//! exponential versus power-law reading of the explained variance.
//!
//!     cargo run --example residual_diagnostics

use hedonic::data::builtin_residuals;
use hedonic::diagnostics::{fit_decay, pca, relative_change, DecayLaw, PcaScaling};
use hedonic::regression::Model;

fn main() -> hedonic::error::Result<()> {
    for model in [Model::Glm, Model::Gam] {
        let m = builtin_residuals(model);
        println!("{model}: {} years x {} cities", m.n_years(), m.n_cities());
        for scaling in [PcaScaling::Correlation, PcaScaling::Centered, PcaScaling::CrossProduct] {
            let p = pca(&m, scaling)?;
            let shown: Vec<String> = p.explained.iter().map(|v| format!("{v:.3}")).collect();
            println!("  {:<13} {}", scaling.to_string(), shown.join(" "));
        }
        let p = pca(&m, PcaScaling::default())?;
        let d = fit_decay(&p.explained)?;
        for f in [&d.exponential, &d.power] {
            println!("  {:<11} r2 {:.4}  log r2 {:.4}  mse {:.2e}", f.model.to_string(), f.r2, f.log_r2, f.mse);
        }
        println!("  verdict: {} ({})", d.verdict, d.interpretation);
        if let Some(beta) = d.exponential.beta {
            println!("  relative change per component: {:.3}", relative_change(DecayLaw::Exponential { beta }, 1)?);
        }
    }
    Ok(())
}
