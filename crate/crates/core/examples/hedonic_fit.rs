//! GLM and additive P-spline fits on the same design, plus a simulated
//! panel where the smooth terms matter.
//!
//!     cargo run --example hedonic_fit

use hedonic::pipeline::{regressors, run_city, PipelineConfig};
use hedonic::regression::{fit_gam, fit_glm, LambdaPolicy, Regressor};
use hedonic::data::builtin_atl;

fn main() -> hedonic::error::Result<()> {
    let city = run_city(&builtin_atl(), &PipelineConfig::default()).map_err(|f| {
        hedonic::error::Error::Precondition(format!("{} failed at {}: {}", f.city, f.stage, f.message))
    })?;
    println!("ATL  adj. R2: GLM {:.3}, GAM {:.3}", city.glm.adjusted_r2, city.gam.adjusted_r2);
    println!("{:<11} {:>7} {:>7} {:>10} {:>6}", "factor", "p(GLM)", "p(GAM)", "lambda", "edf");
    for ((g, a), s) in city.glm.p_values.iter().zip(&city.gam.p_values).zip(&city.gam.smoothers) {
        let lambda = s.lambda.map_or("inf".to_owned(), |l| format!("{l:.3e}"));
        println!("{:<11} {:>7.3} {:>7.3} {:>10} {:>6.2}", g.factor, g.p_value, a.p_value, lambda, s.edf);
    }

    // forcing every term linear reproduces the GLM
    let x = regressors(&city.factors);
    let y = &city.innovation.innovations.values;
    let linear = fit_gam(y, &x, LambdaPolicy::ForceLinear)?;
    println!("force-linear GAM adj. R2 {:.6} (GLM {:.6})", linear.adjusted_r2, city.glm.adjusted_r2);

    // a planted sine and parabola
    let n = 200;
    let u = |i: usize, k: usize| ((i * (2 * k + 7) + 3 * k) % n) as f64 / n as f64 * 3.0 - 1.5;
    let xs: Vec<Regressor> = (0..3).map(|k| Regressor::new(format!("x{k}"), (0..n).map(|i| u(i, k)).collect())).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| (3.0 * xs[0].values[i]).sin() + xs[1].values[i].powi(2) + 0.2 * ((i * 37 % 11) as f64 / 5.0 - 1.0))
        .collect();
    let glm = fit_glm(&y, &xs)?;
    let gam = fit_gam(&y, &xs, LambdaPolicy::Gcv)?;
    println!("simulated adj. R2: GLM {:.3}, GAM {:.3}", glm.adjusted_r2, gam.adjusted_r2);
    for s in &gam.smoothers {
        println!("  {}: edf {:.2}, basis {}", s.factor, s.edf, s.basis_size);
    }
    Ok(())
}
