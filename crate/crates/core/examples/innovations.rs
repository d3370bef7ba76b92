//! Filter price returns through AR(q)-ARCH(1) with Student-t shocks and keep
//! the smallest q whose standardized innovations look stationary.
//!
//!     cargo run --example innovations

use hedonic::adf::LagOrder;
use hedonic::arch::{reconstruct, select_innovations};
use hedonic::data::builtin_atl;
use hedonic::transforms::price_returns;

fn main() -> hedonic::error::Result<()> {
    let r = price_returns(&builtin_atl())?;
    let sel = select_innovations(&r, &[1, 2], 0.10, LagOrder::Auto { max: 3 })?;
    for a in &sel.attempts {
        println!("q = {}: ADF p = {:.3}, stationary {}, converged {}", a.q, a.adf.p_value, a.stationary, a.converged);
    }
    let p = &sel.fit.params;
    println!(
        "chosen q = {}: mu {:.4}, phi {:?}, omega {:.3e}, alpha1 {:.3}, nu {:.2}, loglik {:.3}",
        sel.chosen_q, p.mu, p.phi, p.omega, p.alpha1, p.nu, sel.fit.log_likelihood
    );
    for w in &sel.warnings {
        println!("warning: {w}");
    }

    // the returns are recoverable from the innovations
    let back = reconstruct(p, &sel.fit.innovations, sel.fit.sigma[0]);
    let err = back.iter().zip(&r.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max reconstruction error {err:.2e}");
    for (y, z) in sel.innovations.years().iter().zip(&sel.innovations.values).take(5) {
        println!("  {y}: {z:+.4}");
    }
    Ok(())
}
