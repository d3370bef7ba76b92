//! Choose per-factor transforms and check stationarity before and after.
//!
//!     cargo run --example stationarize

use hedonic::adf::{adf_decision_table, adf_test, LagOrder};
use hedonic::data::builtin_atl;
use hedonic::panel::Factor;
use hedonic::transforms::{apply_plan, plan_transforms, price_returns};

fn main() -> hedonic::error::Result<()> {
    let panel = builtin_atl();
    let lag = LagOrder::Auto { max: 3 };
    let plan = plan_transforms(&panel);
    let factors = apply_plan(&panel, &plan)?;

    println!("{:<11} {:>6} {:>9} {:>9}", "factor", "kind", "p(level)", "p(trans)");
    let table = adf_decision_table(&factors, None, lag, 0.10)?;
    for (f, row) in Factor::ALL.iter().zip(&table.rows) {
        let level = adf_test(&panel.factor_levels(*f), lag, 0.10)?;
        println!(
            "{:<11} {:>6} {:>9.3} {:>9.3}",
            f.label(),
            row.kind.tag(),
            level.result.p_value,
            row.outcome.result.p_value
        );
    }

    let r = price_returns(&panel)?;
    let o = adf_test(&r.values, lag, 0.10)?;
    println!(
        "price returns: tau = {:.3}, p = {:.3}, lag {}, unit root rejected: {}",
        o.result.statistic, o.result.p_value, o.result.lag_order, o.verdict.reject_unit_root
    );
    Ok(())
}
