//! Cross a census proxy with a factor's p-value and print the quadrants.
//!
//!     cargo run --example quadrants

use hedonic::data::{city_meta, published_factor_p_values};
use hedonic::diagnostics::{quadrant_analysis, Level, ProxyKind};
use hedonic::regression::Model;

fn main() -> hedonic::error::Result<()> {
    for proxy in [ProxyKind::WaterArea, ProxyKind::SeniorsAlone] {
        let p = published_factor_p_values(Model::Gam, proxy.factor());
        let v: Vec<_> = p
            .iter()
            .filter_map(|(c, _)| city_meta(c).map(|m| (c.clone(), proxy.value(&m))))
            .collect();
        let th = proxy.default_thresholds();
        let q = quadrant_analysis(&p, &v, th)?;
        println!("{proxy} (cut {}) vs {} p-value (cut {})", th.proxy_cut, proxy.factor().label(), th.p_cut);
        for lp in [Level::Low, Level::High] {
            for lv in [Level::Low, Level::High] {
                let members: Vec<&str> = q.members(lp, lv).iter().map(|c| c.as_str()).collect();
                println!("  proxy {lp:?}, p {lv:?}: {members:?}");
            }
        }
    }
    Ok(())
}
