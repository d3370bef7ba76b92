//! Count significant factors per city and per factor for both models.
//!
//!     cargo run --example significance_tallies [threshold]

use hedonic::data::published_city_p_values;
use hedonic::regression::{significance_summary, Model};
use hedonic::report::{significance_table, tally_table};

fn main() -> hedonic::error::Result<()> {
    let threshold = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.10);
    let sig = significance_summary(&published_city_p_values(), threshold)?;
    print!("{}", significance_table(&sig).to_csv_string());
    for model in [Model::Gam, Model::Glm] {
        let t = sig.tallies(model);
        println!("{model} per city {:?}, per factor {:?}", t.per_city, t.per_factor);
    }
    let rows = tally_table(&sig).rows.len();
    println!("{rows} tally rows at p <= {threshold}");
    Ok(())
}
