//! Load a city panel from CSV, validate it, and write it back.
//!
//!     cargo run --example ingest_panel [path/to/CODE.csv]

use hedonic::data::builtin_atl;
use hedonic::panel::{CityCode, CityPanel, Factor};

fn main() -> hedonic::error::Result<()> {
    let panel = match std::env::args().nth(1) {
        Some(path) => {
            let stem = std::path::Path::new(&path)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("XXX")
                .to_owned();
            CityPanel::read_csv(std::fs::File::open(&path)?, CityCode::new(&stem)?)?
        }
        None => builtin_atl(),
    };
    println!("{}: {} years, {}..={}", panel.city(), panel.len(), panel.first_year(), panel.years().last().unwrap());
    for f in Factor::ALL {
        let v = panel.factor_levels(f);
        println!("  {:<11} first {:>8} last {:>8}", f.label(), v[0], v[v.len() - 1]);
    }

    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    let back = CityPanel::read_csv(buf.as_slice(), panel.city().clone())?;
    assert_eq!(back, panel);
    print!("{}", String::from_utf8_lossy(&buf).lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("\n  ...");

    let broken = "year,av_price,new_homes,accessible,central_ac,green,waterfront\n2000,1,1,1,1,1,1\n2001,-5,1,1,1,1,1\n2002,1,1,1,1,1,1\n";
    if let Err(e) = CityPanel::read_csv(broken.as_bytes(), CityCode::new("BAD")?) {
        println!("rejected: {e}");
    }
    Ok(())
}
