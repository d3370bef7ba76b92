use proptest::prelude::*;

use hedonic::data::builtin_atl;
use hedonic::error::Error;
use hedonic::panel::{CityCode, CityPanel, YearRow};

fn code() -> CityCode {
    CityCode::new("TST").unwrap()
}

fn row() -> impl Strategy<Value = (f64, [u64; 5])> {
    (1.0f64..5e6, proptest::array::uniform5(0u64..100_000))
}

proptest! {
    #[test]
    fn csv_round_trip(start in 1900i32..2100, rows in proptest::collection::vec(row(), 3..40)) {
        let rows: Vec<YearRow> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (p, c))| YearRow {
                year: start + i as i32,
                av_price: p,
                new_homes: c[0],
                accessible: c[1],
                central_ac: c[2],
                green: c[3],
                waterfront: c[4],
            })
            .collect();
        let panel = CityPanel::new(code(), rows).unwrap();
        let mut buf = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        let back = CityPanel::read_csv(buf.as_slice(), code()).unwrap();
        prop_assert_eq!(back, panel);
    }
}

#[test]
fn builtin_panel_round_trips() {
    let atl = builtin_atl();
    let mut buf = Vec::new();
    atl.write_csv(&mut buf).unwrap();
    let back = CityPanel::read_csv(buf.as_slice(), atl.city().clone()).unwrap();
    assert_eq!(back, atl);
}

#[test]
fn columns_may_be_reordered_and_padded() {
    let text = " waterfront , year,av_price,green,central_ac,accessible,new_homes\n\
                1,2000,100,2,3,4,5\n2,2001,110,2,3,4,5\n3,2002,120,2,3,4,5\n";
    let p = CityPanel::read_csv(text.as_bytes(), code()).unwrap();
    assert_eq!(p.rows()[2].waterfront, 3);
    assert_eq!(p.rows()[0].new_homes, 5);
}

#[test]
fn malformed_input_is_located() {
    let missing = "year,av_price,new_homes,accessible,central_ac,green\n2000,1,1,1,1,1\n";
    assert!(matches!(
        CityPanel::read_csv(missing.as_bytes(), code()),
        Err(Error::MissingColumn { column }) if column == "waterfront"
    ));
    let bad = "year,av_price,new_homes,accessible,central_ac,green,waterfront\n\
               2000,1,1,1,1,1,1\n2001,abc,1,1,1,1,1\n2002,1,1,1,1,1,1\n";
    assert!(matches!(
        CityPanel::read_csv(bad.as_bytes(), code()),
        Err(Error::Parse { row: 3, column, .. }) if column == "av_price"
    ));
    let gap = "year,av_price,new_homes,accessible,central_ac,green,waterfront\n\
               2000,1,1,1,1,1,1\n2001,1,1,1,1,1,1\n2003,1,1,1,1,1,1\n";
    assert!(matches!(CityPanel::read_csv(gap.as_bytes(), code()), Err(Error::Validation(_))));
}
