//! Yearly city panels: one row per calendar year with the average sale price
//! and five count factors.
//!
//! Panels are read from delimiter-separated text with the fixed header
//! `year,av_price,new_homes,accessible,central_ac,green,waterfront`, one file
//! per city named `<CODE>.csv`. Column order in the file is free; rows are
//! sorted by year after reading and must then be consecutive.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header written by [`CityPanel::write_csv`], in this order.
pub const CSV_COLUMNS: [&str; 7] = [
    "year",
    "av_price",
    "new_homes",
    "accessible",
    "central_ac",
    "green",
    "waterfront",
];

/// Fewest rows a panel may have; returns and ADF lags need history.
pub const MIN_ROWS: usize = 3;

/// The five regressors, in the order used for tables and design matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    NewHomes,
    Accessible,
    CentralAc,
    Green,
    Waterfront,
}

impl Factor {
    pub const ALL: [Factor; 5] = [
        Factor::NewHomes,
        Factor::Accessible,
        Factor::CentralAc,
        Factor::Green,
        Factor::Waterfront,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Factor::NewHomes => "new_homes",
            Factor::Accessible => "accessible",
            Factor::CentralAc => "central_ac",
            Factor::Green => "green",
            Factor::Waterfront => "waterfront",
        }
    }

    /// Human-readable label used in table rows.
    pub fn label(self) -> &'static str {
        match self {
            Factor::NewHomes => "New Homes",
            Factor::Accessible => "Accessible",
            Factor::CentralAc => "Central AC",
            Factor::Green => "Green",
            Factor::Waterfront => "Waterfront",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Factor::ALL
            .into_iter()
            .find(|f| f.column() == norm)
            .ok_or_else(|| Error::Validation(format!("unknown factor `{s}`")))
    }
}

/// Three-letter upper-case city identifier, e.g. `ATL`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CityCode(String);

impl CityCode {
    pub fn new(code: &str) -> Result<Self> {
        let code = code.trim();
        if code.len() == 3 && code.chars().all(|c| c.is_ascii_uppercase()) {
            Ok(CityCode(code.to_owned()))
        } else {
            Err(Error::Validation(format!(
                "city code `{code}` must be three upper-case letters"
            )))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CityCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        CityCode::new(&s)
    }
}

impl From<CityCode> for String {
    fn from(c: CityCode) -> String {
        c.0
    }
}

impl FromStr for CityCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CityCode::new(s)
    }
}

impl fmt::Display for CityCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearRow {
    pub year: i32,
    /// Average sale price in USD.
    pub av_price: f64,
    pub new_homes: u64,
    pub accessible: u64,
    pub central_ac: u64,
    pub green: u64,
    pub waterfront: u64,
}

impl YearRow {
    pub fn factor(&self, factor: Factor) -> u64 {
        match factor {
            Factor::NewHomes => self.new_homes,
            Factor::Accessible => self.accessible,
            Factor::CentralAc => self.central_ac,
            Factor::Green => self.green,
            Factor::Waterfront => self.waterfront,
        }
    }
}

/// Validated, year-ordered panel for one city. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityPanel {
    city: CityCode,
    rows: Vec<YearRow>,
}

impl CityPanel {
    /// Sorts `rows` by year and checks the panel invariants: at least
    /// [`MIN_ROWS`] rows, consecutive years, positive finite prices.
    pub fn new(city: CityCode, mut rows: Vec<YearRow>) -> Result<Self> {
        rows.sort_by_key(|r| r.year);
        if rows.len() < MIN_ROWS {
            return Err(Error::InsufficientData {
                needed: MIN_ROWS,
                got: rows.len(),
            });
        }
        for pair in rows.windows(2) {
            if pair[1].year == pair[0].year {
                return Err(Error::Validation(format!(
                    "{city}: duplicate year {}",
                    pair[0].year
                )));
            }
            if pair[1].year != pair[0].year + 1 {
                return Err(Error::Validation(format!(
                    "{city}: year gap between {} and {}",
                    pair[0].year, pair[1].year
                )));
            }
        }
        for r in &rows {
            if !(r.av_price.is_finite() && r.av_price > 0.0) {
                return Err(Error::Validation(format!(
                    "{city}: av_price must be positive, got {} in {}",
                    r.av_price, r.year
                )));
            }
        }
        Ok(CityPanel { city, rows })
    }

    pub fn city(&self) -> &CityCode {
        &self.city
    }

    pub fn rows(&self) -> &[YearRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first_year(&self) -> i32 {
        self.rows[0].year
    }

    pub fn years(&self) -> Vec<i32> {
        self.rows.iter().map(|r| r.year).collect()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.av_price).collect()
    }

    pub fn factor_levels(&self, factor: Factor) -> Vec<f64> {
        self.rows.iter().map(|r| r.factor(factor) as f64).collect()
    }

    pub fn read_csv<R: Read>(reader: R, city: CityCode) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut index = HashMap::new();
        for column in CSV_COLUMNS {
            let pos = headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(column))
                .ok_or_else(|| Error::MissingColumn {
                    column: column.to_owned(),
                })?;
            index.insert(column, pos);
        }

        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            // header is line 1
            let row = i + 2;
            let cell = |column: &'static str| -> &str { record.get(index[column]).unwrap_or("") };
            let parse_err = |column: &str, message: String| Error::Parse {
                row,
                column: column.to_owned(),
                message,
            };

            let year = cell("year")
                .parse::<i32>()
                .map_err(|e| parse_err("year", e.to_string()))?;
            let av_price = cell("av_price")
                .parse::<f64>()
                .map_err(|e| parse_err("av_price", e.to_string()))?;
            let mut counts = [0u64; 5];
            for (slot, factor) in counts.iter_mut().zip(Factor::ALL) {
                let column = factor.column();
                let value = cell(column)
                    .parse::<i64>()
                    .map_err(|e| parse_err(column, e.to_string()))?;
                if value < 0 {
                    return Err(Error::Validation(format!(
                        "{city}: {column} must be non-negative, got {value} in {year}"
                    )));
                }
                *slot = value as u64;
            }
            rows.push(YearRow {
                year,
                av_price,
                new_homes: counts[0],
                accessible: counts[1],
                central_ac: counts[2],
                green: counts[3],
                waterfront: counts[4],
            });
        }
        CityPanel::new(city, rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            wtr.write_record([
                r.year.to_string(),
                format_price(r.av_price),
                r.new_homes.to_string(),
                r.accessible.to_string(),
                r.central_ac.to_string(),
                r.green.to_string(),
                r.waterfront.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

// Shortest representation that parses back to the same f64.
fn format_price(p: f64) -> String {
    if p.fract() == 0.0 && p.abs() < 1e15 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

/// Panels for several cities, kept in alphabetical order of city code.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelSet {
    panels: Vec<CityPanel>,
}

impl PanelSet {
    pub fn new(mut panels: Vec<CityPanel>) -> Result<Self> {
        panels.sort_by(|a, b| a.city.cmp(&b.city));
        for pair in panels.windows(2) {
            if pair[0].city == pair[1].city {
                return Err(Error::Validation(format!(
                    "duplicate city code {}",
                    pair[0].city
                )));
            }
        }
        Ok(PanelSet { panels })
    }

    pub fn panels(&self) -> &[CityPanel] {
        &self.panels
    }

    pub fn get(&self, city: &CityCode) -> Option<&CityPanel> {
        self.panels.iter().find(|p| &p.city == city)
    }

    pub fn cities(&self) -> Vec<CityCode> {
        self.panels.iter().map(|p| p.city.clone()).collect()
    }
}

/// Census proxies for a city, both as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CityMeta {
    /// Share of city area covered by water bodies.
    pub water_area_pct: f64,
    /// Share of seniors living alone.
    pub seniors_alone_pct: f64,
}

impl CityMeta {
    pub fn new(water_area_pct: f64, seniors_alone_pct: f64) -> Result<Self> {
        for (name, v) in [
            ("water_area_pct", water_area_pct),
            ("seniors_alone_pct", seniors_alone_pct),
        ] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "{name} must be a percentage in [0, 100], got {v}"
                )));
            }
        }
        Ok(CityMeta {
            water_area_pct,
            seniors_alone_pct,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atl() -> CityCode {
        CityCode::new("ATL").unwrap()
    }

    const HEADER: &str = "year,av_price,new_homes,accessible,central_ac,green,waterfront\n";

    #[test]
    fn rejects_year_gap() {
        let csv = format!("{HEADER}2000,1,1,1,1,1,1\n2002,1,1,1,1,1,1\n2003,1,1,1,1,1,1\n");
        let err = CityPanel::read_csv(csv.as_bytes(), atl()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("gap")), "{err}");
    }

    #[test]
    fn rejects_negative_price() {
        let csv = format!("{HEADER}2000,-5,1,1,1,1,1\n2001,1,1,1,1,1,1\n2002,1,1,1,1,1,1\n");
        let err = CityPanel::read_csv(csv.as_bytes(), atl()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn rejects_negative_count() {
        let csv = format!("{HEADER}2000,5,1,-1,1,1,1\n2001,1,1,1,1,1,1\n2002,1,1,1,1,1,1\n");
        let err = CityPanel::read_csv(csv.as_bytes(), atl()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("accessible")));
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "year,av_price,new_homes,accessible,central_ac,green\n2000,1,1,1,1,1\n";
        match CityPanel::read_csv(csv.as_bytes(), atl()) {
            Err(Error::MissingColumn { column }) => assert_eq!(column, "waterfront"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let csv = format!("{HEADER}2000,1,1,1,1,1,1\n2001,abc,1,1,1,1,1\n2002,1,1,1,1,1,1\n");
        match CityPanel::read_csv(csv.as_bytes(), atl()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "av_price");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rows_are_sorted_and_columns_may_be_permuted() {
        let csv = "waterfront,green,central_ac,accessible,new_homes,av_price,year\n\
                   3,0,1,1,1,10,2001\n2,0,1,1,1,9,2000\n4,0,1,1,1,11,2002\n";
        let p = CityPanel::read_csv(csv.as_bytes(), atl()).unwrap();
        assert_eq!(p.years(), vec![2000, 2001, 2002]);
        assert_eq!(p.factor_levels(Factor::Waterfront), vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn too_few_rows() {
        let csv = format!("{HEADER}2000,1,1,1,1,1,1\n2001,1,1,1,1,1,1\n");
        assert!(matches!(
            CityPanel::read_csv(csv.as_bytes(), atl()),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn city_codes() {
        assert!(CityCode::new("atl").is_err());
        assert!(CityCode::new("ATLA").is_err());
        assert_eq!(CityCode::new(" SEA ").unwrap().as_str(), "SEA");
    }

    #[test]
    fn panel_set_sorts_and_rejects_duplicates() {
        let mk = |c: &str| {
            let rows = (0..3)
                .map(|i| YearRow {
                    year: 2000 + i,
                    av_price: 1.0,
                    new_homes: 1,
                    accessible: 1,
                    central_ac: 1,
                    green: 1,
                    waterfront: 1,
                })
                .collect();
            CityPanel::new(CityCode::new(c).unwrap(), rows).unwrap()
        };
        let set = PanelSet::new(vec![mk("SEA"), mk("ATL"), mk("JAX")]).unwrap();
        let names: Vec<_> = set.cities().iter().map(|c| c.to_string()).collect();
        assert_eq!(names, ["ATL", "JAX", "SEA"]);
        assert!(PanelSet::new(vec![mk("ATL"), mk("ATL")]).is_err());
    }

    #[test]
    fn city_meta_bounds() {
        assert!(CityMeta::new(40.9, 4.1).is_ok());
        assert!(CityMeta::new(101.0, 4.1).is_err());
        assert!(CityMeta::new(1.0, -0.1).is_err());
    }

    #[test]
    fn factor_parsing() {
        assert_eq!("Central AC".parse::<Factor>().unwrap(), Factor::CentralAc);
        assert_eq!("waterfront".parse::<Factor>().unwrap(), Factor::Waterfront);
        assert!("price".parse::<Factor>().is_err());
    }
}
