//! Cross-city residual diagnostics: principal components of the residual
//! matrix, exponential versus power-law decay of the explained variance, and
//! the two-threshold quadrant classification.

mod decay;
mod pca;
mod quadrant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::CityCode;

pub use decay::{fit_decay, relative_change, zeta, DecayFit, DecayLaw, DecayModel, DecayReport};
pub use pca::{pca, PcaResult, PcaScaling};
pub use quadrant::{
    quadrant_analysis, Level, ProxyKind, Quadrant, QuadrantEntry, QuadrantReport, QuadrantThresholds, DEFAULT_P_CUT,
};

/// Residuals with one row per year and one column per city, cities in
/// alphabetical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualMatrix {
    years: Vec<i32>,
    cities: Vec<CityCode>,
    /// Row-major, `years.len()` rows.
    values: Vec<Vec<f64>>,
}

impl ResidualMatrix {
    pub fn new(values: Vec<Vec<f64>>, years: Vec<i32>, cities: Vec<CityCode>) -> Result<Self> {
        if values.len() != years.len() {
            return Err(Error::Validation(format!(
                "{} residual rows for {} years",
                values.len(),
                years.len()
            )));
        }
        if let Some(row) = values.iter().find(|r| r.len() != cities.len()) {
            return Err(Error::Validation(format!(
                "residual row has {} values for {} cities",
                row.len(),
                cities.len()
            )));
        }
        if cities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("residual columns must be in strictly alphabetical order".into()));
        }
        if years.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("residual years must be increasing".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite residual".into()));
        }
        Ok(ResidualMatrix { years, cities, values })
    }

    /// Builds the matrix from per-city residual series over a shared year
    /// range; columns are sorted alphabetically.
    pub fn from_columns(first_year: i32, mut columns: Vec<(CityCode, Vec<f64>)>) -> Result<Self> {
        columns.sort_by(|a, b| a.0.cmp(&b.0));
        let n = columns.first().map_or(0, |c| c.1.len());
        if columns.iter().any(|c| c.1.len() != n) {
            return Err(Error::Validation("residual series differ in length".into()));
        }
        let values = (0..n).map(|i| columns.iter().map(|c| c.1[i]).collect()).collect();
        let years = (0..n as i32).map(|i| first_year + i).collect();
        let cities = columns.into_iter().map(|c| c.0).collect();
        ResidualMatrix::new(values, years, cities)
    }

    /// Reads a `year,<CITY>,...` table such as the one the report writes.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("year") {
            return Err(Error::MissingColumn { column: "year".into() });
        }
        let cities = header.iter().skip(1).map(CityCode::new).collect::<Result<Vec<_>>>()?;
        let mut years = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse_err = |column: &str, message: String| Error::Parse {
                row: i + 1,
                column: column.to_owned(),
                message,
            };
            let year = rec[0].parse::<i32>().map_err(|e| parse_err("year", e.to_string()))?;
            let row = rec
                .iter()
                .zip(header.iter())
                .skip(1)
                .map(|(v, h)| v.parse::<f64>().map_err(|e| parse_err(h, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            years.push(year);
            values.push(row);
        }
        ResidualMatrix::new(values, years, cities)
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn cities(&self) -> &[CityCode] {
        &self.cities
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    pub fn n_cities(&self) -> usize {
        self.cities.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, year: i32, city: &CityCode) -> Option<f64> {
        let i = self.years.iter().position(|y| *y == year)?;
        let j = self.cities.iter().position(|c| c == city)?;
        Some(self.values[i][j])
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[k]).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_years(), self.n_cities(), |i, j| self.values[i][j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CityCode {
        CityCode::new(s).unwrap()
    }

    #[test]
    fn validation() {
        let ok = ResidualMatrix::new(vec![vec![1.0, 2.0]], vec![2001], vec![code("AAA"), code("BBB")]);
        assert!(ok.is_ok());
        assert!(ResidualMatrix::new(vec![vec![1.0, 2.0]], vec![2001], vec![code("BBB"), code("AAA")]).is_err());
        assert!(ResidualMatrix::new(vec![vec![1.0, f64::NAN]], vec![2001], vec![code("AAA"), code("BBB")]).is_err());
        assert!(ResidualMatrix::new(vec![vec![1.0]], vec![2001], vec![code("AAA"), code("BBB")]).is_err());
    }

    #[test]
    fn from_columns_sorts() {
        let m = ResidualMatrix::from_columns(2001, vec![(code("ZZZ"), vec![1.0, 2.0]), (code("AAA"), vec![3.0, 4.0])])
            .unwrap();
        assert_eq!(m.cities()[0], code("AAA"));
        assert_eq!(m.get(2002, &code("ZZZ")), Some(2.0));
        assert_eq!(m.column(0), vec![3.0, 4.0]);
    }

    #[test]
    fn csv_input() {
        let m = ResidualMatrix::read_csv("year,AAA,BBB\n2001,1.5,-2\n2002,0,3\n".as_bytes()).unwrap();
        assert_eq!(m.get(2002, &code("BBB")), Some(3.0));
        assert!(ResidualMatrix::read_csv("yr,AAA\n2001,1\n".as_bytes()).is_err());
        assert!(matches!(
            ResidualMatrix::read_csv("year,AAA\n2001,x\n".as_bytes()),
            Err(Error::Parse { row: 1, .. })
        ));
    }
}
