//! Hedonic regressions of price innovations on transformed factors.
//!
//! Two models share one response and design: an ordinary least-squares
//! linear model ([`fit_glm`]) and an additive model of per-factor cubic
//! P-splines ([`fit_gam`]). Both use the identity link.

mod bspline;
mod gam;
mod glm;
mod significance;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dependent_columns;

pub use bspline::{BSplineBasis, MAX_BREAKPOINTS};
pub use gam::{
    backfit, fit_gam, gam_significance, BackfitTrace, GamFit, LambdaPolicy, SmootherSummary, BACKFIT_TOL, MAX_BACKFIT_CYCLES,
};
pub use glm::{fit_glm, GlmFit};
pub use significance::{significance_summary, CityPValues, SignificanceTable, Tallies};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Glm,
    Gam,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Glm => "glm",
            Model::Gam => "gam",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "glm" => Ok(Model::Glm),
            "gam" => Ok(Model::Gam),
            other => Err(Error::Validation(format!("unknown model `{other}`"))),
        }
    }
}

/// A named regressor column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub name: String,
    pub values: Vec<f64>,
}

impl Regressor {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Regressor {
            name: name.into(),
            values,
        }
    }
}

/// Response plus factor columns with the shape checks shared by both models:
/// equal lengths, more observations than parameters, no constant or linearly
/// dependent factor.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub response: Vec<f64>,
    pub factors: Vec<Regressor>,
}

impl DesignMatrix {
    pub fn new(response: &[f64], factors: &[Regressor]) -> Result<Self> {
        let tau = response.len();
        let m = factors.len();
        for f in factors {
            if f.values.len() != tau {
                return Err(Error::Validation(format!(
                    "factor `{}` has {} values, response has {tau}",
                    f.name,
                    f.values.len()
                )));
            }
        }
        if tau <= m + 1 {
            return Err(Error::InsufficientData {
                needed: m + 2,
                got: tau,
            });
        }
        if response
            .iter()
            .chain(factors.iter().flat_map(|f| f.values.iter()))
            .any(|v| !v.is_finite())
        {
            return Err(Error::Validation("non-finite value in regression data".into()));
        }
        let x = linear_design(factors, tau);
        let dependent = dependent_columns(&x, 1e-10);
        if !dependent.is_empty() {
            let columns = dependent
                .iter()
                .map(|&j| {
                    if j == 0 {
                        "(intercept)".to_owned()
                    } else {
                        factors[j - 1].name.clone()
                    }
                })
                .collect();
            return Err(Error::Collinearity { columns });
        }
        Ok(DesignMatrix {
            response: response.to_vec(),
            factors: factors.to_vec(),
        })
    }

    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    /// `[1, x_1, ..., x_m]`.
    pub fn linear(&self) -> DMatrix<f64> {
        linear_design(&self.factors, self.n_obs())
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }

    pub fn total_sum_of_squares(&self) -> f64 {
        let m = crate::linalg::mean(&self.response);
        self.response.iter().map(|y| (y - m) * (y - m)).sum()
    }

    pub(crate) fn without(&self, j: usize) -> DesignMatrix {
        let mut factors = self.factors.clone();
        factors.remove(j);
        DesignMatrix {
            response: self.response.clone(),
            factors,
        }
    }
}

fn linear_design(factors: &[Regressor], tau: usize) -> DMatrix<f64> {
    DMatrix::from_fn(tau, factors.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            factors[j - 1].values[i]
        }
    })
}

/// `1 - (RSS / (n - edf)) / (TSS / (n - 1))`; equals the usual adjusted R²
/// when `edf = m + 1`. May be negative.
pub fn adjusted_r2(rss: f64, tss: f64, n: usize, edf: f64) -> f64 {
    1.0 - (rss / (n as f64 - edf)) / (tss / (n as f64 - 1.0))
}

/// Per-factor p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPValue {
    pub factor: String,
    pub p_value: f64,
    /// Set when the test statistic was not defined (e.g. no edf difference).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjusted_r2_formula() {
        // R² = 0.5, n = 22, m = 5
        let v = adjusted_r2(0.5, 1.0, 22, 6.0);
        assert!((v - 0.34375).abs() < 1e-15);
    }

    #[test]
    fn design_checks() {
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let a = Regressor::new("a", vec![1.0, 0.0, 2.0, 5.0]);
        let constant = Regressor::new("c", vec![3.0; 4]);
        let twice = Regressor::new("b", vec![2.0, 0.0, 4.0, 10.0]);
        assert!(DesignMatrix::new(&y, &[a.clone()]).is_ok());
        match DesignMatrix::new(&y, &[a.clone(), twice]) {
            Err(Error::Collinearity { columns }) => assert_eq!(columns, vec!["b".to_string()]),
            other => panic!("{other:?}"),
        }
        match DesignMatrix::new(&y, &[constant]) {
            Err(Error::Collinearity { columns }) => assert_eq!(columns, vec!["c".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            DesignMatrix::new(&y[..2], &[Regressor::new("a", vec![1.0, 2.0])]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(DesignMatrix::new(&y, &[Regressor::new("a", vec![1.0])]).is_err());
    }

    #[test]
    fn model_parsing() {
        assert_eq!("GAM".parse::<Model>().unwrap(), Model::Gam);
        assert!("lm".parse::<Model>().is_err());
    }
}
