use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{adjusted_r2, DesignMatrix, FactorPValue, Regressor};
use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// Identity-link linear model fitted by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub factor_names: Vec<String>,
    /// Intercept first.
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Two-sided t-test p-values, one per factor.
    pub p_values: Vec<FactorPValue>,
    pub r2: f64,
    pub adjusted_r2: f64,
    /// Residual variance `RSS / (n - m - 1)`.
    pub dispersion: f64,
    pub df_residual: usize,
}

impl GlmFit {
    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

pub fn fit_glm(response: &[f64], factors: &[Regressor]) -> Result<GlmFit> {
    let design = DesignMatrix::new(response, factors)?;
    fit_design(&design)
}

pub(crate) fn fit_design(design: &DesignMatrix) -> Result<GlmFit> {
    let x = design.linear();
    let y = DVector::from_column_slice(&design.response);
    let fit = least_squares(&x, &y).map_err(|cols| Error::Collinearity {
        columns: cols
            .iter()
            .map(|&j| {
                if j == 0 {
                    "(intercept)".to_owned()
                } else {
                    design.factors[j - 1].name.clone()
                }
            })
            .collect(),
    })?;
    let n = design.n_obs();
    let p = x.ncols();
    let df = n - p;
    let dispersion = fit.rss / df as f64;
    let std_errors: Vec<f64> = (0..p)
        .map(|j| (dispersion * fit.xtx_inv[(j, j)]).sqrt())
        .collect();
    let t_dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Domain(e.to_string()))?;
    let p_values = design
        .factors
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let j = k + 1;
            let t = fit.coef[j] / std_errors[j];
            let p_value = if t.is_finite() {
                2.0 * t_dist.cdf(-t.abs())
            } else {
                0.0
            };
            FactorPValue {
                factor: f.name.clone(),
                p_value,
                degenerate: !t.is_finite(),
            }
        })
        .collect();
    let tss = design.total_sum_of_squares();
    Ok(GlmFit {
        factor_names: design.factor_names(),
        beta: fit.coef.iter().copied().collect(),
        std_errors,
        fitted: fit.fitted.iter().copied().collect(),
        residuals: fit.residuals.iter().copied().collect(),
        p_values,
        r2: 1.0 - fit.rss / tss,
        adjusted_r2: adjusted_r2(fit.rss, tss, n, p as f64),
        dispersion,
        df_residual: df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use proptest::prelude::*;

    #[test]
    fn exact_linear_response() {
        let x1: Vec<f64> = (0..10).map(|i| i as f64).collect();
        // orthogonal to 1 and x1 over the sample
        let x2: Vec<f64> = vec![1.0, -1.0, -1.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 1.0];
        let y: Vec<f64> = x1.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = fit_glm(&y, &[Regressor::new("x1", x1), Regressor::new("x2", x2)]).unwrap();
        assert!((fit.beta[0] - 2.0).abs() < 1e-10);
        assert!((fit.beta[1] - 3.0).abs() < 1e-10);
        assert!(fit.beta[2].abs() < 1e-10);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_p_value() {
        // slope 1 with alternating noise: t statistic by hand
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let fit = fit_glm(&y, &[Regressor::new("x", x.clone())]).unwrap();
        let xm = 3.5;
        let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
        let se = (fit.dispersion / sxx).sqrt();
        assert!((fit.std_errors[1] - se).abs() < 1e-12);
        let t = fit.beta[1] / se;
        let p = 2.0 * StudentsT::new(0.0, 1.0, 6.0).unwrap().cdf(-t.abs());
        assert!((fit.p_values[0].p_value - p).abs() < 1e-14);
    }

    fn data(seed: u64) -> (Vec<f64>, Vec<Regressor>) {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(seed);
        let n = 22;
        let factors: Vec<Regressor> = (0..5)
            .map(|k| Regressor::new(format!("x{k}"), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let y = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        (y, factors)
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_and_projection_idempotent(seed in 0u64..500) {
            let (y, factors) = data(seed);
            let fit = fit_glm(&y, &factors).unwrap();
            let rn = dot(&fit.residuals, &fit.residuals).sqrt();
            let ones = vec![1.0; y.len()];
            prop_assert!(dot(&fit.residuals, &ones).abs() < 1e-8 * rn * (y.len() as f64).sqrt());
            for f in &factors {
                let xn = dot(&f.values, &f.values).sqrt();
                prop_assert!(dot(&fit.residuals, &f.values).abs() < 1e-8 * rn.max(1e-300) * xn);
            }
            for i in 0..y.len() {
                let scale = y[i].abs().max(fit.fitted[i].abs());
                prop_assert!((fit.fitted[i] + fit.residuals[i] - y[i]).abs() <= 2.0 * f64::EPSILON * scale);
            }
            let refit = fit_glm(&fit.fitted, &factors).unwrap();
            for (a, b) in refit.fitted.iter().zip(&fit.fitted) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
