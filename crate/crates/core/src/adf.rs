//! Augmented Dickey-Fuller unit-root test without deterministic terms.
//!
//! The test regression is
//!
//! ```text
//! dy[t] = alpha * y[t-1] + sum_{i=1..q} delta_i * dy[t-i] + e[t]
//! ```
//!
//! with no intercept and no trend. The statistic is `alpha_hat / se(alpha_hat)`
//! and the p-value comes from the finite-sample Dickey-Fuller tau table for the
//! no-constant case, interpolated linearly in `1/n` and between quantiles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::panel::Factor;
use crate::transforms::{TransformKind, TransformedSeries};

/// Largest lag tried by [`LagOrder::Auto`].
pub const DEFAULT_MAX_LAG: usize = 3;

const P_FLOOR: f64 = 0.001;
const P_CEIL: f64 = 0.999;

const TABLE_PROBS: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
// 1/n for n = 25, 50, 100, 250, 500, infinity
const TABLE_INV_N: [f64; 6] = [1.0 / 25.0, 1.0 / 50.0, 1.0 / 100.0, 1.0 / 250.0, 1.0 / 500.0, 0.0];
const TABLE_TAU: [[f64; 8]; 6] = [
    [-2.66, -2.26, -1.95, -1.60, 0.92, 1.33, 1.70, 2.16],
    [-2.62, -2.25, -1.95, -1.61, 0.91, 1.31, 1.66, 2.08],
    [-2.60, -2.24, -1.95, -1.61, 0.90, 1.29, 1.64, 2.03],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.29, 1.63, 2.01],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagOrder {
    Fixed(usize),
    /// Minimum AIC over `0..=max`, ties to the smaller lag.
    Auto { max: usize },
}

impl Default for LagOrder {
    fn default() -> Self {
        LagOrder::Auto {
            max: DEFAULT_MAX_LAG,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lag_order: usize,
    pub alpha_hat: f64,
    pub delta_hats: Vec<f64>,
    pub n_effective: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityVerdict {
    pub reject_unit_root: bool,
    pub significance_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfOutcome {
    pub result: AdfResult,
    pub verdict: StationarityVerdict,
}

/// Critical value of the no-constant tau distribution at table quantile
/// `k` for `n` observations.
fn critical_value(k: usize, n: usize) -> f64 {
    let x = 1.0 / n.max(1) as f64;
    // segment containing x; sizes below the table use the first segment
    let seg = (0..TABLE_INV_N.len() - 1)
        .find(|&i| x >= TABLE_INV_N[i + 1])
        .unwrap_or(TABLE_INV_N.len() - 2);
    let (x0, x1) = (TABLE_INV_N[seg], TABLE_INV_N[seg + 1]);
    let (y0, y1) = (TABLE_TAU[seg][k], TABLE_TAU[seg + 1][k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Left-tail probability of `statistic` under a unit root with `n`
/// observations in the test regression.
pub fn dickey_fuller_p_value(statistic: f64, n: usize) -> f64 {
    let crit: Vec<f64> = (0..TABLE_PROBS.len()).map(|k| critical_value(k, n)).collect();
    let last = crit.len() - 1;
    let seg = if statistic <= crit[0] {
        0
    } else if statistic >= crit[last] {
        last - 1
    } else {
        (0..last).find(|&i| statistic <= crit[i + 1]).unwrap_or(last - 1)
    };
    let (c0, c1) = (crit[seg], crit[seg + 1]);
    let (p0, p1) = (TABLE_PROBS[seg], TABLE_PROBS[seg + 1]);
    let p = p0 + (p1 - p0) * (statistic - c0) / (c1 - c0);
    p.clamp(P_FLOOR, P_CEIL)
}

struct LagRegression {
    alpha_hat: f64,
    se_alpha: f64,
    delta_hats: Vec<f64>,
    rss: f64,
    n: usize,
}

/// Regression for lag `q`, using observations `t = start..len` of the series
/// (`start >= q + 1`).
fn lag_regression(y: &[f64], q: usize, start: usize) -> Result<LagRegression> {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let rows: Vec<usize> = (start..y.len()).collect();
    let n = rows.len();
    let k = q + 1;
    if n <= k {
        return Err(Error::InsufficientData {
            needed: 2 * q + 3,
            got: y.len(),
        });
    }
    // dy index of y[t] - y[t-1] is t - 1
    let x = DMatrix::from_fn(n, k, |r, c| {
        let t = rows[r];
        if c == 0 {
            y[t - 1]
        } else {
            dy[t - 1 - c]
        }
    });
    let target = DVector::from_fn(n, |r, _| dy[rows[r] - 1]);
    if target.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("series is constant".into()));
    }
    let fit = least_squares(&x, &target).map_err(|_| {
        Error::Degenerate("ADF regressors are collinear (zero-variance lagged level?)".into())
    })?;
    let s2 = fit.rss / (n - k) as f64;
    let se_alpha = (s2 * fit.xtx_inv[(0, 0)]).sqrt();
    if !(se_alpha > 0.0 && se_alpha.is_finite()) {
        return Err(Error::Degenerate("ADF regression fits exactly".into()));
    }
    Ok(LagRegression {
        alpha_hat: fit.coef[0],
        se_alpha,
        delta_hats: fit.coef.iter().skip(1).copied().collect(),
        rss: fit.rss,
        n,
    })
}

fn min_length(q: usize) -> usize {
    // lag_order + 4 points and at least one residual degree of freedom
    (q + 4).max(2 * q + 3)
}

/// Augmented Dickey-Fuller test of `series` at `significance`.
pub fn adf_test(series: &[f64], lag: LagOrder, significance: f64) -> Result<AdfOutcome> {
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::Precondition(format!(
            "significance must be in (0, 1), got {significance}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("series contains non-finite values".into()));
    }
    let q = match lag {
        LagOrder::Fixed(q) => {
            if series.len() < min_length(q) {
                return Err(Error::InsufficientData {
                    needed: min_length(q),
                    got: series.len(),
                });
            }
            q
        }
        LagOrder::Auto { max } => select_lag(series, max)?,
    };
    let reg = lag_regression(series, q, q + 1)?;
    let statistic = reg.alpha_hat / reg.se_alpha;
    let p_value = dickey_fuller_p_value(statistic, reg.n);
    Ok(AdfOutcome {
        result: AdfResult {
            statistic,
            p_value,
            lag_order: q,
            alpha_hat: reg.alpha_hat,
            delta_hats: reg.delta_hats,
            n_effective: reg.n,
        },
        verdict: StationarityVerdict {
            reject_unit_root: p_value < significance,
            significance_level: significance,
        },
    })
}

/// AIC lag choice on the sample common to all candidate lags.
fn select_lag(series: &[f64], max: usize) -> Result<usize> {
    let max = (0..=max)
        .rev()
        .find(|&q| series.len() >= min_length(q) && series.len() > 2 * q + 2)
        .ok_or(Error::InsufficientData {
            needed: min_length(0),
            got: series.len(),
        })?;
    let start = max + 1;
    let mut best: Option<(usize, f64)> = None;
    for q in 0..=max {
        let reg = lag_regression(series, q, start)?;
        let n = reg.n as f64;
        let aic = n * (reg.rss / n).ln() + 2.0 * (q + 1) as f64;
        // strict comparison keeps the smaller lag on ties
        if best.is_none_or(|(_, b)| aic < b) {
            best = Some((q, aic));
        }
    }
    Ok(best.map(|(q, _)| q).unwrap_or(0))
}

/// One row of a per-city stationarity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfRow {
    pub label: String,
    pub kind: TransformKind,
    pub outcome: AdfOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfTable {
    pub rows: Vec<AdfRow>,
}

impl AdfTable {
    pub fn p_value(&self, label: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.label == label)
            .map(|r| r.outcome.result.p_value)
    }
}

/// ADF p-values for every transformed factor, plus the price innovations when
/// available.
pub fn adf_decision_table(
    factors: &[(Factor, TransformedSeries)],
    price_innovations: Option<&TransformedSeries>,
    lag: LagOrder,
    significance: f64,
) -> Result<AdfTable> {
    if factors.is_empty() && price_innovations.is_none() {
        return Err(Error::Precondition("no series to test".into()));
    }
    let mut rows = Vec::new();
    for (factor, series) in factors {
        rows.push(AdfRow {
            label: factor.label().to_owned(),
            kind: series.kind,
            outcome: adf_test(&series.values, lag, significance)?,
        });
    }
    if let Some(series) = price_innovations {
        rows.push(AdfRow {
            label: "Av Price Innovations".to_owned(),
            kind: series.kind,
            outcome: adf_test(&series.values, lag, significance)?,
        });
    }
    Ok(AdfTable { rows })
}
