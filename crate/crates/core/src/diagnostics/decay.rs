use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terms summed directly before the Euler-Maclaurin tail.
const ZETA_TERMS: u32 = 64;

/// Riemann zeta for real `b > 1`: direct sum plus an Euler-Maclaurin tail.
pub fn zeta(b: f64) -> Result<f64> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::Domain(format!("zeta({b}) requires b > 1")));
    }
    let n = ZETA_TERMS as f64;
    let head: f64 = (1..ZETA_TERMS).map(|k| (k as f64).powf(-b)).sum();
    let tail = n.powf(1.0 - b) / (b - 1.0) + 0.5 * n.powf(-b) + b * n.powf(-b - 1.0) / 12.0
        - b * (b + 1.0) * (b + 2.0) * n.powf(-b - 3.0) / 720.0
        + b * (b + 1.0) * (b + 2.0) * (b + 3.0) * (b + 4.0) * n.powf(-b - 5.0) / 30240.0;
    Ok(head + tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `A * c^x`
    Exponential,
    /// `A * x^(-b)`
    Power,
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayModel::Exponential => "exponential",
            DecayModel::Power => "power",
        })
    }
}

impl DecayModel {
    fn abscissa(self, x: f64) -> f64 {
        match self {
            DecayModel::Exponential => x,
            DecayModel::Power => x.ln(),
        }
    }

    pub fn interpretation(self) -> &'static str {
        match self {
            DecayModel::Exponential => "systemic factors continue to be unaccounted for",
            DecayModel::Power => "noise dominates the residuals",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub amplitude: f64,
    /// `c` for the exponential curve, `b` for the power law.
    pub rate: f64,
    /// `1 - c`, reported when `c` lies in (0, 1).
    pub beta: Option<f64>,
    /// Original-space fit quality of the refined curve.
    pub r2: f64,
    pub mse: f64,
    /// R² of the straight-line fit of `ln f` on `x` (or on `ln x`).
    pub log_r2: f64,
    pub fitted_curve: Vec<f64>,
}

impl DecayFit {
    pub fn eval(&self, x: f64) -> f64 {
        match self.model {
            DecayModel::Exponential => self.amplitude * self.rate.powf(x),
            DecayModel::Power => self.amplitude * x.powf(-self.rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub exponential: DecayFit,
    pub power: DecayFit,
    /// The model whose log-space line fits better.
    pub verdict: DecayModel,
    pub interpretation: String,
}

/// Fits both decay laws to the explained-variance proportions at
/// `x = 1, 2, ...`.
///
/// Each curve `exp(a + s g(x))` (with `g(x) = x` or `ln x`) is started from
/// the log-space least-squares line and refined by damped Gauss-Newton on
/// the original-space squared error. The verdict compares the log-space
/// line fits, which is how the two laws are told apart on a plot.
pub fn fit_decay(explained: &[f64]) -> Result<DecayReport> {
    if explained.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: explained.len(),
        });
    }
    if explained.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("decay fit needs positive proportions".into()));
    }
    let exponential = fit_one(DecayModel::Exponential, explained);
    let power = fit_one(DecayModel::Power, explained);
    let verdict = if exponential.log_r2 >= power.log_r2 {
        DecayModel::Exponential
    } else {
        DecayModel::Power
    };
    Ok(DecayReport {
        exponential,
        power,
        verdict,
        interpretation: verdict.interpretation().to_owned(),
    })
}

fn fit_one(model: DecayModel, y: &[f64]) -> DecayFit {
    let g: Vec<f64> = (1..=y.len()).map(|x| model.abscissa(x as f64)).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mut a, mut s, log_r2) = line_fit(&g, &ly);

    let sse = |a: f64, s: f64| -> f64 { g.iter().zip(y).map(|(gi, yi)| (yi - (a + s * gi).exp()).powi(2)).sum() };
    let mut current = sse(a, s);
    let mut mu = 1e-3;
    for _ in 0..200 {
        // normal equations of the Jacobian [f, f g]
        let (mut h11, mut h12, mut h22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (gi, yi) in g.iter().zip(y) {
            let f = (a + s * gi).exp();
            let e = yi - f;
            let (j1, j2) = (f, f * gi);
            h11 += j1 * j1;
            h12 += j1 * j2;
            h22 += j2 * j2;
            r1 += j1 * e;
            r2 += j2 * e;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (d11, d22) = (h11 * (1.0 + mu), h22 * (1.0 + mu));
            let det = d11 * d22 - h12 * h12;
            if det <= 0.0 {
                mu *= 10.0;
                continue;
            }
            let da = (d22 * r1 - h12 * r2) / det;
            let ds = (d11 * r2 - h12 * r1) / det;
            let trial = sse(a + da, s + ds);
            if trial < current {
                a += da;
                s += ds;
                let gain = current - trial;
                current = trial;
                mu = (mu / 10.0).max(1e-12);
                improved = gain > 1e-15 * current.max(1e-300);
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let fitted_curve: Vec<f64> = g.iter().map(|gi| (a + s * gi).exp()).collect();
    let n = y.len() as f64;
    let ym = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let rate = match model {
        DecayModel::Exponential => s.exp(),
        DecayModel::Power => -s,
    };
    DecayFit {
        model,
        amplitude: a.exp(),
        rate,
        beta: (model == DecayModel::Exponential && rate > 0.0 && rate < 1.0).then_some(1.0 - rate),
        r2: 1.0 - current / sst,
        mse: current / n,
        log_r2,
        fitted_curve,
    }
}

/// Intercept, slope and R² of the least-squares line of `y` on `x`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let syy: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (ym - slope * xm, slope, r2)
}

/// A decay law with its shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayLaw {
    Exponential { beta: f64 },
    Power { b: f64 },
}

/// `f(x + 1) / f(x) - 1` for the law.
pub fn relative_change(law: DecayLaw, x: u32) -> Result<f64> {
    if x < 1 {
        return Err(Error::Domain("relative change needs x >= 1".into()));
    }
    match law {
        DecayLaw::Exponential { beta } if beta > 0.0 && beta < 1.0 => Ok(-beta),
        DecayLaw::Power { b } if b > 1.0 && b.is_finite() => {
            let x = x as f64;
            Ok((x / (1.0 + x)).powf(b) - 1.0)
        }
        other => Err(Error::Domain(format!("invalid decay law {other:?}"))),
    }
}
