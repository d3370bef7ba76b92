//! AR(q)-ARCH(1) with standardized Student-t shocks, fitted by maximum
//! likelihood, and extraction of the innovation series.
//!
//! ```text
//! r[t] - mu    = sum_{i=1..q} phi_i (r[t-i] - mu) + eps[t]
//! eps[t]       = sigma[t] z[t],   z[t] ~ standardized t(nu)
//! sigma[t]^2   = omega + alpha1 eps[t-1]^2
//! ```
//!
//! Conventions:
//! * `z` has unit variance, so `sigma[t]` is the conditional standard deviation.
//! * AR deviations before the sample start are zero and `sigma[0]^2` is the
//!   sample variance of the AR residuals, so the innovation series has the
//!   same length as the returns.
//! * `nu` is confined to [`NU_MIN`, `NU_MAX`]; on short samples the likelihood
//!   otherwise drifts along `nu -> 2`, `omega -> inf`.
//!
//! The optimizer works on standardized returns and unconstrained coordinates
//! `(mu, phi, ln omega, logit alpha1, logit of nu within its bounds)`, starting
//! from four deterministic points. It is deterministic.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::adf::{adf_test, AdfResult, LagOrder};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, mean, variance};
use crate::optim::{minimize_bfgs, BfgsOptions, Termination};
use crate::transforms::{TransformKind, TransformedSeries};

pub const NU_MIN: f64 = 2.1;
pub const NU_MAX: f64 = 100.0;
pub const MIN_OBSERVATIONS: usize = 10;
/// Iteration budget per starting point.
pub const MAX_ITER: usize = 500;
/// Convergence threshold on the gradient of the mean log-likelihood in the
/// optimizer's coordinates.
pub const GRAD_TOL: f64 = 1e-6;

const START_ALPHA: [f64; 2] = [0.05, 0.3];
const START_NU: [f64; 2] = [5.0, 10.0];
// relative distance to a bound below which a parameter counts as on it
const BOUND_MARGIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArArchSpec {
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArArchParams {
    pub mu: f64,
    pub phi: Vec<f64>,
    pub omega: f64,
    pub alpha1: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArArchFit {
    pub params: ArArchParams,
    /// Standardized innovations `z[t]`.
    pub innovations: Vec<f64>,
    /// Conditional standard deviations `sigma[t]`.
    pub sigma: Vec<f64>,
    /// AR residuals `eps[t]`.
    pub residuals: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ArArchFit {
    pub fn q(&self) -> usize {
        self.params.phi.len()
    }
}

/// AR residuals and conditional standard deviations implied by `params`.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub residuals: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Filtered {
    pub fn innovations(&self) -> Vec<f64> {
        self.residuals
            .iter()
            .zip(&self.sigma)
            .map(|(e, s)| e / s)
            .collect()
    }
}

pub fn filter(returns: &[f64], params: &ArArchParams) -> Filtered {
    let n = returns.len();
    let dev: Vec<f64> = returns.iter().map(|r| r - params.mu).collect();
    let residuals: Vec<f64> = (0..n)
        .map(|t| {
            let ar: f64 = params
                .phi
                .iter()
                .enumerate()
                .filter(|(i, _)| t > *i)
                .map(|(i, phi)| phi * dev[t - 1 - i])
                .sum();
            dev[t] - ar
        })
        .collect();
    let mut sigma = Vec::with_capacity(n);
    sigma.push(variance(&residuals).sqrt());
    for t in 1..n {
        sigma.push((params.omega + params.alpha1 * residuals[t - 1].powi(2)).sqrt());
    }
    Filtered { residuals, sigma }
}

fn t_log_density_const(nu: f64) -> f64 {
    ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln()
}

/// Conditional log-likelihood of `returns` under `params`.
pub fn log_likelihood(returns: &[f64], params: &ArArchParams) -> f64 {
    let f = filter(returns, params);
    let c = t_log_density_const(params.nu);
    let nu = params.nu;
    f.residuals
        .iter()
        .zip(&f.sigma)
        .map(|(e, s)| {
            let z = e / s;
            c - s.ln() - 0.5 * (nu + 1.0) * (z * z / (nu - 2.0)).ln_1p()
        })
        .sum()
}

/// Runs the model forward from innovations `z` with `sigma[0] = sigma0`,
/// returning the implied returns.
pub fn reconstruct(params: &ArArchParams, innovations: &[f64], sigma0: f64) -> Vec<f64> {
    let mut returns = Vec::with_capacity(innovations.len());
    let mut prev_eps = 0.0;
    for (t, z) in innovations.iter().enumerate() {
        let sigma = if t == 0 {
            sigma0
        } else {
            (params.omega + params.alpha1 * prev_eps * prev_eps).sqrt()
        };
        let eps = sigma * z;
        let ar: f64 = params
            .phi
            .iter()
            .enumerate()
            .filter(|(i, _)| t > *i)
            .map(|(i, phi)| phi * (returns[t - 1 - i] - params.mu))
            .sum::<f64>();
        returns.push(params.mu + ar + eps);
        prev_eps = eps;
    }
    returns
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn to_params(theta: &[f64], q: usize) -> ArArchParams {
    ArArchParams {
        mu: theta[0],
        phi: theta[1..=q].to_vec(),
        omega: theta[q + 1].exp(),
        alpha1: logistic(theta[q + 2]),
        nu: NU_MIN + (NU_MAX - NU_MIN) * logistic(theta[q + 3]),
    }
}

fn to_theta(p: &ArArchParams) -> Vec<f64> {
    let mut theta = vec![p.mu];
    theta.extend(&p.phi);
    theta.push(p.omega.ln());
    theta.push(logit(p.alpha1));
    theta.push(logit((p.nu - NU_MIN) / (NU_MAX - NU_MIN)));
    theta
}

/// Levinson-Durbin AR coefficients from sample autocorrelations.
fn yule_walker(x: &[f64], q: usize) -> Vec<f64> {
    let m = mean(x);
    let n = x.len();
    let acov: Vec<f64> = (0..=q)
        .map(|k| (k..n).map(|t| (x[t] - m) * (x[t - k] - m)).sum::<f64>() / n as f64)
        .collect();
    if acov[0] <= 0.0 {
        return vec![0.0; q];
    }
    let mut phi = vec![0.0; q];
    let mut err = acov[0];
    for k in 0..q {
        let acc: f64 = (0..k).map(|j| phi[j] * acov[k - j]).sum();
        let kappa = (acov[k + 1] - acc) / err;
        let prev = phi.clone();
        phi[k] = kappa;
        for j in 0..k {
            phi[j] = prev[j] - kappa * prev[k - 1 - j];
        }
        err *= 1.0 - kappa * kappa;
    }
    phi
}

/// Deterministic starting points: least-squares AR fit crossed with
/// `alpha1 in {0.05, 0.3}` and `nu in {5, 10}`.
pub fn starting_points(returns: &[f64], q: usize) -> Vec<ArArchParams> {
    let n = returns.len();
    let rows = n - q;
    let x = nalgebra::DMatrix::from_fn(rows, q + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            returns[q + r - c]
        }
    });
    let y = nalgebra::DVector::from_fn(rows, |r, _| returns[q + r]);
    let (mu, phi, resid_var) = match least_squares(&x, &y) {
        Ok(fit) => {
            let phi: Vec<f64> = fit.coef.iter().skip(1).copied().collect();
            let denom = 1.0 - phi.iter().sum::<f64>();
            let mu = if denom.abs() > 1e-3 {
                fit.coef[0] / denom
            } else {
                mean(returns)
            };
            (mu, phi, fit.rss / rows as f64)
        }
        Err(_) => {
            let phi = yule_walker(returns, q);
            let mu = mean(returns);
            let p = ArArchParams {
                mu,
                phi: phi.clone(),
                omega: 1.0,
                alpha1: 0.0,
                nu: 10.0,
            };
            (mu, phi, variance(&filter(returns, &p).residuals))
        }
    };
    let resid_var = if resid_var > 0.0 { resid_var } else { variance(returns).max(1e-12) };
    let mut starts = Vec::new();
    for alpha1 in START_ALPHA {
        for nu in START_NU {
            starts.push(ArArchParams {
                mu,
                phi: phi.clone(),
                omega: resid_var * (1.0 - alpha1),
                alpha1,
                nu,
            });
        }
    }
    starts
}

fn on_bound(p: &ArArchParams) -> bool {
    p.alpha1 < BOUND_MARGIN
        || p.alpha1 > 1.0 - BOUND_MARGIN
        || (p.nu - NU_MIN) < BOUND_MARGIN * (NU_MAX - NU_MIN)
        || (NU_MAX - p.nu) < BOUND_MARGIN * (NU_MAX - NU_MIN)
}

/// Maximum-likelihood fit of AR(`spec.q`)-ARCH(1)-t to `returns`.
///
/// A fit whose optimum lies on a parameter bound is returned with
/// `converged = false`. [`Error::NonConvergence`] is raised only when the
/// iteration budget runs out, and carries the best fit found.
pub fn fit_ar_arch(returns: &[f64], spec: &ArArchSpec) -> Result<ArArchFit> {
    if spec.q == 0 {
        return Err(Error::Precondition("AR order q must be >= 1".into()));
    }
    let needed = MIN_OBSERVATIONS.max(spec.q + 4);
    if returns.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: returns.len(),
        });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::Validation("returns contain non-finite values".into()));
    }
    let loc = mean(returns);
    let scale = variance(returns).sqrt();
    if scale == 0.0 {
        return Err(Error::Degenerate("returns are constant".into()));
    }
    let std_returns: Vec<f64> = returns.iter().map(|r| (r - loc) / scale).collect();
    let n = std_returns.len() as f64;
    let q = spec.q;
    let objective = |theta: &[f64]| -log_likelihood(&std_returns, &to_params(theta, q)) / n;
    let opts = BfgsOptions {
        max_iter: MAX_ITER,
        grad_tol: GRAD_TOL * 1e-3,
        ..BfgsOptions::default()
    };

    let mut best: Option<crate::optim::Minimum> = None;
    for start in starting_points(&std_returns, q) {
        let m = minimize_bfgs(objective, &to_theta(&start), opts);
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");

    let std_params = to_params(&best.x, q);
    let params = ArArchParams {
        mu: loc + scale * std_params.mu,
        phi: std_params.phi.clone(),
        omega: std_params.omega * scale * scale,
        alpha1: std_params.alpha1,
        nu: std_params.nu,
    };
    let filtered = filter(returns, &params);
    let grad_ok = best.gradient.iter().all(|g| g.abs() < GRAD_TOL);
    let fit = ArArchFit {
        innovations: filtered.innovations(),
        sigma: filtered.sigma,
        residuals: filtered.residuals,
        log_likelihood: log_likelihood(returns, &params),
        converged: grad_ok && !on_bound(&params),
        iterations: best.iterations,
        params,
    };
    if best.termination == Termination::MaxIterations {
        return Err(Error::NonConvergence {
            iterations: best.iterations,
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAttempt {
    pub q: usize,
    pub adf: AdfResult,
    pub stationary: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnovationSelection {
    pub chosen_q: usize,
    pub attempts: Vec<QAttempt>,
    /// False when no candidate produced a stationary innovation series; the
    /// attempt with the lowest ADF p-value is then kept.
    pub stationary: bool,
    pub fit: ArArchFit,
    pub innovations: TransformedSeries,
    pub warnings: Vec<String>,
}

impl InnovationSelection {
    pub fn adf_for(&self, q: usize) -> Option<&AdfResult> {
        self.attempts.iter().find(|a| a.q == q).map(|a| &a.adf)
    }
}

/// Fits each candidate order in turn and keeps the smallest `q` whose
/// innovations reject a unit root at `adf_threshold`.
pub fn select_innovations(
    returns: &TransformedSeries,
    q_candidates: &[usize],
    adf_threshold: f64,
    lag: LagOrder,
) -> Result<InnovationSelection> {
    if q_candidates.is_empty() {
        return Err(Error::Precondition("q_candidates must not be empty".into()));
    }
    if q_candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("q_candidates must be strictly ascending".into()));
    }
    let mut attempts = Vec::new();
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    for &q in q_candidates {
        let fit = match fit_ar_arch(&returns.values, &ArArchSpec { q }) {
            Ok(fit) => fit,
            Err(Error::NonConvergence { iterations, best }) => {
                warnings.push(format!(
                    "AR({q})-ARCH(1) fit hit the iteration budget ({iterations}); using best point"
                ));
                *best
            }
            Err(e) => return Err(e),
        };
        if !fit.converged {
            warnings.push(format!(
                "AR({q})-ARCH(1) optimum is on a parameter bound or has a non-zero gradient"
            ));
        }
        let adf = adf_test(&fit.innovations, lag, adf_threshold)?;
        let stationary = adf.verdict.reject_unit_root;
        attempts.push(QAttempt {
            q,
            adf: adf.result,
            stationary,
            converged: fit.converged,
        });
        fits.push(fit);
        if stationary {
            break;
        }
    }
    let stationary = attempts.last().is_some_and(|a| a.stationary);
    let idx = if stationary {
        attempts.len() - 1
    } else {
        warnings.push(format!(
            "no candidate q produced stationary innovations at {adf_threshold}"
        ));
        attempts
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.adf.p_value.total_cmp(&b.1.adf.p_value))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let fit = fits.swap_remove(idx);
    let innovations = TransformedSeries {
        values: fit.innovations.clone(),
        kind: TransformKind::Innovation,
        source: returns.source.clone(),
        start_year: returns.start_year,
    };
    Ok(InnovationSelection {
        chosen_q: attempts[idx].q,
        attempts,
        stationary,
        fit,
        innovations,
        warnings,
    })
}
