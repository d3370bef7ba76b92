use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::bspline::BSplineBasis;
use super::{adjusted_r2, DesignMatrix, FactorPValue, Regressor};
use crate::error::{Error, Result};
use crate::linalg::mean;

pub const GCV_GRID_POINTS: usize = 41;
pub const GCV_LOG10_MIN: f64 = -4.0;
pub const GCV_LOG10_MAX: f64 = 8.0;
pub const MAX_BACKFIT_CYCLES: usize = 100;
pub const BACKFIT_TOL: f64 = 1e-8;

/// How each smoother's λ is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaPolicy {
    /// Minimize GCV of the smoother on its partial residual, per cycle.
    #[default]
    Gcv,
    /// λ giving the requested edf (trace of the smoother minus one).
    FixedDf(f64),
    /// λ = ∞: every term is a centered line.
    ForceLinear,
    /// The same λ for every term.
    Fixed(f64),
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPolicy::Gcv => f.write_str("gcv"),
            LambdaPolicy::FixedDf(d) => write!(f, "df:{d}"),
            LambdaPolicy::ForceLinear => f.write_str("linear"),
            LambdaPolicy::Fixed(l) => write!(f, "lambda:{l}"),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let number = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| *x > 0.0)
                .ok_or_else(|| Error::Validation(format!("bad lambda policy `{s}`")))
        };
        match s.as_str() {
            "gcv" => Ok(LambdaPolicy::Gcv),
            "linear" | "force-linear" => Ok(LambdaPolicy::ForceLinear),
            _ => {
                if let Some(d) = s.strip_prefix("df:") {
                    Ok(LambdaPolicy::FixedDf(number(d)?))
                } else if let Some(l) = s.strip_prefix("lambda:") {
                    Ok(LambdaPolicy::Fixed(number(l)?))
                } else {
                    Err(Error::Validation(format!(
                        "bad lambda policy `{s}` (expected gcv, df:<d>, linear or lambda:<v>)"
                    )))
                }
            }
        }
    }
}

impl Serialize for LambdaPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LambdaPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn gcv_grid() -> impl Iterator<Item = f64> {
    (0..GCV_GRID_POINTS).map(|i| {
        let t = i as f64 / (GCV_GRID_POINTS - 1) as f64;
        10f64.powf(GCV_LOG10_MIN + t * (GCV_LOG10_MAX - GCV_LOG10_MIN))
    })
}

/// One factor's penalized spline plus its straight-line limit.
#[derive(Debug, Clone)]
struct Smoother {
    basis: BSplineBasis,
    b: DMatrix<f64>,
    l: DMatrix<f64>,
    x: Vec<f64>,
    x_mean: f64,
}

struct SmoothResult {
    fitted: Vec<f64>,
    trace: f64,
    penalty: f64,
}

impl Smoother {
    fn new(x: &[f64]) -> Result<Self> {
        let basis = BSplineBasis::new(x)?;
        let b = basis.design(x);
        let l = basis.penalty_root();
        Ok(Smoother {
            basis,
            b,
            l,
            x: x.to_vec(),
            x_mean: mean(x),
        })
    }

    fn k(&self) -> usize {
        self.b.ncols()
    }

    fn smooth(&self, r: &[f64], lambda: f64) -> SmoothResult {
        if lambda.is_infinite() {
            return self.line(r);
        }
        let n = r.len();
        let k = self.k();
        let p = self.l.nrows();
        let sl = lambda.sqrt();
        let mut a = DMatrix::zeros(n + p, k);
        a.rows_mut(0, n).copy_from(&self.b);
        a.rows_mut(n, p).copy_from(&(&self.l * sl));
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from_slice(r);
        let qr = a.qr();
        let rmat = qr.r();
        qr.q_tr_mul(&mut rhs);
        let c = rmat
            .solve_upper_triangular(&rhs.rows(0, k).into_owned())
            .expect("augmented spline system has full column rank");
        let fitted = &self.b * &c;
        let w = rmat
            .transpose()
            .solve_lower_triangular(&self.b.transpose())
            .expect("augmented spline system has full column rank");
        SmoothResult {
            penalty: lambda * (&self.l * &c).norm_squared(),
            fitted: fitted.iter().copied().collect(),
            trace: w.norm_squared(),
        }
    }

    fn line(&self, r: &[f64]) -> SmoothResult {
        let rm = mean(r);
        let sxx: f64 = self.x.iter().map(|x| (x - self.x_mean).powi(2)).sum();
        let sxy: f64 = self.x.iter().zip(r).map(|(x, y)| (x - self.x_mean) * (y - rm)).sum();
        let slope = sxy / sxx;
        SmoothResult {
            fitted: self.x.iter().map(|x| rm + slope * (x - self.x_mean)).collect(),
            trace: 2.0,
            penalty: 0.0,
        }
    }

    /// Trace of the smoother matrix at λ; independent of the data.
    fn trace(&self, lambda: f64) -> f64 {
        self.smooth(&vec![0.0; self.x.len()], lambda).trace
    }

    /// Grid λ minimizing `n * RSS / (n - tr S)^2`; near-ties go to the larger λ.
    fn gcv_lambda(&self, r: &[f64]) -> f64 {
        let n = r.len() as f64;
        let scale: f64 = r.iter().map(|v| v * v).sum();
        let mut best = (f64::INFINITY, f64::NAN);
        for lambda in gcv_grid() {
            let s = self.smooth(r, lambda);
            let rss: f64 = r.iter().zip(&s.fitted).map(|(a, b)| (a - b) * (a - b)).sum();
            let denom = n - s.trace;
            let gcv = if denom > 0.0 { n * rss / (denom * denom) } else { f64::INFINITY };
            if gcv <= best.0 * (1.0 + 1e-9) + 1e-14 * scale {
                best = (best.0.min(gcv), lambda);
            }
        }
        best.1
    }

    /// λ whose edf (trace - 1) equals `df`, by bisection in log λ.
    fn lambda_for_df(&self, df: f64) -> f64 {
        if df <= 1.0 {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = (-8.0f64, 12.0f64);
        if self.trace(10f64.powf(lo)) - 1.0 <= df {
            return 10f64.powf(lo);
        }
        if self.trace(10f64.powf(hi)) - 1.0 >= df {
            return 10f64.powf(hi);
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.trace(10f64.powf(mid)) - 1.0 > df {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        10f64.powf(0.5 * (lo + hi))
    }
}

fn build_smoothers(design: &DesignMatrix) -> Result<Vec<Smoother>> {
    design.factors.iter().map(|f| Smoother::new(&f.values)).collect()
}

fn center(v: &mut [f64]) -> f64 {
    let m = mean(v);
    v.iter_mut().for_each(|x| *x -= m);
    m
}

/// Per-cycle record of plain backfitting at fixed λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackfitTrace {
    pub intercept: f64,
    /// Centered fitted component per factor.
    pub components: Vec<Vec<f64>>,
    pub fitted: Vec<f64>,
    /// Penalized objective after each full cycle.
    pub objective: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
}

/// Backfitting at fixed λ (one per factor; `f64::INFINITY` for a line).
///
/// Each step replaces one component by its penalized smooth of the partial
/// residual, which is the exact minimizer of the penalized objective in that
/// block, so the objective never increases.
pub fn backfit(response: &[f64], factors: &[Regressor], lambdas: &[f64], max_cycles: usize, tol: f64) -> Result<BackfitTrace> {
    let design = DesignMatrix::new(response, factors)?;
    if lambdas.len() != factors.len() || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Precondition("one positive λ per factor required".into()));
    }
    let smoothers = build_smoothers(&design)?;
    let y = &design.response;
    let n = y.len();
    let m = smoothers.len();
    let intercept = mean(y);
    let mut comps = vec![vec![0.0; n]; m];
    let mut penalties = vec![0.0; m];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut cycles = 0;
    while cycles < max_cycles {
        cycles += 1;
        let mut change = 0.0f64;
        for j in 0..m {
            let r = partial_residual(y, intercept, &comps, j);
            let s = smoothers[j].smooth(&r, lambdas[j]);
            let mut f = s.fitted;
            center(&mut f);
            change = change.max(f.iter().zip(&comps[j]).fold(0.0, |a, (x, y)| a.max((x - y).abs())));
            comps[j] = f;
            penalties[j] = s.penalty;
        }
        let fitted = assemble(intercept, &comps);
        let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
        objective.push(rss + penalties.iter().sum::<f64>());
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(BackfitTrace {
        intercept,
        fitted: assemble(intercept, &comps),
        components: comps,
        objective,
        cycles,
        converged,
    })
}

fn partial_residual(y: &[f64], intercept: f64, comps: &[Vec<f64>], skip: usize) -> Vec<f64> {
    (0..y.len())
        .map(|i| {
            y[i] - intercept
                - comps
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, c)| c[i])
                    .sum::<f64>()
        })
        .collect()
}

fn assemble(intercept: f64, comps: &[Vec<f64>]) -> Vec<f64> {
    let n = comps.first().map_or(0, |c| c.len());
    (0..n).map(|i| intercept + comps.iter().map(|c| c[i]).sum::<f64>()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmootherSummary {
    pub factor: String,
    /// `None` when the term is a straight line (λ = ∞).
    pub lambda: Option<f64>,
    pub edf: f64,
    pub basis_size: usize,
    /// Breakpoints of the basis, original units.
    pub breakpoints: Vec<f64>,
    /// B-spline coefficients, or the slope alone for a linear term.
    pub coefficients: Vec<f64>,
    /// Fitted contribution at each observation; sums to zero.
    pub component: Vec<f64>,
}

/// Additive model `y = β0 + Σ f_j(x_j) + ε` with penalized cubic splines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamFit {
    pub policy: LambdaPolicy,
    pub intercept: f64,
    pub smoothers: Vec<SmootherSummary>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub p_values: Vec<FactorPValue>,
    pub r2: f64,
    pub adjusted_r2: f64,
    /// `1 + Σ edf_j`.
    pub total_edf: f64,
    /// λ selection cycles used.
    pub cycles: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GamFit {
    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.smoothers.iter().map(|s| s.factor.clone()).collect()
    }
}

pub fn fit_gam(response: &[f64], factors: &[Regressor], policy: LambdaPolicy) -> Result<GamFit> {
    let design = DesignMatrix::new(response, factors)?;
    let mut fit = fit_design(&design, policy)?;
    fit.p_values = drop_one_tests(&design, &fit)?;
    Ok(fit)
}

/// Drop-one approximate F-tests for each smooth term of `fit`. The reduced
/// model keeps the remaining terms at their full-model λ, so the two fits
/// are nested and a linear term reproduces the GLM t-test.
///
/// The reference distribution treats the selected λ as fixed, so with
/// data-driven λ the test rejects a null term more often than nominal
/// (about 16% at the 5% level in simulations with 22 to 80 observations).
pub fn gam_significance(fit: &GamFit, response: &[f64], factors: &[Regressor]) -> Result<Vec<FactorPValue>> {
    let design = DesignMatrix::new(response, factors)?;
    if design.factor_names() != fit.factor_names() {
        return Err(Error::Precondition("factors do not match the fitted model".into()));
    }
    drop_one_tests(&design, fit)
}

fn drop_one_tests(design: &DesignMatrix, full: &GamFit) -> Result<Vec<FactorPValue>> {
    let n = design.n_obs() as f64;
    let rss_full = full.rss();
    let tss = design.total_sum_of_squares();
    (0..design.n_factors())
        .map(|j| {
            let (rss_drop, edf_drop) = if design.n_factors() == 1 {
                (tss, 1.0)
            } else {
                let reduced_design = design.without(j);
                let smoothers = build_smoothers(&reduced_design)?;
                let lambdas: Vec<f64> = full
                    .smoothers
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, s)| s.lambda.unwrap_or(f64::INFINITY))
                    .collect();
                let reduced = joint_fit(&reduced_design, &smoothers, &lambdas)?;
                (reduced.rss(), reduced.total_edf)
            };
            let df1 = full.total_edf - edf_drop;
            let df2 = n - full.total_edf;
            let factor = design.factors[j].name.clone();
            if df1 <= 0.0 || df2 <= 0.0 {
                return Ok(FactorPValue {
                    factor,
                    p_value: 1.0,
                    degenerate: true,
                });
            }
            let f = ((rss_drop - rss_full) / df1) / (rss_full / df2);
            let p_value = if rss_full <= 0.0 {
                if rss_drop > 0.0 { 0.0 } else { 1.0 }
            } else if f <= 0.0 {
                1.0
            } else {
                let dist = FisherSnedecor::new(df1, df2).map_err(|e| Error::Domain(e.to_string()))?;
                dist.sf(f)
            };
            Ok(FactorPValue {
                factor,
                p_value,
                degenerate: false,
            })
        })
        .collect()
}

/// Chooses λ per the policy, then solves the joint penalized problem.
fn fit_design(design: &DesignMatrix, policy: LambdaPolicy) -> Result<GamFit> {
    let smoothers = build_smoothers(design)?;
    let mut warnings = Vec::new();
    let (lambdas, cycles, converged) = match policy {
        LambdaPolicy::ForceLinear => (vec![f64::INFINITY; smoothers.len()], 0, true),
        LambdaPolicy::Fixed(l) => (vec![l; smoothers.len()], 0, true),
        LambdaPolicy::FixedDf(d) => (smoothers.iter().map(|s| s.lambda_for_df(d)).collect(), 0, true),
        LambdaPolicy::Gcv => select_by_gcv(design, &smoothers)?,
    };
    if !converged {
        warnings.push(format!(
            "smoothing parameter selection did not settle after {} cycles; using the last λ vector",
            cycles
        ));
    }
    let mut fit = joint_fit(design, &smoothers, &lambdas)?;
    fit.policy = policy;
    fit.cycles = cycles;
    fit.converged = converged;
    fit.warnings = warnings;
    Ok(fit)
}

/// Gauss-Seidel search for a λ vector at which every smoother's GCV choice
/// on its partial residual is self-consistent.
///
/// Partial residuals come from the exact joint fit at the current λ (the
/// fixed point backfitting would converge to), starting from the all-linear
/// fit. Stops when a full cycle leaves λ unchanged, or flags a failure when
/// a λ vector recurs or the cycle budget runs out.
fn select_by_gcv(design: &DesignMatrix, smoothers: &[Smoother]) -> Result<(Vec<f64>, usize, bool)> {
    let m = smoothers.len();
    let mut lambdas = vec![f64::INFINITY; m];
    let mut fit = joint_fit(design, smoothers, &lambdas)?;
    let mut seen = vec![lambdas.clone()];
    for cycle in 1..=MAX_BACKFIT_CYCLES {
        let mut changed = false;
        for j in 0..m {
            let r: Vec<f64> = fit
                .residuals
                .iter()
                .zip(&fit.smoothers[j].component)
                .map(|(e, f)| e + f)
                .collect();
            let lambda = smoothers[j].gcv_lambda(&r);
            if lambda != lambdas[j] {
                lambdas[j] = lambda;
                changed = true;
                fit = joint_fit(design, smoothers, &lambdas)?;
            }
        }
        if !changed {
            return Ok((lambdas, cycle, true));
        }
        if seen.contains(&lambdas) {
            return Ok((lambdas, cycle, false));
        }
        seen.push(lambdas.clone());
    }
    Ok((lambdas, MAX_BACKFIT_CYCLES, false))
}

/// Exact minimizer of the penalized least-squares objective at fixed λ,
/// with each spline constrained to sum to zero over the sample.
fn joint_fit(design: &DesignMatrix, smoothers: &[Smoother], lambdas: &[f64]) -> Result<GamFit> {
    let n = design.n_obs();
    // per block: design columns, penalty rows, map back to basis coefficients
    let mut blocks: Vec<(DMatrix<f64>, DMatrix<f64>, Option<DMatrix<f64>>)> = Vec::new();
    for (s, &lambda) in smoothers.iter().zip(lambdas) {
        if lambda.is_infinite() {
            let xc = DMatrix::from_iterator(n, 1, s.x.iter().map(|x| x - s.x_mean));
            blocks.push((xc, DMatrix::zeros(0, 1), None));
        } else {
            let z = sum_to_zero_basis(&s.b);
            let x = &s.b * &z;
            let pen = &s.l * &z * lambda.sqrt();
            blocks.push((x, pen, Some(z)));
        }
    }
    let p: usize = 1 + blocks.iter().map(|b| b.0.ncols()).sum::<usize>();
    let pen_rows: usize = blocks.iter().map(|b| b.1.nrows()).sum();
    let mut x = DMatrix::zeros(n, p);
    let mut a = DMatrix::zeros(n + pen_rows, p);
    x.column_mut(0).fill(1.0);
    let (mut col, mut row) = (1, n);
    for (bx, bp, _) in &blocks {
        x.view_mut((0, col), (n, bx.ncols())).copy_from(bx);
        a.view_mut((row, col), (bp.nrows(), bp.ncols())).copy_from(bp);
        col += bx.ncols();
        row += bp.nrows();
    }
    a.rows_mut(0, n).copy_from(&x);
    let mut rhs = DVector::zeros(n + pen_rows);
    rhs.rows_mut(0, n).copy_from_slice(&design.response);

    let qr = a.qr();
    let r = qr.r();
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-12 * r.amax()) {
        return Err(Error::Collinearity {
            columns: design.factor_names(),
        });
    }
    qr.q_tr_mul(&mut rhs);
    let beta = r
        .solve_upper_triangular(&rhs.rows(0, p).into_owned())
        .ok_or_else(|| Error::Degenerate("singular penalized system".into()))?;
    let fitted = &x * &beta;
    // F = (A'A)^{-1} X'X; its diagonal gives per-term edf
    let w = r
        .transpose()
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Degenerate("singular penalized system".into()))?;
    let f = r
        .solve_upper_triangular(&(&w * &x))
        .ok_or_else(|| Error::Degenerate("singular penalized system".into()))?;

    let mut smoothers_out = Vec::with_capacity(blocks.len());
    let mut col = 1;
    for ((s, &lambda), (bx, _, z)) in smoothers.iter().zip(lambdas).zip(&blocks) {
        let w = bx.ncols();
        let theta = beta.rows(col, w).into_owned();
        let mut component: Vec<f64> = (bx * &theta).iter().copied().collect();
        center(&mut component);
        let edf = (col..col + w).map(|i| f[(i, i)]).sum();
        let coefficients = match z {
            Some(z) => (z * &theta).iter().copied().collect(),
            None => vec![theta[0]],
        };
        smoothers_out.push(SmootherSummary {
            factor: String::new(),
            lambda: lambda.is_finite().then_some(lambda),
            edf,
            basis_size: s.k(),
            breakpoints: s.basis.breakpoints.clone(),
            coefficients,
            component,
        });
        col += w;
    }
    for (s, f) in smoothers_out.iter_mut().zip(&design.factors) {
        s.factor = f.name.clone();
    }
    let fitted: Vec<f64> = fitted.iter().copied().collect();
    let residuals: Vec<f64> = design.response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let tss = design.total_sum_of_squares();
    let total_edf = 1.0 + smoothers_out.iter().map(|s| s.edf).sum::<f64>();
    Ok(GamFit {
        policy: LambdaPolicy::Gcv,
        intercept: beta[0],
        smoothers: smoothers_out,
        fitted,
        residuals,
        p_values: Vec::new(),
        r2: 1.0 - rss / tss,
        adjusted_r2: adjusted_r2(rss, tss, n, total_edf),
        total_edf,
        cycles: 0,
        converged: true,
        warnings: Vec::new(),
    })
}

/// Columns spanning `{c : 1'Bc = 0}`.
fn sum_to_zero_basis(b: &DMatrix<f64>) -> DMatrix<f64> {
    let k = b.ncols();
    let sums: Vec<f64> = (0..k).map(|j| b.column(j).sum()).collect();
    let pivot = (0..k).fold(0, |best, j| if sums[j] > sums[best] { j } else { best });
    let mut z = DMatrix::zeros(k, k - 1);
    for (c, i) in (0..k).filter(|&i| i != pivot).enumerate() {
        z[(i, c)] = 1.0;
        z[(pivot, c)] = -sums[i] / sums[pivot];
    }
    z
}
