//! Quasi-Newton minimization with finite-difference gradients.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the infinity norm of the gradient falls below this.
    pub grad_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 500,
            grad_tol: 1e-6,
            fd_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    /// Line search could not decrease the objective any further.
    NoProgress,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

/// Central-difference gradient with step `rel * max(1, |x_i|)`.
pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = rel * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Minimizes `f` from `x0` with BFGS and Armijo backtracking.
///
/// Non-finite objective values are treated as `+inf`, so the line search
/// backs away from them.
pub fn minimize_bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: BfgsOptions) -> Minimum {
    let n = x0.len();
    let obj = |x: &[f64]| finite_or_inf(f(x));
    let mut x = x0.to_vec();
    let mut fx = obj(&x);
    let mut g = numeric_gradient(&obj, &x, opts.fd_step);
    let mut h = identity(n);
    let mut fresh = true;

    for iter in 0..opts.max_iter {
        if inf_norm(&g) < opts.grad_tol {
            return Minimum {
                x,
                value: fx,
                gradient: g,
                iterations: iter,
                termination: Termination::GradientTolerance,
            };
        }
        let mut p: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i][j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            h = identity(n);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        if fresh {
            // keep the first trial step modest
            let norm = inf_norm(&p);
            if norm > 1.0 {
                p.iter_mut().for_each(|v| *v /= norm);
                slope /= norm;
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + step * b).collect();
            let ft = obj(&trial);
            if ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }

        let Some((x_new, f_new)) = accepted else {
            if fresh {
                return Minimum {
                    x,
                    value: fx,
                    gradient: g,
                    iterations: iter,
                    termination: Termination::NoProgress,
                };
            }
            h = identity(n);
            fresh = true;
            continue;
        };

        let g_new = numeric_gradient(&obj, &x_new, opts.fd_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            if fresh {
                // scale the initial inverse Hessian
                let yy: f64 = y.iter().map(|v| v * v).sum();
                let scale = sy / yy;
                h = identity(n);
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }

        let tiny_change = (fx - f_new).abs() <= 1e-15 * (1.0 + fx.abs()) && inf_norm(&s) <= 1e-14;
        x = x_new;
        fx = f_new;
        g = g_new;
        if tiny_change {
            return Minimum {
                x,
                value: fx,
                gradient: g,
                iterations: iter + 1,
                termination: Termination::NoProgress,
            };
        }
    }
    let termination = if inf_norm(&g) < opts.grad_tol {
        Termination::GradientTolerance
    } else {
        Termination::MaxIterations
    };
    Minimum {
        x,
        value: fx,
        gradient: g,
        iterations: opts.max_iter,
        termination,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

// H <- (I - rho s y') H (I - rho y s') + rho s s'
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
