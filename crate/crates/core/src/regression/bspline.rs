use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEGREE: usize = 3;

/// Largest number of breakpoints; beyond it they sit at evenly spaced ranks
/// of the distinct values, keeping the joint fit cheap for long samples.
pub const MAX_BREAKPOINTS: usize = 40;

/// Clamped cubic B-spline basis with a breakpoint at every distinct observed
/// value (up to [`MAX_BREAKPOINTS`]).
///
/// Inputs are mapped affinely onto `[0, 1]` before evaluation so that one
/// λ grid serves factors of any scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    /// Breakpoints, ascending, in original units.
    pub breakpoints: Vec<f64>,
    offset: f64,
    scale: f64,
    knots: Vec<f64>,
}

impl BSplineBasis {
    pub fn new(x: &[f64]) -> Result<Self> {
        let mut bp: Vec<f64> = x.to_vec();
        if bp.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite spline abscissa".into()));
        }
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        if bp.len() < 2 {
            return Err(Error::Degenerate("spline needs at least two distinct values".into()));
        }
        if bp.len() > MAX_BREAKPOINTS {
            let m = bp.len() - 1;
            let k = MAX_BREAKPOINTS - 1;
            bp = (0..=k).map(|i| bp[(i * m + k / 2) / k]).collect();
        }
        let offset = bp[0];
        let scale = bp[bp.len() - 1] - bp[0];
        let u: Vec<f64> = bp.iter().map(|v| (v - offset) / scale).collect();
        let mut knots = vec![0.0; DEGREE];
        knots.extend_from_slice(&u);
        knots.extend(std::iter::repeat_n(1.0, DEGREE));
        // the mapped end points are exact by construction
        knots[DEGREE] = 0.0;
        let last = knots.len() - DEGREE - 1;
        knots[last] = 1.0;
        Ok(BSplineBasis {
            breakpoints: bp,
            offset,
            scale,
            knots,
        })
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.knots.len() - DEGREE - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn map(&self, x: f64) -> f64 {
        ((x - self.offset) / self.scale).clamp(0.0, 1.0)
    }

    /// All basis functions at `x`; values outside the data range are clamped
    /// to the boundary.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let u = self.map(x);
        let t = &self.knots;
        let n = self.len();
        let span = if u >= 1.0 {
            n - 1
        } else {
            // last index s with t[s] <= u, within [DEGREE, n-1]
            let mut s = DEGREE;
            while s + 1 < n && t[s + 1] <= u {
                s += 1;
            }
            s
        };
        // Cox-de Boor, non-zero functions only
        let mut vals = [0.0; DEGREE + 1];
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        vals[0] = 1.0;
        for j in 1..=DEGREE {
            left[j] = u - t[span + 1 - j];
            right[j] = t[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { vals[r] / denom };
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        let mut out = vec![0.0; n];
        for (r, v) in vals.iter().enumerate() {
            out[span - DEGREE + r] = *v;
        }
        out
    }

    pub fn design(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.len();
        let mut b = DMatrix::zeros(x.len(), n);
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.eval(xi).into_iter().enumerate() {
                b[(i, j)] = v;
            }
        }
        b
    }

    /// Greville abscissae on the mapped scale: the coefficients
    /// `a + b * greville` reproduce the line `a + b * u`.
    pub fn greville(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.knots[i + 1..i + 1 + DEGREE].iter().sum::<f64>() / DEGREE as f64)
            .collect()
    }

    /// Square root `L` of the roughness penalty `P = L'L`.
    ///
    /// Row `i` is the second divided difference of the coefficients over the
    /// Greville abscissae, weighted by the square root of the local spacing,
    /// so `c'Pc` approximates the integral of the squared second derivative
    /// and vanishes exactly on linear functions.
    pub fn penalty_root(&self) -> DMatrix<f64> {
        let g = self.greville();
        let n = g.len();
        let mut l = DMatrix::zeros(n.saturating_sub(2), n);
        for i in 0..n.saturating_sub(2) {
            let h0 = g[i + 1] - g[i];
            let h1 = g[i + 2] - g[i + 1];
            let w = 0.5 * (h0 + h1);
            let s = w.sqrt() / w;
            l[(i, i)] = s / h0;
            l[(i, i + 1)] = -s * (1.0 / h0 + 1.0 / h1);
            l[(i, i + 2)] = s / h1;
        }
        l
    }
}
