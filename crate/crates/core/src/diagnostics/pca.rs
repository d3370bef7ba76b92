use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ResidualMatrix;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Which second-moment matrix of the residuals is decomposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PcaScaling {
    /// `R'R`, no centering or scaling.
    CrossProduct,
    /// Column-centered `R'R`.
    Centered,
    /// Correlation matrix of the columns. This is the variant that reproduces
    /// the published explained-variance proportions.
    #[default]
    Correlation,
}

impl fmt::Display for PcaScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PcaScaling::CrossProduct => "cross-product",
            PcaScaling::Centered => "centered",
            PcaScaling::Correlation => "correlation",
        })
    }
}

impl FromStr for PcaScaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cross-product" | "crossproduct" | "raw" => Ok(PcaScaling::CrossProduct),
            "centered" | "covariance" => Ok(PcaScaling::Centered),
            "correlation" => Ok(PcaScaling::Correlation),
            other => Err(Error::Validation(format!("unknown PCA scaling `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub scaling: PcaScaling,
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, one per eigenvalue.
    pub components: Vec<Vec<f64>>,
    /// `eigenvalue / Σ eigenvalues`.
    pub explained: Vec<f64>,
}

pub fn pca(residuals: &ResidualMatrix, scaling: PcaScaling) -> Result<PcaResult> {
    let (t, k) = (residuals.n_years(), residuals.n_cities());
    if k < 2 || t < k {
        return Err(Error::Precondition(format!(
            "PCA needs at least 2 cities and as many years as cities (got {t} x {k})"
        )));
    }
    let mut r = residuals.to_matrix();
    if scaling != PcaScaling::CrossProduct {
        for mut col in r.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
            if scaling == PcaScaling::Correlation {
                let norm = col.norm();
                if norm == 0.0 {
                    return Err(Error::Degenerate("constant residual column".into()));
                }
                col /= norm;
            }
        }
    }
    let cross: DMatrix<f64> = r.transpose() * &r;
    let (values, vectors) = symmetric_eigen(&cross);
    let tol = 1e-10 * values.first().copied().unwrap_or(0.0).abs().max(1.0);
    let eigenvalues: Vec<f64> = values
        .iter()
        .map(|v| if *v < 0.0 && *v >= -tol { 0.0 } else { *v })
        .collect();
    if eigenvalues.iter().any(|v| *v < 0.0) {
        return Err(Error::Degenerate("negative eigenvalue of a Gram matrix".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("residual matrix is zero".into()));
    }
    Ok(PcaResult {
        scaling,
        explained: eigenvalues.iter().map(|v| v / total).collect(),
        components: vectors.column_iter().map(|c| c.iter().copied().collect()).collect(),
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::builtin_residuals;
    use crate::panel::CityCode;
    use crate::regression::Model;
    use proptest::prelude::*;

    fn codes(k: usize) -> Vec<CityCode> {
        (0..k).map(|i| CityCode::new(&format!("C{}A", (b'A' + i as u8) as char)).unwrap()).collect()
    }

    #[test]
    fn orthogonal_columns() {
        let m = ResidualMatrix::new(
            vec![vec![2.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]],
            vec![1, 2, 3],
            codes(2),
        )
        .unwrap();
        let p = pca(&m, PcaScaling::CrossProduct).unwrap();
        assert!((p.explained[0] - 0.8).abs() < 1e-14);
        assert!((p.explained[1] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn published_rows_reproduced() {
        for model in [Model::Glm, Model::Gam] {
            let p = pca(&builtin_residuals(model), PcaScaling::Correlation).unwrap();
            for (a, b) in p.explained.iter().zip(crate::data::published_explained_variance(model)) {
                assert!((a - b).abs() < 0.01, "{model}: {:?}", p.explained);
            }
        }
    }

    #[test]
    fn too_few_rows() {
        let m = ResidualMatrix::new(vec![vec![1.0, 2.0, 3.0]], vec![1], codes(3)).unwrap();
        assert!(matches!(pca(&m, PcaScaling::CrossProduct), Err(Error::Precondition(_))));
    }

    fn random_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 6..12)
    }

    proptest! {
        #[test]
        fn simplex_order_orthogonality(rows in random_matrix(), s in 0usize..3) {
            let scaling = [PcaScaling::CrossProduct, PcaScaling::Centered, PcaScaling::Correlation][s];
            let n = rows.len();
            let m = ResidualMatrix::new(rows, (0..n as i32).collect(), codes(4)).unwrap();
            let p = pca(&m, scaling).unwrap();
            prop_assert!((p.explained.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.explained.windows(2).all(|w| w[0] >= w[1]));
            for i in 0..4 {
                for j in 0..4 {
                    let d: f64 = p.components[i].iter().zip(&p.components[j]).map(|(a, b)| a * b).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - expect).abs() < 1e-8);
                }
            }
        }

        #[test]
        fn permutation_and_scale_invariance(rows in random_matrix(), c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], s in 0usize..3) {
            let scaling = [PcaScaling::CrossProduct, PcaScaling::Centered, PcaScaling::Correlation][s];
            let n = rows.len();
            let base = pca(&ResidualMatrix::new(rows.clone(), (0..n as i32).collect(), codes(4)).unwrap(), scaling).unwrap();
            let permuted: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[2], r[0], r[3], r[1]]).collect();
            let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
            for other in [permuted, scaled] {
                let p = pca(&ResidualMatrix::new(other, (0..n as i32).collect(), codes(4)).unwrap(), scaling).unwrap();
                for (a, b) in p.explained.iter().zip(&base.explained) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }
}
