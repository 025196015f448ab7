//! Line tensions: convex, positively 1-homogeneous integrands on line directions.

use serde::{Deserialize, Serialize};

use crate::chain::SimplicialCurrent;
use crate::error::{Error, Result};

/// `ψ(v) = |A v|` for a symmetric positive definite `A`; `A = s·I` is the
/// isotropic case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineTension {
    matrix: [[f64; 3]; 3],
    isotropic: bool,
}

impl Default for LineTension {
    fn default() -> Self {
        Self::isotropic(1.0).expect("unit tension")
    }
}

impl LineTension {
    pub fn isotropic(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Invalid("line tension scale must be positive".into()));
        }
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = scale;
        }
        Ok(Self { matrix: m, isotropic: true })
    }

    pub fn anisotropic(matrix: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                if (matrix[i][j] - matrix[j][i]).abs() > 1e-12 * (matrix[i][j].abs() + matrix[j][i].abs()).max(1.0) {
                    return Err(Error::Invalid("line tension matrix must be symmetric".into()));
                }
            }
        }
        // Sylvester's criterion
        let m = &matrix;
        let d1 = m[0][0];
        let d2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let d3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if !(d1 > 0.0 && d2 > 0.0 && d3 > 0.0) {
            return Err(Error::Invalid("line tension matrix must be positive definite".into()));
        }
        let iso = (0..3).all(|i| (0..3).all(|j| if i == j { m[i][i] == m[0][0] } else { m[i][j] == 0.0 }));
        Ok(Self { matrix, isotropic: iso })
    }

    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.matrix
    }

    pub fn eval(&self, v: [f64; 3]) -> f64 {
        let a = &self.matrix;
        let w: [f64; 3] = std::array::from_fn(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2]);
        (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
    }

    /// `M_ψ(T) = ∫ ψ(T⃗) d|T|`.
    pub fn mass(&self, t: &SimplicialCurrent) -> Result<f64> {
        t.mass_psi(&|v| self.eval(v))
    }
}
