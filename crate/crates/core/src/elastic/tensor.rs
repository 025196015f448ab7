//! Elasticity tensors acting on 3×3 matrices.

use nalgebra::{Matrix6, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Mat3;

/// Fourth-order tensor stored as a 9×9 matrix over row-major index pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elasticity {
    c: [[f64; 9]; 9],
}

/// Orthonormal basis of symmetric 3×3 matrices.
fn sym_basis() -> [Mat3; 6] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = [[0.0; 9]; 6];
    b[0][0] = 1.0;
    b[1][4] = 1.0;
    b[2][8] = 1.0;
    b[3][1] = r;
    b[3][3] = r;
    b[4][2] = r;
    b[4][6] = r;
    b[5][5] = r;
    b[5][7] = r;
    b
}

impl Elasticity {
    pub fn isotropic(lambda: f64, mu: f64) -> Result<Self> {
        let mut c = [[0.0; 9]; 9];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        c[3 * i + j][3 * k + l] = lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                    }
                }
            }
        }
        Self::from_matrix(c)
    }

    /// General tensor; requires major and minor symmetry and positive
    /// definiteness on symmetric matrices.
    pub fn from_matrix(c: [[f64; 9]; 9]) -> Result<Self> {
        let scale = c.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        let tr = |a: usize| 3 * (a % 3) + a / 3;
        for a in 0..9 {
            for b in 0..9 {
                let v = c[a][b];
                if (v - c[b][a]).abs() > 1e-12 * scale
                    || (v - c[tr(a)][b]).abs() > 1e-12 * scale
                    || (v - c[a][tr(b)]).abs() > 1e-12 * scale
                {
                    return Err(Error::Invalid("elasticity tensor lacks major/minor symmetry".into()));
                }
            }
        }
        let e = Self { c };
        if !(e.min_eigenvalue() > 0.0) {
            return Err(Error::Invalid("elasticity tensor is not positive definite on symmetric matrices".into()));
        }
        Ok(e)
    }

    pub fn matrix(&self) -> &[[f64; 9]; 9] {
        &self.c
    }

    pub fn apply(&self, f: &Mat3) -> Mat3 {
        std::array::from_fn(|a| (0..9).map(|b| self.c[a][b] * f[b]).sum())
    }

    /// `E f : g`.
    pub fn pair(&self, f: &Mat3, g: &Mat3) -> f64 {
        let ef = self.apply(f);
        ef.iter().zip(g).map(|(a, b)| a * b).sum()
    }

    fn sym_matrix(&self) -> Matrix6<f64> {
        let b = sym_basis();
        Matrix6::from_fn(|i, j| self.pair(&b[i], &b[j]))
    }

    /// Smallest eigenvalue of `E` restricted to symmetric matrices.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.sym_matrix()).eigenvalues.min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.sym_matrix()).eigenvalues.max()
    }

    /// Solve `E x = s` for symmetric `s`, returning symmetric `x`.
    pub fn solve_sym(&self, s: &Mat3) -> Result<Mat3> {
        let b = sym_basis();
        let m = self.sym_matrix();
        let rhs = nalgebra::Vector6::from_fn(|i, _| b[i].iter().zip(s).map(|(x, y)| x * y).sum());
        let x = m.lu().solve(&rhs).ok_or_else(|| Error::Singular("elasticity tensor".into()))?;
        let mut out = [0.0; 9];
        for i in 0..6 {
            for k in 0..9 {
                out[k] += x[i] * b[i][k];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_eigenvalues() {
        let e = Elasticity::isotropic(1.0, 1.0).unwrap();
        assert!((e.min_eigenvalue() - 2.0).abs() < 1e-12);
        assert!((e.max_eigenvalue() - 5.0).abs() < 1e-12);
        assert!(Elasticity::isotropic(-1.0, 0.1).is_err());
    }

    #[test]
    fn inverse_on_symmetric() {
        let e = Elasticity::isotropic(1.3, 0.7).unwrap();
        let s = [1.0, 0.2, -0.3, 0.2, 0.5, 0.1, -0.3, 0.1, -0.4];
        let x = e.solve_sym(&s).unwrap();
        let back = e.apply(&x);
        for i in 0..9 {
            assert!((back[i] - s[i]).abs() < 1e-12);
        }
    }
}
