//! Trilinear (Q1) displacement elements on a uniform box grid, with
//! 2×2×2 Gauss quadrature, and the matrix-free stiffness operator.

use crate::elastic::tensor::Elasticity;
use crate::grid::{CellField, Grid, Mat3, NodeField};

/// Reference data of a Q1 cell with spacing `h`.
#[derive(Debug, Clone)]
pub struct Q1 {
    pub h: [f64; 3],
    /// `grads[g][l]`: gradient of shape function `l` at Gauss point `g`.
    pub grads: [[[f64; 3]; 8]; 8],
    /// `shape[g][l]`.
    pub shape: [[f64; 8]; 8],
    /// Quadrature weight per Gauss point.
    pub weight: f64,
}

fn bit(l: usize, d: usize) -> usize {
    (l >> (2 - d)) & 1
}

impl Q1 {
    pub fn new(h: [f64; 3]) -> Self {
        let off = 0.5 / 3f64.sqrt();
        let mut grads = [[[0.0; 3]; 8]; 8];
        let mut shape = [[0.0; 8]; 8];
        for g in 0..8 {
            let xi: [f64; 3] = std::array::from_fn(|d| if bit(g, d) == 1 { 0.5 + off } else { 0.5 - off });
            for l in 0..8 {
                let f: [f64; 3] = std::array::from_fn(|d| if bit(l, d) == 1 { xi[d] } else { 1.0 - xi[d] });
                let df: [f64; 3] = std::array::from_fn(|d| if bit(l, d) == 1 { 1.0 } else { -1.0 });
                shape[g][l] = f[0] * f[1] * f[2];
                grads[g][l] = [
                    df[0] / h[0] * f[1] * f[2],
                    f[0] * df[1] / h[1] * f[2],
                    f[0] * f[1] * df[2] / h[2],
                ];
            }
        }
        Self { h, grads, shape, weight: h[0] * h[1] * h[2] / 8.0 }
    }

    /// Displacement gradient at Gauss point `g` from the 8 nodal values.
    pub fn gradient(&self, g: usize, u: &[[f64; 3]; 8]) -> Mat3 {
        let mut du = [0.0; 9];
        for l in 0..8 {
            let gr = &self.grads[g][l];
            for i in 0..3 {
                for j in 0..3 {
                    du[3 * i + j] += u[l][i] * gr[j];
                }
            }
        }
        du
    }

    /// Element stiffness `K[3l+i][3m+k]`, flattened row-major.
    pub fn stiffness(&self, e: &Elasticity) -> Vec<f64> {
        let c = e.matrix();
        let mut ke = vec![0.0; 576];
        for g in 0..8 {
            for l in 0..8 {
                for i in 0..3 {
                    for m in 0..8 {
                        for k in 0..3 {
                            let mut s = 0.0;
                            for j in 0..3 {
                                for q in 0..3 {
                                    s += self.grads[g][l][j] * c[3 * i + j][3 * k + q] * self.grads[g][m][q];
                                }
                            }
                            ke[(3 * l + i) * 24 + 3 * m + k] += self.weight * s;
                        }
                    }
                }
            }
        }
        ke
    }
}

/// Matrix-free `K u` for `∫ ∇ψ : E ∇u`.
#[derive(Debug, Clone)]
pub struct Stiffness {
    pub grid: Grid,
    pub e: Elasticity,
    pub q1: Q1,
    ke: Vec<f64>,
    diag: Vec<f64>,
}

impl Stiffness {
    pub fn new(grid: Grid, e: Elasticity) -> Self {
        let q1 = Q1::new(grid.h);
        let ke = q1.stiffness(&e);
        let mut diag = vec![0.0; 3 * grid.num_nodes()];
        for c in 0..grid.num_cells() {
            let nodes = grid.cell_nodes(c);
            for (l, &v) in nodes.iter().enumerate() {
                for i in 0..3 {
                    diag[3 * v + i] += ke[(3 * l + i) * 24 + 3 * l + i];
                }
            }
        }
        Self { grid, e, q1, ke, diag }
    }

    pub fn len(&self) -> usize {
        3 * self.grid.num_nodes()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut xl = [0.0; 24];
        let mut yl = [0.0; 24];
        for c in 0..self.grid.num_cells() {
            let nodes = self.grid.cell_nodes(c);
            for (l, &v) in nodes.iter().enumerate() {
                xl[3 * l..3 * l + 3].copy_from_slice(&x[3 * v..3 * v + 3]);
            }
            for (a, out) in yl.iter_mut().enumerate() {
                let row = &self.ke[a * 24..a * 24 + 24];
                *out = row.iter().zip(&xl).map(|(k, x)| k * x).sum();
            }
            for (l, &v) in nodes.iter().enumerate() {
                for i in 0..3 {
                    y[3 * v + i] += yl[3 * l + i];
                }
            }
        }
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        0.5 * dot(x, &y)
    }

    fn local(&self, u: &[f64], c: usize) -> [[f64; 3]; 8] {
        let nodes = self.grid.cell_nodes(c);
        std::array::from_fn(|l| [u[3 * nodes[l]], u[3 * nodes[l] + 1], u[3 * nodes[l] + 2]])
    }

    /// `∇u` at the 8 Gauss points of cell `c`.
    pub fn gauss_gradients(&self, u: &[f64], c: usize) -> [Mat3; 8] {
        let ul = self.local(u, c);
        std::array::from_fn(|g| self.q1.gradient(g, &ul))
    }

    /// Cell averages of `∇u`.
    pub fn cell_gradients(&self, u: &[f64]) -> CellField {
        let mut f = CellField::zeros(self.grid);
        for c in 0..self.grid.num_cells() {
            let gs = self.gauss_gradients(u, c);
            let mut avg = [0.0; 9];
            for g in &gs {
                for k in 0..9 {
                    avg[k] += g[k] / 8.0;
                }
            }
            f.values[c] = avg;
        }
        f
    }

    /// `∫ ∇ψ : E P` for a cell-constant `P`, as a nodal vector.
    pub fn rhs_from_cells(&self, p: &CellField) -> Vec<f64> {
        let mut rhs = vec![0.0; self.len()];
        for c in 0..self.grid.num_cells() {
            let pc = &p.values[c];
            if pc.iter().all(|x| *x == 0.0) {
                continue;
            }
            let ep = self.e.apply(pc);
            let nodes = self.grid.cell_nodes(c);
            for g in 0..8 {
                for (l, &v) in nodes.iter().enumerate() {
                    let gr = &self.q1.grads[g][l];
                    for i in 0..3 {
                        rhs[3 * v + i] += self.q1.weight * (ep[3 * i] * gr[0] + ep[3 * i + 1] * gr[1] + ep[3 * i + 2] * gr[2]);
                    }
                }
            }
        }
        rhs
    }

    /// Load vector `∫ g · ψ` for a cell-constant force density.
    pub fn load_vector(&self, g: &[[f64; 3]]) -> Vec<f64> {
        let mut f = vec![0.0; self.len()];
        for c in 0..self.grid.num_cells() {
            let nodes = self.grid.cell_nodes(c);
            for gp in 0..8 {
                for (l, &v) in nodes.iter().enumerate() {
                    let w = self.q1.weight * self.q1.shape[gp][l];
                    for i in 0..3 {
                        f[3 * v + i] += w * g[c][i];
                    }
                }
            }
        }
        f
    }

    /// `½ ∫ E(∇u − P) : (∇u − P)` with cell-constant `P` (or `P = 0`).
    pub fn energy_with(&self, u: &[f64], p: Option<&CellField>) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.grid.num_cells() {
            let gs = self.gauss_gradients(u, c);
            for g in &gs {
                let mut f = *g;
                if let Some(p) = p {
                    for k in 0..9 {
                        f[k] -= p.values[c][k];
                    }
                }
                acc += 0.5 * self.q1.weight * self.e.pair(&f, &f);
            }
        }
        acc
    }

    pub fn node_field(&self, x: &[f64]) -> NodeField {
        NodeField::from_flat(self.grid, x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The six infinitesimal rigid motions about the box centre, as nodal vectors.
pub fn rigid_modes(grid: &Grid) -> Vec<Vec<f64>> {
    let c: [f64; 3] = std::array::from_fn(|d| 0.5 * (grid.domain.lo[d] + grid.domain.hi[d]));
    let n = grid.num_nodes();
    let mut modes = vec![vec![0.0; 3 * n]; 6];
    for v in 0..n {
        let [i, j, k] = grid.node_ijk(v);
        let x = grid.node_pos(i, j, k);
        let r = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        for a in 0..3 {
            modes[a][3 * v + a] = 1.0;
        }
        for (m, (a, b)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
            modes[3 + m][3 * v + a] = r[b];
            modes[3 + m][3 * v + b] = -r[a];
        }
    }
    modes
}

/// Orthonormal basis of the rigid modes (Euclidean inner product).
pub fn orthonormal_rigid(grid: &Grid) -> Vec<Vec<f64>> {
    let mut modes = rigid_modes(grid);
    for a in 0..modes.len() {
        for b in 0..a {
            let (lo, hi) = modes.split_at_mut(a);
            let d = dot(&hi[0], &lo[b]);
            axpy(&mut hi[0], -d, &lo[b]);
        }
        let n = norm2(&modes[a]);
        modes[a].iter_mut().for_each(|x| *x /= n);
    }
    modes
}

pub fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let d = dot(x, b);
        axpy(x, -d, b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_modes_are_in_kernel() {
        let grid = Grid::cube(0.0, 1.0, 3);
        let k = Stiffness::new(grid, Elasticity::isotropic(1.0, 1.0).unwrap());
        let mut y = vec![0.0; k.len()];
        for m in rigid_modes(&grid) {
            k.apply(&m, &mut y);
            assert!(norm2(&y) < 1e-12);
        }
    }

    #[test]
    fn uniform_strain_energy() {
        let (lam, mu) = (1.3, 0.8);
        let grid = Grid::new(crate::geometry::BoxDomain::cube3(0.0, 2.0), [2, 3, 4]).unwrap();
        let k = Stiffness::new(grid, Elasticity::isotropic(lam, mu).unwrap());
        let s = [0.1, 0.02, 0.0, 0.02, -0.05, 0.03, 0.0, 0.03, 0.07];
        let u = NodeField::from_fn(grid, |x| {
            std::array::from_fn(|i| s[3 * i] * x[0] + s[3 * i + 1] * x[1] + s[3 * i + 2] * x[2])
        });
        let tr = s[0] + s[4] + s[8];
        let ss: f64 = s.iter().map(|x| x * x).sum();
        let expected = 0.5 * (lam * tr * tr + 2.0 * mu * ss) * 8.0;
        assert!((k.energy(u.as_flat()) - expected).abs() < 1e-12);
        assert!((k.energy_with(u.as_flat(), None) - expected).abs() < 1e-12);
    }
}
