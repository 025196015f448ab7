//! Uniform box grids with nodal and cell-centred fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, Point};

/// 3×3 matrix stored row-major.
pub type Mat3 = [f64; 9];

pub const ZERO3: Mat3 = [0.0; 9];

pub fn mat_add(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn mat_sub(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn mat_scale(a: &Mat3, s: f64) -> Mat3 {
    std::array::from_fn(|i| a[i] * s)
}

pub fn mat_dot(a: &Mat3, b: &Mat3) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_norm(a: &Mat3) -> f64 {
    mat_dot(a, a).sqrt()
}

pub fn mat_transpose(a: &Mat3) -> Mat3 {
    [a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]]
}

pub fn sym(a: &Mat3) -> Mat3 {
    let t = mat_transpose(a);
    std::array::from_fn(|i| 0.5 * (a[i] + t[i]))
}

pub fn skew(a: &Mat3) -> Mat3 {
    let t = mat_transpose(a);
    std::array::from_fn(|i| 0.5 * (a[i] - t[i]))
}

pub fn outer(a: [f64; 3], b: [f64; 3]) -> Mat3 {
    std::array::from_fn(|i| a[i / 3] * b[i % 3])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: BoxDomain,
    pub n: [usize; 3],
    pub h: [f64; 3],
}

impl Grid {
    pub fn new(domain: BoxDomain, n: [usize; 3]) -> Result<Self> {
        if domain.dim != 3 {
            return Err(Error::DimensionMismatch(domain.dim, 3));
        }
        if n.iter().any(|&k| k == 0) {
            return Err(Error::Invalid("grid resolution must be positive".into()));
        }
        let h = std::array::from_fn(|i| (domain.hi[i] - domain.lo[i]) / n[i] as f64);
        Ok(Self { domain, n, h })
    }

    pub fn cube(lo: f64, hi: f64, n: usize) -> Self {
        Self::new(BoxDomain::cube3(lo, hi), [n, n, n]).expect("valid cube grid")
    }

    pub fn num_cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn node_dims(&self) -> [usize; 3] {
        [self.n[0] + 1, self.n[1] + 1, self.n[2] + 1]
    }

    pub fn num_nodes(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1) * (self.n[2] + 1)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    pub fn volume(&self) -> f64 {
        self.cell_volume() * self.num_cells() as f64
    }

    pub fn h_max(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    pub fn cell_ijk(&self, c: usize) -> [usize; 3] {
        let k = c % self.n[2];
        let j = (c / self.n[2]) % self.n[1];
        let i = c / (self.n[1] * self.n[2]);
        [i, j, k]
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.n[1] + 1) + j) * (self.n[2] + 1) + k
    }

    pub fn node_ijk(&self, v: usize) -> [usize; 3] {
        let nk = self.n[2] + 1;
        let nj = self.n[1] + 1;
        [v / (nj * nk), (v / nk) % nj, v % nk]
    }

    pub fn node_pos(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.domain.lo[0] + self.h[0] * i as f64,
            self.domain.lo[1] + self.h[1] * j as f64,
            self.domain.lo[2] + self.h[2] * k as f64,
        ]
    }

    pub fn cell_center(&self, c: usize) -> [f64; 3] {
        let [i, j, k] = self.cell_ijk(c);
        [
            self.domain.lo[0] + self.h[0] * (i as f64 + 0.5),
            self.domain.lo[1] + self.h[1] * (j as f64 + 0.5),
            self.domain.lo[2] + self.h[2] * (k as f64 + 0.5),
        ]
    }

    /// Cell containing `x` (clamped onto the closed box), if inside.
    pub fn locate(&self, x: &[f64; 3]) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let s = (x[a] - self.domain.lo[a]) / self.h[a];
            if s < -1e-9 || s > self.n[a] as f64 + 1e-9 {
                return None;
            }
            ijk[a] = (s.floor().max(0.0) as usize).min(self.n[a] - 1);
        }
        Some(self.cell_index(ijk[0], ijk[1], ijk[2]))
    }

    /// The 8 nodes of a cell, ordered by local bits `(a, b, c)` ↦ `4a + 2b + c`.
    pub fn cell_nodes(&self, c: usize) -> [usize; 8] {
        let [i, j, k] = self.cell_ijk(c);
        std::array::from_fn(|l| self.node_index(i + (l >> 2), j + ((l >> 1) & 1), k + (l & 1)))
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        self.domain.contains(p, 0.0)
    }

    /// Halved resolution, if every axis is even.
    pub fn coarsen(&self) -> Option<Self> {
        if self.n.iter().all(|&k| k % 2 == 0 && k >= 2) {
            Self::new(self.domain, [self.n[0] / 2, self.n[1] / 2, self.n[2] / 2]).ok()
        } else {
            None
        }
    }
}

/// Cell-constant 3×3 matrix field.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub grid: Grid,
    pub values: Vec<Mat3>,
}

impl CellField {
    pub fn zeros(grid: Grid) -> Self {
        Self { values: vec![ZERO3; grid.num_cells()], grid }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> Mat3) -> Self {
        let values = (0..grid.num_cells()).map(|c| f(grid.cell_center(c))).collect();
        Self { grid, values }
    }

    pub fn integral(&self) -> Mat3 {
        let v = self.grid.cell_volume();
        let mut acc = ZERO3;
        for m in &self.values {
            for i in 0..9 {
                acc[i] += m[i] * v;
            }
        }
        acc
    }

    /// `Σ |P_c| vol(c)` with the Frobenius norm.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(mat_norm).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|m| mat_dot(m, m)).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| mat_add(a, b)).collect();
        Self { grid: self.grid, values }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| mat_sub(a, b)).collect();
        Self { grid: self.grid, values }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|m| mat_scale(m, s)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|m| m.iter().all(|x| *x == 0.0))
    }
}

/// Nodal vector field (displacements).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    pub grid: Grid,
    pub values: Vec<[f64; 3]>,
}

impl NodeField {
    pub fn zeros(grid: Grid) -> Self {
        Self { values: vec![[0.0; 3]; grid.num_nodes()], grid }
    }

    pub fn constant(grid: Grid, v: [f64; 3]) -> Self {
        Self { values: vec![v; grid.num_nodes()], grid }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let values = (0..grid.num_nodes())
            .map(|v| {
                let [i, j, k] = grid.node_ijk(v);
                f(grid.node_pos(i, j, k))
            })
            .collect();
        Self { grid, values }
    }

    pub fn as_flat(&self) -> &[f64] {
        self.values.as_flattened()
    }

    pub fn from_flat(grid: Grid, x: &[f64]) -> Self {
        Self { grid, values: x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| (0..3).map(move |i| (a[i] - b[i]).abs()))
            .fold(0.0, f64::max)
    }
}
