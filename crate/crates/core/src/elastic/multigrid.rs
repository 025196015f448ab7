//! Geometric multigrid preconditioned conjugate gradients for the
//! (rigid-mode singular) stiffness operator.

use nalgebra::{DMatrix, DVector};

use crate::elastic::operator::{axpy, dot, norm2, orthonormal_rigid, project_out, Stiffness};
use crate::elastic::tensor::Elasticity;
use crate::error::{Error, Result};
use crate::grid::Grid;

const DENSE_LIMIT: usize = 1600;
const SMOOTHING_STEPS: usize = 2;
const JACOBI_DAMPING: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

struct Level {
    op: Stiffness,
    inv_diag: Vec<f64>,
}

enum Coarse {
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Iterative,
}

/// Multigrid hierarchy; level 0 is the finest.
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: Coarse,
    rigid: Vec<Vec<f64>>,
    coarse_rigid: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Multigrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Multigrid").field("levels", &self.levels.len()).finish()
    }
}

fn prolong(coarse: &Grid, fine: &Grid, xc: &[f64], out: &mut [f64]) {
    let [fi, fj, fk] = fine.node_dims();
    for i in 0..fi {
        let wi = stencil(i);
        for j in 0..fj {
            let wj = stencil(j);
            for k in 0..fk {
                let wk = stencil(k);
                let v = fine.node_index(i, j, k);
                let mut acc = [0.0; 3];
                for &(ci, a) in wi.iter().flatten() {
                    for &(cj, b) in wj.iter().flatten() {
                        for &(ck, c) in wk.iter().flatten() {
                            let cv = coarse.node_index(ci, cj, ck);
                            let w = a * b * c;
                            for d in 0..3 {
                                acc[d] += w * xc[3 * cv + d];
                            }
                        }
                    }
                }
                out[3 * v..3 * v + 3].copy_from_slice(&acc);
            }
        }
    }
}

fn restrict(coarse: &Grid, fine: &Grid, xf: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let [fi, fj, fk] = fine.node_dims();
    for i in 0..fi {
        let wi = stencil(i);
        for j in 0..fj {
            let wj = stencil(j);
            for k in 0..fk {
                let wk = stencil(k);
                let v = fine.node_index(i, j, k);
                for &(ci, a) in wi.iter().flatten() {
                    for &(cj, b) in wj.iter().flatten() {
                        for &(ck, c) in wk.iter().flatten() {
                            let cv = coarse.node_index(ci, cj, ck);
                            let w = a * b * c;
                            for d in 0..3 {
                                out[3 * cv + d] += w * xf[3 * v + d];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Coarse parents of fine node index `i` with linear interpolation weights.
fn stencil(i: usize) -> [Option<(usize, f64)>; 2] {
    if i % 2 == 0 {
        [Some((i / 2, 1.0)), None]
    } else {
        [Some((i / 2, 0.5)), Some((i / 2 + 1, 0.5))]
    }
}

impl Multigrid {
    pub fn new(grid: Grid, e: Elasticity) -> Result<Self> {
        let mut levels = Vec::new();
        let mut g = grid;
        loop {
            let op = Stiffness::new(g, e);
            let inv_diag = op.diagonal().iter().map(|d| 1.0 / d).collect();
            levels.push(Level { op, inv_diag });
            if 3 * g.num_nodes() <= DENSE_LIMIT {
                break;
            }
            match g.coarsen() {
                Some(c) => g = c,
                None => break,
            }
        }
        let last = &levels.last().expect("at least one level").op;
        let coarse_rigid = orthonormal_rigid(&last.grid);
        let n = last.len();
        let coarse = if n <= DENSE_LIMIT {
            let mut m = DMatrix::zeros(n, n);
            let mut unit = vec![0.0; n];
            let mut col = vec![0.0; n];
            for j in 0..n {
                unit[j] = 1.0;
                last.apply(&unit, &mut col);
                unit[j] = 0.0;
                for i in 0..n {
                    m[(i, j)] = col[i];
                }
            }
            // shift the rigid kernel so the matrix becomes definite
            let alpha = last.diagonal().iter().sum::<f64>() / n as f64;
            for r in &coarse_rigid {
                let v = DVector::from_column_slice(r);
                m += alpha * &v * v.transpose();
            }
            Coarse::Dense(m.cholesky().ok_or_else(|| Error::Singular("coarse stiffness".into()))?)
        } else {
            Coarse::Iterative
        };
        Ok(Self { rigid: orthonormal_rigid(&grid), coarse_rigid, levels, coarse })
    }

    pub fn operator(&self) -> &Stiffness {
        &self.levels[0].op
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn rigid_basis(&self) -> &[Vec<f64>] {
        &self.rigid
    }

    fn smooth(&self, l: usize, b: &[f64], x: &mut [f64], scratch: &mut [f64]) {
        let lev = &self.levels[l];
        for _ in 0..SMOOTHING_STEPS {
            lev.op.apply(x, scratch);
            for i in 0..x.len() {
                x[i] += JACOBI_DAMPING * lev.inv_diag[i] * (b[i] - scratch[i]);
            }
        }
    }

    fn coarse_solve(&self, b: &[f64]) -> Vec<f64> {
        let l = self.levels.len() - 1;
        let mut rhs = b.to_vec();
        project_out(&mut rhs, &self.coarse_rigid);
        match &self.coarse {
            Coarse::Dense(ch) => {
                let x = ch.solve(&DVector::from_column_slice(&rhs));
                let mut x: Vec<f64> = x.iter().copied().collect();
                project_out(&mut x, &self.coarse_rigid);
                x
            }
            Coarse::Iterative => {
                let mut x = vec![0.0; rhs.len()];
                let mut scratch = vec![0.0; rhs.len()];
                for _ in 0..40 {
                    self.smooth(l, &rhs, &mut x, &mut scratch);
                }
                project_out(&mut x, &self.coarse_rigid);
                x
            }
        }
    }

    fn vcycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        if l + 1 == self.levels.len() {
            return self.coarse_solve(b);
        }
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        self.smooth(l, b, &mut x, &mut scratch);
        let lev = &self.levels[l];
        lev.op.apply(&x, &mut scratch);
        let r: Vec<f64> = b.iter().zip(&scratch).map(|(b, a)| b - a).collect();
        let cg = self.levels[l + 1].op.grid;
        let mut rc = vec![0.0; self.levels[l + 1].op.len()];
        restrict(&cg, &lev.op.grid, &r, &mut rc);
        let ec = self.vcycle(l + 1, &rc);
        let mut ef = vec![0.0; n];
        prolong(&cg, &lev.op.grid, &ec, &mut ef);
        axpy(&mut x, 1.0, &ef);
        self.smooth(l, b, &mut x, &mut scratch);
        x
    }

    /// Preconditioner application `z ≈ K⁺ r` on the rigid-orthogonal complement.
    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut z = self.vcycle(0, r);
        project_out(&mut z, &self.rigid);
        z
    }

    /// Solve `K x = b` on the complement of the rigid modes.
    ///
    /// `b` is projected first; the returned `x` is rigid-orthogonal.
    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
        let op = self.operator();
        let n = op.len();
        let mut rhs = b.to_vec();
        project_out(&mut rhs, &self.rigid);
        let bnorm = norm2(&rhs);
        let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
        project_out(&mut x, &self.rigid);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
        }
        let mut ax = vec![0.0; n];
        op.apply(&x, &mut ax);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        project_out(&mut r, &self.rigid);
        let mut rel = norm2(&r) / bnorm;
        if rel <= tol {
            return Ok((x, SolveStats { iterations: 0, relative_residual: rel }));
        }
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for it in 1..=max_iter {
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Singular("stiffness operator on search direction".into()));
            }
            let alpha = rz / pap;
            axpy(&mut x, alpha, &p);
            axpy(&mut r, -alpha, &ap);
            rel = norm2(&r) / bnorm;
            if rel <= tol {
                project_out(&mut x, &self.rigid);
                return Ok((x, SolveStats { iterations: it, relative_residual: rel }));
            }
            let z_new = self.precondition(&r);
            // flexible (Polak–Ribière) update tolerates the inexact coarse solve
            let rz_new = dot(&r, &z_new);
            let beta = (rz_new - dot(&r, &z)) / rz;
            z = z_new;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NoConvergence { iterations: max_iter, residual: rel })
    }
}
