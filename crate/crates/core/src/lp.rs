//! Small dense two-phase simplex: minimize `cᵀx` subject to equality rows
//! and `x ≥ 0`.
//!
//! Rows whose sign-normalized form already contains a unit column (as the
//! flat-norm programs do through their remainder variables) start with that
//! column basic, so phase one only runs when some row lacks one.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    costs: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a nonnegative variable with the given cost; returns its index.
    pub fn add_var(&mut self, cost: f64) -> usize {
        self.costs.push(cost);
        self.costs.len() - 1
    }

    pub fn add_eq(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push((row, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.costs.len();
        let m = self.rows.len();
        if let Some((i, _)) = self.rows.iter().flat_map(|(r, _)| r.iter()).find(|(i, _)| *i >= n) {
            return Err(Error::LinearProgram(format!("row references unknown variable {i}")));
        }
        if m == 0 {
            if self.costs.iter().any(|&c| c < 0.0) {
                return Err(Error::LinearProgram("unbounded".into()));
            }
            return Ok(LpSolution { objective: 0.0, x: vec![0.0; n] });
        }

        // dense rows, sign-normalized so that rhs ≥ 0
        let mut dense = vec![vec![0.0; n]; m];
        let mut rhs = vec![0.0; m];
        for (r, (row, b)) in self.rows.iter().enumerate() {
            for &(i, c) in row {
                dense[r][i] += c;
            }
            rhs[r] = *b;
            if *b < 0.0 {
                dense[r].iter_mut().for_each(|x| *x = -*x);
                rhs[r] = -*b;
            }
        }

        // unit columns usable as a starting basis
        let mut nnz = vec![0usize; n];
        for row in &dense {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    nnz[j] += 1;
                }
            }
        }
        let mut basis = vec![usize::MAX; m];
        let mut taken = vec![false; n];
        for r in 0..m {
            if let Some(j) = (0..n).find(|&j| !taken[j] && nnz[j] == 1 && dense[r][j] > 0.0) {
                let s = dense[r][j];
                dense[r].iter_mut().for_each(|x| *x /= s);
                rhs[r] /= s;
                basis[r] = j;
                taken[j] = true;
            }
        }
        let missing: Vec<usize> = (0..m).filter(|&r| basis[r] == usize::MAX).collect();
        let ncols = n + missing.len();
        let mut t = Tableau::new(m, ncols);
        for r in 0..m {
            t.row_mut(r)[..n].copy_from_slice(&dense[r]);
            t.row_mut(r)[ncols] = rhs[r];
        }
        drop(dense);
        for (k, &r) in missing.iter().enumerate() {
            t.row_mut(r)[n + k] = 1.0;
            basis[r] = n + k;
        }
        t.basis = basis;

        if !missing.is_empty() {
            let mut c1 = vec![0.0; ncols];
            c1[n..].iter_mut().for_each(|c| *c = 1.0);
            let z = t.optimize(&c1, ncols)?;
            let scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if z > 1e-8 * scale {
                return Err(Error::LinearProgram("infeasible".into()));
            }
            t.expel_artificials(n);
        }
        let mut c2 = self.costs.clone();
        c2.resize(ncols, 0.0);
        t.optimize(&c2, n)?;

        let mut x = vec![0.0; n];
        for (r, &j) in t.basis.iter().enumerate() {
            if j < n {
                x[j] = t.row(r)[ncols].max(0.0);
            }
        }
        let objective = self.costs.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpSolution { objective, x })
    }
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// `m × (ncols + 1)`, last column the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Rows removed as redundant.
    dead: Vec<bool>,
}

impl Tableau {
    fn new(m: usize, ncols: usize) -> Self {
        Self { m, ncols, a: vec![0.0; m * (ncols + 1)], basis: vec![0; m], dead: vec![false; m] }
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.ncols + 1;
        &self.a[r * w..(r + 1) * w]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.ncols + 1;
        &mut self.a[r * w..(r + 1) * w]
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.ncols + 1;
        let p = self.a[r * w + c];
        for x in self.row_mut(r) {
            *x /= p;
        }
        let support: Vec<usize> = (0..w).filter(|&j| self.a[r * w + j] != 0.0).collect();
        let prow: Vec<f64> = support.iter().map(|&j| self.a[r * w + j]).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for (&j, &v) in support.iter().zip(&prow) {
                row[j] -= f * v;
            }
            row[c] = 0.0;
        }
        let f = obj[c];
        if f != 0.0 {
            for (&j, &v) in support.iter().zip(&prow) {
                obj[j] -= f * v;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Minimize over columns `< allowed`; returns the objective value.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<f64> {
        let w = self.ncols + 1;
        // reduced costs; the last entry holds −z
        let mut obj = vec![0.0; w];
        obj[..self.ncols].copy_from_slice(cost);
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 && !self.dead[r] {
                for j in 0..w {
                    obj[j] -= cb * self.a[r * w + j];
                }
            }
        }
        let max_iter = 50 * (self.m + self.ncols) + 1000;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate > 50;
            let mut enter = None;
            let mut best = -COST_TOL;
            for (j, &d) in obj.iter().enumerate().take(allowed) {
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                return Ok(-obj[self.ncols]);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                if self.dead[r] {
                    continue;
                }
                let a = self.a[r * w + c];
                if a > PIVOT_TOL {
                    let ratio = self.a[r * w + self.ncols].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-14 || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::LinearProgram("unbounded".into()));
            };
            degenerate = if ratio <= 1e-14 { degenerate + 1 } else { 0 };
            self.pivot(r, c, &mut obj);
        }
        Err(Error::LinearProgram(format!("simplex did not terminate within {max_iter} pivots")))
    }

    /// Pivot artificial columns (index `≥ n`) out of the basis, or mark
    /// their rows redundant.
    fn expel_artificials(&mut self, n: usize) {
        let w = self.ncols + 1;
        let mut scratch = vec![0.0; w];
        for r in 0..self.m {
            if self.basis[r] < n {
                continue;
            }
            let col = (0..n).max_by(|&a, &b| self.a[r * w + a].abs().total_cmp(&self.a[r * w + b].abs()));
            match col {
                Some(c) if self.a[r * w + c].abs() > 1e-9 => self.pivot(r, c, &mut scratch),
                _ => self.dead[r] = true,
            }
        }
    }
}
