//! The β-solve, the constrained minimizer for the displacement, the
//! corrector and the elastic energy.
//!
//! The geometrically necessary distortion is sought as `β = ∇w − p_δ`, so
//! `curl β = −curl p_δ` holds by construction and the remaining equation
//! `−div Eβ = 0` with the natural flux condition becomes the Neumann
//! problem `∫ ∇ψ : E∇w = ∫ ∇ψ : E p_δ`. Then `free[Du − p] = ∇(u − w)`.

use std::sync::OnceLock;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::dislocation::PlasticDistortion;
use crate::dislocation::triangle_normal;
use crate::elastic::mollify::{kernel_weights, mollify, triangle_samples};
use crate::geometry::Point;
use crate::elastic::multigrid::{Multigrid, SolveStats};
use crate::elastic::operator::{axpy, dot, norm2, rigid_modes, Stiffness};
use crate::elastic::tensor::Elasticity;
use crate::error::{Error, Result};
use crate::grid::{mat_dot, skew, sym, CellField, Grid, Mat3};

const SKEW_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Holding sub-box `H` and the prescribed mean displacement on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holding {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub h0: [f64; 3],
}

/// Grid, holding constraint and elasticity tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainGrid {
    pub grid: Grid,
    pub hold: Holding,
    pub elasticity: Elasticity,
}

impl DomainGrid {
    pub fn new(grid: Grid, hold: Holding, elasticity: Elasticity) -> Result<Self> {
        let d = &grid.domain;
        for a in 0..3 {
            if !(hold.lo[a] > d.lo[a] && hold.hi[a] < d.hi[a] && hold.lo[a] < hold.hi[a]) {
                return Err(Error::Invalid("holding box must lie strictly inside the domain with positive volume".into()));
            }
        }
        if hold.h0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("holding value must be finite".into()));
        }
        let s = Self { grid, hold, elasticity };
        if s.hold_cells().is_empty() {
            return Err(Error::Invalid("holding box contains no cell centre".into()));
        }
        Ok(s)
    }

    /// Cells whose centre lies in `H`; the mean over `H` is taken over these.
    pub fn hold_cells(&self) -> Vec<usize> {
        (0..self.grid.num_cells())
            .filter(|&c| {
                let x = self.grid.cell_center(c);
                (0..3).all(|a| x[a] >= self.hold.lo[a] && x[a] <= self.hold.hi[a])
            })
            .collect()
    }
}

/// Time ramp `r(t) = Σ c_k t^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub coefficients: Vec<f64>,
}

impl Ramp {
    pub fn linear(slope: f64) -> Self {
        Self { coefficients: vec![0.0, slope] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.coefficients.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
    }
}

/// `f(t, x) = r(t) g(x)` with `g` constant on cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Loading {
    pub profile: Vec<[f64; 3]>,
    pub ramp: Ramp,
}

impl Loading {
    pub fn none(grid: &Grid) -> Self {
        Self { profile: vec![[0.0; 3]; grid.num_cells()], ramp: Ramp { coefficients: vec![] } }
    }

    pub fn from_fn(grid: &Grid, ramp: Ramp, g: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        Self { profile: (0..grid.num_cells()).map(|c| g(grid.cell_center(c))).collect(), ramp }
    }

    pub fn sup_norm(&self) -> f64 {
        self.profile.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == 0.0 || self.ramp.coefficients.iter().all(|c| *c == 0.0)
    }
}

/// Result of the β-solve.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    /// Potential `w` with `β = ∇w − p_δ`, normalized by `∫ skew β = 0` and mean zero.
    pub w: Vec<f64>,
    pub p_delta: CellField,
    pub stats: SolveStats,
}

/// Displacement minimizer together with the potential it was built on.
#[derive(Debug, Clone)]
pub struct Displacement {
    pub u: Vec<f64>,
    pub stats: SolveStats,
}

struct UnitLoad {
    force: Vec<f64>,
    v0: Vec<f64>,
    lambda: Vector6<f64>,
    /// `Σ_g w E∇v₀` per cell.
    stress: Vec<Mat3>,
    stats: SolveStats,
}

/// Elastic solver on a fixed grid, loading and mollification radius.
pub struct ElasticModel {
    pub domain: DomainGrid,
    pub loading: Loading,
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    mg: Multigrid,
    rigid: Vec<Vec<f64>>,
    constraints: Vec<Vec<f64>>,
    cr_inv: Matrix6<f64>,
    unit: OnceLock<UnitLoad>,
}

impl std::fmt::Debug for ElasticModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ElasticModel").field("domain", &self.domain).field("delta", &self.delta).finish()
    }
}

impl ElasticModel {
    /// `delta_cells` is the mollification radius in units of the largest grid spacing.
    pub fn new(domain: DomainGrid, loading: Loading, delta_cells: f64) -> Result<Self> {
        let grid = domain.grid;
        if loading.profile.len() != grid.num_cells() {
            return Err(Error::DimensionMismatch(loading.profile.len(), grid.num_cells()));
        }
        let delta = delta_cells * grid.h_max();
        if delta < 2.0 * grid.h_max() {
            return Err(Error::MollifierUnderResolved { delta, min: 2.0 * grid.h_max() });
        }
        let mg = Multigrid::new(grid, domain.elasticity)?;
        let rigid = rigid_modes(&grid);
        let constraints = constraint_rows(mg.operator(), &domain.hold_cells());
        let cr = Matrix6::from_fn(|i, j| dot(&constraints[i], &rigid[j]));
        let cr_inv = cr.try_inverse().ok_or_else(|| Error::Singular("constraints on rigid motions".into()))?;
        Ok(Self { domain, loading, delta, tol: 1e-12, max_iter: 500, mg, rigid, constraints, cr_inv, unit: OnceLock::new() })
    }

    pub fn grid(&self) -> &Grid {
        &self.domain.grid
    }

    pub fn stiffness(&self) -> &Stiffness {
        self.mg.operator()
    }

    pub fn num_dofs(&self) -> usize {
        self.stiffness().len()
    }

    /// `(∫ skew Du (three components), mean_H u)`.
    pub fn constraint_values(&self, u: &[f64]) -> [f64; 6] {
        std::array::from_fn(|i| dot(&self.constraints[i], u))
    }

    fn targets(&self) -> Vector6<f64> {
        let h = self.domain.hold.h0;
        Vector6::new(0.0, 0.0, 0.0, h[0], h[1], h[2])
    }

    fn add_rigid(&self, u: &mut [f64], c: &Vector6<f64>) {
        for (m, r) in self.rigid.iter().enumerate() {
            axpy(u, c[m], r);
        }
    }

    /// Rigid correction so that `u` meets the skew and holding constraints.
    fn fix_constraints(&self, u: &mut [f64]) {
        let cu = Vector6::from_fn(|i, _| dot(&self.constraints[i], u));
        let c = self.cr_inv * (self.targets() - cu);
        self.add_rigid(u, &c);
    }

    /// Project `ψ` onto `{Cψ = 0}` along the rigid motions.
    pub fn project_admissible(&self, psi: &mut [f64]) {
        let cu = Vector6::from_fn(|i, _| dot(&self.constraints[i], psi));
        let c = -(self.cr_inv * cu);
        self.add_rigid(psi, &c);
    }

    pub fn mollify(&self, p: &PlasticDistortion) -> Result<CellField> {
        mollify(p, self.grid(), self.delta)
    }

    /// Solve for `β` given a cell-constant preimage `p_δ` of the curl data.
    pub fn solve_beta_cells(&self, p_delta: &CellField) -> Result<BetaSolution> {
        if p_delta.grid != *self.grid() {
            return Err(Error::Invalid("distortion field lives on a different grid".into()));
        }
        let rhs = self.stiffness().rhs_from_cells(p_delta);
        let (mut w, stats) = self.mg.solve(&rhs, None, self.tol, self.max_iter)?;
        // ∫ skew β = 0 fixes the rotational part; translations are set to mean zero
        let grad = self.stiffness().cell_gradients(&w);
        let vol = self.grid().volume();
        let gi = grad.integral();
        let pi = p_delta.integral();
        let target = skew(&pi);
        let current = skew(&gi);
        let mut c = Vector6::zeros();
        for (m, &(a, b)) in SKEW_PAIRS.iter().enumerate() {
            c[3 + m] = (target[3 * a + b] - current[3 * a + b]) / vol;
        }
        self.add_rigid(&mut w, &c);
        let n = self.grid().num_nodes() as f64;
        let mean: [f64; 3] = std::array::from_fn(|d| w.iter().skip(d).step_by(3).sum::<f64>() / n);
        for (i, x) in w.iter_mut().enumerate() {
            *x -= mean[i % 3];
        }
        Ok(BetaSolution { w, p_delta: p_delta.clone(), stats })
    }

    pub fn solve_beta(&self, p: &PlasticDistortion) -> Result<BetaSolution> {
        let pd = self.mollify(p)?;
        self.solve_beta_cells(&pd)
    }

    /// Cell averages of `β = ∇w − p_δ`.
    pub fn beta_cells(&self, b: &BetaSolution) -> CellField {
        self.stiffness().cell_gradients(&b.w).sub(&b.p_delta)
    }

    /// Cell averages of `free[Du − p] = Du − p_δ − β = ∇(u − w)`.
    pub fn free_displacement(&self, u: &[f64], b: &BetaSolution) -> CellField {
        let d: Vec<f64> = u.iter().zip(&b.w).map(|(u, w)| u - w).collect();
        self.stiffness().cell_gradients(&d)
    }

    /// `∫ free : Eβ` and `∫ |free + β|²_E`, `∫ |free|²_E`, `∫ |β|²_E`
    /// at the Gauss points.
    pub fn split_pairings(&self, u: &[f64], b: &BetaSolution) -> [f64; 4] {
        let k = self.stiffness();
        let e = &self.domain.elasticity;
        let mut acc = [0.0; 4];
        for c in 0..self.grid().num_cells() {
            let gu = k.gauss_gradients(u, c);
            let gw = k.gauss_gradients(&b.w, c);
            let pc = &b.p_delta.values[c];
            for g in 0..8 {
                let free: Mat3 = std::array::from_fn(|i| gu[g][i] - gw[g][i]);
                let beta: Mat3 = std::array::from_fn(|i| gw[g][i] - pc[i]);
                let tot: Mat3 = std::array::from_fn(|i| free[i] + beta[i]);
                let wgt = k.q1.weight;
                acc[0] += wgt * e.pair(&free, &beta);
                acc[1] += wgt * e.pair(&tot, &tot);
                acc[2] += wgt * e.pair(&free, &free);
                acc[3] += wgt * e.pair(&beta, &beta);
            }
        }
        acc
    }

    /// `‖β‖_{L^{3/2}}` from the cell averages.
    pub fn beta_l32(&self, b: &BetaSolution) -> f64 {
        let beta = self.beta_cells(b);
        let v = self.grid().cell_volume();
        (beta.values.iter().map(|m| mat_dot(m, m).sqrt().powf(1.5)).sum::<f64>() * v).powf(2.0 / 3.0)
    }

    fn unit_load(&self) -> Result<&UnitLoad> {
        if let Some(u) = self.unit.get() {
            return Ok(u);
        }
        let force = self.stiffness().load_vector(&self.loading.profile);
        let rf = Vector6::from_fn(|i, _| dot(&self.rigid[i], &force));
        // Rᵀ(F − Cᵀλ) = 0 makes the Neumann problem solvable
        let lambda = self.cr_inv.transpose() * rf;
        let mut rhs = force.clone();
        for i in 0..6 {
            axpy(&mut rhs, -lambda[i], &self.constraints[i]);
        }
        let (v0, stats) = self.mg.solve(&rhs, None, self.tol, self.max_iter)?;
        let k = self.stiffness();
        let e = &self.domain.elasticity;
        let stress = (0..self.grid().num_cells())
            .map(|c| {
                let mut s = [0.0; 9];
                for g in k.gauss_gradients(&v0, c) {
                    let eg = e.apply(&g);
                    for i in 0..9 {
                        s[i] += k.q1.weight * eg[i];
                    }
                }
                s
            })
            .collect();
        let _ = self.unit.set(UnitLoad { force, v0, lambda, stress, stats });
        Ok(self.unit.get().expect("just set"))
    }

    /// Minimizer of `½∫|Du − p − β|²_E − ∫ f(t)·u` under the skew and holding constraints.
    ///
    /// `guess` seeds the iterative solve; the result does not depend on it
    /// beyond the solver tolerance.
    pub fn minimize_u(&self, t: f64, b: &BetaSolution, guess: Option<&[f64]>) -> Result<Displacement> {
        let r = self.loading.ramp.eval(t);
        let (v, stats) = match guess {
            None => {
                let unit = self.unit_load()?;
                (unit.v0.iter().map(|x| r * x).collect::<Vec<f64>>(), unit.stats)
            }
            Some(g) => {
                let unit = self.unit_load()?;
                let mut rhs = unit.force.iter().map(|x| r * x).collect::<Vec<f64>>();
                for i in 0..6 {
                    axpy(&mut rhs, -r * unit.lambda[i], &self.constraints[i]);
                }
                let x0: Vec<f64> = g.iter().zip(&b.w).map(|(g, w)| g - w).collect();
                self.mg.solve(&rhs, Some(&x0), self.tol, self.max_iter)?
            }
        };
        let mut u: Vec<f64> = b.w.iter().zip(&v).map(|(w, v)| w + v).collect();
        self.fix_constraints(&mut u);
        Ok(Displacement { u, stats })
    }

    /// `W_e = ½∫|free[Du − p]|²_E`.
    pub fn elastic_energy(&self, u: &[f64], b: &BetaSolution) -> f64 {
        let d: Vec<f64> = u.iter().zip(&b.w).map(|(u, w)| u - w).collect();
        self.stiffness().energy_with(&d, None)
    }

    pub fn work(&self, t: f64, u: &[f64]) -> Result<f64> {
        if self.loading.is_zero() {
            return Ok(0.0);
        }
        Ok(self.loading.ramp.eval(t) * dot(&self.unit_load()?.force, u))
    }

    /// `W_e(u) − ∫ f(t)·u`.
    pub fn stored_energy(&self, t: f64, u: &[f64], b: &BetaSolution) -> Result<f64> {
        Ok(self.elastic_energy(u, b) - self.work(t, u)?)
    }

    /// Weak-form residual `∫ ∇ψ : E(Du − p − β) − ∫ f·ψ`.
    pub fn el_residual(&self, t: f64, u: &[f64], b: &BetaSolution, psi: &[f64]) -> Result<f64> {
        let d: Vec<f64> = u.iter().zip(&b.w).map(|(u, w)| u - w).collect();
        let mut kd = vec![0.0; d.len()];
        self.stiffness().apply(&d, &mut kd);
        Ok(dot(psi, &kd) - self.work(t, psi)?)
    }

    /// Minimal stored energy over `u` as an affine function of `p_δ`:
    /// `min_u = −½r²⟨Kv₀,v₀⟩ − r λ·g − r Σ_c S_c : p_δ,c`.
    pub fn reduced_energy(&self, t: f64, p_delta: &CellField) -> Result<f64> {
        let r = self.loading.ramp.eval(t);
        if r == 0.0 || self.loading.is_zero() {
            return Ok(0.0);
        }
        let unit = self.unit_load()?;
        let mut kv = vec![0.0; unit.v0.len()];
        self.stiffness().apply(&unit.v0, &mut kv);
        let base = -0.5 * r * r * dot(&kv, &unit.v0) - r * unit.lambda.dot(&self.targets());
        Ok(base - r * self.load_pairing(p_delta)?)
    }

    /// `Σ_c S_c : p_c`, the load's sensitivity to the plastic distortion.
    pub fn load_pairing(&self, p_delta: &CellField) -> Result<f64> {
        if self.loading.is_zero() {
            return Ok(0.0);
        }
        let unit = self.unit_load()?;
        Ok(unit.stress.iter().zip(&p_delta.values).map(|(s, p)| mat_dot(s, p)).sum())
    }

    /// `Σ_c S_c : (a ⊗ ν H²⌐tri)_δ,c`, the load pairing of one mollified
    /// surface term without assembling a cell field.
    pub fn surface_pairing(&self, tri: &[Point; 3], a: [f64; 3]) -> Result<f64> {
        if self.loading.is_zero() {
            return Ok(0.0);
        }
        let unit = self.unit_load()?;
        let n = triangle_normal(tri);
        let m = crate::grid::outer(a, n);
        let grid = self.grid();
        let mut acc = 0.0;
        for (x, w) in triangle_samples(tri, 0.5 * grid.h_min()) {
            let mut g = 0.0;
            for (c, k) in kernel_weights(grid, x, self.delta) {
                g += k * mat_dot(&unit.stress[c], &m);
            }
            acc += w * g;
        }
        Ok(acc)
    }

    /// Corrector for a change `p → p′`: keeps `sym free` and restores the constraints.
    pub fn corrector(&self, u: &[f64], b: &BetaSolution, b_new: &BetaSolution) -> Vec<f64> {
        let mut out: Vec<f64> = u.iter().zip(&b_new.w).zip(&b.w).map(|((u, wn), w)| u + wn - w).collect();
        self.fix_constraints(&mut out);
        out
    }

    /// `‖sym free[Du − p]‖_{L²}` at the Gauss points.
    pub fn sym_free_l2(&self, u: &[f64], b: &BetaSolution) -> f64 {
        let k = self.stiffness();
        let d: Vec<f64> = u.iter().zip(&b.w).map(|(u, w)| u - w).collect();
        let mut acc = 0.0;
        for c in 0..self.grid().num_cells() {
            for g in k.gauss_gradients(&d, c) {
                let s = sym(&g);
                acc += k.q1.weight * mat_dot(&s, &s);
            }
        }
        acc.sqrt()
    }

    pub fn free_l2(&self, u: &[f64], b: &BetaSolution) -> f64 {
        let k = self.stiffness();
        let d: Vec<f64> = u.iter().zip(&b.w).map(|(u, w)| u - w).collect();
        let mut acc = 0.0;
        for c in 0..self.grid().num_cells() {
            for g in k.gauss_gradients(&d, c) {
                acc += k.q1.weight * mat_dot(&g, &g);
            }
        }
        acc.sqrt()
    }

    /// Discrete BV-norm `∫|u| + ∫|Du|`.
    pub fn bv_norm(&self, u: &[f64]) -> f64 {
        let k = self.stiffness();
        let mut acc = 0.0;
        for c in 0..self.grid().num_cells() {
            let nodes = self.grid().cell_nodes(c);
            let mean: [f64; 3] = std::array::from_fn(|d| nodes.iter().map(|&v| u[3 * v + d]).sum::<f64>() / 8.0);
            let gs = k.gauss_gradients(u, c);
            let g = gs.iter().map(|g| mat_dot(g, g).sqrt()).sum::<f64>() / 8.0;
            acc += (norm2(&mean) + g) * self.grid().cell_volume();
        }
        acc
    }
}

/// The six constraint functionals as dense nodal vectors.
fn constraint_rows(k: &Stiffness, hold: &[usize]) -> Vec<Vec<f64>> {
    let grid = k.grid;
    let n = k.len();
    let mut rows = vec![vec![0.0; n]; 6];
    for c in 0..grid.num_cells() {
        let nodes = grid.cell_nodes(c);
        for g in 0..8 {
            for (l, &v) in nodes.iter().enumerate() {
                let gr = &k.q1.grads[g][l];
                for (m, &(a, b)) in SKEW_PAIRS.iter().enumerate() {
                    rows[m][3 * v + a] += 0.5 * k.q1.weight * gr[b];
                    rows[m][3 * v + b] -= 0.5 * k.q1.weight * gr[a];
                }
            }
        }
    }
    let vol = hold.len() as f64 * grid.cell_volume();
    for &c in hold {
        let nodes = grid.cell_nodes(c);
        for g in 0..8 {
            for (l, &v) in nodes.iter().enumerate() {
                let w = k.q1.weight * k.q1.shape[g][l] / vol;
                for a in 0..3 {
                    rows[3 + a][3 * v + a] += w;
                }
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize, loading: impl Fn(&Grid) -> Loading) -> ElasticModel {
        let grid = Grid::cube(0.0, 1.0, n);
        let hold = Holding { lo: [0.25; 3], hi: [0.75; 3], h0: [0.1, -0.2, 0.3] };
        let d = DomainGrid::new(grid, hold, Elasticity::isotropic(1.0, 1.0).unwrap()).unwrap();
        ElasticModel::new(d, loading(&grid), 3.0).unwrap()
    }

    #[test]
    fn ramp_derivative() {
        let r = Ramp { coefficients: vec![1.0, 2.0, 3.0] };
        assert_eq!(r.eval(2.0), 17.0);
        assert_eq!(r.derivative(2.0), 14.0);
    }

    #[test]
    fn unloaded_minimizer_is_constant() {
        let m = model(4, Loading::none);
        let b = m.solve_beta_cells(&CellField::zeros(*m.grid())).unwrap();
        let u = m.minimize_u(0.0, &b, None).unwrap().u;
        for v in u.chunks(3) {
            assert!((v[0] - 0.1).abs() < 1e-12 && (v[1] + 0.2).abs() < 1e-12 && (v[2] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_energy_matches_full_route() {
        let m = model(4, |g| Loading::from_fn(g, Ramp::linear(1.0), |x| [x[1] - 0.5, 0.0, 0.2 * x[0]]));
        let p = CellField::from_fn(*m.grid(), |x| [x[2], 0.1, 0.0, 0.0, -x[0], 0.3, 0.0, 0.0, x[1] * x[1]]);
        let b = m.solve_beta_cells(&p).unwrap();
        let u = m.minimize_u(0.7, &b, None).unwrap().u;
        let full = m.stored_energy(0.7, &u, &b).unwrap();
        let reduced = m.reduced_energy(0.7, &p).unwrap();
        assert!((full - reduced).abs() < 1e-8 * full.abs().max(1e-3), "{full} vs {reduced}");
    }
}
