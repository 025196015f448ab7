//! Burgers systems, dislocation systems, slip families, the forward
//! operators and the curl-consistency relation.

use std::collections::BTreeMap;

use crate::algebra::{hodge_star, MultiVector};
use crate::chain::{embed_at_time, project_space, SimplicialCurrent};
use crate::complex::SimplicialComplex;
use crate::curl::curl_chain_rows;
use crate::error::{Error, Result};
use crate::flat::flat_norm;
use crate::geometry::{BoxDomain, Point, Simplex};
use crate::grid::{mat_norm, outer, CellField, Mat3};
use crate::spacetime::{SpaceTimeCurrent, TimeMap};

const TRACE_TOL: f64 = 1e-9;

/// Canonical representatives `b_1, …, b_m` of a sign-closed set `{±b_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersSystem {
    vectors: Vec<[f64; 3]>,
}

impl BurgersSystem {
    pub fn new(vectors: Vec<[f64; 3]>) -> Result<Self> {
        let scale = vectors.iter().map(|b| norm3(b)).fold(0.0, f64::max);
        for (i, b) in vectors.iter().enumerate() {
            if !(norm3(b) > 1e-12) || b.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("Burgers vector {i} is zero or not finite")));
            }
            for (j, c) in vectors.iter().enumerate().take(i) {
                let dm = norm3(&[b[0] - c[0], b[1] - c[1], b[2] - c[2]]);
                let dp = norm3(&[b[0] + c[0], b[1] + c[1], b[2] + c[2]]);
                if dm <= 1e-12 * scale || dp <= 1e-12 * scale {
                    return Err(Error::Invalid(format!("Burgers vectors {j} and {i} coincide up to sign")));
                }
            }
        }
        Ok(Self { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> [f64; 3] {
        self.vectors[i]
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    /// All `±b_i` as `(vector, index, sign)`.
    pub fn signed(&self) -> impl Iterator<Item = ([f64; 3], usize, f64)> + '_ {
        self.vectors.iter().enumerate().flat_map(|(i, b)| [(*b, i, 1.0), ([-b[0], -b[1], -b[2]], i, -1.0)])
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(norm3).fold(0.0, f64::max)
    }
}

pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `b ↦ T^b`, stored on canonical representatives; `T^{−b} = −T^b`.
#[derive(Debug, Clone)]
pub struct DislocationSystem {
    burgers: BurgersSystem,
    lines: Vec<SimplicialCurrent>,
}

impl DislocationSystem {
    pub fn new(burgers: BurgersSystem, lines: Vec<SimplicialCurrent>) -> Result<Self> {
        if lines.len() != burgers.len() {
            return Err(Error::Invalid(format!(
                "{} Burgers vectors but {} line currents",
                burgers.len(),
                lines.len()
            )));
        }
        let mut out = Vec::with_capacity(lines.len());
        for (i, l) in lines.into_iter().enumerate() {
            if l.dim() != 3 || l.grade() != 1 {
                return Err(Error::Invalid(format!("line current {i} must be a 1-current in R^3")));
            }
            let l = l.normalized();
            if !l.is_empty() && l.boundary()?.mass() > TRACE_TOL {
                return Err(Error::OpenBoundary(format!("dislocation line {i} is not closed")));
            }
            out.push(l);
        }
        Ok(Self { burgers, lines: out })
    }

    pub fn empty(burgers: BurgersSystem, domain: BoxDomain) -> Result<Self> {
        let lines = (0..burgers.len()).map(|_| SimplicialCurrent::new(domain, 1)).collect::<Result<_>>()?;
        Ok(Self { burgers, lines })
    }

    pub fn burgers(&self) -> &BurgersSystem {
        &self.burgers
    }

    pub fn lines(&self) -> &[SimplicialCurrent] {
        &self.lines
    }

    pub fn line(&self, i: usize) -> &SimplicialCurrent {
        &self.lines[i]
    }

    /// `T^{sign · b_i}`.
    pub fn signed_line(&self, i: usize, sign: f64) -> SimplicialCurrent {
        if sign > 0.0 {
            self.lines[i].clone()
        } else {
            self.lines[i].neg()
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        self.lines.first().map(|l| l.domain()).expect("at least one Burgers vector")
    }

    /// `M(T) = ½ Σ_{±b} M(T^b) = Σ_i M(T^{b_i})`.
    pub fn joint_mass(&self) -> f64 {
        self.lines.iter().map(|l| l.mass()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.lines.iter().all(|l| l.is_empty())
    }

    pub fn equals(&self, other: &Self, tol: f64) -> bool {
        self.burgers == other.burgers && self.lines.iter().zip(&other.lines).all(|(a, b)| a.equals(b, tol))
    }

    pub fn with_quantum(self, eps: f64) -> Result<Self> {
        let lines = self.lines.into_iter().map(|l| l.with_quantum(eps)).collect::<Result<_>>()?;
        Ok(Self { burgers: self.burgers, lines })
    }

    /// `S ≫ T`: `T^b ↦ p_*(∂S^b + δ_σ × T^b)`, after checking that `S` starts at `T`.
    pub fn forward(&self, slip: &SlipFamily) -> Result<Self> {
        if slip.len() != self.lines.len() {
            return Err(Error::Invalid("slip family and dislocation system differ in size".into()));
        }
        let (sigma, _) = slip.window();
        let mut lines = Vec::with_capacity(self.lines.len());
        for (i, (s, t)) in slip.slips.iter().zip(&self.lines).enumerate() {
            let d4 = *s.chain().domain();
            let (t0, _, interior) = s.traces()?;
            if interior > TRACE_TOL {
                return Err(Error::OpenBoundary(format!("slip {i} has boundary inside the time window")));
            }
            let gap = t0.distance_mass(t)?;
            if gap > TRACE_TOL {
                return Err(Error::TraceMismatch(format!("slip {i} does not start at the current system (gap {gap:e})")));
            }
            let t4 = embed_at_time(sigma, t, d4)?;
            let b = s.boundary()?.add(&t4)?;
            let mut next = project_space(&b, *t.domain())?.normalized();
            if let Some(q) = t.quantum() {
                next = next.with_quantum(q)?;
            }
            lines.push(next);
        }
        Ok(Self { burgers: self.burgers.clone(), lines })
    }

    /// Kröner density rows `Σ_i b_i[r] T^{b_i}` as 1-currents.
    pub fn density_rows(&self) -> Result<[SimplicialCurrent; 3]> {
        let d = *self.domain();
        let mut rows = [SimplicialCurrent::new(d, 1)?, SimplicialCurrent::new(d, 1)?, SimplicialCurrent::new(d, 1)?];
        for (b, l) in self.burgers.vectors.iter().zip(&self.lines) {
            for r in 0..3 {
                if b[r] != 0.0 {
                    rows[r] = rows[r].add(&l.scaled(b[r]).without_quantum())?;
                }
            }
        }
        Ok(rows)
    }
}

/// `b ↦ S^b` on a common time window.
#[derive(Debug, Clone)]
pub struct SlipFamily {
    slips: Vec<SpaceTimeCurrent>,
    window: (f64, f64),
}

impl SlipFamily {
    pub fn new(slips: Vec<SpaceTimeCurrent>) -> Result<Self> {
        let window = slips.first().map(|s| s.window()).ok_or_else(|| Error::Invalid("empty slip family".into()))?;
        if slips.iter().any(|s| s.window() != window) {
            return Err(Error::Invalid("slips must share the time window".into()));
        }
        Ok(Self { slips, window })
    }

    /// `Id^T`: static cylinders over every line.
    pub fn neutral(t: &DislocationSystem, window: (f64, f64)) -> Result<Self> {
        let slips = t.lines.iter().map(|l| SpaceTimeCurrent::neutral(l, window)).collect::<Result<_>>()?;
        Self::new(slips)
    }

    pub fn len(&self) -> usize {
        self.slips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slips.is_empty()
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn slip(&self, i: usize) -> &SpaceTimeCurrent {
        &self.slips[i]
    }

    pub fn slips(&self) -> &[SpaceTimeCurrent] {
        &self.slips
    }

    /// `½ Σ_{±b} Var(S^b; I)`.
    pub fn variation(&self, i: (f64, f64)) -> f64 {
        self.slips.iter().map(|s| s.variation(i)).sum()
    }

    /// `sup_t ½ Σ_{±b} M(S^b(t))` from per-slip breakpoints.
    pub fn sliced_mass_sup(&self) -> f64 {
        let mut times: Vec<f64> = self.slips.iter().flat_map(|s| s.vertex_times()).collect();
        times.push(self.window.0);
        times.push(self.window.1);
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut sup: f64 = 0.0;
        for w in times.windows(2) {
            if w[1] - w[0] <= 0.0 {
                continue;
            }
            let (a, b) = (w[0], w[1]);
            let at = |t: f64| -> f64 {
                self.slips
                    .iter()
                    .map(|s| crate::spacetime::slice_chain(s.chain(), t).map(|c| c.raw_mass()).unwrap_or(0.0))
                    .sum()
            };
            let m1 = at(a + (b - a) / 3.0);
            let m2 = at(a + 2.0 * (b - a) / 3.0);
            sup = sup.max(2.0 * m1 - m2).max(2.0 * m2 - m1);
        }
        sup
    }

    pub fn concatenate(first: &Self, second: &Self) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::Invalid("slip families differ in size".into()));
        }
        let slips = first
            .slips
            .iter()
            .zip(&second.slips)
            .map(|(a, b)| SpaceTimeCurrent::concatenate(a, b))
            .collect::<Result<_>>()?;
        Self::new(slips)
    }

    pub fn rescale(&self, a: &TimeMap) -> Result<Self> {
        Self::new(self.slips.iter().map(|s| s.rescale(a)).collect::<Result<_>>()?)
    }

    pub fn affine_to(&self, a: f64, b: f64) -> Result<Self> {
        Self::new(self.slips.iter().map(|s| s.affine_to(a, b)).collect::<Result<_>>()?)
    }

    pub fn vertex_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.slips.iter().flat_map(|s| s.vertex_times()).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    pub fn is_neutral(&self) -> bool {
        self.variation(self.window) == 0.0
    }
}

/// Singular surface term `a ⊗ ν H²⌐σ` on a canonically ordered triangle,
/// `ν` the unit normal of the triangle in its stored vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceTerm {
    pub triangle: [Point; 3],
    pub weight: [f64; 3],
}

impl SurfaceTerm {
    pub fn simplex(&self) -> Simplex {
        Simplex::new(3, self.triangle.to_vec())
    }

    pub fn normal(&self) -> [f64; 3] {
        triangle_normal(&self.triangle)
    }

    pub fn area(&self) -> f64 {
        self.simplex().volume()
    }

    /// `∫ a ⊗ ν dH²`.
    pub fn integral(&self) -> Mat3 {
        let n = self.normal();
        let a = self.area();
        outer([self.weight[0] * a, self.weight[1] * a, self.weight[2] * a], n)
    }

    pub fn mass(&self) -> f64 {
        norm3(&self.weight) * self.area()
    }
}

/// Unit normal `⋆(S⃗)` of an oriented triangle in R^3.
pub fn triangle_normal(t: &[Point; 3]) -> [f64; 3] {
    let s = Simplex::new(3, t.to_vec());
    let o = s.unit_orientation().unwrap_or_else(|| MultiVector::zero(3, 2).expect("valid grade"));
    let star = hodge_star(&o);
    [star.coeffs()[0], star.coeffs()[1], star.coeffs()[2]]
}

/// Matrix-valued measure: optional cell-constant part plus weighted surfaces.
#[derive(Debug, Clone)]
pub struct PlasticDistortion {
    domain: BoxDomain,
    ac: Option<CellField>,
    surfaces: BTreeMap<Vec<[i64; 4]>, SurfaceTerm>,
}

impl PlasticDistortion {
    pub fn zero(domain: BoxDomain) -> Self {
        Self { domain, ac: None, surfaces: BTreeMap::new() }
    }

    pub fn from_cells(field: CellField) -> Self {
        Self { domain: field.grid.domain, ac: Some(field), surfaces: BTreeMap::new() }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn cells(&self) -> Option<&CellField> {
        self.ac.as_ref()
    }

    pub fn set_cells(&mut self, field: Option<CellField>) {
        self.ac = field;
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &SurfaceTerm> {
        self.surfaces.values()
    }

    pub fn num_surfaces(&self) -> usize {
        self.surfaces.len()
    }

    /// Add `a ⊗ ν H²⌐σ` for the oriented triangle `tri`; coinciding triangles merge.
    pub fn add_surface(&mut self, tri: [Point; 3], a: [f64; 3]) {
        let s = Simplex::new(3, tri.to_vec());
        if s.is_degenerate(self.domain.diameter()) || a.iter().all(|x| *x == 0.0) {
            return;
        }
        let keys: Vec<[i64; 4]> = tri.iter().map(|p| self.domain.key(p)).collect();
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| keys[i].cmp(&keys[j]));
        if keys[idx[0]] == keys[idx[1]] || keys[idx[1]] == keys[idx[2]] {
            return;
        }
        let inversions = (idx[0] > idx[1]) as u8 + (idx[0] > idx[2]) as u8 + (idx[1] > idx[2]) as u8;
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        let key: Vec<[i64; 4]> = idx.iter().map(|&i| keys[i]).collect();
        let entry = self
            .surfaces
            .entry(key.clone())
            .or_insert_with(|| SurfaceTerm { triangle: [tri[idx[0]], tri[idx[1]], tri[idx[2]]], weight: [0.0; 3] });
        let mut scale: f64 = 0.0;
        for i in 0..3 {
            scale = scale.max(entry.weight[i].abs()).max(a[i].abs());
            entry.weight[i] += sign * a[i];
        }
        if entry.weight.iter().all(|w| w.abs() <= 1e-12 * scale) {
            self.surfaces.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.ac = match (&self.ac, &other.ac) {
            (Some(a), Some(b)) => {
                if a.grid != b.grid {
                    return Err(Error::Invalid("cell fields on different grids".into()));
                }
                Some(a.add(b))
            }
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        for s in other.surfaces.values() {
            out.add_surface(s.triangle, s.weight);
        }
        Ok(out)
    }

    pub fn scaled(&self, f: f64) -> Self {
        let mut out = self.clone();
        out.ac = self.ac.as_ref().map(|a| a.scaled(f));
        for s in out.surfaces.values_mut() {
            for w in &mut s.weight {
                *w *= f;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// Total variation `Σ |a| area + ∫ |p_ac|`.
    pub fn mass(&self) -> f64 {
        self.singular_mass() + self.ac.as_ref().map(|a| a.mass()).unwrap_or(0.0)
    }

    pub fn singular_mass(&self) -> f64 {
        self.surfaces.values().map(|s| s.mass()).sum()
    }

    /// `∫ dp` as a matrix.
    pub fn integral(&self) -> Mat3 {
        let mut acc = self.ac.as_ref().map(|a| a.integral()).unwrap_or([0.0; 9]);
        for s in self.surfaces.values() {
            let m = s.integral();
            for i in 0..9 {
                acc[i] += m[i];
            }
        }
        acc
    }

    /// Row `r` of the singular part as a 2-current: `Σ a_r ⟦σ⟧`.
    pub fn surface_row(&self, r: usize) -> Result<SimplicialCurrent> {
        let mut c = SimplicialCurrent::new(self.domain, 2)?;
        for s in self.surfaces.values() {
            if s.weight[r] != 0.0 {
                c.push(s.triangle.to_vec(), s.weight[r])?;
            }
        }
        Ok(c)
    }

    /// Rows of `curl p` as 1-currents: boundaries of the surface rows plus
    /// the grid curl chain of the cell-constant part.
    pub fn curl_rows(&self) -> Result<[SimplicialCurrent; 3]> {
        let mut rows = [self.surface_row(0)?.boundary()?, self.surface_row(1)?.boundary()?, self.surface_row(2)?.boundary()?];
        if let Some(ac) = &self.ac {
            if !ac.is_zero() {
                let c = curl_chain_rows(ac)?;
                for r in 0..3 {
                    let cr = c[r].clone().with_domain(self.domain)?;
                    rows[r] = rows[r].add(&cr)?;
                }
            }
        }
        Ok(rows)
    }

    /// Initial distortion with `curl p = Σ b ⊗ T^b`: cone surfaces over each line.
    pub fn from_dislocations(t: &DislocationSystem) -> Result<Self> {
        let mut p = Self::zero(*t.domain());
        for (i, l) in t.lines().iter().enumerate() {
            if l.is_empty() {
                continue;
            }
            let b = t.burgers().vector(i);
            let n: usize = l.terms().len() * 2;
            let mut apex = [0.0; 4];
            for term in l.terms() {
                for v in &term.simplex.vertices {
                    for k in 0..3 {
                        apex[k] += v[k] / n as f64;
                    }
                }
            }
            for term in l.terms() {
                let v = &term.simplex.vertices;
                let m = term.mult;
                p.add_surface([apex, v[0], v[1]], [m * b[0], m * b[1], m * b[2]]);
            }
        }
        Ok(p)
    }

    /// Largest relative 2×2 minor over the surface weights; zero for `a ⊗ ν`.
    pub fn rank_one_defect(&self) -> f64 {
        self.surfaces
            .values()
            .map(|s| {
                let m = s.integral();
                let mut worst: f64 = 0.0;
                for (r1, r2) in [(0, 1), (0, 2), (1, 2)] {
                    for (c1, c2) in [(0, 1), (0, 2), (1, 2)] {
                        let minor = m[3 * r1 + c1] * m[3 * r2 + c2] - m[3 * r1 + c2] * m[3 * r2 + c1];
                        worst = worst.max(minor.abs());
                    }
                }
                worst / mat_norm(&m).powi(2).max(1e-300)
            })
            .fold(0.0, f64::max)
    }
}

/// `p_S(t) = p + ½ Σ_{±b} b ⊗ ⋆p_*(S^b ⌐ (σ, t) × R^3)`.
pub fn plastic_flow(slip: &SlipFamily, burgers: &BurgersSystem, p: &PlasticDistortion, t: f64) -> Result<PlasticDistortion> {
    if slip.len() != burgers.len() {
        return Err(Error::Invalid("slip family and Burgers system differ in size".into()));
    }
    let mut out = p.clone();
    let (sigma, tau) = slip.window();
    let t = t.clamp(sigma, tau);
    if t <= sigma {
        return Ok(out);
    }
    for (i, s) in slip.slips().iter().enumerate() {
        let b = burgers.vector(i);
        let sweep = s.projected_sweep((sigma, t))?;
        for term in sweep.terms() {
            let v = &term.simplex.vertices;
            let m = term.mult;
            out.add_surface([v[0], v[1], v[2]], [m * b[0], m * b[1], m * b[2]]);
        }
    }
    Ok(out)
}

/// Per-row flat distance between `curl p` and `Σ b ⊗ T^b`.
pub fn consistency_residual(
    p: &PlasticDistortion,
    t: &DislocationSystem,
    complex: Option<&SimplicialComplex>,
) -> Result<f64> {
    let curl = p.curl_rows()?;
    let dens = t.density_rows()?;
    let mut total = 0.0;
    for r in 0..3 {
        let d = curl[r].add(&dens[r].clone().with_domain(*curl[r].domain())?.neg())?.normalized();
        if d.is_empty() {
            continue;
        }
        total += match complex {
            Some(c) => flat_norm(&d, c)?.value,
            None => crate::flat::flat_norm_cone(&d)?.value,
        };
    }
    Ok(total)
}

/// Slip-rate segment: `S^b(t)` piece with vector weight `⋆p(S⃗)/|∇^S t|` times multiplicity.
#[derive(Debug, Clone)]
pub struct RateSegment {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub weight: [f64; 3],
}

impl RateSegment {
    pub fn length(&self) -> f64 {
        norm3(&[self.b[0] - self.a[0], self.b[1] - self.a[1], self.b[2] - self.a[2]])
    }
}

/// Geometric slip rate `γ^b(t)` for each canonical `b`.
pub fn slip_rate(slip: &SlipFamily, t: f64) -> Result<Vec<Vec<RateSegment>>> {
    let mut out = Vec::with_capacity(slip.len());
    for s in slip.slips() {
        let tg = s.generic_time(t);
        let mut segs = Vec::new();
        for (term, g) in s.chain().terms().iter().zip(s.geometry()) {
            let (lo, hi) = term.simplex.time_range();
            if !(lo < tg && tg < hi) {
                continue;
            }
            if g.grad_t <= 1e-9 {
                return Err(Error::CriticalSimplex { t: tg, grad: g.grad_t });
            }
            let mut one = SimplicialCurrent::new(*s.chain().domain(), 2)?;
            one.push(term.simplex.vertices.clone(), term.mult)?;
            let sl = crate::spacetime::slice_chain(&one, tg)?;
            let spatial = g.unit.spatial_part()?;
            let n = crate::algebra::star_bivector3(&spatial);
            for st in sl.terms() {
                let (p, q) = (st.simplex.vertices[0], st.simplex.vertices[1]);
                // the slice measure is unsigned; the orientation lives in `term.mult`
                let w = term.mult / g.grad_t;
                segs.push(RateSegment {
                    a: [p[1], p[2], p[3]],
                    b: [q[1], q[2], q[3]],
                    weight: [w * n[0], w * n[1], w * n[2]],
                });
            }
        }
        out.push(segs);
    }
    Ok(out)
}
