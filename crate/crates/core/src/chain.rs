//! Polyhedral currents: finite sums `Σ m_i ⟦σ_i⟧` of weighted oriented simplices.
//!
//! Two representations coexist. The raw term list is whatever the caller
//! pushed; [`SimplicialCurrent::canonical`] merges terms with equal vertex
//! sets (up to orientation) and drops degenerate and cancelled pieces, and
//! [`SimplicialCurrent::normalized`] additionally merges collinear segments
//! of 1-currents so that equal currents compare equal term by term.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sub, BoxDomain, Point, Simplex};

pub const CANCEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub simplex: Simplex,
    pub mult: f64,
}

#[derive(Debug, Clone)]
pub struct SimplicialCurrent {
    domain: BoxDomain,
    grade: usize,
    quantum: Option<f64>,
    terms: Vec<Term>,
}

fn permutation_sign(idx: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] > idx[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SimplicialCurrent {
    pub fn new(domain: BoxDomain, grade: usize) -> Result<Self> {
        if grade > domain.dim {
            return Err(Error::GradeOverflow { grade, dim: domain.dim });
        }
        Ok(Self { domain, grade, quantum: None, terms: Vec::new() })
    }

    /// Restrict multiplicities to `ε ℤ`.
    pub fn with_quantum(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("multiplicity quantum must be positive, got {eps}")));
        }
        for t in &self.terms {
            check_multiple(t.mult, eps)?;
        }
        self.quantum = Some(eps);
        Ok(self)
    }

    pub fn without_quantum(mut self) -> Self {
        self.quantum = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn quantum(&self) -> Option<f64> {
        self.quantum
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn zero_like(&self) -> Self {
        Self { domain: self.domain, grade: self.grade, quantum: self.quantum, terms: Vec::new() }
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Result<Self> {
        if domain.dim != self.domain.dim {
            return Err(Error::DimensionMismatch(domain.dim, self.domain.dim));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn push(&mut self, vertices: Vec<Point>, mult: f64) -> Result<()> {
        if vertices.len() != self.grade + 1 {
            return Err(Error::Invalid(format!(
                "a {}-simplex needs {} vertices, got {}",
                self.grade,
                self.grade + 1,
                vertices.len()
            )));
        }
        if let Some(eps) = self.quantum {
            check_multiple(mult, eps)?;
        }
        if !mult.is_finite() || vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::Invalid("non-finite vertex or multiplicity".into()));
        }
        self.terms.push(Term { simplex: Simplex::new(self.domain.dim, vertices), mult });
        Ok(())
    }

    /// Open or closed polyline with constant multiplicity.
    pub fn polyline(domain: BoxDomain, points: &[Point], mult: f64, closed: bool) -> Result<Self> {
        let mut c = Self::new(domain, 1)?;
        let n = points.len();
        let segs = if closed { n } else { n.saturating_sub(1) };
        for i in 0..segs {
            c.push(vec![points[i], points[(i + 1) % n]], mult)?;
        }
        Ok(c)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.domain.dim != other.domain.dim {
            return Err(Error::DimensionMismatch(self.domain.dim, other.domain.dim));
        }
        if self.grade != other.grade {
            return Err(Error::Invalid(format!(
                "cannot combine currents of grade {} and {}",
                self.grade, other.grade
            )));
        }
        Ok(())
    }

    /// Raw concatenation of term lists; the quantum is kept only if both agree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        if self.quantum != other.quantum {
            out.quantum = None;
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.mult *= s;
        }
        if let Some(eps) = self.quantum {
            if check_multiple(s * eps, eps).is_err() {
                out.quantum = None;
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Merge terms over identical vertex sets, drop degenerate simplices and
    /// cancelled multiplicities. Deterministic: output is sorted by vertex keys.
    pub fn canonical(&self) -> Self {
        let scale = self.domain.diameter();
        let mut map: BTreeMap<Vec<[i64; 4]>, (Vec<Point>, f64, f64)> = BTreeMap::new();
        for t in &self.terms {
            if t.mult == 0.0 || t.simplex.is_degenerate(scale) {
                continue;
            }
            let keys: Vec<[i64; 4]> = t.simplex.vertices.iter().map(|v| self.domain.key(v)).collect();
            let mut idx: Vec<usize> = (0..keys.len()).collect();
            idx.sort_by(|&i, &j| keys[i].cmp(&keys[j]));
            if idx.windows(2).any(|w| keys[w[0]] == keys[w[1]]) {
                continue;
            }
            let sign = permutation_sign(&idx);
            let key: Vec<[i64; 4]> = idx.iter().map(|&i| keys[i]).collect();
            let e = map.entry(key).or_insert_with(|| {
                (idx.iter().map(|&i| t.simplex.vertices[i]).collect(), 0.0, 0.0)
            });
            e.1 += sign * t.mult;
            e.2 = e.2.max(t.mult.abs());
        }
        let terms = map
            .into_values()
            .filter(|(_, m, mx)| m.abs() > CANCEL_TOL * mx)
            .map(|(v, m, _)| Term { simplex: Simplex::new(self.domain.dim, v), mult: m })
            .collect();
        Self { domain: self.domain, grade: self.grade, quantum: self.quantum, terms }
    }

    /// Canonical form; 1-currents are additionally rewritten as maximal
    /// segments of constant multiplicity along each supporting line.
    pub fn normalized(&self) -> Self {
        if self.grade == 1 {
            merge_lines(self).canonical()
        } else {
            self.canonical()
        }
    }

    pub fn boundary(&self) -> Result<Self> {
        if self.grade == 0 {
            return Err(Error::Invalid("boundary of a 0-current is not defined here".into()));
        }
        let mut out = Self {
            domain: self.domain,
            grade: self.grade - 1,
            quantum: self.quantum,
            terms: Vec::with_capacity(self.terms.len() * (self.grade + 1)),
        };
        // degenerate simplices are zero currents; dropping them first keeps ∂∂ = 0 termwise
        for t in &self.canonical().terms {
            let v = &t.simplex.vertices;
            for i in 0..v.len() {
                let face: Vec<Point> =
                    v.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| *p).collect();
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                out.terms.push(Term { simplex: Simplex::new(self.domain.dim, face), mult: sign * t.mult });
            }
        }
        Ok(out.canonical())
    }

    /// `Σ |m_i| vol(σ_i)` of the normalized representative.
    pub fn mass(&self) -> f64 {
        self.normalized().raw_mass()
    }

    /// `Σ |m_i| vol(σ_i)` of the term list as stored.
    pub fn raw_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.mult.abs() * t.simplex.volume()).sum()
    }

    /// Anisotropic mass `Σ ψ(m_i (b_i − a_i))` of a 1-current.
    pub fn mass_psi(&self, psi: &dyn Fn([f64; 3]) -> f64) -> Result<f64> {
        if self.grade != 1 {
            return Err(Error::Invalid("anisotropic mass is defined for 1-currents".into()));
        }
        if self.domain.dim != 3 {
            return Err(Error::DimensionMismatch(self.domain.dim, 3));
        }
        Ok(self
            .normalized()
            .terms
            .iter()
            .map(|t| {
                let d = sub(&t.simplex.vertices[1], &t.simplex.vertices[0]);
                psi([t.mult * d[0], t.mult * d[1], t.mult * d[2]])
            })
            .sum())
    }

    pub fn is_cycle(&self, tol: f64) -> bool {
        self.grade == 0 || self.boundary().map(|b| b.mass() <= tol).unwrap_or(false)
    }

    /// Mass of `self − other` after normalization.
    pub fn distance_mass(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.mass())
    }

    /// Term-wise equality of normalized forms with a multiplicity tolerance.
    pub fn equals(&self, other: &Self, tol: f64) -> bool {
        if self.check_compatible(other).is_err() {
            return false;
        }
        self.distance_mass(other).map(|m| m <= tol).unwrap_or(false)
    }

    /// Pushforward under a vertex map that is affine on every simplex.
    pub fn pushforward(&self, target: BoxDomain, f: &dyn Fn(&Point) -> Point) -> Result<Self> {
        if self.grade > target.dim {
            return Err(Error::GradeOverflow { grade: self.grade, dim: target.dim });
        }
        let terms = self
            .terms
            .iter()
            .map(|t| Term { simplex: t.simplex.map(target.dim, f), mult: t.mult })
            .collect();
        Ok(Self { domain: target, grade: self.grade, quantum: self.quantum, terms }.canonical())
    }

    /// Round every multiplicity of the normalized form to the nearest multiple of `eps`.
    pub fn round_multiplicities(&self, eps: f64) -> Result<Self> {
        let mut out = self.normalized();
        for t in &mut out.terms {
            t.mult = (t.mult / eps).round_ties_even() * eps;
        }
        out.quantum = None;
        out.canonical().with_quantum(eps)
    }

    pub fn max_abs_multiplicity(&self) -> f64 {
        self.terms.iter().map(|t| t.mult.abs()).fold(0.0, f64::max)
    }

    pub(crate) fn from_terms(domain: BoxDomain, grade: usize, terms: Vec<Term>) -> Self {
        Self { domain, grade, quantum: None, terms }
    }
}

fn check_multiple(m: f64, eps: f64) -> Result<()> {
    let r = m / eps;
    if (r - r.round()).abs() > 1e-9 * r.abs().max(1.0) {
        return Err(Error::Invalid(format!("multiplicity {m} is not a multiple of {eps}")));
    }
    Ok(())
}

/// Direction with a fixed sign convention: first significant component positive.
fn canonical_direction(d: &Point, dim: usize) -> (Point, bool) {
    let n = norm(d);
    let mut u = [d[0] / n, d[1] / n, d[2] / n, d[3] / n];
    let first = (0..dim).find(|&i| u[i].abs() > 1e-7).unwrap_or(0);
    let flip = u[first] < 0.0;
    if flip {
        for c in &mut u {
            *c = -*c;
        }
    }
    (u, flip)
}

const LINE_KEY: f64 = 1e-7;

fn merge_lines(c: &SimplicialCurrent) -> SimplicialCurrent {
    let dim = c.domain.dim;
    let diam = c.domain.diameter();
    let q = c.domain.key_quantum();
    // Line key -> (representative direction, segments as (a, b, w) oriented along it).
    let mut lines: BTreeMap<[i64; 8], (Point, Vec<(Point, Point, f64)>)> = BTreeMap::new();
    let canon = c.canonical();
    for t in &canon.terms {
        let (a, b) = (t.simplex.vertices[0], t.simplex.vertices[1]);
        let (u, flip) = canonical_direction(&sub(&b, &a), dim);
        let (a, b, w) = if flip { (b, a, -t.mult) } else { (a, b, t.mult) };
        let s = dot(&a, &u);
        let foot = [a[0] - s * u[0], a[1] - s * u[1], a[2] - s * u[2], a[3] - s * u[3]];
        let mut key = [0i64; 8];
        for i in 0..4 {
            key[i] = (u[i] / LINE_KEY).round() as i64;
            key[4 + i] = (foot[i] / (LINE_KEY * diam)).round() as i64;
        }
        lines.entry(key).or_insert_with(|| (u, Vec::new())).1.push((a, b, w));
    }
    let mut terms = Vec::new();
    for (u, segs) in lines.into_values() {
        let maxw = segs.iter().map(|s| s.2.abs()).fold(0.0, f64::max);
        let tol = CANCEL_TOL * maxw;
        let mut events: Vec<(f64, Point, f64)> = Vec::with_capacity(2 * segs.len());
        for (a, b, w) in segs {
            events.push((dot(&a, &u), a, w));
            events.push((dot(&b, &u), b, -w));
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.partial_cmp(&y.1).unwrap()));
        // Cluster breakpoints closer than the key quantum.
        let mut clusters: Vec<(f64, Point, f64)> = Vec::new();
        for (s, p, dw) in events {
            match clusters.last_mut() {
                Some(last) if s - last.0 <= q => last.2 += dw,
                _ => clusters.push((s, p, dw)),
            }
        }
        let mut w = 0.0;
        let mut run: Option<(Point, f64)> = None;
        for (_, p, dw) in clusters {
            let next = w + dw;
            if let Some((start, rw)) = run {
                if (next - rw).abs() > tol {
                    terms.push(Term { simplex: Simplex::new(dim, vec![start, p]), mult: rw });
                    run = None;
                }
            }
            if run.is_none() && next.abs() > tol {
                run = Some((p, next));
            }
            w = next;
        }
    }
    SimplicialCurrent { domain: c.domain, grade: 1, quantum: c.quantum, terms }
}

/// `δ_t × T`: lift a spatial current into the time slice `{t} × R^3`.
pub fn embed_at_time(t: f64, c: &SimplicialCurrent, target: BoxDomain) -> Result<SimplicialCurrent> {
    if c.dim() != 3 || target.dim != 4 {
        return Err(Error::DimensionMismatch(c.dim(), 3));
    }
    c.pushforward(target, &|p| [t, p[0], p[1], p[2]])
}

/// `⟦(a, b)⟧ × T` using the staircase triangulation of each prism, so that
/// `∂(I × T) = δ_b × T − δ_a × T − I × ∂T` holds exactly.
pub fn cylinder(a: f64, b: f64, c: &SimplicialCurrent, target: BoxDomain) -> Result<SimplicialCurrent> {
    if c.dim() != 3 || target.dim != 4 {
        return Err(Error::DimensionMismatch(c.dim(), 3));
    }
    let k = c.grade();
    let mut out = SimplicialCurrent::new(target, k + 1)?;
    for t in c.terms() {
        let v = &t.simplex.vertices;
        for j in 0..=k {
            let mut verts = Vec::with_capacity(k + 2);
            for p in &v[..=j] {
                verts.push([a, p[0], p[1], p[2]]);
            }
            for p in &v[j..] {
                verts.push([b, p[0], p[1], p[2]]);
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            out.terms.push(Term { simplex: Simplex::new(4, verts), mult: sign * t.mult });
        }
    }
    out.quantum = c.quantum();
    Ok(out.canonical())
}

/// Spatial projection `p(t, x) = x` of a space-time current.
pub fn project_space(c: &SimplicialCurrent, target: BoxDomain) -> Result<SimplicialCurrent> {
    if c.dim() != 4 || target.dim != 3 {
        return Err(Error::DimensionMismatch(c.dim(), 4));
    }
    c.pushforward(target, &|p| [p[1], p[2], p[3], 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::p3;

    fn dom() -> BoxDomain {
        BoxDomain::cube3(-2.0, 2.0)
    }

    #[test]
    fn boundary_of_triangle() {
        let mut c = SimplicialCurrent::new(dom(), 2).unwrap();
        c.push(vec![p3(0., 0., 0.), p3(1., 0., 0.), p3(0., 1., 0.)], 1.0).unwrap();
        let b = c.boundary().unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.boundary().unwrap().is_empty());
        assert!((b.mass() - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn collinear_segments_merge() {
        let a = SimplicialCurrent::polyline(dom(), &[p3(0., 0., 0.), p3(0.5, 0., 0.), p3(1., 0., 0.)], 1.0, false)
            .unwrap();
        let b = SimplicialCurrent::polyline(dom(), &[p3(0., 0., 0.), p3(1., 0., 0.)], 1.0, false).unwrap();
        assert!(a.equals(&b, 1e-12));
        assert_eq!(a.normalized().len(), 1);
        let mut c = SimplicialCurrent::new(dom(), 1).unwrap();
        c.push(vec![p3(1., 0., 0.), p3(0.25, 0., 0.)], 1.0).unwrap();
        let d = b.add(&c).unwrap().normalized();
        assert_eq!(d.len(), 1);
        assert!((d.mass() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn quantum_is_enforced() {
        let c = SimplicialCurrent::new(dom(), 1).unwrap().with_quantum(0.5).unwrap();
        let mut c2 = c.clone();
        assert!(c2.push(vec![p3(0., 0., 0.), p3(1., 0., 0.)], 1.5).is_ok());
        assert!(c2.push(vec![p3(0., 0., 0.), p3(1., 0., 0.)], 0.3).is_err());
    }

    #[test]
    fn cylinder_boundary_identity() {
        let d4 = dom().with_time(0.0, 1.0).unwrap();
        let mut t = SimplicialCurrent::new(dom(), 1).unwrap();
        t.push(vec![p3(0., 0., 0.), p3(1., 0., 0.)], 2.0).unwrap();
        t.push(vec![p3(1., 0., 0.), p3(1., 1., 0.5)], -1.0).unwrap();
        let cyl = cylinder(0.2, 0.7, &t, d4).unwrap();
        let lhs = cyl.boundary().unwrap();
        let rhs = embed_at_time(0.7, &t, d4)
            .unwrap()
            .sub(&embed_at_time(0.2, &t, d4).unwrap())
            .unwrap()
            .sub(&cylinder(0.2, 0.7, &t.boundary().unwrap(), d4).unwrap())
            .unwrap();
        assert!(lhs.equals(&rhs, 1e-12));
        // Orientation: the prism over a segment along e1 is positively e0 ∧ e1.
        let o = cyl.terms()[0].simplex.orientation();
        assert!(o.coeffs().iter().map(|c| c.abs()).sum::<f64>() > 0.0);
        assert!((cyl.mass() - 0.5 * (2.0 + 1.25f64.sqrt())).abs() < 1e-12);
    }
}
