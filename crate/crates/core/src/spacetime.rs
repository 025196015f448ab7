//! Space-time 2-currents in `[σ, τ] × R^3`: slicing, variation, coarea
//! diagnostics, concatenation, rescaling and deformation witnesses.

use crate::algebra::MultiVector;
use crate::chain::{cylinder, project_space, SimplicialCurrent, Term};
use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::flat::min_filling;
use crate::geometry::{edge_point_at_time, sub, BoxDomain, Point, Simplex};

/// Per-simplex geometry derived from the oriented unit 2-vector.
#[derive(Debug, Clone)]
pub struct SimplexGeometry {
    pub unit: MultiVector,
    /// `|∇^S t|`, the length of the tangential projection of `e0`.
    pub grad_t: f64,
    /// `|p(S⃗)|`, the norm of the purely spatial part of the orientation.
    pub spatial: f64,
    pub area: f64,
}

impl SimplexGeometry {
    fn of(s: &Simplex) -> Self {
        let o = s.orientation();
        let n = o.norm();
        let unit = o.scaled(1.0 / n);
        // Gram-Schmidt on the edge vectors.
        let e1 = s.edge(0);
        let e2 = s.edge(1);
        let l1 = crate::geometry::norm(&e1);
        let u1 = [e1[0] / l1, e1[1] / l1, e1[2] / l1, e1[3] / l1];
        let c = crate::geometry::dot(&e2, &u1);
        let w = [e2[0] - c * u1[0], e2[1] - c * u1[1], e2[2] - c * u1[2], e2[3] - c * u1[3]];
        let l2 = crate::geometry::norm(&w);
        let u2 = [w[0] / l2, w[1] / l2, w[2] / l2, w[3] / l2];
        let grad_t = (u1[0] * u1[0] + u2[0] * u2[0]).sqrt();
        let spatial = unit.spatial_part().expect("ambient dimension 4").norm();
        Self { unit, grad_t, spatial, area: 0.5 * n }
    }
}

/// Result of slicing at a single time.
#[derive(Debug, Clone)]
pub struct SliceResult {
    pub time: f64,
    /// `p_*(S|_t)` in R^3.
    pub current: SimplicialCurrent,
    /// False when the slicing hyperplane carries positive `|S|` measure.
    pub valid: bool,
}

/// Strictly monotone piecewise-linear time map given by its knots.
#[derive(Debug, Clone)]
pub struct TimeMap {
    knots: Vec<(f64, f64)>,
}

impl TimeMap {
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.len() < 2 {
            return Err(Error::Invalid("a time map needs at least two knots".into()));
        }
        let inc = knots[1].1 > knots[0].1;
        for w in knots.windows(2) {
            let (dt, da) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if dt <= 0.0 || da == 0.0 || (da > 0.0) != inc || !da.is_finite() {
                return Err(Error::NonInjectiveTimeMap);
            }
        }
        Ok(Self { knots })
    }

    pub fn affine(s0: f64, s1: f64, a0: f64, a1: f64) -> Result<Self> {
        Self::new(vec![(s0, a0), (s1, a1)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        let i = match k.iter().position(|p| p.0 >= t) {
            Some(0) => 1,
            Some(i) => i,
            None => k.len() - 1,
        };
        let (a, b) = (k[i - 1], k[i]);
        a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
    }

    pub fn is_increasing(&self) -> bool {
        self.knots[1].1 > self.knots[0].1
    }
}

#[derive(Debug, Clone)]
pub struct SpaceTimeCurrent {
    chain: SimplicialCurrent,
    window: (f64, f64),
    geometry: Vec<SimplexGeometry>,
}

fn clip_polygon(poly: &[Point], t: f64, keep_below: bool) -> Vec<Point> {
    let inside = |p: &Point| if keep_below { p[0] <= t } else { p[0] >= t };
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let cur = &poly[i];
        let next = &poly[(i + 1) % poly.len()];
        let (ci, ni) = (inside(cur), inside(next));
        if ci {
            out.push(*cur);
        }
        if ci != ni && cur[0] != t && next[0] != t {
            out.push(edge_point_at_time(cur, next, t));
        }
    }
    out
}

/// Pieces of a simplex (segment or triangle) inside the slab `a ≤ t ≤ b`,
/// in the orientation of the input.
fn clip_to_slab(s: &Simplex, a: f64, b: f64) -> Vec<Vec<Point>> {
    let (lo, hi) = s.time_range();
    if lo >= a && hi <= b {
        return vec![s.vertices.clone()];
    }
    if hi <= a || lo >= b {
        return Vec::new();
    }
    match s.vertices.len() {
        2 => {
            let (p, q) = (s.vertices[0], s.vertices[1]);
            let clamp = |x: &Point, y: &Point| -> Point {
                if x[0] < a {
                    edge_point_at_time(x, y, a)
                } else if x[0] > b {
                    edge_point_at_time(x, y, b)
                } else {
                    *x
                }
            };
            vec![vec![clamp(&p, &q), clamp(&q, &p)]]
        }
        3 => {
            let poly = clip_polygon(&s.vertices, b, true);
            let poly = clip_polygon(&poly, a, false);
            (1..poly.len().saturating_sub(1)).map(|i| vec![poly[0], poly[i], poly[i + 1]]).collect()
        }
        _ => Vec::new(),
    }
}

/// Geometric section of a 1- or 2-chain in R^{1+3} by `{time = t}`.
/// Assumes no vertex has time exactly `t`.
pub fn slice_chain(c: &SimplicialCurrent, t: f64) -> Result<SimplicialCurrent> {
    if c.dim() != 4 || c.grade() == 0 || c.grade() > 2 {
        return Err(Error::Invalid("slicing is implemented for 1- and 2-chains in space-time".into()));
    }
    let mut out = SimplicialCurrent::new(*c.domain(), c.grade() - 1)?;
    let mut terms = Vec::new();
    for term in c.terms() {
        let v = &term.simplex.vertices;
        let (lo, hi) = term.simplex.time_range();
        if !(lo < t && t < hi) {
            continue;
        }
        if v.len() == 2 {
            let p = edge_point_at_time(&v[0], &v[1], t);
            let sign = if v[1][0] > v[0][0] { 1.0 } else { -1.0 };
            terms.push(Term { simplex: Simplex::new(4, vec![p]), mult: sign * term.mult });
        } else {
            let mut up = None;
            let mut down = None;
            for i in 0..3 {
                let (a, b) = (&v[i], &v[(i + 1) % 3]);
                if a[0] < t && t < b[0] {
                    up = Some(edge_point_at_time(a, b, t));
                } else if a[0] > t && t > b[0] {
                    down = Some(edge_point_at_time(a, b, t));
                }
            }
            if let (Some(u), Some(d)) = (up, down) {
                terms.push(Term { simplex: Simplex::new(4, vec![u, d]), mult: term.mult });
            }
        }
    }
    for t in terms {
        out.push(t.simplex.vertices, t.mult)?;
    }
    if let Some(q) = c.quantum() {
        out = out.with_quantum(q)?;
    }
    Ok(out.canonical())
}

impl SpaceTimeCurrent {
    pub fn new(chain: SimplicialCurrent, window: (f64, f64)) -> Result<Self> {
        if chain.dim() != 4 {
            return Err(Error::DimensionMismatch(chain.dim(), 4));
        }
        if chain.grade() != 2 {
            return Err(Error::Invalid(format!("space-time currents have grade 2, got {}", chain.grade())));
        }
        if !(window.1 > window.0) {
            return Err(Error::Invalid("empty time window".into()));
        }
        let chain = chain.canonical();
        let tol = 1e-12 * (window.1 - window.0).max(1.0);
        for t in chain.terms() {
            let (lo, hi) = t.simplex.time_range();
            if lo < window.0 - tol || hi > window.1 + tol {
                return Err(Error::Invalid(format!(
                    "simplex with times [{lo}, {hi}] lies outside the window [{}, {}]",
                    window.0, window.1
                )));
            }
            if t.simplex.vertices.iter().any(|v| !chain.domain().contains(v, tol)) {
                return Err(Error::Invalid("simplex outside the declared domain".into()));
            }
        }
        let geometry = chain.terms().iter().map(|t| SimplexGeometry::of(&t.simplex)).collect();
        Ok(Self { chain, window, geometry })
    }

    /// Static cylinder `⟦(σ, τ)⟧ × T`.
    pub fn neutral(t: &SimplicialCurrent, window: (f64, f64)) -> Result<Self> {
        let d4 = t.domain().with_time(window.0, window.1)?;
        Self::new(cylinder(window.0, window.1, t, d4)?, window)
    }

    pub fn chain(&self) -> &SimplicialCurrent {
        &self.chain
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn geometry(&self) -> &[SimplexGeometry] {
        &self.geometry
    }

    pub fn spatial_domain(&self) -> BoxDomain {
        self.chain.domain().spatial().expect("space-time domain")
    }

    pub fn is_zero(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn vertex_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> =
            self.chain.terms().iter().flat_map(|t| t.simplex.vertices.iter().map(|v| v[0])).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    fn time_tol(&self) -> f64 {
        1e-12 * (self.window.1 - self.window.0)
    }

    /// Shift `t` off vertex times by `1e-9 (τ − σ)` steps.
    pub fn generic_time(&self, t: f64) -> f64 {
        let times = self.vertex_times();
        let mut t = t;
        for _ in 0..16 {
            if times.iter().any(|&v| (v - t).abs() <= self.time_tol()) {
                t += 1e-9 * (self.window.1 - self.window.0);
            } else {
                break;
            }
        }
        t
    }

    /// Whether `{t} × R^3` carries a flat simplex of `S`.
    pub fn has_sheet_at(&self, t: f64) -> bool {
        let tol = self.time_tol();
        self.chain.terms().iter().any(|term| {
            let (lo, hi) = term.simplex.time_range();
            hi - lo <= tol && (lo - t).abs() <= tol
        })
    }

    /// Section in space-time (points carry time `t`), at a generic time near `t`.
    pub fn slice_spacetime(&self, t: f64) -> Result<(f64, SimplicialCurrent)> {
        let tg = self.generic_time(t);
        Ok((tg, slice_chain(&self.chain, tg)?))
    }

    pub fn slice_at_time(&self, t: f64) -> Result<SliceResult> {
        let d3 = self.spatial_domain();
        if self.has_sheet_at(t) {
            return Ok(SliceResult { time: t, current: SimplicialCurrent::new(d3, 1)?, valid: false });
        }
        let (tg, s) = self.slice_spacetime(t)?;
        Ok(SliceResult { time: tg, current: project_space(&s, d3)?, valid: true })
    }

    /// `M(S ⌐ I × R^3)`.
    pub fn mass_in(&self, i: (f64, f64)) -> f64 {
        self.integrate(i, |_| 1.0)
    }

    /// `Var(S; I) = ∫_{I×R^3} |p(S⃗)| d|S|`.
    pub fn variation(&self, i: (f64, f64)) -> f64 {
        self.integrate(i, |g| g.spatial)
    }

    /// `∫_{I×R^3} |∇^S t| d|S|`.
    pub fn coarea_gradient(&self, i: (f64, f64)) -> f64 {
        self.integrate(i, |g| g.grad_t)
    }

    /// `∫_{I×R^3} f(S⃗) d|S|` with `f` evaluated per simplex.
    pub fn integrate(&self, i: (f64, f64), f: impl Fn(&SimplexGeometry) -> f64) -> f64 {
        let mut acc = 0.0;
        for (term, g) in self.chain.terms().iter().zip(&self.geometry) {
            let area: f64 = clip_to_slab(&term.simplex, i.0, i.1)
                .into_iter()
                .map(|v| Simplex::new(4, v).volume())
                .sum();
            acc += term.mult.abs() * f(g) * area;
        }
        acc
    }

    /// Like [`integrate`](Self::integrate) but with access to the term's multiplicity.
    pub fn integrate_terms(&self, i: (f64, f64), f: impl Fn(&Term, &SimplexGeometry) -> f64) -> f64 {
        let mut acc = 0.0;
        for (term, g) in self.chain.terms().iter().zip(&self.geometry) {
            let area: f64 = clip_to_slab(&term.simplex, i.0, i.1)
                .into_iter()
                .map(|v| Simplex::new(4, v).volume())
                .sum();
            acc += f(term, g) * area;
        }
        acc
    }

    /// Breakpoints of `t ↦ M(S|_t)` inside `I`, including the ends.
    fn breakpoints(&self, i: (f64, f64)) -> Vec<f64> {
        let mut ts = vec![i.0, i.1];
        ts.extend(self.vertex_times().into_iter().filter(|&t| t > i.0 && t < i.1));
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    fn slice_mass_raw(&self, t: f64) -> f64 {
        slice_chain(&self.chain, t).map(|s| s.raw_mass()).unwrap_or(0.0)
    }

    /// `∫_I M(S|_t) dt`, exact: the slice mass is affine between vertex times,
    /// so the midpoint rule on each piece is exact.
    pub fn coarea_slices(&self, i: (f64, f64)) -> f64 {
        self.breakpoints(i)
            .windows(2)
            .map(|w| (w[1] - w[0]) * self.slice_mass_raw(0.5 * (w[0] + w[1])))
            .sum()
    }

    /// Essential supremum of `M(S(t))` over `I`, from one-sided limits at
    /// the breakpoints of the piecewise-affine slice mass.
    pub fn sliced_mass_sup(&self, i: (f64, f64)) -> f64 {
        let mut sup: f64 = 0.0;
        for w in self.breakpoints(i).windows(2) {
            let (a, b) = (w[0], w[1]);
            let m1 = self.slice_mass_raw(a + (b - a) / 3.0);
            let m2 = self.slice_mass_raw(a + 2.0 * (b - a) / 3.0);
            let left = 2.0 * m1 - m2;
            let right = 2.0 * m2 - m1;
            sup = sup.max(left).max(right);
        }
        sup
    }

    pub fn boundary(&self) -> Result<SimplicialCurrent> {
        self.chain.boundary()
    }

    /// `(T0, T1, m)` with `∂S = δ_τ × T1 − δ_σ × T0 + R` and `m = M(R)`,
    /// `R` the part of the boundary inside the open time window.
    pub fn traces(&self) -> Result<(SimplicialCurrent, SimplicialCurrent, f64)> {
        let b = self.boundary()?;
        let d3 = self.spatial_domain();
        let tol = 1e-12 * (self.window.1 - self.window.0).max(1.0);
        let mut top = SimplicialCurrent::new(*b.domain(), 1)?;
        let mut bottom = top.clone();
        let mut rest = top.clone();
        for t in b.terms() {
            let (lo, hi) = t.simplex.time_range();
            let target = if (lo - self.window.1).abs() <= tol && (hi - self.window.1).abs() <= tol {
                &mut top
            } else if (lo - self.window.0).abs() <= tol && (hi - self.window.0).abs() <= tol {
                &mut bottom
            } else {
                &mut rest
            };
            target.push(t.simplex.vertices.clone(), t.mult)?;
        }
        let q = self.chain.quantum();
        let mut t0 = project_space(&bottom.neg(), d3)?.normalized();
        let mut t1 = project_space(&top, d3)?.normalized();
        if let Some(q) = q {
            t0 = t0.with_quantum(q)?;
            t1 = t1.with_quantum(q)?;
        }
        Ok((t0, t1, rest.mass()))
    }

    /// Restriction `S ⌐ (I × R^3)`, splitting simplices crossing the ends.
    pub fn restrict(&self, i: (f64, f64)) -> Result<Self> {
        let mut c = SimplicialCurrent::new(*self.chain.domain(), 2)?;
        for term in self.chain.terms() {
            for piece in clip_to_slab(&term.simplex, i.0, i.1) {
                c.push(piece, term.mult)?;
            }
        }
        if let Some(q) = self.chain.quantum() {
            c = c.with_quantum(q)?;
        }
        Self::new(c, (i.0.max(self.window.0), i.1.min(self.window.1)))
    }

    /// `p_*(S ⌐ (I × R^3))` as a 2-current in R^3.
    pub fn projected_sweep(&self, i: (f64, f64)) -> Result<SimplicialCurrent> {
        project_space(self.restrict(i)?.chain(), self.spatial_domain())
    }

    /// Spatial length of the boundary inside the open window restricted to `I`.
    pub fn boundary_variation(&self, i: (f64, f64)) -> Result<f64> {
        let b = self.boundary()?;
        let tol = 1e-12 * (self.window.1 - self.window.0).max(1.0);
        let mut acc = 0.0;
        for t in b.terms() {
            let (lo, hi) = t.simplex.time_range();
            let at_end = (hi - lo).abs() <= tol
                && ((lo - self.window.0).abs() <= tol || (lo - self.window.1).abs() <= tol);
            if at_end {
                continue;
            }
            for piece in clip_to_slab(&t.simplex, i.0, i.1) {
                let d = sub(&piece[1], &piece[0]);
                acc += t.mult.abs() * (d[1] * d[1] + d[2] * d[2] + d[3] * d[3]).sqrt();
            }
        }
        Ok(acc)
    }

    /// `a_* S` for a monotone piecewise-linear time map `a`.
    pub fn rescale(&self, a: &TimeMap) -> Result<Self> {
        let knots = a.knots();
        let (k0, k1) = (knots[0].0, knots[knots.len() - 1].0);
        let tol = self.time_tol();
        if k0 > self.window.0 + tol || k1 < self.window.1 - tol {
            return Err(Error::Invalid("time map does not cover the window".into()));
        }
        let (w0, w1) = (a.eval(self.window.0), a.eval(self.window.1));
        let window = if w0 < w1 { (w0, w1) } else { (w1, w0) };
        let src = self.chain.domain();
        let mut lo = src.lo;
        let mut hi = src.hi;
        lo[0] = window.0;
        hi[0] = window.1;
        let target = BoxDomain::new(4, lo, hi)?;
        let mut c = SimplicialCurrent::new(target, 2)?;
        for w in knots.windows(2) {
            let (s0, s1) = (w[0].0, w[1].0);
            for term in self.chain.terms() {
                for piece in clip_to_slab(&term.simplex, s0, s1) {
                    let mapped = piece
                        .iter()
                        .map(|p| {
                            let mut q = *p;
                            // knots map exactly so that adjacent slabs share their times
                            q[0] = if p[0] <= s0 {
                                w[0].1
                            } else if p[0] >= s1 {
                                w[1].1
                            } else {
                                w[0].1 + (w[1].1 - w[0].1) * (p[0] - s0) / (s1 - s0)
                            };
                            q
                        })
                        .collect();
                    c.push(mapped, term.mult)?;
                }
            }
        }
        if let Some(q) = self.chain.quantum() {
            c = c.with_quantum(q)?;
        }
        Self::new(c, window)
    }

    /// `S2 ∘ S1` on `[0, 1]`: `S1` compressed into `[0, ½]`, `S2` into `[½, 1]`.
    pub fn concatenate(s1: &Self, s2: &Self) -> Result<Self> {
        for s in [s1, s2] {
            if s.window != (0.0, 1.0) {
                return Err(Error::Invalid("concatenation expects slips on [0, 1]".into()));
            }
        }
        let (_, end1, _) = s1.traces()?;
        let (start2, _, _) = s2.traces()?;
        let gap = end1.distance_mass(&start2)?;
        if gap > 1e-9 {
            return Err(Error::TraceMismatch(format!("end trace differs from start trace by mass {gap:e}")));
        }
        let a = s1.rescale(&TimeMap::affine(0.0, 1.0, 0.0, 0.5)?)?;
        let b = s2.rescale(&TimeMap::affine(0.0, 1.0, 0.5, 1.0)?)?;
        let d4 = s1.chain.domain().with_time_window(0.0, 1.0);
        let sum = a.chain.clone().with_domain(d4)?.add(&b.chain.clone().with_domain(d4)?)?;
        Self::new(sum, (0.0, 1.0))
    }

    /// Time translation and scaling onto `[a, b]`.
    pub fn affine_to(&self, a: f64, b: f64) -> Result<Self> {
        self.rescale(&TimeMap::affine(self.window.0, self.window.1, a, b)?)
    }

    /// Sum of currents over the same window; domains are merged.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.window != other.window {
            return Err(Error::Invalid("summands must share the time window".into()));
        }
        let d = self.chain.domain().union(other.chain.domain());
        let c = self.chain.clone().with_domain(d)?.add(&other.chain.clone().with_domain(d)?)?;
        Self::new(c, self.window)
    }

    pub fn neg(&self) -> Self {
        Self { chain: self.chain.neg(), window: self.window, geometry: self.geometry.clone() }
    }
}

/// `{(s, x) : x ∈ T, lo(x) ≤ s ≤ hi(x)}` over a 1-current, triangulated by
/// the staircase rule; its boundary is `graph_hi(T) − graph_lo(T) − …∂T`.
pub fn variable_cylinder(
    t: &SimplicialCurrent,
    target: BoxDomain,
    lo: &dyn Fn(&Point) -> f64,
    hi: &dyn Fn(&Point) -> f64,
) -> Result<SimplicialCurrent> {
    let mut out = SimplicialCurrent::new(target, 2)?;
    for term in t.terms() {
        let (a, b) = (term.simplex.vertices[0], term.simplex.vertices[1]);
        let lift = |p: &Point, s: f64| [s, p[0], p[1], p[2]];
        out.push(vec![lift(&a, lo(&a)), lift(&a, hi(&a)), lift(&b, hi(&b))], term.mult)?;
        out.push(vec![lift(&a, lo(&a)), lift(&b, lo(&b)), lift(&b, hi(&b))], -term.mult)?;
    }
    Ok(out.canonical())
}

/// Witness slip from `T0` to `T1` built from a minimal filling `Q` of
/// `T1 − T0` on the complex. Returns `(Var(S), S)`, an upper bound for the
/// Lipschitz deformation distance.
pub fn deformation_distance(
    t0: &SimplicialCurrent,
    t1: &SimplicialCurrent,
    complex: &SimplicialComplex,
) -> Result<(f64, SpaceTimeCurrent)> {
    for t in [t0, t1] {
        if !t.is_cycle(1e-9) {
            return Err(Error::OpenBoundary("deformation distance needs closed 1-currents".into()));
        }
    }
    let d3 = *t0.domain();
    let d4 = d3.with_time(0.0, 1.0)?;
    if t0.equals(t1, 1e-12) {
        return Ok((0.0, SpaceTimeCurrent::neutral(t0, (0.0, 1.0))?));
    }
    let diff = t1.sub(t0)?;
    let q = min_filling(&diff, complex)?.filling;
    // generic affine height φ with values in [¼, ¾] over the complex
    let dir = [0.5773502691896258, 0.4472135954999579, 0.6830127018922193];
    let ell = |p: &Point| dir[0] * p[0] + dir[1] * p[1] + dir[2] * p[2];
    let vals: Vec<f64> = complex.vertices().iter().chain(
        t0.terms().iter().chain(t1.terms()).flat_map(|t| t.simplex.vertices.iter()),
    )
    .map(ell)
    .collect();
    let (mn, mx) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (mx - mn).max(1e-300);
    let phi = move |p: &Point| 0.25 + 0.5 * (ell(p) - mn) / span;
    let graph = q.pushforward(d4, &|p| [phi(p), p[0], p[1], p[2]])?;
    let v0 = variable_cylinder(&t0.normalized(), d4, &|_| 0.0, &phi)?;
    let v1 = variable_cylinder(&t1.normalized(), d4, &phi, &|_| 1.0)?;
    let s = SpaceTimeCurrent::new(v0.add(&graph)?.add(&v1)?, (0.0, 1.0))?;
    Ok((s.variation((0.0, 1.0)), s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::p3;

    fn square(c: f64, z: f64, r: f64) -> SimplicialCurrent {
        let d = BoxDomain::cube3(-4.0, 4.0);
        let pts = [p3(c - r, c - r, z), p3(c + r, c - r, z), p3(c + r, c + r, z), p3(c - r, c + r, z)];
        SimplicialCurrent::polyline(d, &pts, 1.0, true).unwrap()
    }

    #[test]
    fn neutral_slice_and_variation() {
        let l = square(0.0, 0.0, 1.0);
        let s = SpaceTimeCurrent::neutral(&l, (0.0, 1.0)).unwrap();
        let sl = s.slice_at_time(0.5).unwrap();
        assert!(sl.valid);
        assert!(sl.current.equals(&l, 1e-12));
        assert_eq!(s.variation((0.0, 1.0)), 0.0);
        let (t0, t1, rest) = s.traces().unwrap();
        assert!(t0.equals(&l, 1e-12) && t1.equals(&l, 1e-12) && rest == 0.0);
    }

    #[test]
    fn time_map_validation() {
        assert!(matches!(TimeMap::new(vec![(0.0, 0.0), (0.5, 0.5), (1.0, 0.5)]), Err(Error::NonInjectiveTimeMap)));
        let a = TimeMap::new(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        assert!((a.eval(0.25) - 0.4).abs() < 1e-15);
        assert!((a.eval(0.75) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn sheet_is_reported_invalid() {
        let l = square(0.0, 0.0, 1.0);
        let d4 = l.domain().with_time(0.0, 1.0).unwrap();
        let mut c = SimplicialCurrent::new(d4, 2).unwrap();
        c.push(vec![[0.5, 0., 0., 0.], [0.5, 1., 0., 0.], [0.5, 0., 1., 0.]], 1.0).unwrap();
        let s = SpaceTimeCurrent::new(c, (0.0, 1.0)).unwrap();
        assert!(!s.slice_at_time(0.5).unwrap().valid);
        assert!(s.slice_at_time(0.25).unwrap().valid);
    }
}
