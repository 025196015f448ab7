//! The acceptance suite: thirteen criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test --release -p slipcurrent-core --test acceptance -- --nocapture`
//! to see the report.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slipcurrent_core::algebra::{cross, hodge_star, interior, star_bivector3, wedge, MultiVector};
use slipcurrent_core::chain::SimplicialCurrent;
use slipcurrent_core::complex::SimplicialComplex;
use slipcurrent_core::dislocation::{consistency_residual, plastic_flow, BurgersSystem, DislocationSystem, PlasticDistortion};
use slipcurrent_core::elastic::{DomainGrid, ElasticModel, Elasticity, Holding, Loading, Ramp};
use slipcurrent_core::energetic::loops::homotopy_family;
use slipcurrent_core::energetic::{dissipation, epsilon_study, DissipationPotential, Loop, LoopMotion, Trace};
use slipcurrent_core::flat::flat_norm;
use slipcurrent_core::geometry::{BoxDomain, Point};
use slipcurrent_core::grid::{CellField, Grid, Mat3};
use slipcurrent_core::scenario::ScenarioConfig;
use slipcurrent_core::spacetime::{slice_chain, SpaceTimeCurrent, TimeMap};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn p(x: f64, y: f64, z: f64) -> Point {
    [x, y, z, 0.0]
}

// ---------------------------------------------------------------- 1

fn lattice_point(r: &mut ChaCha8Rng, dim: usize) -> Point {
    let mut q = [0.0; 4];
    for c in q.iter_mut().take(dim) {
        *c = r.gen_range(0..4) as f64;
    }
    q
}

fn random_chain(r: &mut ChaCha8Rng, dim: usize, grade: usize) -> SimplicialCurrent {
    let dom = BoxDomain::new(dim, [0.0; 4], [3.0; 4]).unwrap();
    let mut c = SimplicialCurrent::new(dom, grade).unwrap();
    let terms = r.gen_range(1..8);
    let mut pushed = 0;
    while pushed < terms {
        let v: Vec<Point> = (0..=grade).map(|_| lattice_point(r, dim)).collect();
        let m = r.gen_range(1..4) as f64 * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        if c.push(v, m).is_ok() {
            pushed += 1;
        }
    }
    c
}

fn c1_exactness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut bad = 0;
    let mut faces = 0;
    for i in 0..1000 {
        let (dim, grade) = [(3, 2), (3, 3), (4, 2), (4, 3)][i % 4];
        let t = random_chain(&mut r, dim, grade);
        let b = t.boundary().unwrap();
        faces += b.len();
        if !b.boundary().unwrap().canonical().is_empty() {
            bad += 1;
        }
    }
    let el = start.elapsed();
    check(
        bad == 0 && el < Duration::from_secs(10),
        format!("1000 chains, {faces} boundary faces, {bad} nonzero ∂∂, {:.2} s", el.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 2

fn rand_vec(r: &mut ChaCha8Rng) -> [f64; 3] {
    [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]
}

fn rand_mv(r: &mut ChaCha8Rng, dim: usize, grade: usize) -> MultiVector {
    let n = MultiVector::zero(dim, grade).unwrap().coeffs().len();
    MultiVector::from_coeffs(dim, grade, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn c2_algebra() -> Outcome {
    let mut r = rng(2);
    let mut err: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b, c) = (rand_vec(&mut r), rand_vec(&mut r), rand_vec(&mut r));
        let ab = wedge(&MultiVector::vector(&a).unwrap(), &MultiVector::vector(&b).unwrap()).unwrap();
        let s = star_bivector3(&ab);
        let x = cross(a, b);
        err = err.max((0..3).map(|i| (s[i] - x[i]).abs()).fold(0.0, f64::max));

        for g in 0..=3 {
            let m = rand_mv(&mut r, 3, g);
            let back = hodge_star(&hodge_star(&m));
            err = err.max(back.sub(&m).unwrap().coeffs().iter().fold(0.0, |e, v| e.max(v.abs())));
        }

        // ⟨η ⌐ α, β⟩ = ⟨η, α ∧ β⟩ for η of grade 2 and 3
        let alpha = MultiVector::vector(&c).unwrap();
        for g in 2..=3 {
            let eta = rand_mv(&mut r, 3, g);
            let beta = rand_mv(&mut r, 3, g - 1);
            let lhs = interior(&eta, &alpha).unwrap().inner(&beta).unwrap();
            let rhs = eta.inner(&wedge(&alpha, &beta).unwrap()).unwrap();
            err = err.max((lhs - rhs).abs());
        }
    }
    check(err <= 1e-13, format!("max abs error {err:.2e} over 1000 triples"))
}

// ---------------------------------------------------------------- 3-5

/// Open sloped surface: the image of a triangulated parameter square under a
/// random smooth map into space-time.
fn sloped_surface(r: &mut ChaCha8Rng, n: usize) -> SpaceTimeCurrent {
    let c: Vec<f64> = (0..12).map(|_| r.gen_range(-0.4..0.4)).collect();
    let f = |s: f64, u: f64| -> Point {
        [
            0.5 + 0.3 * s + 0.2 * u + c[0] * (3.0 * s).sin() * u + c[1] * s * s,
            s + c[2] * u + c[3] * (2.0 * u).cos(),
            u + c[4] * s * u + c[5] * s,
            c[6] * s + c[7] * u * u + c[8] * (s + u).sin(),
        ]
    };
    let dom = BoxDomain::new(4, [-3.0; 4], [3.0; 4]).unwrap();
    let mut ch = SimplicialCurrent::new(dom, 2).unwrap();
    let h = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..n {
            let (s0, s1, u0, u1) = (i as f64 * h, (i + 1) as f64 * h, j as f64 * h, (j + 1) as f64 * h);
            ch.push(vec![f(s0, u0), f(s1, u0), f(s1, u1)], 1.0).unwrap();
            ch.push(vec![f(s0, u0), f(s1, u1), f(s0, u1)], 1.0).unwrap();
        }
    }
    let times: Vec<f64> = ch.terms().iter().flat_map(|t| t.simplex.vertices.iter().map(|v| v[0])).collect();
    let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    SpaceTimeCurrent::new(ch, (lo, hi)).unwrap()
}

fn c3_pythagoras() -> Outcome {
    let mut r = rng(3);
    let mut err: f64 = 0.0;
    let mut count = 0;
    for _ in 0..50 {
        let s = sloped_surface(&mut r, 4);
        for g in s.geometry() {
            err = err.max((g.grad_t * g.grad_t + g.spatial * g.spatial - 1.0).abs());
            count += 1;
        }
    }
    check(err <= 1e-12, format!("{count} simplices, max |∇t|² + |p(S)|² − 1 = {err:.2e}"))
}

fn c4_coarea() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let s = sloped_surface(&mut r, 5);
        let w = s.window();
        let a = s.coarea_slices(w);
        let b = s.coarea_gradient(w);
        worst = worst.max((a - b).abs() / b.abs().max(1e-300));
    }
    check(worst <= 1e-8, format!("30 surfaces, worst relative error {worst:.2e}"))
}

fn c5_slice_boundary() -> Outcome {
    let mut r = rng(5);
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..20 {
        let s = sloped_surface(&mut r, 4);
        let bd = s.boundary().unwrap();
        let (lo, hi) = s.window();
        for _ in 0..20 {
            let t = s.generic_time(r.gen_range(lo..hi));
            let lhs = slice_chain(s.chain(), t).unwrap().boundary().unwrap().canonical();
            let rhs = slice_chain(&bd, t).unwrap().neg().canonical();
            let dom = lhs.domain();
            let same = lhs.len() == rhs.len()
                && lhs.terms().iter().zip(rhs.terms()).all(|(x, y)| {
                    x.mult == y.mult && dom.key(&x.simplex.vertices[0]) == dom.key(&y.simplex.vertices[0])
                });
            if !same {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    check(mismatches == 0, format!("{checked} generic slices, {mismatches} mismatches"))
}

// ---------------------------------------------------------------- 6

fn square_loop(c: [f64; 3], half: f64, mult: f64) -> Loop {
    let v = vec![
        [c[0] - half, c[1] - half, c[2]],
        [c[0] + half, c[1] - half, c[2]],
        [c[0] + half, c[1] + half, c[2]],
        [c[0] - half, c[1] + half, c[2]],
    ];
    Loop { burgers: 0, mult, vertices: v }
}

fn c6_rescaling() -> Outcome {
    let dom = BoxDomain::cube3(0.0, 1.0);
    let l0 = square_loop([0.5, 0.5, 0.5], 0.1, 1.0);
    let l1 = square_loop([0.5, 0.5, 0.5], 0.2, 1.0);
    // glide then a tilted climb-and-glide
    let mut l2 = l1.clone();
    for (i, v) in l2.vertices.iter_mut().enumerate() {
        v[0] += 0.05;
        v[2] += 0.02 * (i as f64);
    }
    let s1 = homotopy_family(&[vec![LoopMotion::new(l0, l1.clone()).unwrap()]], 1, dom, (0.0, 1.0), None).unwrap();
    let s2 = homotopy_family(&[vec![LoopMotion::new(l1, l2).unwrap()]], 1, dom, (0.0, 1.0), None).unwrap();
    let cat = SpaceTimeCurrent::concatenate(s1.slip(0), s2.slip(0)).unwrap();
    let (v1, v2, v12) = (s1.slip(0).variation((0.0, 1.0)), s2.slip(0).variation((0.0, 1.0)), cat.variation((0.0, 1.0)));
    let var_err = (v12 - v1 - v2).abs();

    let pot = [DissipationPotential::new(2.0, 3.0, Some([0.0, 0.0, 1.0])).unwrap()];
    let d0 = dissipation(&s2, &pot, (0.0, 1.0)).unwrap();
    let mut r = rng(6);
    let mut diss_err: f64 = 0.0;
    for _ in 0..5 {
        let mut knots = vec![(0.0, 0.0)];
        let mut inner: Vec<f64> = (0..4).map(|_| r.gen_range(0.05..0.95)).collect();
        inner.sort_by(f64::total_cmp);
        let mut images: Vec<f64> = (0..4).map(|_| r.gen_range(0.05..2.95)).collect();
        images.sort_by(f64::total_cmp);
        knots.extend(inner.into_iter().zip(images));
        knots.push((1.0, 3.0));
        let a = TimeMap::new(knots).unwrap();
        let d = dissipation(&s2.rescale(&a).unwrap(), &pot, (0.0, 3.0)).unwrap();
        diss_err = diss_err.max((d - d0).abs());
    }
    check(
        var_err <= 1e-12 && diss_err <= 1e-12,
        format!("Var additivity error {var_err:.2e} (Var = {v12:.6}); Diss {d0:.6}, reparametrization error {diss_err:.2e}"),
    )
}

// ---------------------------------------------------------------- 7

/// A planar complex of at most 12 consistently oriented triangles with a
/// random integer 1-chain on its edges.
struct FlatCase {
    pts: Vec<Point>,
    tris: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    t: Vec<i64>,
}

fn flat_case(r: &mut ChaCha8Rng) -> FlatCase {
    let (nx, ny) = (4usize, 3usize);
    let mut pts = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            pts.push(p(i as f64 + r.gen_range(-0.2..0.2), j as f64 + r.gen_range(-0.2..0.2), 0.0));
        }
    }
    let id = |i: usize, j: usize| i * (ny + 1) + j;
    let mut all = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if r.gen_bool(0.5) {
                all.push([a, b, c]);
                all.push([a, c, d]);
            } else {
                all.push([a, b, d]);
                all.push([b, c, d]);
            }
        }
    }
    let n = r.gen_range(3..=12);
    let mut tris = Vec::new();
    while tris.len() < n {
        let k = r.gen_range(0..all.len());
        tris.push(all.swap_remove(k));
    }
    let mut edges: Vec<[usize; 2]> = Vec::new();
    for t in &tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let e = [a.min(b), a.max(b)];
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    // boundary of a random ±1 subset plus a few single edges
    let mut t = vec![0i64; edges.len()];
    for tri in &tris {
        let c = r.gen_range(-1..=1);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let e = edges.iter().position(|e| *e == [a.min(b), a.max(b)]).unwrap();
            t[e] += if a < b { c } else { -c };
        }
    }
    for _ in 0..r.gen_range(1..3) {
        let e = r.gen_range(0..edges.len());
        t[e] += if r.gen_bool(0.5) { 1 } else { -1 };
    }
    FlatCase { pts, tris, edges, t }
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Integer enumeration of `Q` with pruning. Exact: the boundary matrix of a
/// planar oriented 2-complex is totally unimodular, so an optimal `Q` is
/// integral with `|q_j| ≤ ‖T‖₁`.
fn flat_oracle(c: &FlatCase) -> f64 {
    let n = c.tris.len();
    let area: Vec<f64> = c
        .tris
        .iter()
        .map(|t| {
            let (a, b, d) = (&c.pts[t[0]], &c.pts[t[1]], &c.pts[t[2]]);
            0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0])).abs()
        })
        .collect();
    let len: Vec<f64> = c.edges.iter().map(|e| dist(&c.pts[e[0]], &c.pts[e[1]])).collect();
    // incidence: triangle → (edge, sign)
    let inc: Vec<Vec<(usize, i64)>> = c
        .tris
        .iter()
        .map(|tri| {
            (0..3)
                .map(|k| {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    let e = c.edges.iter().position(|e| *e == [a.min(b), a.max(b)]).unwrap();
                    (e, if a < b { 1 } else { -1 })
                })
                .collect()
        })
        .collect();
    // an edge is settled once its last incident triangle is assigned
    let mut last = vec![0usize; c.edges.len()];
    for (j, es) in inc.iter().enumerate() {
        for &(e, _) in es {
            last[e] = last[e].max(j);
        }
    }
    let settles: Vec<Vec<usize>> = (0..n).map(|j| (0..c.edges.len()).filter(|&e| last[e] == j).collect()).collect();
    let k = c.t.iter().map(|x| x.abs()).sum::<i64>();

    struct Search<'a> {
        inc: &'a [Vec<(usize, i64)>],
        settles: &'a [Vec<usize>],
        area: &'a [f64],
        len: &'a [f64],
        k: i64,
        best: f64,
        resid: Vec<i64>,
    }
    impl Search<'_> {
        fn go(&mut self, j: usize, cost: f64) {
            if cost >= self.best - 1e-12 {
                return;
            }
            if j == self.inc.len() {
                self.best = cost;
                return;
            }
            let mut order: Vec<i64> = vec![0];
            for v in 1..=self.k {
                order.push(v);
                order.push(-v);
            }
            for q in order {
                for &(e, s) in &self.inc[j] {
                    self.resid[e] -= s * q;
                }
                let mut c = cost + self.area[j] * q.abs() as f64;
                for &e in &self.settles[j] {
                    c += self.len[e] * self.resid[e].abs() as f64;
                }
                self.go(j + 1, c);
                for &(e, s) in &self.inc[j] {
                    self.resid[e] += s * q;
                }
            }
        }
    }
    let start: f64 = c.t.iter().zip(&len).map(|(t, l)| t.abs() as f64 * l).sum();
    let mut s = Search { inc: &inc, settles: &settles, area: &area, len: &len, k, best: start + 1e-9, resid: c.t.to_vec() };
    s.go(0, 0.0);
    s.best.min(start)
}

fn c7_flat_norm() -> Outcome {
    let start = Instant::now();
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let case = flat_case(&mut r);
        let dom = BoxDomain::cube3(-1.0, 6.0);
        let mut cx = SimplicialComplex::new(dom, 2).unwrap();
        for t in &case.tris {
            cx.add_simplex(&[case.pts[t[0]], case.pts[t[1]], case.pts[t[2]]]).unwrap();
        }
        let mut chain = SimplicialCurrent::new(dom, 1).unwrap();
        for (e, m) in case.edges.iter().zip(&case.t) {
            if *m != 0 {
                chain.push(vec![case.pts[e[0]], case.pts[e[1]]], *m as f64).unwrap();
            }
        }
        let lp = flat_norm(&chain, &cx).unwrap().value;
        let oracle = flat_oracle(&case);
        worst = worst.max((lp - oracle).abs() / oracle.max(1.0));
    }
    let el = start.elapsed();
    check(
        worst <= 1e-9 && el < Duration::from_secs(60),
        format!("50 complexes, worst LP/oracle discrepancy {worst:.2e}, {:.2} s", el.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 8

fn c8_plastic_flow() -> Outcome {
    let dom = BoxDomain::cube3(0.0, 1.0);
    let beta = 0.7;
    let burgers = BurgersSystem::new(vec![[beta, 0.0, 0.0]]).unwrap();
    let (h0, h1) = (0.15, 0.3);
    let from = square_loop([0.5, 0.5, 0.5], h0, 1.0);
    let to = square_loop([0.5, 0.5, 0.5], h1, 1.0);
    let area = (2.0 * h1).powi(2) - (2.0 * h0).powi(2);
    let window = (0.0, 1.0);
    let slip = homotopy_family(&[vec![LoopMotion::new(from.clone(), to).unwrap()]], 1, dom, window, None).unwrap();
    let t0 = slipcurrent_core::energetic::loops_to_system(&[from], &burgers, dom, None).unwrap();
    let p0 = PlasticDistortion::from_dislocations(&t0).unwrap();
    let p1 = plastic_flow(&slip, &burgers, &p0, 1.0).unwrap();
    let added = p1.singular_mass() - p0.singular_mass();
    let mass_err = (added - beta * area).abs();

    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let t = (i as f64 + 0.5) / 10.0;
        let pt = plastic_flow(&slip, &burgers, &p0, t).unwrap();
        let line = slip.slip(0).slice_at_time(t).unwrap().current;
        let sys = DislocationSystem::new(burgers.clone(), vec![line]).unwrap();
        worst = worst.max(consistency_residual(&pt, &sys, None).unwrap());
    }
    check(
        mass_err <= 1e-12 && worst <= 1e-8,
        format!("added mass {added:.12} vs |b|A = {:.12}; worst curl residual {worst:.2e}", beta * area),
    )
}

// ---------------------------------------------------------------- 9-10

fn model(n: usize, loading: impl Fn(&Grid) -> Loading) -> ElasticModel {
    let grid = Grid::cube(0.0, 1.0, n);
    let hold = Holding { lo: [0.3; 3], hi: [0.7; 3], h0: [0.0, 0.05, 0.0] };
    let d = DomainGrid::new(grid, hold, Elasticity::isotropic(1.0, 1.0).unwrap()).unwrap();
    ElasticModel::new(d, loading(&grid), 3.0).unwrap()
}

/// Traction-free equilibrated stress from the Airy function `(x(1−x))³ (y(1−y))³`.
fn airy_stress(x: [f64; 3]) -> Mat3 {
    let f = |s: f64| (s * (1.0 - s)).powi(3);
    let df = |s: f64| 3.0 * (s * (1.0 - s)).powi(2) * (1.0 - 2.0 * s);
    let ddf = |s: f64| 6.0 * s * (1.0 - s) * (1.0 - 2.0 * s).powi(2) - 6.0 * (s * (1.0 - s)).powi(2);
    let sxy = -df(x[0]) * df(x[1]);
    [f(x[0]) * ddf(x[1]), sxy, 0.0, sxy, ddf(x[0]) * f(x[1]), 0.0, 0.0, 0.0, 0.0]
}

fn grad_g(x: [f64; 3]) -> Mat3 {
    [x[0].cos() * x[1], x[0].sin(), 0.0, x[2], 0.0, x[0], 0.0, -x[1].sin(), 0.0]
}

fn manufactured(n: usize) -> (f64, Duration) {
    let m = model(n, Loading::none);
    let e = m.domain.elasticity;
    let beta_star = |x: [f64; 3]| e.solve_sym(&airy_stress(x)).unwrap();
    let p = CellField::from_fn(*m.grid(), |x| {
        let (b, g) = (beta_star(x), grad_g(x));
        std::array::from_fn(|i| g[i] - b[i])
    });
    let start = Instant::now();
    let sol = m.solve_beta_cells(&p).unwrap();
    let el = start.elapsed();
    let exact = CellField::from_fn(*m.grid(), beta_star);
    (m.beta_cells(&sol).sub(&exact).l2_norm() / exact.l2_norm(), el)
}

fn c9_beta_solver() -> Outcome {
    // separable nodal field: its Q1 gradient is constant on every cell
    let m = model(12, Loading::none);
    let h = m.grid().h;
    let f = [|s: f64| s * s * s, |s: f64| (2.0 * s).sin(), |s: f64| s * s];
    let cell = |x: [f64; 3], a: usize| {
        let i = (x[a] / h[a] - 0.5).round();
        (0..3).map(|c| (f[(a + c) % 3]((i + 1.0) * h[a]) - f[(a + c) % 3](i * h[a])) / h[a]).collect::<Vec<_>>()
    };
    let p = CellField::from_fn(*m.grid(), |x| {
        let (dx, dy, dz) = (cell(x, 0), cell(x, 1), cell(x, 2));
        // u_c = Σ_a f_{a+c}(x_a), so ∂_a u_c = dX_a[c]
        std::array::from_fn(|k| {
            let (c, a) = (k / 3, k % 3);
            [&dx, &dy, &dz][a][c]
        })
    });
    let sol = m.solve_beta_cells(&p).unwrap();
    let curl_free = m.beta_cells(&sol).l2_norm();

    let loaded = model(16, |g| Loading::from_fn(g, Ramp::linear(1.0), |x| [x[1] - 0.5, 0.3 * (x[2] - 0.5), 0.1]));
    let pq = CellField::from_fn(*loaded.grid(), |x| [0.0, x[2], 0.0, x[0] * x[1], 0.0, 0.0, 0.0, 0.2, x[1]]);
    let bq = loaded.solve_beta_cells(&pq).unwrap();
    let u = loaded.minimize_u(0.6, &bq, None).unwrap().u;
    let s = loaded.split_pairings(&u, &bq);
    let ortho = s[0].abs() / (s[2].sqrt() * s[3].sqrt()).max(1e-300);

    let (e16, _) = manufactured(16);
    let (e32, _) = manufactured(32);
    let (e64, t64) = manufactured(64);
    let (o1, o2) = ((e16 / e32).log2(), (e32 / e64).log2());
    check(
        curl_free <= 1e-10 && o1 >= 0.9 && o2 >= 0.9 && ortho <= 1e-6 && t64 < Duration::from_secs(120),
        format!(
            "curl-free ‖β‖ = {curl_free:.2e}; errors {e16:.3e}/{e32:.3e}/{e64:.3e}, orders {o1:.2}, {o2:.2}; \
             |∫free:Eβ|/norms = {ortho:.2e}; 64³ solve {:.1} s",
            t64.as_secs_f64()
        ),
    )
}

fn c10_minimizer() -> Outcome {
    let m0 = model(8, Loading::none);
    let b0 = m0.solve_beta_cells(&CellField::zeros(*m0.grid())).unwrap();
    let u0 = m0.minimize_u(0.0, &b0, None).unwrap().u;
    let h0 = [0.0, 0.05, 0.0];
    let dev = u0.chunks(3).flat_map(|v| (0..3).map(move |i| (v[i] - h0[i]).abs())).fold(0.0, f64::max);

    let m = model(8, |g| Loading::from_fn(g, Ramp::linear(1.0), |x| [x[1] - 0.5, 0.2 * (x[2] - 0.5), 0.1]));
    let p = CellField::from_fn(*m.grid(), |x| [0.0, x[2], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let b = m.solve_beta_cells(&p).unwrap();
    let u1 = m.minimize_u(0.5, &b, None).unwrap().u;
    let mut r = rng(10);
    let guess: Vec<f64> = (0..m.num_dofs()).map(|_| r.gen_range(-1.0..1.0)).collect();
    let u2 = m.minimize_u(0.5, &b, Some(&guess)).unwrap().u;
    let start_dep = u1.iter().zip(&u2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut el: f64 = 0.0;
    for _ in 0..20 {
        let mut psi: Vec<f64> = (0..m.num_dofs()).map(|_| r.gen_range(-1.0..1.0)).collect();
        m.project_admissible(&mut psi);
        el = el.max(m.el_residual(0.5, &u1, &b, &psi).unwrap().abs());
    }
    check(
        dev <= 1e-10 && start_dep <= 1e-7 && el <= 1e-7,
        format!("|u − h₀| = {dev:.2e}; start dependence {start_dep:.2e}; EL residual {el:.2e} over 20 fields"),
    )
}

// ---------------------------------------------------------------- 11-13

fn reference_trace() -> &'static (Trace, Duration) {
    static CELL: OnceLock<(Trace, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let (scheme, init) = ScenarioConfig::reference_shear().build(None).unwrap();
        let trace = scheme.run_evolution(init).unwrap();
        (trace, start.elapsed())
    })
}

fn c11_scheme() -> Outcome {
    let (trace, el) = reference_trace();
    let worst = trace
        .records
        .iter()
        .skip(1)
        .map(|r| r.energy.total + r.diss_step - r.pre_energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let e = &trace.estimates;
    let moved = trace.records.iter().filter(|r| !r.moves.is_empty()).count();
    check(
        worst <= 1e-9 && e.lower_energy_ok && e.gronwall_constant.is_finite() && *el < Duration::from_secs(300),
        format!(
            "{} steps ({moved} with slip), worst e_k + d_k − E(t_k, z_(k−1)) = {worst:.3e}; lower estimate {:.4} ≥ {:.4}; \
             Gronwall C = {:.4} (α shift {:.2}); {:.1} s",
            trace.records.len() - 1,
            e.lower_energy_lhs,
            e.lower_energy_rhs,
            e.gronwall_constant,
            e.alpha_shift,
            el.as_secs_f64()
        ),
    )
}

fn c12_stability() -> Outcome {
    let (trace, _) = reference_trace();
    let gaps: Vec<Option<f64>> = trace.records.iter().map(|r| r.stability_gap).collect();
    let missing = gaps.iter().filter(|g| g.is_none()).count();
    let worst = gaps.iter().flatten().cloned().fold(0.0, f64::max);
    let candidates: usize = trace.records.iter().map(|r| r.candidates).sum();
    check(
        missing == 0 && worst <= 1e-10,
        format!("{} output steps certified at depth 2, {candidates} candidates scored, worst gap {worst:.2e}", gaps.len()),
    )
}

fn c13_epsilon() -> Outcome {
    let eps = [1.0, 0.5, 0.25, 0.125];
    let rep = epsilon_study(&ScenarioConfig::half_multiplicity(), None, &eps).unwrap();
    let mut reference = ScenarioConfig::reference_shear();
    reference.solver.depth = 1;
    reference.solver.certify_depth = 0;
    let flat = epsilon_study(&reference, None, &eps).unwrap();
    let per_eps: Vec<String> =
        rep.runs.iter().map(|r| format!("ε={}: {:.4}/{:.4}/{:.4}/{:.4}", r.epsilon, r.bounds.sup_p_mass, r.bounds.sup_slice_mass, r.bounds.var_p, r.bounds.var_s)).collect();
    check(
        rep.uniform(0.2),
        format!(
            "max spread {:.2e} < 0.2; C = {:.4}; [{}]; flat sup to finest: half-multiplicity {:?}, reference {:?} (monotone: {})",
            rep.max_spread,
            rep.constant,
            per_eps.join(", "),
            rep.flat_sup.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            flat.flat_sup.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            flat.flat_monotone
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("chain-complex exactness", c1_exactness),
        ("exterior-algebra identities", c2_algebra),
        ("Pythagoras identity", c3_pythagoras),
        ("coarea mass decomposition", c4_coarea),
        ("slice/boundary commutation", c5_slice_boundary),
        ("concatenation and rescaling", c6_rescaling),
        ("flat norm against enumeration", c7_flat_norm),
        ("plastic-flow ground truth", c8_plastic_flow),
        ("β-solver", c9_beta_solver),
        ("minimizer contract", c10_minimizer),
        ("incremental scheme estimates", c11_scheme),
        ("catalog stability certificate", c12_stability),
        ("ε-study uniformity", c13_epsilon),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match &out {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {:>2}. {name}: {detail} ({:.1} s)", i + 1, start.elapsed().as_secs_f64());
        if out.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
