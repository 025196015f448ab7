use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slipcurrent_core::chain::{cylinder, SimplicialCurrent};
use slipcurrent_core::complex::SimplicialComplex;
use slipcurrent_core::dislocation::{consistency_residual, plastic_flow, BurgersSystem, PlasticDistortion, SlipFamily};
use slipcurrent_core::energetic::loops::homotopy_family;
use slipcurrent_core::energetic::{dissipation, loops_to_system, round_loops, DissipationPotential, Loop, LoopMotion};
use slipcurrent_core::flat::flat_norm;
use slipcurrent_core::geometry::{BoxDomain, Point};
use slipcurrent_core::spacetime::{SpaceTimeCurrent, TimeMap};

type Raw = Vec<(Vec<[i32; 3]>, i32)>;

fn raw_chain(grade: usize) -> impl Strategy<Value = Raw> {
    let simplex = (prop::collection::vec(prop::array::uniform3(0i32..4), grade + 1), -3i32..=3);
    prop::collection::vec(simplex, 1..8)
}

fn dom3() -> BoxDomain {
    BoxDomain::cube3(-20.0, 20.0)
}

fn build(raw: &Raw, grade: usize, shift: f64, eps: Option<f64>) -> SimplicialCurrent {
    let mut c = SimplicialCurrent::new(dom3(), grade).unwrap();
    if let Some(e) = eps {
        c = c.with_quantum(e).unwrap();
    }
    let q = eps.unwrap_or(1.0);
    for (vs, m) in raw {
        let pts: Vec<Point> = vs.iter().map(|v| [v[0] as f64 + shift, v[1] as f64, v[2] as f64, 0.0]).collect();
        c.push(pts, *m as f64 * q).unwrap();
    }
    c
}

fn affine(p: &Point) -> Point {
    [2.0 * p[0] + p[1] - 1.0, p[1] - p[2] + 0.5, 3.0 * p[2] + p[0], 0.0]
}

fn ulps_equal(a: &SimplicialCurrent, b: &SimplicialCurrent) -> bool {
    a.equals(b, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_of_boundary_vanishes(raw in raw_chain(3), grade in 2usize..=3) {
        let raw: Raw = raw.into_iter().map(|(mut v, m)| { v.truncate(grade + 1); (v, m) }).collect();
        let c = build(&raw, grade, 0.0, None);
        prop_assert!(c.boundary().unwrap().boundary().unwrap().canonical().is_empty());
    }

    #[test]
    fn mass_is_additive_and_homogeneous(a in raw_chain(2), b in raw_chain(2), s in -4.0f64..4.0) {
        let ca = build(&a, 2, 0.0, None);
        let cb = build(&b, 2, 10.0, None);
        let sum = ca.add(&cb).unwrap();
        prop_assert!((sum.mass() - ca.mass() - cb.mass()).abs() <= 1e-12 * sum.mass().max(1.0));
        prop_assert!((ca.scaled(s).mass() - s.abs() * ca.mass()).abs() <= 1e-12 * ca.mass().max(1.0));
    }

    #[test]
    fn pushforward_commutes_with_boundary(raw in raw_chain(2)) {
        let c = build(&raw, 2, 0.0, None);
        let lhs = c.pushforward(dom3(), &affine).unwrap().boundary().unwrap();
        let rhs = c.boundary().unwrap().pushforward(dom3(), &affine).unwrap();
        prop_assert!(ulps_equal(&lhs, &rhs));
    }

    #[test]
    fn integrality_survives_operations(raw in raw_chain(1), k in 1u32..4) {
        let eps = 1.0 / f64::from(1u32 << k);
        let c = build(&raw, 1, 0.0, Some(eps));
        let d4 = BoxDomain::new(4, [-1.0, -20.0, -20.0, -20.0], [2.0, 20.0, 20.0, 20.0]).unwrap();
        let outs = [
            c.boundary().unwrap(),
            c.pushforward(dom3(), &affine).unwrap(),
            cylinder(0.0, 1.0, &c, d4).unwrap(),
        ];
        for o in &outs {
            prop_assert_eq!(o.quantum(), Some(eps));
            prop_assert!(o.terms().iter().all(|t| ((t.mult / eps).round() * eps - t.mult).abs() < 1e-12));
        }
    }

    #[test]
    fn flat_norm_is_bounded_by_mass_and_separates(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let dom = BoxDomain::cube3(0.0, 1.0);
        let cx = SimplicialComplex::kuhn_skeleton(dom, [2, 2, 1]).unwrap();
        let edges: Vec<Vec<Point>> = (0..cx.num_faces(1)).map(|i| cx.face_points(1, i)).collect();
        let mut t = SimplicialCurrent::new(dom, 1).unwrap();
        let mut t2 = SimplicialCurrent::new(dom, 1).unwrap();
        for _ in 0..r.gen_range(1..6) {
            let e = &edges[r.gen_range(0..edges.len())];
            let m = r.gen_range(-2i32..=2) as f64;
            t.push(e.clone(), m).unwrap();
            t2.push(e.clone(), m).unwrap();
        }
        let f = flat_norm(&t, &cx).unwrap().value;
        prop_assert!(f <= t.mass() + 1e-12);
        prop_assert!(flat_norm(&t.sub(&t2).unwrap(), &cx).unwrap().value == 0.0);
        let e = &edges[r.gen_range(0..edges.len())];
        t2.push(e.clone(), 1.0).unwrap();
        let differs = !t.sub(&t2).unwrap().normalized().is_empty();
        prop_assert_eq!(flat_norm(&t.sub(&t2).unwrap(), &cx).unwrap().value > 0.0, differs);
    }
}

// ---------------------------------------------------------------- space-time

fn surface(seed: u64) -> SpaceTimeCurrent {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..9).map(|_| r.gen_range(-0.4..0.4)).collect();
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
    let n = 4;
    let h = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..n {
            let (s0, s1, u0, u1) = (i as f64 * h, (i + 1) as f64 * h, j as f64 * h, (j + 1) as f64 * h);
            ch.push(vec![f(s0, u0), f(s1, u0), f(s1, u1)], 1.0).unwrap();
            ch.push(vec![f(s0, u0), f(s1, u1), f(s0, u1)], 1.0).unwrap();
        }
    }
    let ts: Vec<f64> = ch.terms().iter().flat_map(|t| t.simplex.vertices.iter().map(|v| v[0])).collect();
    let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    SpaceTimeCurrent::new(ch, (lo, hi)).unwrap()
}

fn random_map(r: &mut ChaCha8Rng, w: (f64, f64)) -> TimeMap {
    let mut xs: Vec<f64> = (0..3).map(|_| r.gen_range(w.0..w.1)).collect();
    let mut ys: Vec<f64> = (0..3).map(|_| r.gen_range(0.0..5.0)).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut k = vec![(w.0, -0.5)];
    k.extend(xs.into_iter().zip(ys));
    k.push((w.1, 5.5));
    k.dedup_by(|a, b| a.0 == b.0 || a.1 == b.1);
    TimeMap::new(k).unwrap()
}

fn square(half: f64, z: f64, dx: f64) -> Loop {
    let c = [0.5 + dx, 0.5, z];
    Loop {
        burgers: 0,
        mult: 1.0,
        vertices: vec![
            [c[0] - half, c[1] - half, c[2]],
            [c[0] + half, c[1] - half, c[2]],
            [c[0] + half, c[1] + half, c[2]],
            [c[0] - half, c[1] + half, c[2]],
        ],
    }
}

fn slip(from: &Loop, to: &Loop, w: (f64, f64)) -> SlipFamily {
    let m = LoopMotion::new(from.clone(), to.clone()).unwrap();
    homotopy_family(&[vec![m]], 1, BoxDomain::cube3(0.0, 1.0), w, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_is_bounded_by_slices_and_variation(seed in any::<u64>()) {
        let s = surface(seed);
        let w = s.window();
        for g in s.geometry() {
            prop_assert!((g.grad_t.powi(2) + g.spatial.powi(2) - 1.0).abs() <= 1e-12);
        }
        prop_assert!(s.mass_in(w) <= s.coarea_slices(w) + s.variation(w) + 1e-8);
    }

    #[test]
    fn rescaling_preserves_variations_and_slice_sup(seed in any::<u64>()) {
        let s = surface(seed);
        let w = s.window();
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let a = random_map(&mut r, w);
        let t = s.rescale(&a).unwrap();
        let wt = t.window();
        prop_assert!((t.variation(wt) - s.variation(w)).abs() <= 1e-12 * s.variation(w).max(1.0));
        let (b0, b1) = (s.boundary_variation(w).unwrap(), t.boundary_variation(wt).unwrap());
        prop_assert!((b0 - b1).abs() <= 1e-12 * b0.max(1.0));
        prop_assert!((t.sliced_mass_sup(wt) - s.sliced_mass_sup(w)).abs() <= 1e-9 * s.sliced_mass_sup(w).max(1.0));
    }

    #[test]
    fn concatenation_adds_variation_and_takes_max_slice(h0 in 0.05f64..0.2, h1 in 0.05f64..0.2, dx in -0.1f64..0.1) {
        let (l0, l1) = (square(h0, 0.5, 0.0), square(h1, 0.5, 0.0));
        let mut l2 = l1.clone();
        l2.vertices.iter_mut().for_each(|v| v[0] += dx);
        let (s1, s2) = (slip(&l0, &l1, (0.0, 1.0)), slip(&l1, &l2, (0.0, 1.0)));
        let cat = SlipFamily::concatenate(&s1, &s2).unwrap();
        let v = s1.variation((0.0, 1.0)) + s2.variation((0.0, 1.0));
        prop_assert!((cat.variation((0.0, 1.0)) - v).abs() <= 1e-12);
        let m = s1.sliced_mass_sup().max(s2.sliced_mass_sup());
        prop_assert!((cat.sliced_mass_sup() - m).abs() <= 1e-12);
    }

    #[test]
    fn plastic_flow_is_rate_independent(h1 in 0.12f64..0.3, t in 0.05f64..0.95, seed in any::<u64>()) {
        let b = BurgersSystem::new(vec![[0.4, 0.0, 0.1]]).unwrap();
        let l0 = square(0.1, 0.5, 0.0);
        let s = slip(&l0, &square(h1, 0.5, 0.02), (0.0, 1.0));
        let t0 = loops_to_system(&[l0], &b, BoxDomain::cube3(0.0, 1.0), None).unwrap();
        let p0 = PlasticDistortion::from_dislocations(&t0).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = random_map(&mut r, (0.0, 1.0));
        let direct = plastic_flow(&s, &b, &p0, t).unwrap();
        let rescaled = plastic_flow(&s.rescale(&a).unwrap(), &b, &p0, a.eval(t)).unwrap();
        let (x, y) = (direct.integral(), rescaled.integral());
        prop_assert!(x.iter().zip(&y).all(|(u, v)| (u - v).abs() <= 1e-12));
        prop_assert!((direct.singular_mass() - rescaled.singular_mass()).abs() <= 1e-12);
        // the flow keeps curl p consistent with the moving loop
        let line = s.slip(0).slice_at_time(t).unwrap().current;
        let sys = slipcurrent_core::dislocation::DislocationSystem::new(b.clone(), vec![line]).unwrap();
        prop_assert!(consistency_residual(&direct, &sys, None).unwrap() <= 1e-8);
    }

    #[test]
    fn forward_commutes_with_concatenation(h1 in 0.12f64..0.3, dx in -0.1f64..0.1, k in 0u32..3) {
        let eps = 1.0 / f64::from(1u32 << k);
        let b = BurgersSystem::new(vec![[1.0, 0.0, 0.0]]).unwrap();
        let dom = BoxDomain::cube3(0.0, 1.0);
        let mut l0 = square(0.1, 0.5, 0.0);
        l0.mult = eps;
        let mut l1 = square(h1, 0.5, 0.0);
        l1.mult = eps;
        let mut l2 = l1.clone();
        l2.vertices.iter_mut().for_each(|v| v[0] += dx);
        let t0 = loops_to_system(&[l0.clone()], &b, dom, Some(eps)).unwrap();
        let m1 = LoopMotion::new(l0, l1.clone()).unwrap();
        let m2 = LoopMotion::new(l1, l2).unwrap();
        let s1 = homotopy_family(&[vec![m1]], 1, dom, (0.0, 1.0), Some(eps)).unwrap();
        let s2 = homotopy_family(&[vec![m2]], 1, dom, (0.0, 1.0), Some(eps)).unwrap();
        let stepwise = t0.forward(&s1).unwrap().forward(&s2).unwrap();
        let joint = t0.forward(&SlipFamily::concatenate(&s1, &s2).unwrap()).unwrap();
        prop_assert!(stepwise.equals(&joint, 1e-12));
        for l in joint.lines() {
            prop_assert!(l.is_cycle(1e-12));
            prop_assert_eq!(l.quantum(), Some(eps));
        }
    }

    #[test]
    fn climb_penalty_raises_climb_cost(kappa in 1.0f64..5.0, extra in 0.1f64..5.0, h in 0.05f64..0.2) {
        // pure climb: the loop translates along its own plane normal
        let s = slip(&square(h, 0.4, 0.0), &square(h, 0.6, 0.0), (0.0, 1.0));
        let n = Some([0.0, 0.0, 1.0]);
        let lo = dissipation(&s, &[DissipationPotential::new(2.0, kappa, n).unwrap()], (0.0, 1.0)).unwrap();
        let hi = dissipation(&s, &[DissipationPotential::new(2.0, kappa + extra, n).unwrap()], (0.0, 1.0)).unwrap();
        prop_assert!(hi >= lo);
        prop_assert!((hi / lo - (kappa + extra) / kappa).abs() <= 1e-12);
    }

    #[test]
    fn rounding_keeps_totals(ms in prop::collection::vec(-2.0f64..2.0, 1..8), k in 0u32..4) {
        let eps = 1.0 / f64::from(1u32 << k);
        let loops: Vec<Loop> = ms.iter().map(|m| Loop { mult: *m, ..square(0.1, 0.5, 0.0) }).collect();
        let r = round_loops(&loops, eps).unwrap();
        let before: f64 = ms.iter().sum();
        let after: f64 = r.iter().map(|l| l.mult).sum();
        prop_assert!((before - after).abs() <= eps / 2.0 + 1e-12);
    }
}
