//! Closed polygonal loops as a working representation of dislocation systems,
//! and the straight-line homotopies between two loop configurations.

use std::collections::BTreeMap;

use crate::chain::SimplicialCurrent;
use crate::dislocation::{BurgersSystem, DislocationSystem, SlipFamily};
use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, Point};
use crate::spacetime::SpaceTimeCurrent;
use crate::tension::LineTension;

pub type V3 = [f64; 3];

pub fn sub3(a: &V3, b: &V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross3(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn len3(a: &V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn pt(x: &V3) -> Point {
    [x[0], x[1], x[2], 0.0]
}

/// Closed polygon carrying multiplicity `mult` of the Burgers vector `burgers`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub burgers: usize,
    pub mult: f64,
    pub vertices: Vec<V3>,
}

impl Loop {
    pub fn edges(&self) -> impl Iterator<Item = (V3, V3)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.edges().map(|(a, b)| len3(&sub3(&b, &a))).sum()
    }

    /// `M_ψ` of the loop including its multiplicity.
    pub fn psi_mass(&self, psi: &LineTension) -> f64 {
        self.mult.abs() * self.edges().map(|(a, b)| psi.eval(sub3(&b, &a))).sum::<f64>()
    }

    pub fn centroid(&self) -> V3 {
        let n = self.vertices.len() as f64;
        let mut c = [0.0; 3];
        for v in &self.vertices {
            for k in 0..3 {
                c[k] += v[k] / n;
            }
        }
        c
    }

    /// Newell's vector: twice the oriented area vector of the polygon.
    pub fn area_vector(&self) -> V3 {
        let mut a = [0.0; 3];
        for (p, q) in self.edges() {
            let c = cross3(&p, &q);
            for k in 0..3 {
                a[k] += 0.5 * c[k];
            }
        }
        a
    }

    /// Drop repeated vertices and vertices interior to straight runs.
    pub fn simplified(&self) -> Option<Loop> {
        let scale = self.length().max(1e-300);
        let tol = 1e-12 * scale;
        let mut v: Vec<V3> = Vec::with_capacity(self.vertices.len());
        for x in &self.vertices {
            if v.last().map(|l| len3(&sub3(x, l)) > tol).unwrap_or(true) {
                v.push(*x);
            }
        }
        while v.len() > 1 && len3(&sub3(&v[0], v.last().expect("nonempty"))) <= tol {
            v.pop();
        }
        loop {
            let n = v.len();
            if n < 3 {
                break;
            }
            let drop = (0..n).find(|&i| {
                let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
                let (u, w) = (sub3(&b, &a), sub3(&c, &b));
                let dot = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
                len3(&cross3(&u, &w)) <= 1e-12 * len3(&u) * len3(&w) && dot > 0.0
            });
            match drop {
                Some(i) => {
                    v.remove(i);
                }
                None => break,
            }
        }
        if v.len() < 2 || self.mult == 0.0 {
            return None;
        }
        let out = Loop { burgers: self.burgers, mult: self.mult, vertices: v };
        if out.length() <= tol {
            None
        } else {
            Some(out)
        }
    }
}

/// Decompose each line current into closed polygons of constant multiplicity.
pub fn extract_loops(t: &DislocationSystem) -> Result<Vec<Loop>> {
    let mut out = Vec::new();
    for (bi, line) in t.lines().iter().enumerate() {
        let line = line.normalized();
        let d = *line.domain();
        let q = d.key_quantum();
        // oriented edges grouped by |multiplicity|
        let mut groups: BTreeMap<i64, (f64, Vec<(V3, V3)>)> = BTreeMap::new();
        for term in line.terms() {
            let v = &term.simplex.vertices;
            let (a, b) = ([v[0][0], v[0][1], v[0][2]], [v[1][0], v[1][1], v[1][2]]);
            let (a, b, m) = if term.mult >= 0.0 { (a, b, term.mult) } else { (b, a, -term.mult) };
            let key = (m / 1e-12).round() as i64;
            groups.entry(key).or_insert((m, Vec::new())).1.push((a, b));
        }
        for (_, (m, edges)) in groups {
            let mut by_start: BTreeMap<[i64; 4], Vec<usize>> = BTreeMap::new();
            for (i, (a, _)) in edges.iter().enumerate() {
                by_start.entry(d.key(&pt(a))).or_default().push(i);
            }
            let mut used = vec![false; edges.len()];
            for start in 0..edges.len() {
                if used[start] {
                    continue;
                }
                let origin = d.key(&pt(&edges[start].0));
                let mut verts = vec![edges[start].0];
                used[start] = true;
                let mut cur = start;
                loop {
                    let end = edges[cur].1;
                    let k = d.key(&pt(&end));
                    if k == origin {
                        break;
                    }
                    verts.push(end);
                    let next = by_start.get(&k).and_then(|c| c.iter().copied().find(|&e| !used[e]));
                    match next {
                        Some(e) => {
                            used[e] = true;
                            cur = e;
                        }
                        None => {
                            return Err(Error::Invalid(format!(
                                "line {bi} does not split into closed loops of constant multiplicity (stuck near {end:?}, key quantum {q:e})"
                            )))
                        }
                    }
                }
                if let Some(l) = (Loop { burgers: bi, mult: m, vertices: verts }).simplified() {
                    out.push(l);
                }
            }
        }
    }
    Ok(out)
}

/// Reassemble a dislocation system from loops.
pub fn loops_to_system(
    loops: &[Loop],
    burgers: &BurgersSystem,
    domain: BoxDomain,
    quantum: Option<f64>,
) -> Result<DislocationSystem> {
    let mut lines: Vec<SimplicialCurrent> =
        (0..burgers.len()).map(|_| SimplicialCurrent::new(domain, 1)).collect::<Result<_>>()?;
    for l in loops {
        if l.burgers >= lines.len() {
            return Err(Error::Invalid(format!("loop refers to Burgers vector {} of {}", l.burgers, lines.len())));
        }
        let pts: Vec<Point> = l.vertices.iter().map(pt).collect();
        let c = SimplicialCurrent::polyline(domain, &pts, l.mult, true)?;
        lines[l.burgers] = lines[l.burgers].add(&c)?;
    }
    if let Some(q) = quantum {
        lines = lines.into_iter().map(|l| l.normalized().with_quantum(q)).collect::<Result<_>>()?;
    }
    DislocationSystem::new(burgers.clone(), lines)
}

/// A loop before and after a move, with matching vertex counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopMotion {
    pub from: Loop,
    pub to: Loop,
}

impl LoopMotion {
    pub fn new(from: Loop, to: Loop) -> Result<Self> {
        if from.vertices.len() != to.vertices.len() || from.burgers != to.burgers || from.mult != to.mult {
            return Err(Error::Invalid("loop motion needs matching vertices, Burgers index and multiplicity".into()));
        }
        Ok(Self { from, to })
    }

    pub fn is_static(&self) -> bool {
        self.from.vertices == self.to.vertices
    }

    /// Space-time triangles of the straight-line homotopy on `[a, b]`,
    /// oriented so that `∂S = δ_b × to − δ_a × from` along the ends.
    pub fn spacetime_triangles(&self, a: f64, b: f64) -> Vec<[Point; 3]> {
        let n = self.from.vertices.len();
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let j = (i + 1) % n;
            let (x, xn) = (self.from.vertices[i], self.from.vertices[j]);
            let (y, yn) = (self.to.vertices[i], self.to.vertices[j]);
            let lift = |t: f64, p: &V3| [t, p[0], p[1], p[2]];
            out.push([lift(a, &x), lift(b, &y), lift(b, &yn)]);
            out.push([lift(a, &x), lift(b, &yn), lift(a, &xn)]);
        }
        out
    }

    /// Spatial projections of [`Self::spacetime_triangles`], same order.
    pub fn sweep_triangles(&self) -> Vec<[V3; 3]> {
        let n = self.from.vertices.len();
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let j = (i + 1) % n;
            let (x, xn) = (self.from.vertices[i], self.from.vertices[j]);
            let (y, yn) = (self.to.vertices[i], self.to.vertices[j]);
            out.push([x, y, yn]);
            out.push([x, yn, xn]);
        }
        out
    }
}

/// Slip family on `window` realising a list of consecutive motions; motion
/// `j` of `m` occupies the `j`-th of `m` equal subintervals. Loops of a
/// stage that do not move still contribute their static cylinder.
pub fn homotopy_family(
    stages: &[Vec<LoopMotion>],
    num_burgers: usize,
    domain: BoxDomain,
    window: (f64, f64),
    quantum: Option<f64>,
) -> Result<SlipFamily> {
    let d4 = domain.with_time(window.0, window.1)?;
    let mut chains: Vec<SimplicialCurrent> =
        (0..num_burgers).map(|_| SimplicialCurrent::new(d4, 2)).collect::<Result<_>>()?;
    let m = stages.len().max(1) as f64;
    let span = window.1 - window.0;
    for (j, stage) in stages.iter().enumerate() {
        let a = window.0 + span * j as f64 / m;
        let b = if j + 1 == stages.len() { window.1 } else { window.0 + span * (j + 1) as f64 / m };
        for motion in stage {
            let bi = motion.from.burgers;
            if bi >= num_burgers {
                return Err(Error::Invalid(format!("motion refers to Burgers vector {bi} of {num_burgers}")));
            }
            for tri in motion.spacetime_triangles(a, b) {
                chains[bi].push(tri.to_vec(), motion.from.mult)?;
            }
        }
    }
    let mut slips = Vec::with_capacity(num_burgers);
    for c in chains {
        let c = match quantum {
            Some(q) => c.canonical().with_quantum(q)?,
            None => c,
        };
        slips.push(SpaceTimeCurrent::new(c, window)?);
    }
    SlipFamily::new(slips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dislocation::BurgersSystem;

    fn square(c: V3, l: f64) -> Vec<V3> {
        let h = l / 2.0;
        vec![
            [c[0] - h, c[1] - h, c[2]],
            [c[0] + h, c[1] - h, c[2]],
            [c[0] + h, c[1] + h, c[2]],
            [c[0] - h, c[1] + h, c[2]],
        ]
    }

    #[test]
    fn extraction_round_trip() {
        let d = BoxDomain::cube3(0.0, 1.0);
        let b = BurgersSystem::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let mut sq = square([0.5, 0.5, 0.5], 0.4);
        sq.insert(1, [0.5, 0.3, 0.5]);
        let loops = vec![
            Loop { burgers: 0, mult: 1.0, vertices: sq },
            Loop { burgers: 1, mult: 0.5, vertices: square([0.4, 0.4, 0.2], 0.2) },
            Loop { burgers: 1, mult: 1.5, vertices: square([0.6, 0.6, 0.8], 0.2) },
        ];
        let t = loops_to_system(&loops, &b, d, None).unwrap();
        let back = extract_loops(&t).unwrap();
        assert_eq!(back.len(), 3);
        // the collinear midpoint is gone
        assert!(back.iter().all(|l| l.vertices.len() == 4));
        let t2 = loops_to_system(&back, &b, d, None).unwrap();
        assert!(t.equals(&t2, 1e-12));
    }

    #[test]
    fn homotopy_has_the_right_traces() {
        let d = BoxDomain::cube3(0.0, 1.0);
        let b = BurgersSystem::new(vec![[1.0, 0.0, 0.0]]).unwrap();
        let from = Loop { burgers: 0, mult: 1.0, vertices: square([0.5, 0.5, 0.5], 0.4) };
        let to = Loop { burgers: 0, mult: 1.0, vertices: square([0.55, 0.5, 0.5], 0.6) };
        let t0 = loops_to_system(std::slice::from_ref(&from), &b, d, None).unwrap();
        let t1 = loops_to_system(std::slice::from_ref(&to), &b, d, None).unwrap();
        let motion = LoopMotion::new(from, to).unwrap();
        let s = homotopy_family(&[vec![motion.clone()]], 1, d, (0.0, 1.0), None).unwrap();
        let (a, z, interior) = s.slip(0).traces().unwrap();
        assert!(interior < 1e-12);
        assert!(a.equals(t0.line(0), 1e-12));
        assert!(z.equals(t1.line(0), 1e-12));
        assert!(t0.forward(&s).unwrap().equals(&t1, 1e-12));
        // the spatial projection carries the swept area 0.6² − 0.4²
        let swept: f64 = motion
            .sweep_triangles()
            .iter()
            .map(|t| cross3(&sub3(&t[1], &t[0]), &sub3(&t[2], &t[0]))[2] * 0.5)
            .sum();
        assert!((swept - 0.2).abs() < 1e-12, "{swept}");
    }
}
