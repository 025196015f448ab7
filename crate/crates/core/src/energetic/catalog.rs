//! Finite catalog of candidate slip moves acting on loop configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;

use super::loops::{cross3, len3, sub3, Loop, LoopMotion, V3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogParams {
    /// Step lengths in absolute units.
    pub steps: Vec<f64>,
    /// Number of in-plane glide directions.
    pub directions: usize,
    pub node_glide: bool,
    pub bow_out: bool,
    pub scale: bool,
    pub translate: bool,
    /// Cap on the sliced mass of a candidate.
    pub gamma_star: f64,
}

impl CatalogParams {
    pub fn new(steps: Vec<f64>, gamma_star: f64) -> Result<Self> {
        if steps.is_empty() || steps.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Invalid("catalog step lengths must be positive".into()));
        }
        if !(gamma_star > 0.0) {
            return Err(Error::Invalid("gamma* must be positive".into()));
        }
        Ok(Self { steps, directions: 4, node_glide: true, bow_out: true, scale: true, translate: true, gamma_star })
    }

    /// `γ* = max(10 M(T₀), cap)`.
    pub fn default_gamma_star(initial_mass: f64, cap: f64) -> f64 {
        (10.0 * initial_mass).max(cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MoveKind {
    Neutral,
    NodeGlide { lp: usize, vertex: usize, dir: usize, step: usize },
    BowOut { lp: usize, segment: usize, outward: bool, step: usize },
    Scale { lp: usize, grow: bool, step: usize },
    Collapse { lp: usize },
    Translate { lp: usize, dir: usize, step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub motions: Vec<LoopMotion>,
    pub result: Vec<Loop>,
}

impl Move {
    pub fn label(&self) -> String {
        match self.kind {
            MoveKind::Neutral => "neutral".into(),
            MoveKind::NodeGlide { lp, vertex, dir, step } => format!("glide:l{lp}:v{vertex}:d{dir}:s{step}"),
            MoveKind::BowOut { lp, segment, outward, step } => {
                format!("bow:l{lp}:e{segment}:{}:s{step}", if outward { "out" } else { "in" })
            }
            MoveKind::Scale { lp, grow, step } => format!("{}:l{lp}:s{step}", if grow { "expand" } else { "shrink" }),
            MoveKind::Collapse { lp } => format!("collapse:l{lp}"),
            MoveKind::Translate { lp, dir, step } => format!("shift:l{lp}:d{dir}:s{step}"),
        }
    }

    pub fn is_neutral(&self) -> bool {
        self.kind == MoveKind::Neutral
    }
}

fn normalize(v: V3) -> Option<V3> {
    let l = len3(&v);
    (l > 1e-14).then(|| [v[0] / l, v[1] / l, v[2] / l])
}

fn clean(v: V3) -> V3 {
    v.map(|x| if x.abs() < 1e-15 { 0.0 } else { x })
}

/// Glide directions: `count` unit vectors in the plane orthogonal to `n`,
/// or the six axis directions when no plane is known.
pub fn glide_directions(n: Option<V3>, count: usize) -> Vec<V3> {
    let Some(n) = n.and_then(normalize) else {
        return vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    };
    let axis = (0..3).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).expect("three axes");
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let ea = normalize(cross3(&n, &e)).expect("independent of n");
    let eb = cross3(&n, &ea);
    (0..count)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / count as f64;
            let (s, c) = th.sin_cos();
            clean([c * ea[0] + s * eb[0], c * ea[1] + s * eb[1], c * ea[2] + s * eb[2]])
        })
        .collect()
}

fn add(a: &V3, d: &V3, s: f64) -> V3 {
    [a[0] + s * d[0], a[1] + s * d[1], a[2] + s * d[2]]
}

fn inside(domain: &BoxDomain, x: &V3) -> bool {
    (0..3).all(|k| x[k] >= domain.lo[k] && x[k] <= domain.hi[k])
}

fn joint_mass(loops: &[Loop]) -> f64 {
    loops.iter().map(|l| l.mult.abs() * l.length()).sum()
}

/// Generates candidate moves for a loop configuration. `normals[b]` is the
/// slip-plane normal for Burgers index `b`, if one is configured.
#[derive(Debug, Clone)]
pub struct Catalog<'a> {
    pub params: &'a CatalogParams,
    pub domain: BoxDomain,
    pub normals: &'a [Option<V3>],
}

impl Catalog<'_> {
    fn plane_normal(&self, l: &Loop) -> Option<V3> {
        self.normals.get(l.burgers).copied().flatten().or_else(|| normalize(l.area_vector()))
    }

    /// Build a move that replaces loop `lp` by the motion `from → to`.
    fn make(&self, loops: &[Loop], kind: MoveKind, lp: usize, from: Loop, to: Loop) -> Option<Move> {
        if !to.vertices.iter().all(|x| inside(&self.domain, x)) {
            return None;
        }
        let mut motions = Vec::with_capacity(loops.len());
        let mut result = Vec::with_capacity(loops.len());
        for (i, l) in loops.iter().enumerate() {
            if i == lp {
                if let Some(s) = to.simplified() {
                    result.push(s);
                }
                motions.push(LoopMotion::new(from.clone(), to.clone()).ok()?);
            } else {
                result.push(l.clone());
                motions.push(LoopMotion { from: l.clone(), to: l.clone() });
            }
        }
        // the loop length is convex along straight-line homotopies, so the
        // sliced mass peaks at an end
        if joint_mass(&result).max(joint_mass(loops)) > self.params.gamma_star {
            return None;
        }
        Some(Move { kind, motions, result })
    }

    pub fn neutral(&self, loops: &[Loop]) -> Move {
        Move {
            kind: MoveKind::Neutral,
            motions: loops.iter().map(|l| LoopMotion { from: l.clone(), to: l.clone() }).collect(),
            result: loops.to_vec(),
        }
    }

    /// All admissible moves, neutral first, in a fixed canonical order.
    pub fn generate(&self, loops: &[Loop]) -> Vec<Move> {
        let p = self.params;
        let mut out = vec![self.neutral(loops)];
        for (lp, l) in loops.iter().enumerate() {
            let n = self.plane_normal(l);
            let dirs = glide_directions(n, p.directions);
            let nv = l.vertices.len();
            if p.node_glide {
                for vertex in 0..nv {
                    for (dir, d) in dirs.iter().enumerate() {
                        for (step, s) in p.steps.iter().enumerate() {
                            let mut to = l.clone();
                            to.vertices[vertex] = add(&l.vertices[vertex], d, *s);
                            let kind = MoveKind::NodeGlide { lp, vertex, dir, step };
                            out.extend(self.make(loops, kind, lp, l.clone(), to));
                        }
                    }
                }
            }
            if p.bow_out {
                let orient = l.area_vector();
                for segment in 0..nv {
                    let (a, b) = (l.vertices[segment], l.vertices[(segment + 1) % nv]);
                    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
                    // outward for a loop oriented along its area vector
                    let Some(perp) = n.and_then(|n| normalize(cross3(&sub3(&b, &a), &n))) else { continue };
                    let outward_sign = if orient.iter().zip(&n.unwrap_or([0.0; 3])).map(|(x, y)| x * y).sum::<f64>() >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    };
                    let mut from = l.clone();
                    from.vertices.insert(segment + 1, mid);
                    for outward in [true, false] {
                        let sg = if outward { outward_sign } else { -outward_sign };
                        for (step, s) in p.steps.iter().enumerate() {
                            let mut to = from.clone();
                            to.vertices[segment + 1] = add(&mid, &perp, sg * s);
                            let kind = MoveKind::BowOut { lp, segment, outward, step };
                            out.extend(self.make(loops, kind, lp, from.clone(), to));
                        }
                    }
                }
            }
            if p.scale {
                let c = l.centroid();
                let r = l.vertices.iter().map(|v| len3(&sub3(v, &c))).fold(0.0, f64::max);
                if r > 0.0 {
                    for grow in [true, false] {
                        for (step, s) in p.steps.iter().enumerate() {
                            let lam = if grow { 1.0 + s / r } else { 1.0 - s / r };
                            if lam <= 0.0 {
                                continue;
                            }
                            let mut to = l.clone();
                            for v in &mut to.vertices {
                                *v = add(&c, &sub3(v, &c), lam);
                            }
                            out.extend(self.make(loops, MoveKind::Scale { lp, grow, step }, lp, l.clone(), to));
                        }
                    }
                    let mut to = l.clone();
                    for v in &mut to.vertices {
                        *v = c;
                    }
                    out.extend(self.make(loops, MoveKind::Collapse { lp }, lp, l.clone(), to));
                }
            }
            if p.translate {
                for (dir, d) in dirs.iter().enumerate() {
                    for (step, s) in p.steps.iter().enumerate() {
                        let mut to = l.clone();
                        for v in &mut to.vertices {
                            *v = add(v, d, *s);
                        }
                        out.extend(self.make(loops, MoveKind::Translate { lp, dir, step }, lp, l.clone(), to));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Loop {
        Loop {
            burgers: 0,
            mult: 1.0,
            vertices: vec![[0.3, 0.3, 0.5], [0.7, 0.3, 0.5], [0.7, 0.7, 0.5], [0.3, 0.7, 0.5]],
        }
    }

    #[test]
    fn directions_lie_in_the_plane() {
        let ds = glide_directions(Some([0.0, 0.0, 2.0]), 4);
        assert_eq!(ds.len(), 4);
        for d in &ds {
            assert_eq!(d[2], 0.0);
            assert!((len3(d) - 1.0).abs() < 1e-15);
        }
        assert_eq!(glide_directions(None, 4).len(), 6);
    }

    #[test]
    fn catalog_respects_domain_and_cap() {
        let params = CatalogParams::new(vec![0.1, 0.35], 100.0).unwrap();
        let normals = [Some([0.0, 0.0, 1.0])];
        let cat = Catalog { params: &params, domain: BoxDomain::cube3(0.0, 1.0), normals: &normals };
        let loops = vec![square()];
        let moves = cat.generate(&loops);
        assert!(moves[0].is_neutral());
        for m in &moves {
            for l in &m.result {
                assert!(l.vertices.iter().all(|x| x.iter().all(|c| (0.0..=1.0).contains(c))));
            }
            for mo in &m.motions {
                assert_eq!(mo.from.vertices.len(), mo.to.vertices.len());
            }
        }
        // a 0.35 translation leaves the unit box in every direction
        assert!(moves.iter().all(|m| !matches!(m.kind, MoveKind::Translate { step: 1, .. })));
        assert!(moves.iter().any(|m| matches!(m.kind, MoveKind::Collapse { .. }) && m.result.is_empty()));

        let tight = CatalogParams::new(vec![0.1], 1.7).unwrap();
        let cat = Catalog { params: &tight, domain: BoxDomain::cube3(0.0, 1.0), normals: &normals };
        assert!(cat.generate(&loops).iter().all(|m| m.result.iter().map(|l| l.length()).sum::<f64>() <= 1.7));
    }

    #[test]
    fn bow_out_goes_outward() {
        let params = CatalogParams::new(vec![0.1], 100.0).unwrap();
        let normals = [Some([0.0, 0.0, 1.0])];
        let cat = Catalog { params: &params, domain: BoxDomain::cube3(0.0, 1.0), normals: &normals };
        let loops = vec![square()];
        let a0 = square().area_vector()[2];
        for m in cat.generate(&loops) {
            if let MoveKind::BowOut { outward, .. } = m.kind {
                let a = m.result[0].area_vector()[2];
                assert_eq!(a > a0, outward);
            }
        }
    }
}
