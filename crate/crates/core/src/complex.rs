//! Finite simplicial complexes that serve as the background for flat-norm
//! and filling computations.

use std::collections::{BTreeMap, HashMap};

use crate::chain::{SimplicialCurrent, Term};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sub, BoxDomain, Point, Simplex};

/// A simplicial complex given by its top simplices (of grade `top`) and all
/// their faces. Faces are stored as sorted vertex index lists; the sorted
/// order is the reference orientation for chain coefficients.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    domain: BoxDomain,
    top: usize,
    vertices: Vec<Point>,
    vertex_index: BTreeMap<[i64; 4], usize>,
    faces: Vec<Vec<Vec<usize>>>,
    face_index: Vec<HashMap<Vec<usize>, usize>>,
}

impl SimplicialComplex {
    pub fn new(domain: BoxDomain, top: usize) -> Result<Self> {
        if top == 0 || top > domain.dim {
            return Err(Error::GradeOverflow { grade: top, dim: domain.dim });
        }
        Ok(Self {
            domain,
            top,
            vertices: Vec::new(),
            vertex_index: BTreeMap::new(),
            faces: vec![Vec::new(); top + 1],
            face_index: vec![HashMap::new(); top + 1],
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn top_grade(&self) -> usize {
        self.top
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self, grade: usize) -> &[Vec<usize>] {
        &self.faces[grade]
    }

    pub fn num_faces(&self, grade: usize) -> usize {
        self.faces[grade].len()
    }

    pub fn vertex_id(&mut self, p: Point) -> usize {
        let key = self.domain.key(&p);
        if let Some(&i) = self.vertex_index.get(&key) {
            return i;
        }
        let i = self.vertices.len();
        self.vertices.push(p);
        self.vertex_index.insert(key, i);
        self.faces[0].push(vec![i]);
        self.face_index[0].insert(vec![i], i);
        i
    }

    pub fn find_vertex(&self, p: &Point) -> Option<usize> {
        self.vertex_index.get(&self.domain.key(p)).copied()
    }

    fn insert_face(&mut self, mut ids: Vec<usize>) -> usize {
        ids.sort_unstable();
        let g = ids.len() - 1;
        if let Some(&i) = self.face_index[g].get(&ids) {
            return i;
        }
        if g >= 2 {
            for skip in 0..ids.len() {
                let sub: Vec<usize> =
                    ids.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| *v).collect();
                self.insert_face(sub);
            }
        } else if g == 1 {
            // vertices already registered
        }
        let i = self.faces[g].len();
        self.faces[g].push(ids.clone());
        self.face_index[g].insert(ids, i);
        i
    }

    /// Add a simplex of any grade up to `top` together with all its faces.
    /// Degenerate simplices are rejected.
    pub fn add_simplex(&mut self, vertices: &[Point]) -> Result<usize> {
        let g = vertices.len().checked_sub(1).ok_or_else(|| Error::Invalid("empty simplex".into()))?;
        if g > self.top {
            return Err(Error::GradeOverflow { grade: g, dim: self.top });
        }
        let s = Simplex::new(self.domain.dim, vertices.to_vec());
        if s.is_degenerate(self.domain.diameter()) {
            return Err(Error::Invalid("degenerate simplex in complex".into()));
        }
        let ids: Vec<usize> = vertices.iter().map(|p| self.vertex_id(*p)).collect();
        Ok(self.insert_face(ids))
    }

    pub fn face_id(&self, ids: &[usize]) -> Option<(usize, f64)> {
        let mut sorted = ids.to_vec();
        let mut sign = 1.0;
        // insertion sort with parity tracking
        for i in 1..sorted.len() {
            let mut j = i;
            while j > 0 && sorted[j - 1] > sorted[j] {
                sorted.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        let g = ids.len() - 1;
        self.face_index.get(g)?.get(&sorted).map(|&i| (i, sign))
    }

    pub fn face_points(&self, grade: usize, i: usize) -> Vec<Point> {
        self.faces[grade][i].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn face_volume(&self, grade: usize, i: usize) -> f64 {
        Simplex::new(self.domain.dim, self.face_points(grade, i)).volume()
    }

    /// Boundary matrix from grade `g` faces to grade `g − 1` faces, as
    /// columns of (row, sign) entries.
    pub fn boundary_columns(&self, g: usize) -> Vec<Vec<(usize, f64)>> {
        self.faces[g]
            .iter()
            .map(|ids| {
                (0..ids.len())
                    .map(|skip| {
                        let sub: Vec<usize> =
                            ids.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| *v).collect();
                        let (row, _) = self.face_id(&sub).expect("faces are closed under boundary");
                        (row, if skip % 2 == 0 { 1.0 } else { -1.0 })
                    })
                    .collect()
            })
            .collect()
    }

    /// Coefficients of `t` on the grade-`k` faces. 1-currents are subdivided
    /// at complex vertices lying on their segments.
    pub fn chain_coefficients(&self, t: &SimplicialCurrent) -> Result<Vec<f64>> {
        let k = t.grade();
        if k > self.top {
            return Err(Error::GradeOverflow { grade: k, dim: self.top });
        }
        let mut coeffs = vec![0.0; self.faces[k].len()];
        let tn = t.normalized();
        let tol = self.domain.key_quantum();
        for term in tn.terms() {
            let v = &term.simplex.vertices;
            if k == 1 {
                let (a, b) = (v[0], v[1]);
                let d = sub(&b, &a);
                let len = norm(&d);
                let mut stops: Vec<(f64, usize)> = Vec::new();
                for (i, p) in self.vertices.iter().enumerate() {
                    let w = sub(p, &a);
                    let s = dot(&w, &d) / (len * len);
                    if s < -tol / len || s > 1.0 + tol / len {
                        continue;
                    }
                    let perp = [w[0] - s * d[0], w[1] - s * d[1], w[2] - s * d[2], w[3] - s * d[3]];
                    if norm(&perp) <= tol {
                        stops.push((s, i));
                    }
                }
                stops.sort_by(|x, y| x.0.total_cmp(&y.0));
                let ends_ok = stops.first().map(|s| s.0.abs() * len <= tol).unwrap_or(false)
                    && stops.last().map(|s| (s.0 - 1.0).abs() * len <= tol).unwrap_or(false);
                if !ends_ok {
                    return Err(Error::NotOnComplex("segment endpoint is not a complex vertex".into()));
                }
                for w in stops.windows(2) {
                    let (id, sign) = self
                        .face_id(&[w[0].1, w[1].1])
                        .ok_or_else(|| Error::NotOnComplex("segment piece is not an edge of the complex".into()))?;
                    coeffs[id] += sign * term.mult;
                }
            } else {
                let ids: Option<Vec<usize>> = v.iter().map(|p| self.find_vertex(p)).collect();
                let ids = ids.ok_or_else(|| Error::NotOnComplex("vertex is not in the complex".into()))?;
                let (id, sign) =
                    self.face_id(&ids).ok_or_else(|| Error::NotOnComplex("simplex is not a face".into()))?;
                coeffs[id] += sign * term.mult;
            }
        }
        Ok(coeffs)
    }

    /// Chain with the given coefficients on the grade-`g` faces.
    pub fn chain_from_coefficients(&self, g: usize, coeffs: &[f64]) -> SimplicialCurrent {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| Term {
                simplex: Simplex::new(self.domain.dim, self.face_points(g, i)),
                mult: *c,
            })
            .collect();
        SimplicialCurrent::from_terms(self.domain, g, terms)
    }

    /// Triangulated planar grid on `[x0,x1]×[y0,y1]` at height `z`, each
    /// cell split along alternating diagonals.
    pub fn planar_grid(domain: BoxDomain, x: (f64, f64), y: (f64, f64), n: (usize, usize), z: f64) -> Result<Self> {
        Self::planar_grid_with(domain, x, y, n, z, &|_, _, p| p)
    }

    /// Planar grid whose vertex positions are passed through `perturb(i, j, p)`.
    pub fn planar_grid_with(
        domain: BoxDomain,
        x: (f64, f64),
        y: (f64, f64),
        n: (usize, usize),
        z: f64,
        perturb: &dyn Fn(usize, usize, Point) -> Point,
    ) -> Result<Self> {
        let mut c = Self::new(domain, 2)?;
        let mut pts = vec![vec![[0.0; 4]; n.1 + 1]; n.0 + 1];
        for (i, row) in pts.iter_mut().enumerate() {
            for (j, p) in row.iter_mut().enumerate() {
                let px = x.0 + (x.1 - x.0) * i as f64 / n.0 as f64;
                let py = y.0 + (y.1 - y.0) * j as f64 / n.1 as f64;
                *p = perturb(i, j, [px, py, z, 0.0]);
            }
        }
        for i in 0..n.0 {
            for j in 0..n.1 {
                let (a, b, cc, d) = (pts[i][j], pts[i + 1][j], pts[i + 1][j + 1], pts[i][j + 1]);
                if (i + j) % 2 == 0 {
                    c.add_simplex(&[a, b, cc])?;
                    c.add_simplex(&[a, cc, d])?;
                } else {
                    c.add_simplex(&[a, b, d])?;
                    c.add_simplex(&[b, cc, d])?;
                }
            }
        }
        Ok(c)
    }

    /// 2-skeleton of the Kuhn (Freudenthal) triangulation of an `n`-cell box
    /// grid. Grid edges are edges of the complex.
    pub fn kuhn_skeleton(domain: BoxDomain, n: [usize; 3]) -> Result<Self> {
        if domain.dim != 3 {
            return Err(Error::DimensionMismatch(domain.dim, 3));
        }
        let mut c = Self::new(domain, 2)?;
        let h = [
            (domain.hi[0] - domain.lo[0]) / n[0] as f64,
            (domain.hi[1] - domain.lo[1]) / n[1] as f64,
            (domain.hi[2] - domain.lo[2]) / n[2] as f64,
        ];
        let node = |i: [usize; 3]| -> Point {
            [
                domain.lo[0] + h[0] * i[0] as f64,
                domain.lo[1] + h[1] * i[1] as f64,
                domain.lo[2] + h[2] * i[2] as f64,
                0.0,
            ]
        };
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    for perm in &perms {
                        let mut cur = [i, j, k];
                        let mut tet = vec![node(cur)];
                        for &axis in perm {
                            cur[axis] += 1;
                            tet.push(node(cur));
                        }
                        for skip in 0..4 {
                            let tri: Vec<Point> =
                                tet.iter().enumerate().filter(|(q, _)| *q != skip).map(|(_, p)| *p).collect();
                            c.add_simplex(&tri)?;
                        }
                    }
                }
            }
        }
        Ok(c)
    }

    /// Cone over a 1-current: triangles `(apex, a, b)` for every segment.
    /// Any cycle is then a boundary in the complex.
    pub fn cone(t: &SimplicialCurrent, apex: Point) -> Result<Self> {
        if t.grade() != 1 {
            return Err(Error::Invalid("cone complexes are built over 1-currents".into()));
        }
        let mut c = Self::new(*t.domain(), 2)?;
        let scale = t.domain().diameter();
        for term in t.normalized().terms() {
            let v = &term.simplex.vertices;
            let tri = Simplex::new(t.dim(), vec![apex, v[0], v[1]]);
            if tri.is_degenerate(scale) {
                c.add_simplex(&[v[0], v[1]])?;
            } else {
                c.add_simplex(&[apex, v[0], v[1]])?;
            }
        }
        Ok(c)
    }

    /// Cone with apex at the vertex centroid of `t`, nudged off any
    /// supporting line through a generic direction.
    pub fn cone_at_centroid(t: &SimplicialCurrent) -> Result<Self> {
        let n = t.terms().iter().map(|x| x.simplex.vertices.len()).sum::<usize>().max(1) as f64;
        let mut apex = [0.0; 4];
        for term in t.terms() {
            for v in &term.simplex.vertices {
                for i in 0..4 {
                    apex[i] += v[i] / n;
                }
            }
        }
        let shift = 1e-3 * t.domain().diameter();
        let dir = [0.3141592653589793, 0.2718281828459045, 0.1414213562373095];
        for i in 0..t.dim().min(3) {
            apex[i] += shift * dir[i];
        }
        Self::cone(t, apex)
    }
}
