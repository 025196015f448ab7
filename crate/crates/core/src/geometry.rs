//! Points, axis-aligned boxes and oriented simplices in R^3 and R^{1+3}.

use crate::algebra::MultiVector;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A point with up to four coordinates; entries past the ambient dimension
/// are zero. In R^{1+3} the layout is `[t, x, y, z]`, in R^3 `[x, y, z, 0]`.
pub type Point = [f64; 4];

pub const DEGENERACY_TOL: f64 = 1e-12;
pub const KEY_RESOLUTION: f64 = 1e-9;

pub fn p3(x: f64, y: f64, z: f64) -> Point {
    [x, y, z, 0.0]
}

pub fn p4(t: f64, x: f64, y: f64, z: f64) -> Point {
    [t, x, y, z]
}

pub fn spatial(p: &Point) -> [f64; 3] {
    [p[1], p[2], p[3]]
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn lerp(a: &Point, b: &Point, s: f64) -> Point {
    [
        a[0] + s * (b[0] - a[0]),
        a[1] + s * (b[1] - a[1]),
        a[2] + s * (b[2] - a[2]),
        a[3] + s * (b[3] - a[3]),
    ]
}

/// Closed axis-aligned box in the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub dim: usize,
    pub lo: Point,
    pub hi: Point,
}

impl BoxDomain {
    pub fn new(dim: usize, lo: Point, hi: Point) -> Result<Self> {
        if dim != 3 && dim != 4 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if (0..dim).any(|i| !(hi[i] > lo[i])) {
            return Err(Error::Invalid("box must have positive extent in every direction".into()));
        }
        Ok(Self { dim, lo, hi })
    }

    pub fn cube3(lo: f64, hi: f64) -> Self {
        Self::new(3, p3(lo, lo, lo), p3(hi, hi, hi)).expect("valid cube")
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|i| (self.hi[i] - self.lo[i]).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        (0..self.dim).all(|i| p[i] >= self.lo[i] - tol && p[i] <= self.hi[i] + tol)
    }

    /// `[t0, t1] × self` for a spatial box.
    pub fn with_time(&self, t0: f64, t1: f64) -> Result<Self> {
        if self.dim != 3 {
            return Err(Error::DimensionMismatch(self.dim, 3));
        }
        Self::new(
            4,
            [t0, self.lo[0], self.lo[1], self.lo[2]],
            [t1, self.hi[0], self.hi[1], self.hi[2]],
        )
    }

    pub fn spatial(&self) -> Result<Self> {
        if self.dim != 4 {
            return Err(Error::DimensionMismatch(self.dim, 4));
        }
        Self::new(
            3,
            [self.lo[1], self.lo[2], self.lo[3], 0.0],
            [self.hi[1], self.hi[2], self.hi[3], 0.0],
        )
    }

    /// Same spatial extent with the time range replaced.
    pub fn with_time_window(&self, t0: f64, t1: f64) -> BoxDomain {
        let mut d = *self;
        d.lo[0] = t0;
        d.hi[0] = t1;
        d
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BoxDomain) -> BoxDomain {
        let mut d = *self;
        for i in 0..self.dim {
            d.lo[i] = d.lo[i].min(other.lo[i]);
            d.hi[i] = d.hi[i].max(other.hi[i]);
        }
        d
    }

    /// Quantum used for canonical vertex keys.
    pub fn key_quantum(&self) -> f64 {
        KEY_RESOLUTION * self.diameter()
    }

    pub fn key(&self, p: &Point) -> [i64; 4] {
        let q = self.key_quantum();
        let mut k = [0i64; 4];
        for i in 0..self.dim {
            k[i] = (p[i] / q).round() as i64;
        }
        k
    }
}

/// Oriented simplex; the orientation is carried by the vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub dim: usize,
    pub vertices: Vec<Point>,
}

impl Simplex {
    pub fn new(dim: usize, vertices: Vec<Point>) -> Self {
        Self { dim, vertices }
    }

    pub fn grade(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn edge(&self, i: usize) -> Point {
        sub(&self.vertices[i + 1], &self.vertices[0])
    }

    /// `(v1 − v0) ∧ … ∧ (vk − v0)`, of norm `k! · vol`.
    pub fn orientation(&self) -> MultiVector {
        let edges: Vec<Point> = (0..self.grade()).map(|i| self.edge(i)).collect();
        let slices: Vec<&[f64]> = edges.iter().map(|e| &e[..self.dim]).collect();
        MultiVector::wedge_vectors(self.dim, &slices).expect("grade within dimension")
    }

    pub fn volume(&self) -> f64 {
        let k = self.grade();
        if k == 0 {
            return 1.0;
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.orientation().norm() / fact
    }

    pub fn unit_orientation(&self) -> Option<MultiVector> {
        let o = self.orientation();
        let n = o.norm();
        (n > 0.0).then(|| o.scaled(1.0 / n))
    }

    pub fn is_degenerate(&self, scale: f64) -> bool {
        let k = self.grade() as i32;
        k > 0 && self.volume() < DEGENERACY_TOL * scale.powi(k)
    }

    pub fn map(&self, dim: usize, f: &dyn Fn(&Point) -> Point) -> Simplex {
        Simplex::new(dim, self.vertices.iter().map(f).collect())
    }

    pub fn time_range(&self) -> (f64, f64) {
        let lo = self.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = self.vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Point of the segment `ab` at time `t` (first coordinate), computed from a
/// canonical endpoint order so that shared edges give bit-identical points.
pub fn edge_point_at_time(a: &Point, b: &Point, t: f64) -> Point {
    let (a, b) = if a.partial_cmp(b) == Some(std::cmp::Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    };
    let s = (t - a[0]) / (b[0] - a[0]);
    let mut p = lerp(a, b, s);
    p[0] = t;
    p
}
