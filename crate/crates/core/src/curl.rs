//! Curl of cell-constant fields as the boundary of a polyhedral 2-current.
//!
//! A cell-constant vector field `v` is represented by the 2-current that
//! carries weight `h_a · v̄_a` on every interior grid face orthogonal to
//! `e_a` (`v̄` the average over the two adjacent cells), oriented by `⋆e_a`.
//! Its boundary, restricted to the open box, lives on grid edges with weight
//! approximately `(cross-section area) · curl v`.

use crate::chain::SimplicialCurrent;
use crate::error::Result;
use crate::geometry::Point;
use crate::grid::{CellField, Grid};

fn pt(x: [f64; 3]) -> Point {
    [x[0], x[1], x[2], 0.0]
}

/// Polyhedral approximation of `⋆v` for a cell-constant vector field.
pub fn star_chain(grid: &Grid, v: &[[f64; 3]]) -> Result<SimplicialCurrent> {
    let mut c = SimplicialCurrent::new(grid.domain, 2)?;
    let n = grid.n;
    for a in 0..3 {
        let (b, cax) = ((a + 1) % 3, (a + 2) % 3);
        for i in 1..n[a] {
            for j in 0..n[b] {
                for k in 0..n[cax] {
                    let mut lo = [0usize; 3];
                    lo[a] = i;
                    lo[b] = j;
                    lo[cax] = k;
                    let mut below = lo;
                    below[a] = i - 1;
                    let c0 = grid.cell_index(below[0], below[1], below[2]);
                    let c1 = grid.cell_index(lo[0], lo[1], lo[2]);
                    let w = grid.h[a] * 0.5 * (v[c0][a] + v[c1][a]);
                    if w == 0.0 {
                        continue;
                    }
                    let corner = |db: usize, dc: usize| {
                        let mut q = lo;
                        q[b] += db;
                        q[cax] += dc;
                        pt(grid.node_pos(q[0], q[1], q[2]))
                    };
                    // (e_b, e_c) is positively oriented for ⋆e_a
                    let (p00, p10, p11, p01) = (corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1));
                    c.push(vec![p00, p10, p11], w)?;
                    c.push(vec![p00, p11, p01], w)?;
                }
            }
        }
    }
    Ok(c)
}

fn on_box_boundary(grid: &Grid, p: &Point, q: &Point) -> bool {
    let tol = 1e-9 * grid.h_min();
    (0..3).any(|a| {
        let lo = grid.domain.lo[a];
        let hi = grid.domain.hi[a];
        ((p[a] - lo).abs() <= tol && (q[a] - lo).abs() <= tol) || ((p[a] - hi).abs() <= tol && (q[a] - hi).abs() <= tol)
    })
}

/// `∂[⋆v]` with the part on `∂Ω` removed.
pub fn curl_chain(grid: &Grid, v: &[[f64; 3]]) -> Result<SimplicialCurrent> {
    let b = star_chain(grid, v)?.boundary()?;
    let mut out = SimplicialCurrent::new(grid.domain, 1)?;
    for t in b.terms() {
        let (p, q) = (&t.simplex.vertices[0], &t.simplex.vertices[1]);
        if !on_box_boundary(grid, p, q) {
            out.push(vec![*p, *q], t.mult)?;
        }
    }
    Ok(out.canonical())
}

/// Row-wise curl chains of a cell-constant matrix field.
pub fn curl_chain_rows(p: &CellField) -> Result<[SimplicialCurrent; 3]> {
    let row = |r: usize| -> Vec<[f64; 3]> { p.values.iter().map(|m| [m[3 * r], m[3 * r + 1], m[3 * r + 2]]).collect() };
    Ok([curl_chain(&p.grid, &row(0))?, curl_chain(&p.grid, &row(1))?, curl_chain(&p.grid, &row(2))?])
}

/// Sampled curl per grid edge: `(edge midpoint, axis, weight / cross-section)`.
pub fn edge_curl_samples(grid: &Grid, chain: &SimplicialCurrent) -> Vec<([f64; 3], usize, f64)> {
    let mut out = Vec::new();
    for t in chain.terms() {
        let (p, q) = (&t.simplex.vertices[0], &t.simplex.vertices[1]);
        let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        let Some(axis) = (0..3).find(|&a| d[a].abs() > 0.5 * grid.h[a]) else { continue };
        if (0..3).any(|a| a != axis && d[a].abs() > 1e-9 * grid.h_min()) {
            continue;
        }
        let sign = d[axis].signum();
        let cross = grid.h[(axis + 1) % 3] * grid.h[(axis + 2) % 3];
        // collinear edges of equal weight may have been merged: split per cell edge
        let pieces = (d[axis].abs() / grid.h[axis]).round().max(1.0) as usize;
        for s in 0..pieces {
            let f = (s as f64 + 0.5) / pieces as f64;
            let mid = [p[0] + f * d[0], p[1] + f * d[1], p[2] + f * d[2]];
            out.push((mid, axis, sign * t.mult / cross));
        }
    }
    out
}
