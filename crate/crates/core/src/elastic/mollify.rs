//! Spreading the singular part of a plastic distortion onto grid cells.

use crate::dislocation::{PlasticDistortion, SurfaceTerm};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{outer, CellField, Grid};

/// Compact kernel `(1 − r²/δ²)³` on `r < δ`.
fn kernel(r2: f64, delta2: f64) -> f64 {
    let s = 1.0 - r2 / delta2;
    if s > 0.0 {
        s * s * s
    } else {
        0.0
    }
}

/// Quadrature points of a triangle: centroids of a uniform `s × s`
/// subdivision, each carrying `area / s²`.
pub fn triangle_samples(tri: &[Point; 3], spacing: f64) -> Vec<([f64; 3], f64)> {
    let e = |a: &Point, b: &Point| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let longest = e(&tri[0], &tri[1]).max(e(&tri[1], &tri[2])).max(e(&tri[2], &tri[0]));
    let s = ((longest / spacing).ceil() as usize).max(1);
    let area = SurfaceTerm { triangle: *tri, weight: [0.0; 3] }.area();
    let w = area / (s * s) as f64;
    let at = |u: f64, v: f64| -> [f64; 3] {
        std::array::from_fn(|k| tri[0][k] + u * (tri[1][k] - tri[0][k]) + v * (tri[2][k] - tri[0][k]))
    };
    let sf = s as f64;
    let mut out = Vec::with_capacity(s * s);
    for i in 0..s {
        for j in 0..s - i {
            out.push((at((i as f64 + 1.0 / 3.0) / sf, (j as f64 + 1.0 / 3.0) / sf), w));
            if i + j + 2 <= s {
                out.push((at((i as f64 + 2.0 / 3.0) / sf, (j as f64 + 2.0 / 3.0) / sf), w));
            }
        }
    }
    out
}

/// Cells within `delta` of `x` with weights `k(x − ·) / (Σk · |cell|)`.
///
/// The kernel is normalized over the cells inside the box, so a deposit of
/// `m` integrates exactly to `m`.
pub fn kernel_weights(grid: &Grid, x: [f64; 3], delta: f64) -> Vec<(usize, f64)> {
    let d2 = delta * delta;
    let mut range = [(0usize, 0usize); 3];
    for a in 0..3 {
        let lo = ((x[a] - delta - grid.domain.lo[a]) / grid.h[a] - 0.5).floor().max(0.0) as usize;
        let hi = (((x[a] + delta - grid.domain.lo[a]) / grid.h[a] - 0.5).ceil().max(0.0) as usize).min(grid.n[a] - 1);
        range[a] = (lo.min(grid.n[a] - 1), hi);
    }
    let mut cells = Vec::new();
    let mut total = 0.0;
    for i in range[0].0..=range[0].1 {
        for j in range[1].0..=range[1].1 {
            for k in range[2].0..=range[2].1 {
                let c = grid.cell_index(i, j, k);
                let cc = grid.cell_center(c);
                let r2 = (0..3).map(|a| (cc[a] - x[a]).powi(2)).sum::<f64>();
                let w = kernel(r2, d2);
                if w > 0.0 {
                    cells.push((c, w));
                    total += w;
                }
            }
        }
    }
    if total == 0.0 {
        // sample far outside the box: fall back to the nearest cell
        let clamped: [f64; 3] = std::array::from_fn(|a| x[a].clamp(grid.domain.lo[a], grid.domain.hi[a]));
        if let Some(c) = grid.locate(&clamped) {
            cells.push((c, 1.0));
            total = 1.0;
        }
    }
    let f = 1.0 / (total * grid.cell_volume());
    for (_, w) in &mut cells {
        *w *= f;
    }
    cells
}

/// Add `m · k(x − ·) / Σk` to every cell within `delta` of `x`.
pub fn deposit(field: &mut CellField, x: [f64; 3], m: &[f64; 9], delta: f64) {
    let grid = field.grid;
    for (c, w) in kernel_weights(&grid, x, delta) {
        for k in 0..9 {
            field.values[c][k] += w * m[k];
        }
    }
}

/// `p_δ`: the cell-constant part of `p` plus its surfaces mollified at radius `delta`.
pub fn mollify(p: &PlasticDistortion, grid: &Grid, delta: f64) -> Result<CellField> {
    if delta < 2.0 * grid.h_max() {
        return Err(Error::MollifierUnderResolved { delta, min: 2.0 * grid.h_max() });
    }
    let mut field = match p.cells() {
        Some(ac) if ac.grid == *grid => ac.clone(),
        Some(_) => return Err(Error::Invalid("cell-constant distortion lives on a different grid".into())),
        None => CellField::zeros(*grid),
    };
    let spacing = 0.5 * grid.h_min();
    for s in p.surfaces() {
        let n = s.normal();
        for (x, w) in triangle_samples(&s.triangle, spacing) {
            let m = outer([s.weight[0] * w, s.weight[1] * w, s.weight[2] * w], n);
            deposit(&mut field, x, &m, delta);
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{p3, BoxDomain};

    #[test]
    fn samples_cover_the_triangle() {
        let tri = [p3(0.0, 0.0, 0.0), p3(1.0, 0.0, 0.0), p3(0.0, 2.0, 0.0)];
        let s = triangle_samples(&tri, 0.3);
        assert_eq!(s.len(), 64);
        let area: f64 = s.iter().map(|(_, w)| w).sum();
        assert!((area - 1.0).abs() < 1e-14);
        // first moments are exact for the midpoint rule on a uniform subdivision
        let mx: f64 = s.iter().map(|(x, w)| x[0] * w).sum();
        assert!((mx - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn preserves_integral() {
        let grid = Grid::cube(0.0, 1.0, 8);
        let mut p = PlasticDistortion::zero(BoxDomain::cube3(0.0, 1.0));
        p.add_surface([p3(0.3, 0.3, 0.5), p3(0.7, 0.3, 0.5), p3(0.7, 0.7, 0.5)], [0.5, 0.0, 0.0]);
        p.add_surface([p3(0.02, 0.1, 0.9), p3(0.2, 0.1, 0.98), p3(0.1, 0.3, 0.95)], [0.1, -0.2, 0.3]);
        let f = mollify(&p, &grid, 3.0 * grid.h_max()).unwrap();
        let got = f.integral();
        let want = p.integral();
        let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in 0..9 {
            assert!((got[k] - want[k]).abs() <= 1e-10 * scale);
        }
        assert!(mollify(&p, &grid, 1.5 * grid.h_max()).is_err());
    }
}
