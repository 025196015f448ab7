//! Flat norm and minimal fillings of chains on a background complex.

use crate::chain::SimplicialCurrent;
use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::lp::LinearProgram;

/// Optimal decomposition `T = ∂Q + R`.
#[derive(Debug, Clone)]
pub struct FlatDecomposition {
    pub value: f64,
    pub filling: SimplicialCurrent,
    pub remainder: SimplicialCurrent,
}

impl FlatDecomposition {
    fn trivial(t: &SimplicialCurrent, complex: &SimplicialComplex) -> Result<Self> {
        let k = t.grade();
        let filling = SimplicialCurrent::new(*complex.domain(), k + 1)?;
        Ok(Self { value: 0.0, filling, remainder: t.zero_like() })
    }
}

fn solve(t: &SimplicialCurrent, complex: &SimplicialComplex, allow_remainder: bool) -> Result<FlatDecomposition> {
    let k = t.grade();
    if k >= complex.top_grade() {
        return Err(Error::GradeOverflow { grade: k + 1, dim: complex.top_grade() });
    }
    let coeffs = complex.chain_coefficients(t)?;
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || coeffs.iter().all(|c| c.abs() <= 1e-14 * scale.max(1.0)) {
        return FlatDecomposition::trivial(t, complex);
    }
    let cols = complex.boundary_columns(k + 1);
    let nf = complex.num_faces(k);
    let mut lp = LinearProgram::new();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nf];
    let mut qvars = Vec::with_capacity(cols.len());
    for (j, col) in cols.iter().enumerate() {
        let a = complex.face_volume(k + 1, j);
        let qp = lp.add_var(a);
        let qm = lp.add_var(a);
        for &(r, s) in col {
            rows[r].push((qp, s));
            rows[r].push((qm, -s));
        }
        qvars.push((qp, qm));
    }
    let mut rvars = Vec::new();
    if allow_remainder {
        for (r, row) in rows.iter_mut().enumerate() {
            let l = complex.face_volume(k, r);
            let rp = lp.add_var(l);
            let rm = lp.add_var(l);
            row.push((rp, 1.0));
            row.push((rm, -1.0));
            rvars.push((rp, rm));
        }
    }
    for (row, rhs) in rows.into_iter().zip(&coeffs) {
        if row.is_empty() {
            if rhs.abs() > 0.0 {
                return Err(Error::OpenBoundary("chain is not a boundary in the complex".into()));
            }
            continue;
        }
        lp.add_eq(row, *rhs);
    }
    let sol = lp.solve()?;
    let q: Vec<f64> = qvars.iter().map(|&(p, m)| sol.x[p] - sol.x[m]).collect();
    let filling = complex.chain_from_coefficients(k + 1, &q).canonical();
    let remainder = if allow_remainder {
        let r: Vec<f64> = rvars.iter().map(|&(p, m)| sol.x[p] - sol.x[m]).collect();
        complex.chain_from_coefficients(k, &r).canonical()
    } else {
        t.zero_like()
    };
    Ok(FlatDecomposition { value: sol.objective, filling, remainder })
}

/// `min { M(Q) + M(R) : T = ∂Q + R }` over chains of the complex.
pub fn flat_norm(t: &SimplicialCurrent, complex: &SimplicialComplex) -> Result<FlatDecomposition> {
    solve(t, complex, true)
}

/// Minimal-mass `Q` with `∂Q = T` on the complex.
pub fn min_filling(t: &SimplicialCurrent, complex: &SimplicialComplex) -> Result<FlatDecomposition> {
    let d = solve(t, complex, false)?;
    if d.value == 0.0 && !t.normalized().is_empty() {
        return Err(Error::OpenBoundary("nonzero chain has no filling".into()));
    }
    Ok(d)
}

/// Flat norm of a free-floating 1-current on the cone over its own support.
/// This is an upper bound for the unrestricted flat norm.
pub fn flat_norm_cone(t: &SimplicialCurrent) -> Result<FlatDecomposition> {
    let tn = t.normalized();
    if tn.is_empty() {
        let c = SimplicialComplex::new(*t.domain(), t.grade() + 1)?;
        return FlatDecomposition::trivial(t, &c);
    }
    let complex = SimplicialComplex::cone_at_centroid(&tn)?;
    flat_norm(&tn, &complex)
}

/// Flat distance `F(a − b)`, on the given complex or on a cone complex.
pub fn flat_distance(
    a: &SimplicialCurrent,
    b: &SimplicialCurrent,
    complex: Option<&SimplicialComplex>,
) -> Result<f64> {
    let d = a.sub(b)?;
    match complex {
        Some(c) => Ok(flat_norm(&d, c)?.value),
        None => Ok(flat_norm_cone(&d)?.value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{p3, BoxDomain};

    #[test]
    fn single_triangle_boundary() {
        let dom = BoxDomain::cube3(-1.0, 3.0);
        let mut c = SimplicialComplex::new(dom, 2).unwrap();
        let (a, b, d) = (p3(0., 0., 0.), p3(2., 0., 0.), p3(0., 2., 0.));
        c.add_simplex(&[a, b, d]).unwrap();
        let t = SimplicialCurrent::polyline(dom, &[a, b, d], 1.0, true).unwrap();
        let f = flat_norm(&t, &c).unwrap();
        // area 2 < perimeter 4 + 2√2
        assert!((f.value - 2.0).abs() < 1e-9);
        let small = SimplicialCurrent::polyline(dom, &[a, b, d], 1.0, true).unwrap();
        assert!(f.value <= small.mass());
        assert!(flat_norm(&t.zero_like(), &c).unwrap().value == 0.0);
    }

    #[test]
    fn off_complex_chain_is_rejected() {
        let dom = BoxDomain::cube3(-1.0, 3.0);
        let c = SimplicialComplex::planar_grid(dom, (0., 1.), (0., 1.), (2, 2), 0.0).unwrap();
        let t = SimplicialCurrent::polyline(dom, &[p3(0.1, 0.1, 0.), p3(0.9, 0.3, 0.)], 1.0, false).unwrap();
        assert!(matches!(flat_norm(&t, &c), Err(Error::NotOnComplex(_))));
    }
}
