//! Exterior algebra of R^n (n ≤ 4) with the Euclidean inner product.
//!
//! Basis k-vectors are indexed by strictly increasing index tuples in
//! lexicographic order. In four dimensions index 0 is the time direction
//! `e0` and indices 1..=3 are space; in three dimensions indices 0..=2 stand
//! for `e1, e2, e3`. Covectors are identified with vectors through the
//! Euclidean metric, so the same type serves for both.

use crate::error::{Error, Result};

const MAX_DIM: usize = 4;

/// Bitmasks of the basis blades of grade `k` in dimension `dim`, lexicographic.
fn basis_masks(dim: usize, k: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > dim {
        return out;
    }
    loop {
        out.push(idx.iter().fold(0u8, |m, &i| m | (1 << i)));
        // advance to the next combination
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] < dim - k + pos {
                idx[pos] += 1;
                for q in pos + 1..k {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

fn mask_index(dim: usize, k: usize, mask: u8) -> usize {
    basis_masks(dim, k)
        .iter()
        .position(|&m| m == mask)
        .expect("mask of matching grade")
}

/// Sign of the shuffle that sorts the concatenation (I, J) of two disjoint
/// increasing index sets.
fn merge_sign(a: u8, b: u8) -> f64 {
    let mut inversions = 0u32;
    for i in 0..8 {
        if a & (1 << i) != 0 {
            // count elements of b below i
            inversions += (b & ((1u8 << i) - 1)).count_ones();
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    dim: usize,
    grade: usize,
    coeffs: Vec<f64>,
}

impl MultiVector {
    pub fn zero(dim: usize, grade: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if grade > dim {
            return Err(Error::GradeOverflow { grade, dim });
        }
        Ok(Self {
            dim,
            grade,
            coeffs: vec![0.0; binomial(dim, grade)],
        })
    }

    pub fn from_coeffs(dim: usize, grade: usize, coeffs: Vec<f64>) -> Result<Self> {
        let mut mv = Self::zero(dim, grade)?;
        if coeffs.len() != mv.coeffs.len() {
            return Err(Error::Invalid(format!(
                "expected {} coefficients for grade {grade} in dimension {dim}, got {}",
                mv.coeffs.len(),
                coeffs.len()
            )));
        }
        mv.coeffs = coeffs;
        Ok(mv)
    }

    pub fn scalar(dim: usize, s: f64) -> Result<Self> {
        Self::from_coeffs(dim, 0, vec![s])
    }

    pub fn vector(v: &[f64]) -> Result<Self> {
        Self::from_coeffs(v.len(), 1, v.to_vec())
    }

    /// The blade `e_{i1} ∧ … ∧ e_{ik}` for arbitrary (distinct) indices; the
    /// permutation sign is absorbed into the coefficient.
    pub fn blade(dim: usize, indices: &[usize]) -> Result<Self> {
        let k = indices.len();
        let mut mv = Self::zero(dim, k)?;
        let mut mask = 0u8;
        let mut sign = 1.0;
        for &i in indices {
            if i >= dim {
                return Err(Error::Invalid(format!("index {i} out of range for dimension {dim}")));
            }
            if mask & (1 << i) != 0 {
                return Ok(mv);
            }
            sign *= merge_sign(mask, 1 << i);
            mask |= 1 << i;
        }
        let idx = mask_index(dim, k, mask);
        mv.coeffs[idx] = sign;
        Ok(mv)
    }

    /// `v_1 ∧ … ∧ v_k` for vectors given by their components.
    pub fn wedge_vectors(dim: usize, vs: &[&[f64]]) -> Result<Self> {
        let mut acc = Self::scalar(dim, 1.0)?;
        for v in vs {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(v.len(), dim));
            }
            acc = wedge(&acc, &Self::vector(v)?)?;
        }
        Ok(acc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Index tuples of the basis blades, aligned with `coeffs()`.
    pub fn basis(&self) -> Vec<Vec<usize>> {
        basis_masks(self.dim, self.grade)
            .into_iter()
            .map(|m| (0..self.dim).filter(|i| m & (1 << i) != 0).collect())
            .collect()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    /// Euclidean norm; equals the mass norm for simple k-vectors.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            grade: self.grade,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            dim: self.dim,
            grade: self.grade,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// The image under the projection p(t, x) = x of R^{1+3} onto R^3,
    /// i.e. the part free of `e0`, re-indexed into three dimensions.
    pub fn spatial_part(&self) -> Result<Self> {
        if self.dim != 4 {
            return Err(Error::DimensionMismatch(self.dim, 4));
        }
        let mut out = Self::zero(3, self.grade.min(3))?;
        if self.grade > 3 {
            return Self::zero(3, 0);
        }
        for (c, m) in self.coeffs.iter().zip(basis_masks(4, self.grade)) {
            if m & 1 == 0 {
                let idx = mask_index(3, self.grade, m >> 1);
                out.coeffs[idx] += c;
            }
        }
        Ok(out)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.grade != other.grade {
            return Err(Error::Invalid(format!(
                "grade mismatch: {} vs {}",
                self.grade, other.grade
            )));
        }
        Ok(())
    }
}

pub fn wedge(a: &MultiVector, b: &MultiVector) -> Result<MultiVector> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(a.dim, b.dim));
    }
    let dim = a.dim;
    let grade = a.grade + b.grade;
    if grade > dim {
        return Err(Error::GradeOverflow { grade, dim });
    }
    let mut out = MultiVector::zero(dim, grade)?;
    let out_masks = basis_masks(dim, grade);
    let bm = basis_masks(dim, b.grade);
    for (ca, ma) in a.coeffs.iter().zip(basis_masks(dim, a.grade)) {
        if *ca == 0.0 {
            continue;
        }
        for (cb, &mb) in b.coeffs.iter().zip(&bm) {
            if ma & mb != 0 || *cb == 0.0 {
                continue;
            }
            let idx = out_masks.iter().position(|&m| m == ma | mb).unwrap();
            out.coeffs[idx] += merge_sign(ma, mb) * ca * cb;
        }
    }
    Ok(out)
}

/// Hodge star, fixed by `ξ ∧ ⋆η = ⟨ξ, η⟩ e_1 ∧ … ∧ e_n`.
pub fn hodge_star(a: &MultiVector) -> MultiVector {
    let dim = a.dim;
    let full = ((1u16 << dim) - 1) as u8;
    let mut out = MultiVector::zero(dim, dim - a.grade).expect("complement grade fits");
    let out_masks = basis_masks(dim, dim - a.grade);
    for (c, m) in a.coeffs.iter().zip(basis_masks(dim, a.grade)) {
        let comp = full & !m;
        let idx = out_masks.iter().position(|&x| x == comp).unwrap();
        out.coeffs[idx] += merge_sign(m, comp) * c;
    }
    out
}

/// Interior product `η ⌐ α` of a k-vector by an l-covector, defined by
/// `⟨η ⌐ α, β⟩ = ⟨η, α ∧ β⟩` for all (k−l)-vectors β.
pub fn interior(eta: &MultiVector, alpha: &MultiVector) -> Result<MultiVector> {
    if eta.dim != alpha.dim {
        return Err(Error::DimensionMismatch(eta.dim, alpha.dim));
    }
    if alpha.grade > eta.grade {
        return Err(Error::GradeUnderflow {
            outer: eta.grade,
            inner: alpha.grade,
        });
    }
    let dim = eta.dim;
    let grade = eta.grade - alpha.grade;
    let mut out = MultiVector::zero(dim, grade)?;
    let eta_masks = basis_masks(dim, eta.grade);
    for (co, mj) in out.coeffs.iter_mut().zip(basis_masks(dim, grade)) {
        for (ca, mi) in alpha.coeffs.iter().zip(basis_masks(dim, alpha.grade)) {
            if mi & mj != 0 || *ca == 0.0 {
                continue;
            }
            let idx = eta_masks.iter().position(|&m| m == mi | mj).unwrap();
            *co += merge_sign(mi, mj) * ca * eta.coeffs[idx];
        }
    }
    Ok(out)
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Vector of a grade-2 multivector in R^3 under ⋆ (the normal of an oriented plane).
pub fn star_bivector3(a: &MultiVector) -> [f64; 3] {
    debug_assert!(a.dim == 3 && a.grade == 2);
    let s = hodge_star(a);
    [s.coeffs[0], s.coeffs[1], s.coeffs[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_lexicographic() {
        let mv = MultiVector::zero(4, 2).unwrap();
        assert_eq!(
            mv.basis(),
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }

    #[test]
    fn wedge_basis_and_antisymmetry() {
        let e1 = MultiVector::blade(3, &[0]).unwrap();
        let e2 = MultiVector::blade(3, &[1]).unwrap();
        assert_eq!(wedge(&e1, &e2).unwrap().coeffs(), &[1.0, 0.0, 0.0]);
        let s = e1.add(&e2).unwrap();
        assert_eq!(wedge(&s, &e1).unwrap().coeffs(), &[-1.0, 0.0, 0.0]);
        assert_eq!(wedge(&e1, &e1).unwrap().norm(), 0.0);
    }

    #[test]
    fn grade_overflow_is_reported() {
        let a = MultiVector::blade(3, &[0, 1]).unwrap();
        let err = wedge(&a, &a).unwrap_err();
        assert!(err.to_string().contains("grade exceeds ambient dimension"));
    }

    #[test]
    fn hodge_examples() {
        let e1 = MultiVector::blade(3, &[0]).unwrap();
        assert_eq!(hodge_star(&e1), MultiVector::blade(3, &[1, 2]).unwrap());
        let e12 = MultiVector::blade(3, &[0, 1]).unwrap();
        assert_eq!(hodge_star(&e12), MultiVector::blade(3, &[2]).unwrap());
    }

    #[test]
    fn interior_examples() {
        let s = MultiVector::blade(4, &[0, 1]).unwrap();
        let dt = MultiVector::blade(4, &[0]).unwrap();
        assert_eq!(interior(&s, &dt).unwrap(), MultiVector::blade(4, &[1]).unwrap());
        let e12 = MultiVector::blade(3, &[0, 1]).unwrap();
        let dx3 = MultiVector::blade(3, &[2]).unwrap();
        assert_eq!(interior(&e12, &dx3).unwrap().norm(), 0.0);
        assert!(interior(&dt, &s).is_err());
    }

    #[test]
    fn spatial_part_drops_time() {
        let s = MultiVector::blade(4, &[0, 1]).unwrap();
        assert_eq!(s.spatial_part().unwrap().norm(), 0.0);
        let s = MultiVector::blade(4, &[1, 3]).unwrap();
        assert_eq!(s.spatial_part().unwrap(), MultiVector::blade(3, &[0, 2]).unwrap());
    }
}
