//! Dissipation potentials, core energy and the dissipation functional.

use serde::{Deserialize, Serialize};

use crate::algebra::{star_bivector3, MultiVector};
use crate::dislocation::{norm3, DislocationSystem, SlipFamily};
use crate::error::{Error, Result};
use crate::tension::LineTension;

/// `R(ξ) = ρ (|⟨v, n⟩| + κ |v − ⟨v, n⟩ n|)` with `v = ⋆p(ξ)` the swept
/// normal; without a slip-plane normal `R(ξ) = ρ |p(ξ)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationPotential {
    pub rho: f64,
    pub kappa: f64,
    pub normal: Option<[f64; 3]>,
}

impl DissipationPotential {
    pub fn new(rho: f64, kappa: f64, normal: Option<[f64; 3]>) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Invalid("glide weight rho must be positive".into()));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::Invalid("climb penalty kappa must be at least 1".into()));
        }
        let normal = match normal {
            Some(n) => {
                let l = norm3(&n);
                if !(l > 1e-12) {
                    return Err(Error::Invalid("slip-plane normal must be nonzero".into()));
                }
                Some([n[0] / l, n[1] / l, n[2] / l])
            }
            None => None,
        };
        Ok(Self { rho, kappa, normal })
    }

    pub fn isotropic(rho: f64) -> Result<Self> {
        Self::new(rho, 1.0, None)
    }

    /// `R` on the swept normal vector `⋆p(ξ)`.
    pub fn eval_normal(&self, v: [f64; 3]) -> f64 {
        match self.normal {
            None => self.rho * norm3(&v),
            Some(n) => {
                let a = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
                let c = [v[0] - a * n[0], v[1] - a * n[1], v[2] - a * n[2]];
                self.rho * (a.abs() + self.kappa * norm3(&c))
            }
        }
    }

    /// `R(ξ)` for a space-time 2-vector `ξ`.
    pub fn eval(&self, xi: &MultiVector) -> Result<f64> {
        if xi.dim() != 4 || xi.grade() != 2 {
            return Err(Error::Invalid("dissipation potentials act on space-time 2-vectors".into()));
        }
        Ok(self.eval_normal(star_bivector3(&xi.spatial_part()?)))
    }

    /// `C` with `C⁻¹|p(ξ)| ≤ R(ξ) ≤ C|p(ξ)|`.
    pub fn comparability_constant(&self) -> f64 {
        let upper = match self.normal {
            None => self.rho,
            Some(_) => self.rho * self.kappa * std::f64::consts::SQRT_2,
        };
        upper.max(1.0 / self.rho)
    }
}

/// `h(z) = a z` up to `z₀`, then `a z + c (z − z₀)³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreEnergy {
    pub slope: f64,
    pub threshold: f64,
    pub cubic: f64,
}

impl Default for CoreEnergy {
    fn default() -> Self {
        Self { slope: 1.0, threshold: 10.0, cubic: 1.0 }
    }
}

impl CoreEnergy {
    pub fn new(slope: f64, threshold: f64, cubic: f64) -> Result<Self> {
        if !(slope > 0.0 && threshold >= 0.0 && cubic > 0.0) || ![slope, threshold, cubic].iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid("core energy needs slope > 0, threshold ≥ 0, cubic > 0".into()));
        }
        Ok(Self { slope, threshold, cubic })
    }

    pub fn h(&self, z: f64) -> f64 {
        let tail = (z - self.threshold).max(0.0);
        self.slope * z + self.cubic * tail * tail * tail
    }

    /// Smallest `C` (to 1%) with `h(z) ≥ z³/C − C` on `samples` points of `[0, z_max]`.
    pub fn growth_constant(&self, z_max: f64, samples: usize) -> f64 {
        let zs: Vec<f64> = (0..=samples).map(|i| z_max * i as f64 / samples as f64).collect();
        let ok = |c: f64| zs.iter().all(|&z| self.h(z) >= z * z * z / c - c);
        let mut c = 1.0;
        while !ok(c) {
            c *= 1.01;
        }
        c
    }

    /// `W_c(T) = h(Σ_{b ∈ B} M_{ψ^b}(T^b))`, the sum running over both signs.
    pub fn energy(&self, t: &DislocationSystem, tensions: &[LineTension]) -> Result<f64> {
        Ok(self.h(psi_mass(t, tensions)?))
    }
}

/// `Σ_{b ∈ B} M_{ψ^b}(T^b) = 2 Σ_i M_{ψ^{b_i}}(T^{b_i})`.
pub fn psi_mass(t: &DislocationSystem, tensions: &[LineTension]) -> Result<f64> {
    if tensions.len() != t.lines().len() {
        return Err(Error::DimensionMismatch(tensions.len(), t.lines().len()));
    }
    let mut acc = 0.0;
    for (l, psi) in t.lines().iter().zip(tensions) {
        acc += 2.0 * psi.mass(l)?;
    }
    Ok(acc)
}

/// `Diss(S; I) = ½ Σ_{±b} ∫_{I×R³} R^b(S⃗^b) d|S^b| = Σ_i ∫ R^{b_i}(S⃗^{b_i}) d|S^{b_i}|`.
pub fn dissipation(slip: &SlipFamily, potentials: &[DissipationPotential], i: (f64, f64)) -> Result<f64> {
    if potentials.len() != slip.len() {
        return Err(Error::DimensionMismatch(potentials.len(), slip.len()));
    }
    let mut acc = 0.0;
    for (s, r) in slip.slips().iter().zip(potentials) {
        acc += s.integrate(i, |g| r.eval(&g.unit).unwrap_or(0.0));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_is_homogeneous_convex_and_comparable() {
        let r = DissipationPotential::new(2.0, 3.0, Some([0.0, 0.0, 2.0])).unwrap();
        let c = r.comparability_constant();
        let vs = [[0.3, -0.4, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0], [0.2, 0.7, -0.1]];
        for v in &vs {
            let rv = r.eval_normal(*v);
            assert!((r.eval_normal([3.0 * v[0], 3.0 * v[1], 3.0 * v[2]]) - 3.0 * rv).abs() < 1e-12);
            assert!(rv >= norm3(v) / c - 1e-12 && rv <= c * norm3(v) + 1e-12);
            for w in &vs {
                let m = [(v[0] + w[0]) / 2.0, (v[1] + w[1]) / 2.0, (v[2] + w[2]) / 2.0];
                assert!(r.eval_normal(m) <= 0.5 * (rv + r.eval_normal(*w)) + 1e-12);
            }
        }
        // pure glide costs ρ per unit area, pure climb κρ
        assert!((r.eval_normal([0.0, 0.0, 1.0]) - 2.0).abs() < 1e-15);
        assert!((r.eval_normal([1.0, 0.0, 0.0]) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn core_energy_growth() {
        let h = CoreEnergy::new(1.0, 2.0, 0.5).unwrap();
        assert_eq!(h.h(0.0), 0.0);
        assert_eq!(h.h(1.5), 1.5);
        assert!((h.h(4.0) - (4.0 + 0.5 * 8.0)).abs() < 1e-12);
        let c = h.growth_constant(100.0, 1000);
        for z in [0.0, 1.0, 5.0, 37.0, 100.0] {
            assert!(h.h(z) >= z * z * z / c - c);
        }
    }
}
