//! Approximation of real-coefficient initial dislocations by εℤ-chains and the
//! study of ε-uniform bounds along the resulting evolutions.

use std::path::Path;

use serde::Serialize;

use crate::dislocation::DislocationSystem;
use crate::error::{Error, Result};
use crate::flat::flat_distance;
use crate::geometry::BoxDomain;
use crate::scenario::{LoopSection, ScenarioConfig};

use super::loops::{extract_loops, Loop};
use super::scheme::Trace;

/// `x` rounded to the nearest integer, halves towards zero.
fn round_half_down(x: f64) -> f64 {
    x.signum() * (x.abs() - 0.5 - 1e-12).ceil().max(0.0)
}

/// Rounds loop multiplicities to `εℤ` by error diffusion within each Burgers
/// index (loops taken in order), so the summed multiplicity per index moves by
/// less than `ε/2`. Loops rounded to zero are dropped.
pub fn round_loops(loops: &[Loop], eps: f64) -> Result<Vec<Loop>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid("epsilon must be positive".into()));
    }
    let nb = loops.iter().map(|l| l.burgers + 1).max().unwrap_or(0);
    let mut carry = vec![0.0; nb];
    let mut out = Vec::new();
    for l in loops {
        let target = l.mult + carry[l.burgers];
        let q = round_half_down(target / eps) * eps;
        carry[l.burgers] = target - q;
        if q != 0.0 {
            out.push(Loop { mult: q, ..l.clone() });
        }
    }
    Ok(out)
}

/// Nearest-point retraction of loop vertices onto the closed domain.
pub fn retract_loops(loops: &[Loop], domain: &BoxDomain) -> Vec<Loop> {
    loops
        .iter()
        .filter_map(|l| {
            let vertices = l
                .vertices
                .iter()
                .map(|v| {
                    let mut w = *v;
                    for (a, c) in w.iter_mut().enumerate() {
                        *c = c.clamp(domain.lo[a], domain.hi[a]);
                    }
                    w
                })
                .collect();
            Loop { vertices, ..l.clone() }.simplified()
        })
        .collect()
}

/// Evolution bounds of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub sup_p_mass: f64,
    pub sup_slice_mass: f64,
    pub var_p: f64,
    pub var_s: f64,
}

impl Bounds {
    pub fn from_trace(t: &Trace) -> Self {
        let e = &t.estimates;
        Self { sup_p_mass: e.sup_p_mass, sup_slice_mass: e.sup_slice_mass, var_p: e.var_p, var_s: e.var_s }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.sup_p_mass, self.sup_slice_mass, self.var_p, self.var_s]
    }

    pub const NAMES: [&'static str; 4] = ["sup_p_mass", "sup_slice_mass", "var_p", "var_s"];
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub loops: usize,
    pub initial_mass: f64,
    pub annihilated: bool,
    pub bounds: Bounds,
    pub diss_total: f64,
    /// Summed flat distance to the finest run at each matched step.
    pub flat_to_finest: Vec<f64>,
    #[serde(skip)]
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonReport {
    pub runs: Vec<EpsilonRun>,
    /// `(max − min) / max` across ε for each bound, in `Bounds::NAMES` order.
    pub spread: [f64; 4],
    pub max_spread: f64,
    /// One constant bounding all four quantities for every ε.
    pub constant: f64,
    /// Largest matched-time flat distance to the finest run, per ε.
    pub flat_sup: Vec<f64>,
    /// Whether `flat_sup` does not increase as ε decreases.
    pub flat_monotone: bool,
    pub warnings: Vec<String>,
}

impl EpsilonReport {
    pub fn uniform(&self, tol: f64) -> bool {
        self.max_spread < tol
    }
}

/// Flat distance between two systems, summed over Burgers indices (cone complexes).
pub fn system_flat_distance(a: &DislocationSystem, b: &DislocationSystem) -> Result<f64> {
    if a.lines().len() != b.lines().len() {
        return Err(Error::DimensionMismatch(a.lines().len(), b.lines().len()));
    }
    let mut acc = 0.0;
    for (x, y) in a.lines().iter().zip(b.lines()) {
        acc += flat_distance(&x.clone().without_quantum(), &y.clone().without_quantum(), None)?;
    }
    Ok(acc)
}

/// The configuration with its initial dislocations approximated at `eps`.
pub fn approximate(config: &ScenarioConfig, base: Option<&Path>, eps: f64) -> Result<(ScenarioConfig, bool)> {
    let real = config.real_system(base)?;
    let loops = retract_loops(&extract_loops(&real)?, &config.domain());
    let rounded = round_loops(&loops, eps)?;
    let annihilated = !loops.is_empty() && rounded.is_empty();
    let mut c = config.clone();
    c.solver.epsilon = eps;
    c.dislocations.file = None;
    c.dislocations.loops =
        rounded.into_iter().map(|l| LoopSection { burgers: l.burgers, mult: l.mult, vertices: l.vertices }).collect();
    Ok((c, annihilated))
}

/// Runs the scheme once per `ε` (finest last is not required) and compares
/// the a-posteriori bounds and the matched-time traces.
pub fn epsilon_study(config: &ScenarioConfig, base: Option<&Path>, eps: &[f64]) -> Result<EpsilonReport> {
    epsilon_study_with(config, base, eps, |_| {})
}

pub fn epsilon_study_with(
    config: &ScenarioConfig,
    base: Option<&Path>,
    eps: &[f64],
    mut progress: impl FnMut(&EpsilonRun),
) -> Result<EpsilonReport> {
    if eps.is_empty() {
        return Err(Error::Invalid("epsilon study needs at least one epsilon".into()));
    }
    config.check(base)?;
    let mut runs = Vec::with_capacity(eps.len());
    let mut warnings = Vec::new();
    for &e in eps {
        let (c, annihilated) = approximate(config, base, e)?;
        if annihilated {
            warnings.push(format!("epsilon = {e}: rounding annihilates all dislocations"));
        }
        let (scheme, init) = c.build(None)?;
        let initial_mass = init.system.joint_mass();
        let trace = scheme.run_evolution(init)?;
        let run = EpsilonRun {
            epsilon: e,
            loops: c.dislocations.loops.len(),
            initial_mass,
            annihilated,
            bounds: Bounds::from_trace(&trace),
            diss_total: trace.estimates.diss_total,
            flat_to_finest: Vec::new(),
            trace: Some(trace),
        };
        progress(&run);
        runs.push(run);
    }

    let finest = (0..runs.len()).min_by(|&a, &b| runs[a].epsilon.total_cmp(&runs[b].epsilon)).expect("nonempty");
    let reference: Vec<DislocationSystem> = runs[finest].trace.as_ref().expect("kept").systems.clone();
    for r in &mut runs {
        let systems = &r.trace.as_ref().expect("kept").systems;
        r.flat_to_finest =
            systems.iter().zip(&reference).map(|(a, b)| system_flat_distance(a, b)).collect::<Result<_>>()?;
    }

    let mut spread = [0.0; 4];
    let mut constant: f64 = 0.0;
    for (j, s) in spread.iter_mut().enumerate() {
        let vals: Vec<f64> = runs.iter().map(|r| r.bounds.as_array()[j]).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        *s = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
        constant = constant.max(hi);
    }
    let max_spread = spread.iter().cloned().fold(0.0, f64::max);

    let flat_sup: Vec<f64> = runs.iter().map(|r| r.flat_to_finest.iter().cloned().fold(0.0, f64::max)).collect();
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| runs[b].epsilon.total_cmp(&runs[a].epsilon));
    let flat_monotone = order.windows(2).all(|w| flat_sup[w[1]] <= flat_sup[w[0]] + 1e-12);

    Ok(EpsilonReport { runs, spread, max_spread, constant, flat_sup, flat_monotone, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(b: usize, m: f64) -> Loop {
        Loop { burgers: b, mult: m, vertices: vec![[0.0, 0.0, 0.5], [1.0, 0.0, 0.5], [0.0, 1.0, 0.5]] }
    }

    #[test]
    fn half_rounds_down_singly_and_diffuses_in_pairs() {
        assert!(round_loops(&[lp(0, 0.5)], 1.0).unwrap().is_empty());
        let r = round_loops(&[lp(0, 0.5), lp(0, 0.5), lp(0, 0.5), lp(0, 0.5)], 1.0).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|l| l.mult == 1.0));
        for e in [0.5, 0.25, 0.125] {
            let r = round_loops(&[lp(0, 0.5), lp(1, -0.5)], e).unwrap();
            assert_eq!(r.iter().map(|l| l.mult).collect::<Vec<_>>(), vec![0.5, -0.5]);
        }
    }

    #[test]
    fn diffusion_keeps_totals_per_index() {
        let ls: Vec<Loop> = [0.3, 0.7, 0.45, 1.2, 0.05, 0.33].iter().enumerate().map(|(i, m)| lp(i % 2, *m)).collect();
        for e in [1.0, 0.5, 0.25, 0.1] {
            let r = round_loops(&ls, e).unwrap();
            for b in 0..2 {
                let before: f64 = ls.iter().filter(|l| l.burgers == b).map(|l| l.mult).sum();
                let after: f64 = r.iter().filter(|l| l.burgers == b).map(|l| l.mult).sum();
                assert!((before - after).abs() <= e / 2.0 + 1e-12);
                assert!(r.iter().all(|l| ((l.mult / e).round() * e - l.mult).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn retraction_clamps_into_the_box() {
        let dom = BoxDomain::cube3(0.0, 1.0);
        let l = Loop { burgers: 0, mult: 1.0, vertices: vec![[-0.5, 0.2, 0.5], [0.8, 0.2, 0.5], [0.8, 1.4, 0.5]] };
        let r = retract_loops(&[l], &dom);
        assert_eq!(r.len(), 1);
        assert!(r[0].vertices.iter().all(|v| v.iter().all(|c| (0.0..=1.0).contains(c))));
        assert!(r[0].vertices.contains(&[0.0, 0.2, 0.5]));
    }
}
