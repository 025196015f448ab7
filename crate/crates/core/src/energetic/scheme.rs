//! Total energy, the time-incremental minimization scheme over a move
//! catalog, and the estimates recorded along a run.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::dislocation::{consistency_residual, plastic_flow, BurgersSystem, DislocationSystem, PlasticDistortion, SlipFamily};
use crate::elastic::{BetaSolution, ElasticModel};
use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, Point};
use crate::tension::LineTension;

use super::catalog::{Catalog, CatalogParams, Move};
use super::loops::{cross3, extract_loops, homotopy_family, len3, loops_to_system, sub3, Loop, LoopMotion, V3};
use super::potentials::{dissipation, psi_mass, CoreEnergy, DissipationPotential};

/// Per-Burgers-vector constitutive data.
#[derive(Debug, Clone)]
pub struct Material {
    pub burgers: BurgersSystem,
    pub potentials: Vec<DissipationPotential>,
    pub tensions: Vec<LineTension>,
    pub core: CoreEnergy,
}

impl Material {
    pub fn new(
        burgers: BurgersSystem,
        potentials: Vec<DissipationPotential>,
        tensions: Vec<LineTension>,
        core: CoreEnergy,
    ) -> Result<Self> {
        if potentials.len() != burgers.len() || tensions.len() != burgers.len() {
            return Err(Error::Invalid(format!(
                "{} Burgers vectors need as many potentials and tensions (got {} and {})",
                burgers.len(),
                potentials.len(),
                tensions.len()
            )));
        }
        Ok(Self { burgers, potentials, tensions, core })
    }

    pub fn normals(&self) -> Vec<Option<V3>> {
        self.potentials.iter().map(|p| p.normal).collect()
    }

    /// Largest comparability constant over all `R^b`.
    pub fn comparability_constant(&self) -> f64 {
        self.potentials.iter().map(|p| p.comparability_constant()).fold(1.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub steps: usize,
    pub horizon: f64,
    pub catalog: CatalogParams,
    /// Composition depth searched by the descent.
    pub depth: usize,
    /// Composition depth of the stability certificate; 0 disables it.
    pub certify_depth: usize,
    pub improve_tol: f64,
    /// Cap on accepted moves per time step.
    pub max_moves: usize,
    pub threads: usize,
    pub quantum: Option<f64>,
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.horizon > 0.0) {
            return Err(Error::Invalid("need at least one step and a positive horizon".into()));
        }
        if !(1..=2).contains(&self.depth) || self.certify_depth > 2 {
            return Err(Error::Invalid("composition depths are limited to 2".into()));
        }
        if !(self.improve_tol > 0.0) {
            return Err(Error::Invalid("improvement tolerance must be positive".into()));
        }
        if let Some(q) = self.quantum {
            if !(q > 0.0) {
                return Err(Error::Invalid("multiplicity quantum must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyParts {
    pub w_e: f64,
    /// `⟨f(t), u⟩`.
    pub load: f64,
    pub w_c: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct IncrementalState {
    pub k: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub p: PlasticDistortion,
    pub system: DislocationSystem,
    pub loops: Vec<Loop>,
    pub beta: BetaSolution,
    pub energy: EnergyParts,
    pub diss_cum: f64,
    pub var_cum: f64,
    /// Slip of the step that produced this state, on `[t_{k−1}, t_k]`.
    pub slip: Option<SlipFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: EnergyParts,
    pub diss_step: f64,
    pub diss_cum: f64,
    pub mass: f64,
    pub var_step: f64,
    pub var_cum: f64,
    pub p_mass: f64,
    pub p_var_step: f64,
    pub slice_mass_sup: f64,
    pub consistency_residual: f64,
    pub moves: Vec<String>,
    /// `E(t_k, u_{k−1}, z_{k−1})`; equals `E` at step 0.
    pub pre_energy: f64,
    /// `E(t_k, u_{k−1}, z_{k−1}) − e_k − d_k`.
    pub slack: f64,
    /// Largest decrease of `E + Diss` found by the certificate; `None` if not run.
    pub stability_gap: Option<f64>,
    pub candidates: usize,
    /// Energy difference between the reduced evaluation used in the search and the full route.
    pub fast_gap: f64,
    pub diss_gap: f64,
    /// Mass distance between the pushed-forward system and the catalog's loops.
    pub trace_gap: f64,
}

impl StepRecord {
    pub fn move_id(&self) -> String {
        if self.moves.is_empty() {
            "neutral".into()
        } else {
            self.moves.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub per_step_ok: bool,
    pub worst_step_slack: f64,
    /// `e_N + Σ d_j` against `E(0) − Σ ∫⟨ḟ, u_{j−1}⟩`.
    pub lower_energy_lhs: f64,
    pub lower_energy_rhs: f64,
    pub lower_energy_ok: bool,
    pub gronwall_constant: f64,
    /// Offset added to `α_k = 1 + e_k + Σ d_j` to keep it positive.
    pub alpha_shift: f64,
    pub stability_ok: bool,
    pub worst_stability_gap: f64,
    pub sup_p_mass: f64,
    pub sup_slice_mass: f64,
    pub var_p: f64,
    pub var_s: f64,
    pub diss_total: f64,
    pub comparability: f64,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub estimates: Estimates,
    pub final_state: IncrementalState,
    /// Per-step slips, `[t_{k−1}, t_k]` each.
    pub slips: Vec<SlipFamily>,
    /// Dislocation systems `T_0, …, T_N`.
    pub systems: Vec<DislocationSystem>,
}

impl Trace {
    pub const CSV_HEADER: &'static str =
        "step,t,E,W_e,W_c,load_term,Diss_step,Diss_cum,M(T),Var_cum,consistency_residual,accepted_move_id";

    pub fn csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                r.step,
                r.t,
                r.energy.total,
                r.energy.w_e,
                r.energy.w_c,
                r.energy.load,
                r.diss_step,
                r.diss_cum,
                r.mass,
                r.var_cum,
                r.consistency_residual,
                r.move_id()
            ));
        }
        s
    }
}

fn tri_key(t: &[V3; 3]) -> [u64; 9] {
    std::array::from_fn(|i| t[i / 3][i % 3].to_bits())
}

fn half_cross(t: &[V3; 3]) -> V3 {
    let c = cross3(&sub3(&t[1], &t[0]), &sub3(&t[2], &t[0]));
    [0.5 * c[0], 0.5 * c[1], 0.5 * c[2]]
}

fn p4(x: &V3) -> Point {
    [x[0], x[1], x[2], 0.0]
}

/// Evaluate `f` on every item, in parallel chunks when `threads > 1`;
/// results keep the input order.
fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// A candidate's cost split: `value = W_c + reduced − r·pairing + diss`.
#[derive(Debug, Clone, Copy)]
struct Score {
    value: f64,
    diss: f64,
    pairing: f64,
}

/// Choice of the descent: one or two catalog moves.
struct Choice {
    moves: Vec<Move>,
    score: Score,
}

pub struct Scheme {
    pub model: ElasticModel,
    pub material: Material,
    pub params: SchemeParams,
    normals: Vec<Option<V3>>,
    pairing_cache: Mutex<HashMap<([u64; 9], usize), f64>>,
}

impl std::fmt::Debug for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scheme").field("params", &self.params).finish()
    }
}

impl Scheme {
    pub fn new(model: ElasticModel, material: Material, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        let normals = material.normals();
        Ok(Self { model, material, params, normals, pairing_cache: Mutex::new(HashMap::new()) })
    }

    pub fn domain(&self) -> BoxDomain {
        self.model.grid().domain
    }

    fn catalog(&self) -> Catalog<'_> {
        Catalog { params: &self.params.catalog, domain: self.domain(), normals: &self.normals }
    }

    /// `E(t, u, p, T) = W_e − ⟨f(t), u⟩ + W_c(T)`, with `p` entering through `β`.
    pub fn total_energy(&self, t: f64, u: &[f64], beta: &BetaSolution, system: &DislocationSystem) -> Result<EnergyParts> {
        let w_e = self.model.elastic_energy(u, beta);
        let load = self.model.work(t, u)?;
        let w_c = self.material.core.energy(system, &self.material.tensions)?;
        Ok(EnergyParts { w_e, load, w_c, total: w_e - load + w_c })
    }

    /// Dissipation of a slip family under the configured potentials.
    pub fn dissipation(&self, slip: &SlipFamily) -> Result<f64> {
        dissipation(slip, &self.material.potentials, slip.window())
    }

    fn loops_core(&self, loops: &[Loop]) -> f64 {
        let z: f64 = loops.iter().map(|l| 2.0 * l.psi_mass(&self.material.tensions[l.burgers])).sum();
        self.material.core.h(z)
    }

    /// `⟨S, (b ⊗ ν)_δ⟩` per unit multiplicity, memoized per triangle.
    fn triangle_pairing(&self, tri: &[V3; 3], burgers: usize) -> Result<f64> {
        let key = (tri_key(tri), burgers);
        if let Some(v) = self.pairing_cache.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.model.surface_pairing(&[p4(&tri[0]), p4(&tri[1]), p4(&tri[2])], self.material.burgers.vector(burgers))?;
        self.pairing_cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    fn motion_cost(&self, m: &LoopMotion) -> Result<(f64, f64)> {
        if m.is_static() {
            return Ok((0.0, 0.0));
        }
        let r = &self.material.potentials[m.from.burgers];
        let scale = m.from.length().max(m.to.length());
        let mut pairing = 0.0;
        let mut diss = 0.0;
        for tri in m.sweep_triangles() {
            let a = half_cross(&tri);
            if len3(&a) <= 1e-14 * scale * scale {
                continue;
            }
            diss += m.from.mult.abs() * r.eval_normal(a);
            if !self.model.loading.is_zero() {
                pairing += m.from.mult * self.triangle_pairing(&tri, m.from.burgers)?;
            }
        }
        Ok((pairing, diss))
    }

    fn move_cost(&self, mv: &Move) -> Result<(f64, f64)> {
        let mut acc = (0.0, 0.0);
        for m in &mv.motions {
            let (p, d) = self.motion_cost(m)?;
            acc.0 += p;
            acc.1 += d;
        }
        Ok(acc)
    }

    fn score(&self, r: f64, reduced: f64, result: &[Loop], pairing: f64, diss: f64) -> Score {
        Score { value: self.loops_core(result) + reduced - r * pairing + diss, diss, pairing }
    }

    fn better(a: &Score, b: &Score) -> bool {
        let tie = 1e-12 * (1.0 + a.value.abs().max(b.value.abs()));
        if (a.value - b.value).abs() > tie {
            return a.value < b.value;
        }
        a.diss < b.diss - tie
    }

    /// Best candidate of depth `depth` (exactly) from `loops`; ties keep the
    /// earlier catalog index. Returns the number of candidates scored.
    fn best_candidate(&self, r: f64, reduced: f64, loops: &[Loop], depth: usize) -> Result<(Option<Choice>, usize)> {
        let cat = self.catalog();
        let first = cat.generate(loops);
        let scored = par_map(&first[1..], self.params.threads, |m| -> Result<(f64, f64)> { self.move_cost(m) });
        let mut count = 0usize;
        let mut best: Option<Choice> = None;
        for (m, s) in first[1..].iter().zip(scored) {
            let (p1, d1) = s?;
            if depth == 1 {
                count += 1;
                let sc = self.score(r, reduced, &m.result, p1, d1);
                if best.as_ref().map(|b| Self::better(&sc, &b.score)).unwrap_or(true) {
                    best = Some(Choice { moves: vec![m.clone()], score: sc });
                }
                continue;
            }
            let second = cat.generate(&m.result);
            let scored2 = par_map(&second[1..], self.params.threads, |m2| self.move_cost(m2));
            for (m2, s2) in second[1..].iter().zip(scored2) {
                let (p2, d2) = s2?;
                count += 1;
                let sc = self.score(r, reduced, &m2.result, p1 + p2, d1 + d2);
                if best.as_ref().map(|b| Self::better(&sc, &b.score)).unwrap_or(true) {
                    best = Some(Choice { moves: vec![m.clone(), m2.clone()], score: sc });
                }
            }
        }
        Ok((best, count))
    }

    /// Largest decrease of `E + Diss` over catalog moves of depth ≤ `depth`
    /// from a state with reduced energy `reduced`.
    pub fn stability_gap(&self, t: f64, loops: &[Loop], reduced: f64, depth: usize) -> Result<(f64, usize)> {
        let r = self.model.loading.ramp.eval(t);
        let current = self.loops_core(loops) + reduced;
        // the neutral move improves by exactly zero
        let mut gap: f64 = 0.0;
        let mut total = 0;
        for d in 1..=depth {
            let (best, n) = self.best_candidate(r, reduced, loops, d)?;
            total += n;
            if let Some(b) = best {
                gap = gap.max(current - b.score.value);
            }
        }
        Ok((gap, total))
    }

    /// Reduced energy `min_u [W_e − ⟨f(t), u⟩]` of a mollified distortion.
    fn reduced(&self, t: f64, beta: &BetaSolution) -> Result<f64> {
        self.model.reduced_energy(t, &beta.p_delta)
    }

    /// Initial state: `p₀` from cone surfaces unless given, `u₀` the minimizer at `t = 0`.
    pub fn initial_state(&self, system: DislocationSystem, p0: Option<PlasticDistortion>) -> Result<IncrementalState> {
        let loops = extract_loops(&system)?;
        let p = match p0 {
            Some(p) => p,
            None => PlasticDistortion::from_dislocations(&system)?,
        };
        let beta = self.model.solve_beta(&p)?;
        let u = self.model.minimize_u(0.0, &beta, None)?.u;
        let energy = self.total_energy(0.0, &u, &beta, &system)?;
        Ok(IncrementalState { k: 0, t: 0.0, u, p, system, loops, beta, energy, diss_cum: 0.0, var_cum: 0.0, slip: None })
    }

    fn record_initial(&self, s: &IncrementalState) -> Result<StepRecord> {
        let (gap, n) = if self.params.certify_depth > 0 {
            let (g, n) = self.stability_gap(s.t, &s.loops, self.reduced(s.t, &s.beta)?, 1)?;
            (Some(g), n)
        } else {
            (None, 0)
        };
        Ok(StepRecord {
            step: 0,
            t: s.t,
            energy: s.energy,
            diss_step: 0.0,
            diss_cum: 0.0,
            mass: s.system.joint_mass(),
            var_step: 0.0,
            var_cum: 0.0,
            p_mass: s.p.mass(),
            p_var_step: 0.0,
            slice_mass_sup: s.system.joint_mass(),
            consistency_residual: consistency_residual(&s.p, &s.system, None)?,
            moves: Vec::new(),
            pre_energy: s.energy.total,
            slack: 0.0,
            stability_gap: gap,
            candidates: n,
            fast_gap: 0.0,
            diss_gap: 0.0,
            trace_gap: 0.0,
        })
    }

    /// One step of the scheme: greedy descent over the catalog at `t_k`, then
    /// the full-route update of `(u, p, T)`.
    pub fn incremental_step(&self, prev: &IncrementalState) -> Result<(IncrementalState, StepRecord)> {
        let k = prev.k + 1;
        let (t0, t) = (prev.t, self.params.time(k));
        let r = self.model.loading.ramp.eval(t);
        let mut reduced = self.reduced(t, &prev.beta)?;
        let mut loops = prev.loops.clone();
        let mut stages: Vec<Vec<LoopMotion>> = Vec::new();
        let mut labels = Vec::new();
        let mut diss_fast = 0.0;
        let mut candidates = 0;
        let mut certified: Option<f64> = None;
        loop {
            let current = self.loops_core(&loops) + reduced;
            let mut accepted = None;
            let mut gap: f64 = 0.0;
            for d in 1..=self.params.depth {
                let (best, n) = self.best_candidate(r, reduced, &loops, d)?;
                candidates += n;
                if let Some(b) = best {
                    gap = gap.max(current - b.score.value);
                    if current - b.score.value > self.params.improve_tol {
                        accepted = Some(b);
                        break;
                    }
                }
            }
            match accepted {
                Some(c) if labels.len() < self.params.max_moves => {
                    for m in &c.moves {
                        stages.push(m.motions.clone());
                        labels.push(m.label());
                    }
                    loops = c.moves.last().expect("nonempty choice").result.clone();
                    reduced -= r * c.score.pairing;
                    diss_fast += c.score.diss;
                }
                _ => {
                    if self.params.certify_depth <= self.params.depth {
                        certified = Some(gap);
                    }
                    break;
                }
            }
        }
        if self.params.certify_depth > self.params.depth {
            let (g, n) = self.stability_gap(t, &loops, reduced, self.params.certify_depth)?;
            candidates += n;
            certified = Some(g);
        }
        let fast_value = self.loops_core(&loops) + reduced;
        if self.params.certify_depth == 0 {
            certified = None;
        }

        let window = (t0, t);
        let nb = self.material.burgers.len();
        let slip = if stages.is_empty() {
            SlipFamily::neutral(&prev.system, window)?
        } else {
            homotopy_family(&stages, nb, self.domain(), window, self.params.quantum)?
        };
        let system = prev.system.forward(&slip)?;
        let from_loops = loops_to_system(&loops, &self.material.burgers, self.domain(), self.params.quantum)?;
        let trace_gap: f64 =
            system.lines().iter().zip(from_loops.lines()).map(|(a, b)| a.distance_mass(b)).sum::<Result<f64>>()?;
        let (p, beta) = if stages.is_empty() {
            (prev.p.clone(), prev.beta.clone())
        } else {
            let p = plastic_flow(&slip, &self.material.burgers, &prev.p, t)?;
            let beta = self.model.solve_beta(&p)?;
            (p, beta)
        };
        let u = self.model.minimize_u(t, &beta, None)?.u;
        let energy = self.total_energy(t, &u, &beta, &system)?;
        let diss = self.dissipation(&slip)?;
        let var = slip.variation(window);
        let pre = self.model.stored_energy(t, &prev.u, &prev.beta)?
            + self.material.core.energy(&prev.system, &self.material.tensions)?;
        let p_var = if stages.is_empty() { 0.0 } else { p.sub(&prev.p)?.mass() };
        let record = StepRecord {
            step: k,
            t,
            energy,
            diss_step: diss,
            diss_cum: prev.diss_cum + diss,
            mass: system.joint_mass(),
            var_step: var,
            var_cum: prev.var_cum + var,
            p_mass: p.mass(),
            p_var_step: p_var,
            slice_mass_sup: if stages.is_empty() { system.joint_mass() } else { slip.sliced_mass_sup() },
            consistency_residual: consistency_residual(&p, &system, None)?,
            moves: labels,
            pre_energy: pre,
            slack: pre - energy.total - diss,
            stability_gap: certified,
            candidates,
            fast_gap: (energy.total - fast_value).abs(),
            diss_gap: (diss - diss_fast).abs(),
            trace_gap,
        };
        let state = IncrementalState {
            k,
            t,
            u,
            p,
            system,
            loops,
            beta,
            energy,
            diss_cum: record.diss_cum,
            var_cum: record.var_cum,
            slip: Some(slip),
        };
        Ok((state, record))
    }

    /// Run all `N` steps from `initial`, stopping at the first failing step.
    pub fn run_evolution(&self, initial: IncrementalState) -> Result<Trace> {
        self.run_with(initial, |_| {})
    }

    /// As [`Self::run_evolution`], reporting each record as it is produced.
    pub fn run_with(&self, initial: IncrementalState, mut progress: impl FnMut(&StepRecord)) -> Result<Trace> {
        let mut records = vec![self.record_initial(&initial)?];
        progress(&records[0]);
        let mut systems = vec![initial.system.clone()];
        let mut slips = Vec::with_capacity(self.params.steps);
        let mut state = initial;
        for _ in 0..self.params.steps {
            let (next, rec) = self.incremental_step(&state)?;
            progress(&rec);
            records.push(rec);
            systems.push(next.system.clone());
            if let Some(s) = &next.slip {
                slips.push(s.clone());
            }
            state = next;
        }
        let estimates = self.estimates(&records);
        Ok(Trace { records, estimates, final_state: state, slips, systems })
    }

    fn estimates(&self, records: &[StepRecord]) -> Estimates {
        let tol = 1e-9;
        let worst_step_slack = records[1..].iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        let per_step_ok = records[1..].iter().all(|r| r.slack >= -tol);
        let n = records.len() - 1;
        let last = &records[n];
        // Σ ∫⟨ḟ, u_{j−1}⟩ = Σ (E(t_{j−1}, ·) − E(t_j, ·)) at u_{j−1}
        let work_increments: f64 = records[1..].iter().zip(records).map(|(r, prev)| prev.energy.total - r.pre_energy).sum();
        let lhs = last.energy.total + last.diss_cum;
        let rhs = records[0].energy.total - work_increments;
        let lower_energy_ok = lhs <= rhs + n as f64 * tol;
        let alpha: Vec<f64> = records.iter().map(|r| 1.0 + r.energy.total + r.diss_cum).collect();
        let min_alpha = alpha.iter().copied().fold(f64::INFINITY, f64::min);
        let alpha_shift = if min_alpha < 1.0 { 1.0 - min_alpha } else { 0.0 };
        let dt = self.params.horizon / self.params.steps as f64;
        let gronwall_constant = alpha
            .windows(2)
            .map(|w| (w[1] - w[0]) / (dt * (w[0] + alpha_shift)))
            .fold(0.0, f64::max);
        let gaps: Vec<f64> = records.iter().filter_map(|r| r.stability_gap).collect();
        let worst_stability_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Estimates {
            per_step_ok,
            worst_step_slack,
            lower_energy_lhs: lhs,
            lower_energy_rhs: rhs,
            lower_energy_ok,
            gronwall_constant,
            alpha_shift,
            stability_ok: gaps.iter().all(|g| *g <= 1e-10),
            worst_stability_gap,
            sup_p_mass: records.iter().map(|r| r.p_mass).fold(0.0, f64::max),
            sup_slice_mass: records.iter().map(|r| r.slice_mass_sup).fold(0.0, f64::max),
            var_p: records.iter().map(|r| r.p_var_step).sum(),
            var_s: last.var_cum,
            diss_total: last.diss_cum,
            comparability: self.material.comparability_constant(),
        }
    }
}

/// Sum of the per-step slips of a trace, as one family on `[0, T]`.
pub fn assembled_slip(trace: &Trace) -> Result<SlipFamily> {
    let first = trace.slips.first().ok_or_else(|| Error::Invalid("trace has no steps".into()))?;
    let end = trace.slips.last().expect("nonempty").window().1;
    let mut parts: Vec<crate::spacetime::SpaceTimeCurrent> = first
        .slips()
        .iter()
        .map(|s| {
            let d = s.chain().domain().with_time_window(first.window().0, end);
            crate::spacetime::SpaceTimeCurrent::new(s.chain().clone().with_domain(d)?, (first.window().0, end))
        })
        .collect::<Result<_>>()?;
    for fam in &trace.slips[1..] {
        for (acc, s) in parts.iter_mut().zip(fam.slips()) {
            let d = acc.chain().domain().union(s.chain().domain());
            let c = acc.chain().clone().with_domain(d)?.add(&s.chain().clone().with_domain(d)?)?;
            *acc = crate::spacetime::SpaceTimeCurrent::new(c, acc.window())?;
        }
    }
    SlipFamily::new(parts)
}

/// Psi-mass `Σ_{b ∈ B} M_ψ(T^b)` of a dislocation system.
pub fn core_argument(system: &DislocationSystem, material: &Material) -> Result<f64> {
    psi_mass(system, &material.tensions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let v: Vec<usize> = (0..37).collect();
        assert_eq!(par_map(&v, 4, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
