//! The subcommands. Each writes its artifacts atomically and returns the
//! manifest; the exit code is zero iff every hard invariant passed.

use std::path::{Path, PathBuf};

use serde_json::json;
use slipcurrent_core::dislocation::DislocationSystem;
use slipcurrent_core::energetic::epsilon::{approximate, epsilon_study_with};
use slipcurrent_core::energetic::Trace;
use slipcurrent_core::flat::flat_norm_cone;
use slipcurrent_core::geometry::BoxDomain;
use slipcurrent_core::io::{read_chain, write_dislocations};

use crate::config::Scenario;
use crate::error::{CliError, Result};
use crate::manifest::{ManifestBuilder, RunManifest};
use crate::suite::{merge, run_checks, Ctx, Level};

#[derive(Debug, Clone)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub level: Option<Level>,
}

impl Default for Options {
    fn default() -> Self {
        Self { out: None, threads: None, seed: 1, level: None }
    }
}

impl Options {
    fn out_dir(&self, sc: Option<&Scenario>) -> Result<PathBuf> {
        let dir = match (&self.out, sc) {
            (Some(d), _) => d.clone(),
            (None, Some(sc)) => sc.base.join(&sc.config.output.dir),
            (None, None) => PathBuf::from("out"),
        };
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Read { path: dir.clone(), source })?;
        Ok(dir)
    }

    /// The scenario with `--threads` applied.
    fn effective(&self, sc: &Scenario) -> Scenario {
        let mut sc = sc.clone();
        if let Some(t) = self.threads {
            sc.config.solver.threads = t;
        }
        sc
    }
}

fn progress_line(r: &slipcurrent_core::energetic::StepRecord) {
    eprintln!("step {:>3}  t = {:.4}  E = {:.6e}  Diss = {:.6e}  {}", r.step, r.t, r.energy.total, r.diss_cum, r.move_id());
}

fn estimates_json(t: &Trace) -> serde_json::Value {
    json!({ "steps": t.records.len() - 1, "estimates": t.estimates })
}

/// Evolves the scenario; writes `trace.csv`, `final_dislocations.txt` and
/// `manifest.json`. With `--level`, the invariant suite runs as well.
pub fn cmd_run(sc: &Scenario, config_path: Option<&Path>, opts: &Options) -> Result<RunManifest> {
    let sc = opts.effective(sc);
    let dir = opts.out_dir(Some(&sc))?;
    let mut mb = ManifestBuilder::new("run", opts.seed, sc.config.solver.threads, opts.level);
    mb.config(config_path, &sc.config)?;
    let (scheme, init) = sc.config.build(Some(&sc.base))?;
    mb.phase("setup");
    let trace = scheme.run_with(init, progress_line)?;
    mb.phase("evolution");
    mb.artifact(&dir, "trace.csv", trace.csv().as_bytes())?;
    mb.artifact(&dir, "final_dislocations.txt", write_dislocations(&trace.final_state.system).as_bytes())?;
    mb.results(estimates_json(&trace));

    let ctx = Ctx::new(opts.level.unwrap_or(Level::Fast), opts.seed, sc.config.solver.threads)
        .with_scenario(sc.config.clone(), Some(&sc.base))
        .with_run(scheme, trace);
    let level = opts.level;
    let invariants = run_checks(&ctx, |inv| level.is_some() || inv.from_trace, |_| {});
    mb.phase("invariants");
    mb.finish(invariants, Some(&dir))
}

/// Runs the invariant suite at the given level, on the built-in scenario or
/// on the one supplied.
pub fn cmd_verify(level: Level, sc: Option<&Scenario>, config_path: Option<&Path>, opts: &Options) -> Result<RunManifest> {
    let threads = opts.threads.unwrap_or(1);
    let dir = opts.out_dir(None)?;
    let mut mb = ManifestBuilder::new("verify", opts.seed, threads, Some(level));
    let mut ctx = Ctx::new(level, opts.seed, threads);
    if let Some(sc) = sc {
        let sc = opts.effective(sc);
        mb.config(config_path, &sc.config)?;
        ctx = ctx.with_scenario(sc.config.clone(), Some(&sc.base));
    }
    let invariants = run_checks(&ctx, |_| true, |s| {
        eprintln!("[{:?}] {}: {} ({:.2} s)", s.status, s.id, s.detail, s.seconds);
    });
    mb.phase("suite");
    mb.finish(invariants, Some(&dir))
}

fn eps_label(e: f64) -> String {
    format!("{e}")
}

/// One evolution per `ε` on the rounded initial dislocations; one trace per
/// run plus `epsilon_report.json`.
pub fn cmd_epsilon_study(sc: &Scenario, eps: &[f64], config_path: Option<&Path>, opts: &Options) -> Result<RunManifest> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::Usage("--eps needs positive values".into()));
    }
    let sc = opts.effective(sc);
    let dir = opts.out_dir(Some(&sc))?;
    let mut mb = ManifestBuilder::new("epsilon-study", opts.seed, sc.config.solver.threads, opts.level);
    mb.config(config_path, &sc.config)?;
    let mut report = epsilon_study_with(&sc.config, Some(&sc.base), eps, |r| {
        eprintln!("ε = {}: {} loops, Diss {:.6e}, bounds {:?}", r.epsilon, r.loops, r.diss_total, r.bounds.as_array());
    })?;
    mb.phase("runs");

    let mut per_run = Vec::new();
    for run in &mut report.runs {
        let trace = run.trace.take().expect("study keeps traces");
        mb.artifact(&dir, &format!("trace_eps_{}.csv", eps_label(run.epsilon)), trace.csv().as_bytes())?;
        let (c, _) = approximate(&sc.config, Some(&sc.base), run.epsilon)?;
        let (scheme, _) = c.build(None)?;
        let ctx = Ctx::new(opts.level.unwrap_or(Level::Fast), opts.seed, c.solver.threads)
            .with_scenario(c, None)
            .with_run(scheme, trace);
        let level = opts.level;
        per_run.push((format!("ε={}", eps_label(run.epsilon)), run_checks(&ctx, |inv| level.is_some() || inv.from_trace, |_| {})));
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let rep = serde_json::to_value(&report).map_err(|e| CliError::Serialize { what: "epsilon report", msg: e.to_string() })?;
    let text = serde_json::to_string_pretty(&rep).map_err(|e| CliError::Serialize { what: "epsilon report", msg: e.to_string() })?;
    mb.artifact(&dir, "epsilon_report.json", text.as_bytes())?;
    mb.results(json!({
        "max_spread": report.max_spread,
        "uniform_within_20_percent": report.uniform(0.2),
        "constant": report.constant,
        "flat_sup": report.flat_sup,
        "flat_monotone": report.flat_monotone,
        "warnings": report.warnings,
    }));
    mb.phase("invariants");
    mb.finish(merge(&per_run), Some(&dir))
}

/// The dislocation system at time `t`: the slice of the step slip whose
/// window contains `t`, or the last system at or before `t`.
fn system_at(trace: &Trace, t: f64) -> Result<(DislocationSystem, bool, &'static str)> {
    let burgers = trace.systems[0].burgers().clone();
    for fam in &trace.slips {
        let (a, b) = fam.window();
        if a < t && t < b {
            let mut valid = true;
            let mut lines = Vec::with_capacity(fam.len());
            for s in fam.slips() {
                let sl = s.slice_at_time(t)?;
                valid &= sl.valid;
                lines.push(sl.current);
            }
            return Ok((DislocationSystem::new(burgers, lines)?, valid, "slip"));
        }
    }
    let k = trace.records.iter().rposition(|r| r.t <= t).unwrap_or(0);
    Ok((trace.systems[k].clone(), true, "step"))
}

/// Evolves the scenario and writes the dislocation system at every step, or
/// at the requested times, under `slices/`, indexed by `slices.csv`.
pub fn cmd_slice_dump(sc: &Scenario, times: Option<&[f64]>, config_path: Option<&Path>, opts: &Options) -> Result<RunManifest> {
    let sc = opts.effective(sc);
    let dir = opts.out_dir(Some(&sc))?;
    let sub = dir.join("slices");
    std::fs::create_dir_all(&sub).map_err(|source| CliError::Read { path: sub.clone(), source })?;
    let mut mb = ManifestBuilder::new("slice-dump", opts.seed, sc.config.solver.threads, opts.level);
    mb.config(config_path, &sc.config)?;
    let (scheme, init) = sc.config.build(Some(&sc.base))?;
    let trace = scheme.run_with(init, progress_line)?;
    mb.phase("evolution");

    let mut index = String::from("index,t,source,valid,mass\n");
    let slices: Vec<(f64, DislocationSystem, bool, &str)> = match times {
        None => trace.records.iter().zip(&trace.systems).map(|(r, s)| (r.t, s.clone(), true, "step")).collect(),
        Some(ts) => ts
            .iter()
            .map(|&t| system_at(&trace, t).map(|(s, v, src)| (t, s, v, src)))
            .collect::<Result<_>>()?,
    };
    for (i, (t, s, valid, src)) in slices.iter().enumerate() {
        mb.artifact(&dir, &format!("slices/slice_{i:03}.txt"), write_dislocations(s).as_bytes())?;
        index.push_str(&format!("{i},{t:e},{src},{valid},{:e}\n", s.joint_mass()));
    }
    mb.artifact(&dir, "slices.csv", index.as_bytes())?;
    mb.artifact(&dir, "trace.csv", trace.csv().as_bytes())?;
    mb.results(estimates_json(&trace));
    let ctx = Ctx::new(Level::Fast, opts.seed, sc.config.solver.threads)
        .with_scenario(sc.config.clone(), Some(&sc.base))
        .with_run(scheme, trace);
    let invariants = run_checks(&ctx, |inv| inv.from_trace, |_| {});
    mb.finish(invariants, Some(&dir))
}

fn load_chain(path: &Path, lo: f64, hi: f64) -> Result<slipcurrent_core::chain::SimplicialCurrent> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    let dim = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .and_then(|l| l.split_whitespace().next())
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| CliError::Usage(format!("{}: missing chain header", path.display())))?;
    let domain = BoxDomain::new(dim, [lo; 4], [hi; 4])?;
    Ok(read_chain(&text, domain)?.0)
}

/// Flat norm of a 1-chain, or the flat distance between two, on the cone
/// complex over the support. The value is an upper bound for the
/// unrestricted flat norm.
pub fn cmd_flat_norm(chain: &Path, against: Option<&Path>, bounds: [f64; 2], opts: &Options) -> Result<RunManifest> {
    let mut mb = ManifestBuilder::new("flat-norm", opts.seed, 1, None);
    let a = load_chain(chain, bounds[0], bounds[1])?;
    let t = match against {
        Some(p) => a.sub(&load_chain(p, bounds[0], bounds[1])?)?,
        None => a,
    };
    let d = flat_norm_cone(&t)?;
    mb.phase("solve");
    mb.results(json!({
        "chain": chain.display().to_string(),
        "against": against.map(|p| p.display().to_string()),
        "complex": "cone over the support",
        "flat_norm": d.value,
        "mass": t.mass(),
        "filling_mass": d.filling.mass(),
        "remainder_mass": d.remainder.mass(),
    }));
    let dir = match &opts.out {
        Some(_) => Some(opts.out_dir(None)?),
        None => None,
    };
    mb.finish(Vec::new(), dir.as_deref())
}
