use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use slipcurrent_cli::config::parse_str;
use slipcurrent_cli::suite::{fast_scenario, CATALOG};
use slipcurrent_cli::{canonical, parse_scenario};
use slipcurrent_core::chain::SimplicialCurrent;
use slipcurrent_core::geometry::BoxDomain;
use slipcurrent_core::io::write_chain;
use slipcurrent_core::scenario::{LoopSection, ScenarioConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slipcurrent"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_config(dir: &Path, c: &ScenarioConfig) -> PathBuf {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, canonical(c).unwrap()).unwrap();
    p
}

fn cheap() -> ScenarioConfig {
    let mut c = fast_scenario();
    c.solver.steps = 3;
    c.solver.depth = 1;
    c.solver.certify_depth = 1;
    c
}

fn no_temporaries(dir: &Path) -> bool {
    std::fs::read_dir(dir).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().contains(".tmp"))
}

#[test]
fn canonical_form_round_trips() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let mut configs = vec![ScenarioConfig::reference_shear(), ScenarioConfig::half_multiplicity(), fast_scenario()];
    for _ in 0..50 {
        let mut c = ScenarioConfig::reference_shear();
        c.elastic.lambda = r.gen_range(0.0..10.0);
        c.elastic.mu = r.gen_range(0.1..10.0);
        c.elastic.tol = 10f64.powf(r.gen_range(-14.0..-6.0));
        c.loading.ramp = (0..r.gen_range(1..4)).map(|_| r.gen_range(-1e3..1e3)).collect();
        c.burgers[0].rho = r.gen_range(0.5..50.0);
        c.burgers[0].normal = r.gen_bool(0.5).then(|| [r.gen::<f64>(), r.gen(), 1.0]);
        c.solver.epsilon = if r.gen_bool(0.5) { 0.0 } else { 0.25 };
        c.dislocations.loops = vec![LoopSection {
            burgers: 0,
            mult: 0.75,
            vertices: (0..3).map(|_| [r.gen_range(0.0..1.0), r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)]).collect(),
        }];
        configs.push(c);
    }
    for c in &configs {
        let text = canonical(c).unwrap();
        let back = parse_str(&text, None).unwrap();
        assert_eq!(&back, c);
        assert_eq!(canonical(&back).unwrap(), text);
    }
}

#[test]
fn shipped_configs_are_the_builtin_scenarios() {
    for (file, mut builtin) in [
        ("reference_shear.toml", ScenarioConfig::reference_shear()),
        ("half_multiplicity.toml", ScenarioConfig::half_multiplicity()),
    ] {
        let sc = parse_scenario(&shipped(file)).unwrap();
        builtin.output = sc.config.output.clone();
        assert_eq!(sc.config, builtin, "{file}");
    }
}

#[test]
fn hold_region_outside_the_domain_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = cheap();
    c.hold.bounds = [[0.5, 0.5, 0.5], [1.2, 0.6, 0.6]];
    c.solver.steps = 0;
    let cfg = write_config(tmp.path(), &c);
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("out")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    let failures: Vec<&str> = v["failures"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(failures.iter().any(|f| f.starts_with("hold.box")), "{failures:?}");
    assert!(failures.iter().any(|f| f.starts_with("solver.steps")), "{failures:?}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn run_on_the_reference_scenario_writes_one_row_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ref");
    let o = bin().args(["run", "--config"]).arg(shipped("reference_shear.toml")).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), slipcurrent_core::energetic::Trace::CSV_HEADER);
    let steps: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    // the initial state is row 0, followed by one row per incremental step
    assert_eq!(steps, (0..=8).collect::<Vec<_>>());

    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["passed"], Value::Bool(true));
    assert_eq!(m["config"]["grid"]["n"], 16);
    let listed: Vec<&str> = m["invariants"].as_array().unwrap().iter().map(|i| i["id"].as_str().unwrap()).collect();
    assert_eq!(listed, CATALOG.iter().map(|i| i.id).collect::<Vec<_>>());
    for id in ["scheme.per_step", "scheme.lower_energy", "scheme.stability", "scheme.diss_rescaling"] {
        let s = m["invariants"].as_array().unwrap().iter().find(|i| i["id"] == id).unwrap();
        assert_eq!(s["status"], "pass", "{id}: {}", s["detail"]);
    }
    assert!(no_temporaries(&out));
}

#[test]
fn output_is_bit_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &cheap());
    let mut csvs = Vec::new();
    for (k, threads) in ["1", "1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("o{k}"));
        let o = bin().args(["run", "--threads", threads, "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        csvs.push(std::fs::read(out.join("trace.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
}

#[test]
fn failed_writes_leave_no_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &cheap());
    let out = tmp.path().join("out");
    // a directory in place of the trace makes the final rename fail
    std::fs::create_dir_all(out.join("trace.csv")).unwrap();
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["status"], "error");
    assert!(no_temporaries(&out));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn epsilon_study_writes_one_trace_per_epsilon() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ScenarioConfig::half_multiplicity();
    c.grid.n = Some(8);
    c.solver.steps = 2;
    let cfg = write_config(tmp.path(), &c);
    let out = tmp.path().join("eps");
    let o = bin().args(["epsilon-study", "--eps", "1,0.5,0.25", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    for e in ["1", "0.5", "0.25"] {
        assert!(out.join(format!("trace_eps_{e}.csv")).is_file(), "missing trace for ε = {e}");
    }
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out.join("epsilon_report.json")).unwrap()).unwrap();
    assert_eq!(rep["runs"].as_array().unwrap().len(), 3);
    let traces = std::fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("trace_eps_")).count();
    assert_eq!(traces, 3);
}

#[test]
fn fast_verification_passes_within_a_minute() {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = bin().args(["verify", "--level", "fast", "--out"]).arg(tmp.path()).output().unwrap();
    let el = start.elapsed();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(el < Duration::from_secs(60), "{el:?}");
    let m: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["summary"]["skipped"], 0);
    assert_eq!(m["invariants"].as_array().unwrap().len(), CATALOG.len());
}

#[test]
fn slice_dump_indexes_every_requested_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &cheap());
    let out = tmp.path().join("slices");
    let o = bin().args(["slice-dump", "--times", "0,0.5,0.9,1", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let index = std::fs::read_to_string(out.join("slices.csv")).unwrap();
    assert_eq!(index.lines().count(), 5);
    for i in 0..4 {
        assert!(out.join(format!("slices/slice_{i:03}.txt")).is_file());
    }
}

#[test]
fn flat_norm_of_a_square_loop_is_its_area() {
    let tmp = tempfile::tempdir().unwrap();
    let dom = BoxDomain::cube3(0.0, 1.0);
    let pts = [[0.25, 0.25, 0.5, 0.0], [0.75, 0.25, 0.5, 0.0], [0.75, 0.75, 0.5, 0.0], [0.25, 0.75, 0.5, 0.0]];
    let sq = SimplicialCurrent::polyline(dom, &pts, 1.0, true).unwrap();
    let path = tmp.path().join("square.txt");
    std::fs::write(&path, write_chain(&sq, None)).unwrap();
    let o = bin().arg("flat-norm").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let f = v["results"]["flat_norm"].as_f64().unwrap();
    assert!((f - 0.25).abs() < 1e-6, "{f}");
    assert!((v["results"]["mass"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let o = bin().arg("flat-norm").arg(&path).arg("--against").arg(&path).output().unwrap();
    assert_eq!(stdout_json(&o)["results"]["flat_norm"].as_f64(), Some(0.0));
}
