//! Scenario configuration: a serializable key/value tree, its validation,
//! and assembly of the elastic model, material and initial state.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dislocation::{BurgersSystem, DislocationSystem, PlasticDistortion};
use crate::elastic::{DomainGrid, ElasticModel, Elasticity, Holding, Loading, Ramp};
use crate::energetic::catalog::CatalogParams;
use crate::energetic::loops::{loops_to_system, Loop};
use crate::energetic::potentials::{CoreEnergy, DissipationPotential};
use crate::energetic::scheme::{IncrementalState, Material, Scheme, SchemeParams};
use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::grid::{CellField, Grid};
use crate::io::GridField;
use crate::tension::LineTension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
    /// Cube `[lo, hi]³`.
    #[serde(rename = "box", default = "unit_interval")]
    pub bounds: [f64; 2],
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: None, bounds: unit_interval() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElasticSection {
    pub lambda: f64,
    pub mu: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticSection {
    fn default() -> Self {
        Self { lambda: 1.0, mu: 1.0, tol: 1e-12, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MollifySection {
    pub delta_cells: f64,
}

impl Default for MollifySection {
    fn default() -> Self {
        Self { delta_cells: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HoldSection {
    #[serde(rename = "box")]
    pub bounds: [[f64; 3]; 2],
    pub h0: [f64; 3],
}

impl Default for HoldSection {
    fn default() -> Self {
        Self { bounds: [[0.4; 3], [0.6; 3]], h0: [0.0; 3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    None,
    Uniform,
    Shear,
}

/// `f(t, x) = r(t) g(x)`: `g = d` (uniform) or `g = (x_axis − center) d` (shear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadingSection {
    pub profile: Profile,
    pub direction: [f64; 3],
    pub axis: usize,
    pub center: f64,
    /// Polynomial coefficients of `r(t)`.
    pub ramp: Vec<f64>,
}

impl Default for LoadingSection {
    fn default() -> Self {
        Self { profile: Profile::None, direction: [1.0, 0.0, 0.0], axis: 2, center: 0.5, ramp: vec![0.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoreSection {
    pub slope: f64,
    pub threshold: f64,
    pub cubic: f64,
}

impl Default for CoreSection {
    fn default() -> Self {
        let c = CoreEnergy::default();
        Self { slope: c.slope, threshold: c.threshold, cubic: c.cubic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersSection {
    pub vector: [f64; 3],
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 3]>,
    #[serde(default = "one")]
    pub tension: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    pub burgers: usize,
    pub mult: f64,
    pub vertices: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DislocationSection {
    /// Dislocation file, relative to the configuration file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// Stem of a cell-based grid field (`<stem>.json` + `<stem>.bin`) added as
    /// the absolutely continuous part of the initial plastic distortion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_file: Option<String>,
    pub loops: Vec<LoopSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub steps: usize,
    pub horizon: f64,
    /// Multiplicity quantum; 0 keeps real multiplicities.
    pub epsilon: f64,
    pub depth: usize,
    pub certify_depth: usize,
    pub improve_tol: f64,
    pub max_moves: usize,
    /// Catalog step lengths in units of the grid spacing.
    pub step_cells: Vec<f64>,
    pub directions: usize,
    /// Lower cap entering `γ* = max(10 M(T₀), cap)`.
    pub gamma_star_cap: f64,
    pub threads: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            steps: 8,
            horizon: 1.0,
            epsilon: 0.0,
            depth: 1,
            certify_depth: 2,
            improve_tol: 1e-10,
            max_moves: 200,
            step_cells: vec![1.0, 2.0],
            directions: 4,
            gamma_star_cap: 100.0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub elastic: ElasticSection,
    #[serde(default)]
    pub mollify: MollifySection,
    #[serde(default)]
    pub hold: HoldSection,
    #[serde(default)]
    pub loading: LoadingSection,
    #[serde(default)]
    pub core: CoreSection,
    #[serde(default)]
    pub burgers: Vec<BurgersSection>,
    #[serde(default)]
    pub dislocations: DislocationSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn finite_pos(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl ScenarioConfig {
    /// Every violated constraint, each prefixed by its key.
    pub fn validate(&self, base: Option<&Path>) -> std::result::Result<(), Vec<String>> {
        let mut e = Vec::new();
        match self.grid.n {
            None => e.push("grid.n: missing".to_string()),
            Some(n) if n < 4 => e.push(format!("grid.n: need at least 4 cells per side, got {n}")),
            _ => {}
        }
        let [lo, hi] = self.grid.bounds;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            e.push(format!("grid.box: need lo < hi, got [{lo}, {hi}]"));
        }
        if !(self.elastic.mu > 0.0 && 3.0 * self.elastic.lambda + 2.0 * self.elastic.mu > 0.0) {
            e.push("elastic.mu/elastic.lambda: need mu > 0 and 3 lambda + 2 mu > 0".into());
        }
        if !finite_pos(self.elastic.tol) {
            e.push("elastic.tol: must be positive".into());
        }
        if self.elastic.max_iter == 0 {
            e.push("elastic.max_iter: must be positive".into());
        }
        if !(self.mollify.delta_cells >= 2.0) {
            e.push(format!("mollify.delta_cells: need at least 2, got {}", self.mollify.delta_cells));
        }
        let [hlo, hhi] = self.hold.bounds;
        if (0..3).any(|a| !(hlo[a] < hhi[a])) {
            e.push("hold.box: need lo < hi in every direction".into());
        }
        if (0..3).any(|a| !(hlo[a] > lo && hhi[a] < hi)) {
            e.push("hold.box: H must lie strictly inside the domain grid.box".into());
        }
        if self.loading.profile != Profile::None {
            if self.loading.ramp.is_empty() || self.loading.ramp.iter().any(|c| !c.is_finite()) {
                e.push("loading.ramp: need finite polynomial coefficients".into());
            }
            if self.loading.axis > 2 {
                e.push(format!("loading.axis: must be 0, 1 or 2, got {}", self.loading.axis));
            }
        }
        if !(self.core.slope > 0.0 && self.core.threshold >= 0.0 && self.core.cubic > 0.0) {
            e.push("core: need slope > 0, threshold >= 0, cubic > 0".into());
        }
        if self.burgers.is_empty() {
            e.push("burgers: at least one Burgers vector is required".into());
        }
        for (i, b) in self.burgers.iter().enumerate() {
            if !(b.vector.iter().map(|x| x * x).sum::<f64>() > 0.0) {
                e.push(format!("burgers[{i}].vector: must be nonzero"));
            }
            if !finite_pos(b.rho) {
                e.push(format!("burgers[{i}].rho: must be positive"));
            }
            if !(b.kappa >= 1.0) {
                e.push(format!("burgers[{i}].kappa: must be at least 1"));
            }
            if !finite_pos(b.tension) {
                e.push(format!("burgers[{i}].tension: must be positive"));
            }
            if let Some(n) = b.normal {
                if !(n.iter().map(|x| x * x).sum::<f64>() > 0.0) {
                    e.push(format!("burgers[{i}].normal: must be nonzero"));
                }
            }
        }
        let eps = self.solver.epsilon;
        for (i, l) in self.dislocations.loops.iter().enumerate() {
            if l.burgers >= self.burgers.len() {
                e.push(format!("dislocations.loops[{i}].burgers: index {} out of range", l.burgers));
            }
            if l.vertices.len() < 3 {
                e.push(format!("dislocations.loops[{i}].vertices: need at least 3"));
            }
            if l.vertices.iter().any(|v| v.iter().any(|c| !(*c >= lo && *c <= hi))) {
                e.push(format!("dislocations.loops[{i}].vertices: outside grid.box"));
            }
            if l.mult == 0.0 || !l.mult.is_finite() {
                e.push(format!("dislocations.loops[{i}].mult: must be nonzero"));
            } else if eps > 0.0 && ((l.mult / eps).round() * eps - l.mult).abs() > 1e-12 * l.mult.abs() {
                e.push(format!("dislocations.loops[{i}].mult: {} is not a multiple of solver.epsilon = {eps}", l.mult));
            }
        }
        if let Some(f) = &self.dislocations.file {
            let p = resolve(base, f);
            if !p.is_file() {
                e.push(format!("dislocations.file: {} does not exist", p.display()));
            }
        }
        if let Some(f) = &self.dislocations.p_file {
            let stem = resolve(base, f);
            for ext in ["json", "bin"] {
                let p = stem.with_extension(ext);
                if !p.is_file() {
                    e.push(format!("dislocations.p_file: {} does not exist", p.display()));
                }
            }
        }
        let s = &self.solver;
        if s.steps == 0 {
            e.push("solver.steps: must be positive".into());
        }
        if !finite_pos(s.horizon) {
            e.push("solver.horizon: must be positive".into());
        }
        if !(eps >= 0.0) {
            e.push("solver.epsilon: must be non-negative".into());
        }
        if !(1..=2).contains(&s.depth) {
            e.push("solver.depth: must be 1 or 2".into());
        }
        if s.certify_depth > 2 {
            e.push("solver.certify_depth: must be 0, 1 or 2".into());
        }
        if !finite_pos(s.improve_tol) {
            e.push("solver.improve_tol: must be positive".into());
        }
        if s.step_cells.is_empty() || s.step_cells.iter().any(|x| !finite_pos(*x)) {
            e.push("solver.step_cells: need positive step lengths".into());
        }
        if s.directions < 2 {
            e.push("solver.directions: need at least 2".into());
        }
        if !finite_pos(s.gamma_star_cap) {
            e.push("solver.gamma_star_cap: must be positive".into());
        }
        if s.threads == 0 {
            e.push("solver.threads: must be positive".into());
        }
        if self.output.dir.is_empty() {
            e.push("output.dir: must be nonempty".into());
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(e)
        }
    }

    pub fn check(&self, base: Option<&Path>) -> Result<()> {
        self.validate(base).map_err(Error::Scenario)
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::cube3(self.grid.bounds[0], self.grid.bounds[1])
    }

    pub fn grid(&self) -> Result<Grid> {
        let n = self.grid.n.ok_or_else(|| Error::Scenario(vec!["grid.n: missing".into()]))?;
        Grid::new(self.domain(), [n; 3])
    }

    pub fn quantum(&self) -> Option<f64> {
        (self.solver.epsilon > 0.0).then_some(self.solver.epsilon)
    }

    pub fn loading(&self, grid: &Grid) -> Loading {
        let l = &self.loading;
        let ramp = Ramp { coefficients: l.ramp.clone() };
        let d = l.direction;
        match l.profile {
            Profile::None => Loading::none(grid),
            Profile::Uniform => Loading::from_fn(grid, ramp, |_| d),
            Profile::Shear => {
                let (axis, c) = (l.axis, l.center);
                Loading::from_fn(grid, ramp, move |x| {
                    let s = x[axis] - c;
                    [s * d[0], s * d[1], s * d[2]]
                })
            }
        }
    }

    pub fn model(&self) -> Result<ElasticModel> {
        let grid = self.grid()?;
        let hold = Holding { lo: self.hold.bounds[0], hi: self.hold.bounds[1], h0: self.hold.h0 };
        let e = Elasticity::isotropic(self.elastic.lambda, self.elastic.mu)?;
        let domain = DomainGrid::new(grid, hold, e)?;
        let mut m = ElasticModel::new(domain, self.loading(&grid), self.mollify.delta_cells)?;
        m.tol = self.elastic.tol;
        m.max_iter = self.elastic.max_iter;
        Ok(m)
    }

    pub fn burgers_system(&self) -> Result<BurgersSystem> {
        BurgersSystem::new(self.burgers.iter().map(|b| b.vector).collect())
    }

    pub fn material(&self) -> Result<Material> {
        let potentials =
            self.burgers.iter().map(|b| DissipationPotential::new(b.rho, b.kappa, b.normal)).collect::<Result<_>>()?;
        let tensions = self.burgers.iter().map(|b| LineTension::isotropic(b.tension)).collect::<Result<_>>()?;
        let core = CoreEnergy::new(self.core.slope, self.core.threshold, self.core.cubic)?;
        Material::new(self.burgers_system()?, potentials, tensions, core)
    }

    pub fn loops(&self) -> Vec<Loop> {
        self.dislocations
            .loops
            .iter()
            .map(|l| Loop { burgers: l.burgers, mult: l.mult, vertices: l.vertices.clone() })
            .collect()
    }

    /// Initial dislocations with real multiplicities: configured loops plus the optional file.
    pub fn real_system(&self, base: Option<&Path>) -> Result<DislocationSystem> {
        let burgers = self.burgers_system()?;
        let mut t = loops_to_system(&self.loops(), &burgers, self.domain(), None)?;
        if let Some(f) = &self.dislocations.file {
            let text = std::fs::read_to_string(resolve(base, f))?;
            let extra = crate::io::read_dislocations(&text, self.domain())?;
            if extra.burgers() != &burgers {
                return Err(Error::Invalid("dislocation file lists different Burgers vectors".into()));
            }
            let lines = t.lines().iter().zip(extra.lines()).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
            t = DislocationSystem::new(burgers, lines)?;
        }
        Ok(t)
    }

    /// Initial plastic distortion from the optional cell field; `None` leaves
    /// the consistency construction from the dislocations alone.
    pub fn initial_p(&self, base: Option<&Path>, system: &DislocationSystem) -> Result<Option<PlasticDistortion>> {
        let Some(f) = &self.dislocations.p_file else {
            return Ok(None);
        };
        let field = GridField::load(&resolve(base, f))?;
        let grid = self.grid()?;
        let h = &field.header;
        if h.location != "cell" || h.components != 9 || h.shape != grid.n {
            return Err(Error::Invalid(format!(
                "dislocations.p_file: need a 9-component cell field of shape {:?}, got {} {:?} with {} components",
                grid.n, h.location, h.shape, h.components
            )));
        }
        let values = field.values.chunks_exact(9).map(|c| c.try_into().expect("9 values")).collect();
        let mut p = PlasticDistortion::from_dislocations(system)?;
        p.set_cells(Some(CellField { grid, values }));
        Ok(Some(p))
    }

    pub fn scheme_params(&self, initial_mass: f64, grid: &Grid) -> Result<SchemeParams> {
        let s = &self.solver;
        let h = grid.h_max();
        let gamma = CatalogParams::default_gamma_star(initial_mass, s.gamma_star_cap);
        let mut catalog = CatalogParams::new(s.step_cells.iter().map(|c| c * h).collect(), gamma)?;
        catalog.directions = s.directions;
        Ok(SchemeParams {
            steps: s.steps,
            horizon: s.horizon,
            catalog,
            depth: s.depth,
            certify_depth: s.certify_depth,
            improve_tol: s.improve_tol,
            max_moves: s.max_moves,
            threads: s.threads,
            quantum: self.quantum(),
        })
    }

    /// Validated scheme and initial state.
    pub fn build(&self, base: Option<&Path>) -> Result<(Scheme, IncrementalState)> {
        self.check(base)?;
        let mut system = self.real_system(base)?;
        if let Some(q) = self.quantum() {
            system = system.with_quantum(q)?;
        }
        let p0 = self.initial_p(base, &system)?;
        self.assemble(system, p0)
    }

    /// Scheme and initial state from a given dislocation system.
    pub fn build_from(&self, system: DislocationSystem) -> Result<(Scheme, IncrementalState)> {
        self.assemble(system, None)
    }

    fn assemble(&self, system: DislocationSystem, p0: Option<PlasticDistortion>) -> Result<(Scheme, IncrementalState)> {
        let model = self.model()?;
        let params = self.scheme_params(system.joint_mass(), model.grid())?;
        let scheme = Scheme::new(model, self.material()?, params)?;
        let state = scheme.initial_state(system, p0)?;
        Ok((scheme, state))
    }

    /// Single square shear loop on the mid-plane of a sheared unit cube.
    pub fn reference_shear() -> Self {
        let sq = square([0.5, 0.5, 0.5], 0.5);
        Self {
            grid: GridSection { n: Some(16), bounds: [0.0, 1.0] },
            hold: HoldSection { bounds: [[0.4, 0.4, 0.1], [0.6, 0.6, 0.25]], h0: [0.0; 3] },
            loading: LoadingSection {
                profile: Profile::Shear,
                direction: [1.0, 0.0, 0.0],
                axis: 2,
                center: 0.5,
                ramp: vec![0.0, REFERENCE_RAMP],
            },
            core: CoreSection { slope: 1.0, threshold: 100.0, cubic: 1.0 },
            burgers: vec![BurgersSection {
                vector: [1.0, 0.0, 0.0],
                rho: 20.0,
                kappa: 2.0,
                normal: Some([0.0, 0.0, 1.0]),
                tension: 1.0,
            }],
            dislocations: DislocationSection { file: None, p_file: None, loops: vec![LoopSection { burgers: 0, mult: 1.0, vertices: sq }] },
            solver: SolverSection { depth: 2, ..SolverSection::default() },
            ..Self::default()
        }
    }

    /// Stack of half-multiplicity square loops on neighbouring parallel planes.
    pub fn half_multiplicity() -> Self {
        let mut s = Self::reference_shear();
        s.dislocations.loops = HALF_PLANES
            .iter()
            .map(|z| LoopSection { burgers: 0, mult: 0.5, vertices: square([0.5, 0.5, *z], 0.5) })
            .collect();
        s.solver.depth = 1;
        s.solver.certify_depth = 1;
        s
    }
}

/// Ramp slope of the reference shear scenario.
pub const REFERENCE_RAMP: f64 = 400.0;

/// Slip planes of the half-multiplicity stack.
pub const HALF_PLANES: [f64; 4] = [0.46875, 0.484375, 0.515625, 0.53125];

fn square(c: [f64; 3], l: f64) -> Vec<[f64; 3]> {
    let h = l / 2.0;
    vec![[c[0] - h, c[1] - h, c[2]], [c[0] + h, c[1] - h, c[2]], [c[0] + h, c[1] + h, c[2]], [c[0] - h, c[1] + h, c[2]]]
}

fn resolve(base: Option<&Path>, f: &str) -> PathBuf {
    match base {
        Some(b) => b.join(f),
        None => PathBuf::from(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_collected() {
        let mut c = ScenarioConfig::reference_shear();
        c.grid.n = None;
        c.hold.bounds = [[0.5, 0.5, 0.5], [1.5, 0.6, 0.6]];
        c.burgers[0].rho = -1.0;
        c.solver.epsilon = 0.3;
        let errs = c.validate(None).unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("grid.n")));
        assert!(errs.iter().any(|e| e.starts_with("hold.box")));
        assert!(errs.iter().any(|e| e.starts_with("burgers[0].rho")));
        assert!(errs.iter().any(|e| e.starts_with("dislocations.loops[0].mult")));
        assert!(ScenarioConfig::reference_shear().validate(None).is_ok());
        assert!(ScenarioConfig::half_multiplicity().validate(None).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let c = ScenarioConfig::half_multiplicity();
        let s = serde_json::to_string(&c).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn initial_p_file_is_checked_and_loaded() {
        let dir = std::env::temp_dir().join(format!("slipcurrent-pfile-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut c = ScenarioConfig::reference_shear();
        c.grid.n = Some(8);
        c.dislocations.p_file = Some("p0".into());
        let errs = c.validate(Some(&dir)).unwrap_err();
        assert!(errs.iter().all(|e| e.starts_with("dislocations.p_file")) && errs.len() == 2);

        let grid = c.grid().unwrap();
        GridField::from_cells(&CellField::zeros(grid), crate::io::FieldRole::PlasticDelta).save(&dir.join("p0")).unwrap();
        let (_, with) = c.build(Some(&dir)).unwrap();
        c.dislocations.p_file = None;
        let (_, without) = c.build(None).unwrap();
        assert!((with.energy.total - without.energy.total).abs() <= 1e-12 * without.energy.total.abs().max(1.0));
        assert!(with.p.cells().is_some());

        c.grid.n = Some(16);
        c.dislocations.p_file = Some("p0".into());
        assert!(matches!(c.build(Some(&dir)), Err(Error::Invalid(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
