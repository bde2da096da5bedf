//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhysParams};
use crate::scenario::{ScenarioKind, ScenarioSpec};

/// Where tracking targets come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSource {
    Zero,
    /// Trajectory driven by the scenario's own boundary data.
    Scenario,
    /// Trajectory driven by a control read from a CSV file.
    ControlFile(PathBuf),
}

/// Starting control of an optimization run.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialControl {
    /// Constant in time, equal to the boundary data at `t = 0`.
    HRef,
    Scenario,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: PhysParams,
    pub scenario: ScenarioKind,
    pub amplitude: f64,
    pub betas: [f64; 4],
    pub gamma: f64,
    pub targets: TargetSource,
    pub m_space: f64,
    pub m_time: f64,
    pub initial: InitialControl,
    pub max_iters: usize,
    pub tol_opt: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub output_dir: PathBuf,
    pub snapshot_stride: usize,
    pub emit_vtk: bool,
    pub seed: u64,
}

impl RunConfig {
    pub fn scenario_spec(&self) -> ScenarioSpec {
        ScenarioSpec { amplitude: self.amplitude, ..ScenarioSpec::new(self.scenario, self.grid, self.params, self.seed) }
    }

    /// Every key with its resolved value, in the input syntax.
    pub fn resolved_text(&self) -> String {
        let g = &self.grid;
        let p = &self.params;
        let target = match &self.targets {
            TargetSource::Zero => "zero".to_string(),
            TargetSource::Scenario => "scenario".to_string(),
            TargetSource::ControlFile(f) => f.display().to_string(),
        };
        let initial = match &self.initial {
            InitialControl::HRef => "h_ref".to_string(),
            InitialControl::Scenario => "scenario".to_string(),
            InitialControl::File(f) => f.display().to_string(),
        };
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("grid.nx", g.nx.to_string());
        put("grid.ny", g.ny.to_string());
        put("grid.lx", format!("{:?}", g.lx));
        put("grid.ly", format!("{:?}", g.ly));
        put("grid.dt", format!("{:?}", g.dt));
        put("grid.t_final", format!("{:?}", g.t_final));
        put("grid.director_dim", g.n_dir.to_string());
        put("physics.nu", format!("{:?}", p.nu));
        put("physics.lambda", format!("{:?}", p.lambda));
        put("physics.eta", format!("{:?}", p.eta));
        put("physics.epsilon", format!("{:?}", p.epsilon));
        put("scenario.name", self.scenario.to_string());
        put("scenario.amplitude", format!("{:?}", self.amplitude));
        for (i, b) in self.betas.iter().enumerate() {
            put(&format!("cost.beta{}", i + 1), format!("{b:?}"));
        }
        put("cost.gamma", format!("{:?}", self.gamma));
        put("cost.targets", target);
        put("control.M_space", format!("{:?}", self.m_space));
        put("control.M_time", format!("{:?}", self.m_time));
        put("control.initial", initial);
        put("optimize.max_iters", self.max_iters.to_string());
        put("optimize.tol_opt", format!("{:?}", self.tol_opt));
        put("optimize.armijo", format!("{:?}", self.armijo_c));
        put("optimize.backtrack", format!("{:?}", self.backtrack));
        put("output.directory", self.output_dir.display().to_string());
        put("output.snapshot_stride", self.snapshot_stride.to_string());
        put("output.emit_vtk", self.emit_vtk.to_string());
        put("seed", self.seed.to_string());
        s
    }
}

const KEYS: &[&str] = &[
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "grid.dt",
    "grid.t_final",
    "grid.director_dim",
    "physics.nu",
    "physics.lambda",
    "physics.eta",
    "physics.epsilon",
    "scenario.name",
    "scenario.amplitude",
    "cost.beta1",
    "cost.beta2",
    "cost.beta3",
    "cost.beta4",
    "cost.gamma",
    "cost.targets",
    "control.M_space",
    "control.M_time",
    "control.initial",
    "optimize.max_iters",
    "optimize.tol_opt",
    "optimize.armijo",
    "optimize.backtrack",
    "output.directory",
    "output.snapshot_stride",
    "output.emit_vtk",
    "seed",
];

/// Raw entries with the line each came from.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn line(&self, key: &str) -> String {
        match self.map.get(key) {
            Some((n, _)) => format!("line {n}"),
            None => "default".to_string(),
        }
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.map.get(key) {
            None => Ok(default),
            Some((n, v)) => v.parse().map_err(|_| {
                Error::Config(format!("line {n}: {key}: cannot parse '{v}' as {}", std::any::type_name::<T>()))
            }),
        }
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    /// Wraps a constraint violation with the line of `key`.
    fn at(&self, key: &str, e: Error) -> Error {
        Error::Config(format!("{}: {key}: {e}", self.line(key)))
    }
}

fn read_entries(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {n}: expected 'section.key = value', got '{line}'")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("line {n}: unknown key '{k}'")));
        }
        if let Some((prev, _)) = map.insert(k.to_string(), (n, v.to_string())) {
            return Err(Error::Config(format!("line {n}: duplicate key '{k}' (first set on line {prev})")));
        }
    }
    Ok(Entries { map })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if base.as_os_str().is_empty() || base == Path::new(".") {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses and validates a configuration. `base_dir` resolves relative file paths.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let e = read_entries(text)?;
    let nx: usize = e.get("grid.nx", 32)?;
    let ny: usize = e.get("grid.ny", nx)?;
    let lx: f64 = e.get("grid.lx", 1.0)?;
    let ly: f64 = e.get("grid.ly", lx)?;
    let params = PhysParams {
        nu: e.get("physics.nu", 1.0)?,
        lambda: e.get("physics.lambda", 1.0)?,
        eta: e.get("physics.eta", 1.0)?,
        epsilon: e.get("physics.epsilon", 1.0)?,
    };
    params.validate().map_err(|err| e.at("physics", err))?;
    let h = (lx / nx.max(1) as f64).min(ly / ny.max(1) as f64);
    let default_dt = 0.8 * 0.25 * h * h * (1.0 / params.nu).min(1.0 / params.eta);
    let dt: f64 = e.get("grid.dt", default_dt)?;
    let t_final: f64 = e.get("grid.t_final", 20.0 * dt)?;
    let n_dir: usize = e.get("grid.director_dim", 2)?;
    if n_dir != 2 && n_dir != 3 {
        return Err(e.at("grid.director_dim", Error::Config(format!("must be 2 or 3, got {n_dir}"))));
    }
    let grid = GridSpec { lx, ly, nx, ny, t_final, dt, n_dir };
    grid.validate().map_err(|err| e.at("grid", err))?;
    if ((t_final / dt).round() * dt - t_final).abs() > 1e-9 * t_final {
        return Err(e.at("grid.t_final", Error::Config(format!("{t_final} is not a whole number of steps of {dt}"))));
    }
    grid.check_step(&params).map_err(|err| e.at("grid.dt", err))?;

    let scenario: ScenarioKind = match e.str("scenario.name") {
        None => ScenarioKind::Vortex,
        Some(s) => s.parse().map_err(|err| e.at("scenario.name", err))?,
    };
    let amplitude: f64 = e.get("scenario.amplitude", 1.0)?;
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(e.at("scenario.amplitude", Error::Config(format!("must be finite and nonnegative, got {amplitude}"))));
    }

    let betas = [e.get("cost.beta1", 0.0)?, e.get("cost.beta2", 1.0)?, e.get("cost.beta3", 0.0)?, e.get("cost.beta4", 0.0)?];
    let gamma: f64 = e.get("cost.gamma", 1e-3)?;
    for (k, v) in ["cost.beta1", "cost.beta2", "cost.beta3", "cost.beta4", "cost.gamma"].iter().zip(betas.iter().chain([&gamma])) {
        if !(*v >= 0.0 && v.is_finite()) {
            return Err(e.at(k, Error::Config(format!("must be finite and nonnegative, got {v}"))));
        }
    }
    let file = |key: &str, v: &str| -> Result<PathBuf> {
        let p = resolve(base_dir, Path::new(v));
        if !p.is_file() {
            return Err(e.at(key, Error::Config(format!("file '{}' does not exist", p.display()))));
        }
        Ok(p)
    };
    let targets = match e.str("cost.targets") {
        None | Some("scenario") => TargetSource::Scenario,
        Some("zero") => TargetSource::Zero,
        Some(p) => TargetSource::ControlFile(file("cost.targets", p)?),
    };
    let initial = match e.str("control.initial") {
        None | Some("h_ref") => InitialControl::HRef,
        Some("scenario") => InitialControl::Scenario,
        Some(p) => InitialControl::File(file("control.initial", p)?),
    };
    let m_space: f64 = e.get("control.M_space", 1e6)?;
    let m_time: f64 = e.get("control.M_time", 1e6)?;
    for (k, v) in [("control.M_space", m_space), ("control.M_time", m_time)] {
        if !(v > 0.0) {
            return Err(e.at(k, Error::Config(format!("must be positive, got {v}"))));
        }
    }

    let max_iters: usize = e.get("optimize.max_iters", 50)?;
    let tol_opt: f64 = e.get("optimize.tol_opt", 1e-4)?;
    let armijo_c: f64 = e.get("optimize.armijo", 1e-4)?;
    let backtrack: f64 = e.get("optimize.backtrack", 0.5)?;
    if !(tol_opt > 0.0) {
        return Err(e.at("optimize.tol_opt", Error::Config(format!("must be positive, got {tol_opt}"))));
    }
    if !(armijo_c > 0.0 && armijo_c < 1.0) {
        return Err(e.at("optimize.armijo", Error::Config(format!("must lie in (0, 1), got {armijo_c}"))));
    }
    if !(backtrack > 0.0 && backtrack < 1.0) {
        return Err(e.at("optimize.backtrack", Error::Config(format!("must lie in (0, 1), got {backtrack}"))));
    }

    let output_dir = PathBuf::from(e.str("output.directory").unwrap_or("out"));
    let snapshot_stride: usize = e.get("output.snapshot_stride", 10)?;
    if snapshot_stride == 0 {
        return Err(e.at("output.snapshot_stride", Error::Config("must be at least 1".into())));
    }
    let emit_vtk: bool = e.get("output.emit_vtk", true)?;
    let seed: u64 = e.get("seed", 42)?;

    Ok(RunConfig {
        grid,
        params,
        scenario,
        amplitude,
        betas,
        gamma,
        targets,
        m_space,
        m_time,
        initial,
        max_iters,
        tol_opt,
        armijo_c,
        backtrack,
        output_dir: resolve(base_dir, &output_dir),
        snapshot_stride,
        emit_vtk,
        seed,
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| Error::Config(format!("cannot read config '{}': {err}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, dir).map_err(|err| Error::Config(format!("{}: {err}", path.display())))
}

/// The weights may not all vanish when optimizing.
pub fn check_weights(cfg: &RunConfig) -> Result<()> {
    if cfg.betas.iter().chain([&cfg.gamma]).all(|&w| w == 0.0) {
        return Err(Error::Config(
            "optimize requires that the weights beta1..beta4 and gamma do not vanish simultaneously; all are zero".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("grid.nx = 16\nphysics.nu = 1.0\n").unwrap();
        assert_eq!((c.grid.nx, c.grid.ny, c.grid.n_dir), (16, 16, 2));
        assert_eq!(c.grid.n_steps(), 20);
        assert_eq!(c.betas, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(c.gamma, 1e-3);
        assert_eq!(c.scenario, ScenarioKind::Vortex);
        assert_eq!(c.targets, TargetSource::Scenario);
        assert_eq!(c.initial, InitialControl::HRef);
        assert_eq!((c.max_iters, c.snapshot_stride, c.emit_vtk, c.seed), (50, 10, true, 42));
    }

    #[test]
    fn resolved_text_parses_back_to_the_same_config() {
        let c = parse("grid.nx = 12\ngrid.dt = 1e-4\ngrid.t_final = 1e-3\nscenario.name = rotating\ncost.beta1 = 0.5\n").unwrap();
        let back = parse(&c.resolved_text()).unwrap();
        assert_eq!(c.grid, back.grid);
        assert_eq!(c.resolved_text(), back.resolved_text());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("grid.nx = 16\n\n  bogus.key = 1\n").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("bogus.key"), "{err}");
        let err = parse("# comment\ngrid.nx = sixteen\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = parse("grid.nx = 16\ngrid.nx = 17\n").unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains("line 2"), "{err}");
        let err = parse("grid.nx 16\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn step_guard_reports_the_bound() {
        let err = parse("grid.nx = 16\nphysics.nu = 2.0\ngrid.dt = 0.01\ngrid.t_final = 0.1\n").unwrap_err().to_string();
        // 0.25 * (1/16)^2 / 2
        assert!(err.contains("line 3") && err.contains("4.8828125e-4"), "{err}");
    }

    #[test]
    fn vanishing_weights_rejected_for_optimize() {
        let c = parse("cost.beta2 = 0\ncost.gamma = 0\n").unwrap();
        let err = check_weights(&c).unwrap_err().to_string();
        assert!(err.contains("do not vanish simultaneously"));
        assert!(check_weights(&parse("").unwrap()).is_ok());
    }

    #[test]
    fn missing_files_and_bad_values() {
        assert!(parse("cost.targets = nowhere.csv\n").unwrap_err().to_string().contains("does not exist"));
        assert!(parse("scenario.name = swirl\n").is_err());
        assert!(parse("grid.director_dim = 4\n").is_err());
        assert!(parse("cost.gamma = -1\n").is_err());
        assert!(parse("grid.dt = 1e-4\ngrid.t_final = 1.5e-4\n").is_err());
    }
}
