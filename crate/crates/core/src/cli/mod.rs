//! Command-line front end: configuration, subcommand dispatch and file output.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::adjoint::{adjoint_norms, solve_adjoint_with};
use crate::control::{control_gradient, optimize, BoundaryControl, CostSpec, OptimizeOptions, ReducedProblem};
use crate::error::{Error, Result};
use crate::field::BoundaryTrace;
use crate::lifting::elliptic_lifts;
use crate::linearized::taylor_remainder_slopes;
use crate::ops::max_divergence;
use crate::scenario::{random_deviation, Scenario};
use crate::state::{energy_parts, lifted_energy, solve_state_with, StateTrajectory, StepOperators};
use crate::verify::{run_default_suite, SuiteConfig, DEFAULT_S_LADDER};

pub use config::{check_weights, parse_config, parse_config_str, InitialControl, RunConfig, TargetSource};
use output::{control_from_csv, control_to_csv, csv_table, vtk_files, write_atomic};

pub const THREADS_VAR: &str = "LCFLOW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lcflow", version, about = "Nematic liquid-crystal flow with boundary control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward solve; writes energy.csv and snapshots.
    Simulate(RunArgs),
    /// Taylor test of the linearized solver; writes taylor.csv.
    Linearize(RunArgs),
    /// Backward solve; writes adjoint_norms.csv and gradient.csv.
    Adjoint(RunArgs),
    /// Projected-gradient optimization; writes optimize.csv and h_opt.csv.
    Optimize(RunArgs),
    /// Verification suite; writes verify.jsonl.
    Verify(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Linearize(_) => "linearize",
            Command::Adjoint(_) => "adjoint",
            Command::Optimize(_) => "optimize",
            Command::Verify(_) => "verify",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a) | Command::Linearize(a) | Command::Adjoint(a) | Command::Optimize(a) | Command::Verify(a) => a,
        }
    }
}

/// How a run ended, short of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Artifacts written, but a check failed or the solver gave up.
    NumericalFailure,
}

/// Exit status for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidGrid(_)
        | Error::InvalidParams(_)
        | Error::StepTooLarge { .. }
        | Error::InvalidCost(_)
        | Error::Compatibility { .. }
        | Error::NonZeroInitialDeviation(_)
        | Error::TerminalTrace(_)
        | Error::ShapeMismatch(_) => 2,
        Error::AtLevel { source, .. } => exit_code(source),
        _ => 1,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))
}

/// Parses the configuration and applies command-line overrides.
pub fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.output {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let name = cli.command.name();
    let result = configure_threads().and_then(|_| load_config(cli.command.args())).and_then(|cfg| run_command(name, &cfg));
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::NumericalFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("lcflow {name}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs one subcommand with a resolved configuration.
pub fn run_command(name: &str, cfg: &RunConfig) -> Result<Outcome> {
    if name == "optimize" {
        check_weights(cfg)?;
    }
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("resolved_config.txt"), cfg.resolved_text().as_bytes())?;
    match name {
        "simulate" => simulate(cfg),
        "linearize" => linearize(cfg),
        "adjoint" => adjoint(cfg),
        "optimize" => run_optimize(cfg),
        "verify" => verify(cfg),
        other => Err(Error::Config(format!("unknown subcommand '{other}'"))),
    }
}

fn read_control(cfg: &RunConfig, path: &Path) -> Result<Vec<BoundaryTrace>> {
    let text = std::fs::read_to_string(path)?;
    control_from_csv(&cfg.grid, &text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Boundary data for forward runs: the scenario's own unless a file is given.
fn forward_control(cfg: &RunConfig, scn: &Scenario) -> Result<Vec<BoundaryTrace>> {
    match &cfg.initial {
        InitialControl::File(p) => read_control(cfg, p),
        _ => Ok(scn.h.clone()),
    }
}

fn build_cost(cfg: &RunConfig, ops: &StepOperators, scn: &Scenario) -> Result<CostSpec> {
    let track = |h: &[BoundaryTrace]| -> Result<CostSpec> {
        let truth = solve_state_with(ops, &scn.v0, &scn.d0, h)?;
        CostSpec::tracking(&truth, cfg.betas, cfg.gamma)
    };
    match &cfg.targets {
        TargetSource::Zero => CostSpec::with_zero_targets(&cfg.grid, cfg.betas, cfg.gamma),
        TargetSource::Scenario => track(&scn.h),
        TargetSource::ControlFile(p) => track(&read_control(cfg, p)?),
    }
}

fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let g = cfg.grid;
    let scn = cfg.scenario_spec().build()?;
    let ops = StepOperators::new(&g, &cfg.params)?;
    let h = forward_control(cfg, &scn)?;
    let traj = solve_state_with(&ops, &scn.v0, &scn.d0, &h)?;
    let lifts = elliptic_lifts(&traj.controls(), &g)?;
    let rows = traj.snapshots.iter().zip(&lifts).enumerate().map(|(k, (s, lift))| {
        let e = energy_parts(&g, s, &cfg.params);
        vec![
            k as f64,
            s.t,
            e.total(),
            lifted_energy(&g, s, lift, cfg.params.epsilon),
            e.kinetic,
            e.elastic,
            e.potential,
            max_divergence(&g, &s.v),
            s.d.max_norm(),
        ]
    });
    let header = ["step", "t", "E", "E_hat", "kinetic", "elastic", "potential", "max_div", "max_dnorm"];
    write_atomic(&cfg.output_dir.join("energy.csv"), csv_table(&header, rows).as_bytes())?;
    write_atomic(&cfg.output_dir.join("control.csv"), control_to_csv(&g, &h).as_bytes())?;
    if cfg.emit_vtk {
        write_snapshots(cfg, &traj)?;
    }
    println!("simulate: {} steps, max |div v| = {:e}, max |d| = {:.6}", g.n_steps(), traj.max_divergence(), traj.max_director_norm());
    Ok(Outcome::Success)
}

fn write_snapshots(cfg: &RunConfig, traj: &StateTrajectory) -> Result<()> {
    let last = traj.n_steps();
    for (k, s) in traj.snapshots.iter().enumerate() {
        if k % cfg.snapshot_stride == 0 || k == last {
            for (name, text) in vtk_files(&cfg.grid, s, k) {
                write_atomic(&cfg.output_dir.join(name), text.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn linearize(cfg: &RunConfig) -> Result<Outcome> {
    let g = cfg.grid;
    let scn = cfg.scenario_spec().build()?;
    let ops = StepOperators::new(&g, &cfg.params)?;
    let h = forward_control(cfg, &scn)?;
    let base = solve_state_with(&ops, &scn.v0, &scn.d0, &h)?;
    let xi = random_deviation(&g, cfg.seed);
    let rep = taylor_remainder_slopes(&ops, &base, &xi, &DEFAULT_S_LADDER)?;
    let rows = (0..rep.s.len()).map(|i| vec![rep.s[i], rep.remainder[i], rep.local_slope[i]]);
    write_atomic(&cfg.output_dir.join("taylor.csv"), csv_table(&["s", "remainder", "local_slope"], rows).as_bytes())?;
    println!("linearize: fitted remainder slope {:.4}", rep.slope);
    Ok(Outcome::Success)
}

fn adjoint(cfg: &RunConfig) -> Result<Outcome> {
    let g = cfg.grid;
    let scn = cfg.scenario_spec().build()?;
    let ops = StepOperators::new(&g, &cfg.params)?;
    let h = forward_control(cfg, &scn)?;
    let cost = build_cost(cfg, &ops, &scn)?;
    let base = solve_state_with(&ops, &scn.v0, &scn.d0, &h)?;
    let adj = solve_adjoint_with(&ops, &base, &cost)?;
    let grad = control_gradient(&base, &adj, &h, &cost)?;
    let rows = adjoint_norms(&g, &adj).into_iter().map(|r| r.to_vec());
    let header = ["t", "p_tilde_l2", "q_tilde_l2", "q1_boundary_l2"];
    write_atomic(&cfg.output_dir.join("adjoint_norms.csv"), csv_table(&header, rows).as_bytes())?;
    write_atomic(&cfg.output_dir.join("gradient.csv"), control_to_csv(&g, &grad).as_bytes())?;
    println!("adjoint: J = {:e}, |g|_Sigma = {:e}", crate::control::cost_evaluate(&base, &h, &cost)?, crate::control::sigma_norm(&g, &grad));
    Ok(Outcome::Success)
}

fn run_optimize(cfg: &RunConfig) -> Result<Outcome> {
    let g = cfg.grid;
    let scn = cfg.scenario_spec().build()?;
    let ops = StepOperators::new(&g, &cfg.params)?;
    let cost = build_cost(cfg, &ops, &scn)?;
    let start = match &cfg.initial {
        InitialControl::HRef => BoundaryControl::new(&g, scn.d0.trace.clone(), cfg.m_space, cfg.m_time)?,
        InitialControl::Scenario => BoundaryControl::from_levels(&g, &scn.h, cfg.m_space, cfg.m_time)?,
        InitialControl::File(p) => BoundaryControl::from_levels(&g, &read_control(cfg, p)?, cfg.m_space, cfg.m_time)?,
    };
    let problem = ReducedProblem { ops: &ops, v0: scn.v0.clone(), d0: scn.d0.clone(), cost };
    let opts = OptimizeOptions {
        max_iters: cfg.max_iters,
        tol_opt: cfg.tol_opt,
        armijo_c: cfg.armijo_c,
        backtrack: cfg.backtrack,
        ..Default::default()
    };
    let res = optimize(&problem, &start, &opts)?;
    let rows = res.history.iter().map(|r| {
        vec![r.iter as f64, r.j, r.grad_norm, r.stationarity, r.step, r.backtracks as f64, r.n_space, r.n_time]
    });
    let header = ["iter", "J", "grad_norm", "stationarity", "step", "backtracks", "N_space", "N_time"];
    write_atomic(&cfg.output_dir.join("optimize.csv"), csv_table(&header, rows).as_bytes())?;
    write_atomic(&cfg.output_dir.join("h_opt.csv"), control_to_csv(&g, &res.control.levels()).as_bytes())?;
    let resid = res.projection_residual;
    let summary = format!(
        "converged = {}\nline_search_failed = {}\niterations = {}\nprojection_residual = {}\n",
        res.converged,
        res.line_search_failed,
        res.history.len() - 1,
        resid.map(|r| format!("{r:.16e}")).unwrap_or_else(|| "undefined".into())
    );
    write_atomic(&cfg.output_dir.join("projection_residual.txt"), summary.as_bytes())?;
    let last = res.history.last().expect("history has the initial record");
    println!(
        "optimize: {} iterations, J {:e} -> {:e}, converged = {}",
        res.history.len() - 1,
        res.history[0].j,
        last.j,
        res.converged
    );
    Ok(if res.line_search_failed { Outcome::NumericalFailure } else { Outcome::Success })
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let reports = run_default_suite(&SuiteConfig::new(cfg.scenario_spec()));
    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.to_json());
        text.push('\n');
        println!("verify: {:<22} {:?}", r.name, r.status);
    }
    write_atomic(&cfg.output_dir.join("verify.jsonl"), text.as_bytes())?;
    Ok(if reports.iter().all(|r| r.passed()) { Outcome::Success } else { Outcome::NumericalFailure })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, dir: &Path) -> RunConfig {
        let mut c = parse_config_str(text, Path::new(".")).unwrap();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn stationary_simulation_has_constant_energy_rows() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("grid.nx = 8\nscenario.name = stationary\noutput.snapshot_stride = 5\n", dir.path());
        assert_eq!(run_command("simulate", &c).unwrap(), Outcome::Success);
        let text = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
        let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), 21);
        assert!(rows.iter().all(|r| r[2..].iter().zip(&rows[0][2..]).all(|(a, b)| (a - b).abs() < 1e-12)));
        for k in [0, 5, 20] {
            assert!(dir.path().join(format!("director_{k:06}.vtk")).is_file());
        }
        assert!(!dir.path().join("director_000003.vtk").exists());
        assert!(dir.path().join("resolved_config.txt").is_file());
    }

    #[test]
    fn optimize_refuses_vanishing_weights() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("grid.nx = 8\ncost.beta2 = 0\ncost.gamma = 0\n", dir.path());
        let e = run_command("optimize", &c).unwrap_err();
        assert!(e.to_string().contains("do not vanish simultaneously"));
        assert_eq!(exit_code(&e), 2);
        assert!(run_command("adjoint", &c).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::StepTooLarge { dt: 1.0, bound: 0.5 }), 2);
        assert_eq!(exit_code(&Error::NonFinite { field: "v" }), 1);
        assert_eq!(exit_code(&Error::NonFinite { field: "v" }.at_level(3)), 1);
        assert_eq!(exit_code(&Error::Config("x".into()).at_level(3)), 2);
    }
}
