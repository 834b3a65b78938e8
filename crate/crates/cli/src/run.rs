use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nsch_core::adjoint::require_constant_mobility;
use nsch_core::control::{optimize, verify, Check, ControlField, Termination, VerifyReport};
use nsch_core::io::{save_faces, save_scalar};
use nsch_core::{Diagnostics, Error, Trajectory};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Optimize,
    /// `None` runs every check.
    Verify(Option<Check>),
}

/// Failure of a run, mapped onto the process exit status.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::InvalidGrid(_) | Error::NonConstantMobility(_) => {
                RunError::Config(e.to_string())
            }
            other => RunError::Numerical(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> RunError {
    RunError::Numerical(format!("cannot write {}: {e}", path.display()))
}

/// Result of a successful run.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Files written, in order.
    pub artifacts: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

/// Runs one subcommand, writing artifacts into `cfg.out_dir`.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, RunError> {
    if cmd == Command::Optimize {
        require_constant_mobility(&cfg.params)
            .map_err(|e| RunError::Config(format!("{e}; set physics.mobility = constant to optimize")))?;
    }
    let spec = cfg.problem_spec()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    let mut out = Outcome { artifacts: Vec::new(), summary: Vec::new() };
    match cmd {
        Command::Simulate => {
            let (problem, u) = spec.realize()?;
            let traj = problem.simulate(&u)?;
            write_diagnostics(cfg, &traj, &mut out)?;
            write_state_snapshots(cfg, &traj, &mut out)?;
            let last = traj.diagnostics.last().expect("initial node");
            let drift = traj.mass_drift().into_iter().fold(0.0, |a: f64, d| a.max(d.abs()));
            out.summary.push(format!(
                "simulated {} steps to t={:.6}: energy {:.6e}, max mass drift {drift:.3e}",
                traj.time.n_steps(),
                last.time,
                last.energy
            ));
        }
        Command::Optimize => {
            let (problem, _) = spec.realize()?;
            let u0 = ControlField::from_preset(&cfg.control, problem.grid(), &problem.time);
            let (u, report) = optimize(&u0, &problem, &cfg.optimizer)?;
            let path = cfg.out_dir.join("optimization.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
            w.write_record(nsch_core::control::OptimRow::CSV_HEADER).map_err(|e| io_err(&path, e))?;
            for r in &report.rows {
                w.write_record(r.csv_row()).map_err(|e| io_err(&path, e))?;
            }
            w.flush().map_err(|e| io_err(&path, e))?;
            out.artifacts.push(path);
            let traj = problem.simulate(&u)?;
            write_diagnostics(cfg, &traj, &mut out)?;
            write_control_snapshots(cfg, &u, &mut out)?;
            out.summary.push(format!(
                "{:?} after {} iterations: J {:.6e} -> {:.6e}, stationarity {:.3e} (|g0| {:.3e})",
                report.termination,
                report.iterations,
                report.initial_cost(),
                report.final_cost(),
                report.final_stationarity,
                report.initial_grad_norm
            ));
            if let Some(e) = report.failure() {
                return Err(RunError::Numerical(format!("{e}\n{}", out.summary.join("\n"))));
            }
            if report.termination == Termination::MaxIterations {
                out.summary.push("warning: iteration limit reached before the stopping test".into());
            }
        }
        Command::Verify(which) => {
            let checks: Vec<Check> = match which {
                Some(c) => vec![c],
                None => Check::ALL.to_vec(),
            };
            let mut reports = Vec::new();
            for c in checks {
                reports.push(verify(&spec, c, cfg.seed)?);
            }
            write_verify(cfg, &reports, &mut out)?;
            for r in &reports {
                out.summary.push(format!(
                    "{} {}: {}",
                    r.check.name(),
                    if r.passed { "PASS" } else { "FAIL" },
                    r.summary
                ));
            }
            if reports.iter().any(|r| !r.passed) {
                return Err(RunError::Numerical(format!("verification failed\n{}", out.summary.join("\n"))));
            }
        }
    }
    Ok(out)
}

fn write_diagnostics(cfg: &RunConfig, traj: &Trajectory, out: &mut Outcome) -> Result<(), RunError> {
    let path = cfg.out_dir.join("diagnostics.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(Diagnostics::CSV_HEADER).map_err(|e| io_err(&path, e))?;
    for d in &traj.diagnostics {
        w.write_record(d.csv_row()).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    out.artifacts.push(path);
    Ok(())
}

fn strided(cfg: &RunConfig, n: usize) -> impl Iterator<Item = usize> {
    let stride = cfg.snapshot_stride;
    (0..n).filter(move |k| stride > 0 && k % stride == 0)
}

fn write_state_snapshots(cfg: &RunConfig, traj: &Trajectory, out: &mut Outcome) -> Result<(), RunError> {
    let n = traj.states.len();
    let mut nodes: Vec<usize> = strided(cfg, n).collect();
    if cfg.snapshot_stride > 0 && nodes.last() != Some(&(n - 1)) {
        nodes.push(n - 1);
    }
    for k in nodes {
        let s = &traj.states[k];
        let p = cfg.out_dir.join(format!("phi_{k:06}.nschf"));
        save_scalar(&p, "phi", &s.phi, s.time).map_err(|e| io_err(&p, e))?;
        out.artifacts.push(p);
        let p = cfg.out_dir.join(format!("v_{k:06}.nschv"));
        save_faces(&p, "v", &s.v, s.time).map_err(|e| io_err(&p, e))?;
        out.artifacts.push(p);
    }
    Ok(())
}

fn write_control_snapshots(cfg: &RunConfig, u: &ControlField, out: &mut Outcome) -> Result<(), RunError> {
    let dt = u.dt();
    for k in strided(cfg, u.len()) {
        let p = cfg.out_dir.join(format!("u_{k:06}.nschv"));
        // Step k acts on (t_k, t_{k+1}); stamped with its midpoint.
        save_faces(&p, "u", &u.steps()[k], (k as f64 + 0.5) * dt).map_err(|e| io_err(&p, e))?;
        out.artifacts.push(p);
    }
    Ok(())
}

fn write_verify(cfg: &RunConfig, reports: &[VerifyReport], out: &mut Outcome) -> Result<(), RunError> {
    let path = cfg.out_dir.join("verify.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(["check", "seed", "passed", "metric", "value"]).map_err(|e| io_err(&path, e))?;
    let seed = cfg.seed.to_string();
    for r in reports {
        let passed = u8::from(r.passed).to_string();
        for (k, v) in &r.metrics {
            w.write_record([r.check.name(), &seed, &passed, k, &format!("{v:.17e}")])
                .map_err(|e| io_err(&path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    out.artifacts.push(path);
    Ok(())
}
