//! Line-oriented `section.key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Unknown keys, duplicate keys
//! and malformed values are errors carrying the line number. Every key has a
//! default, so an empty file describes the default desk problem.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use nsch_core::control::{
    BoxBounds, InitialPhase, InitialVelocity, OptimOptions, ProblemSpec, TargetSpec,
};
use nsch_core::io::{load_faces, load_scalar};
use nsch_core::presets::{ControlPreset, PhasePreset};
use nsch_core::{ControlBounds, GridSpec, Mobility, PhysParams, TimeSpec};

/// A rejected configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn field(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityLaw {
    Constant,
    Tanh,
}

/// Where the tracking and terminal targets come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetMode {
    /// Simulate the given control and track its phase field.
    SelfGenerated(ControlPreset),
    Fixed { tracking: PhasePreset, terminal: PhasePreset },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSource {
    Preset(PhasePreset),
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VelocitySource {
    Preset(ControlPreset),
    Snapshot(PathBuf),
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub params: PhysParams,
    pub mobility_law: MobilityLaw,
    pub alpha: [f64; 3],
    pub target: TargetMode,
    pub bounds: BoxBounds,
    pub phase: PhaseSource,
    pub velocity: VelocitySource,
    /// Control for `simulate`, start of `optimize`, base point of `verify`.
    pub control: ControlPreset,
    pub optimizer: OptimOptions,
    pub out_dir: PathBuf,
    /// Write a snapshot every `stride` steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub threads: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(64, 64, 16.0, 16.0).expect("default grid"),
            time: TimeSpec::new(0.1, 1e-3).expect("default time"),
            params: PhysParams::default(),
            mobility_law: MobilityLaw::Constant,
            alpha: [1.0, 1.0, 2e-6],
            target: TargetMode::SelfGenerated(ControlPreset::Cellular { amplitude: 2.0 }),
            bounds: BoxBounds { x: (-10.0, 10.0), y: (-10.0, 10.0) },
            phase: PhaseSource::Preset(PhasePreset::Bubble { radius: None }),
            velocity: VelocitySource::Preset(ControlPreset::Zero),
            control: ControlPreset::Zero,
            optimizer: OptimOptions::default(),
            out_dir: PathBuf::from("out"),
            snapshot_stride: 0,
            threads: 1,
            seed: 0,
        }
    }
}

/// Every recognized key with its default, in file order.
pub const KEYS: &[(&str, &str)] = &[
    ("grid.nx", "64"),
    ("grid.ny", "64"),
    ("grid.lx", "16"),
    ("grid.ly", "16"),
    ("time.T", "0.1"),
    ("time.dt", "1e-3"),
    ("physics.eta", "1"),
    ("physics.nu_bar", "1"),
    ("physics.nu_amp", "0.5"),
    ("physics.mobility", "constant"),
    ("physics.m_const", "1"),
    ("physics.m_amp", "0"),
    ("physics.stabilization", "2"),
    ("cost.alpha1", "1"),
    ("cost.alpha2", "1"),
    ("cost.alpha3", "2e-6"),
    ("cost.target", "self"),
    ("cost.target_control", "cellular"),
    ("cost.target_amplitude", "2"),
    ("cost.target_phase", "bubble"),
    ("cost.terminal_phase", "bubble"),
    ("bounds.u_min", "-10"),
    ("bounds.u_max", "10"),
    ("initial.phase", "bubble"),
    ("initial.phase_file", ""),
    ("initial.velocity", "zero"),
    ("initial.velocity_amplitude", "1"),
    ("initial.velocity_file", ""),
    ("control.preset", "zero"),
    ("control.amplitude", "1"),
    ("optimizer.tol", "1e-10"),
    ("optimizer.rel_tol", "1e-3"),
    ("optimizer.max_iter", "50"),
    ("optimizer.c1", "1e-4"),
    ("optimizer.backtrack", "0.5"),
    ("optimizer.max_halvings", "30"),
    ("optimizer.initial_step", "auto"),
    ("output.dir", "out"),
    ("output.snapshot_stride", "0"),
    ("run.threads", "1"),
    ("run.seed", "0"),
];

struct Entries {
    map: BTreeMap<&'static str, (String, usize)>,
}

impl Entries {
    fn raw(&self, key: &str) -> (&str, usize) {
        match self.map.get(key) {
            Some((v, l)) => (v.as_str(), *l),
            None => (default_of(key), 0),
        }
    }

    fn err(&self, key: &str, msg: String) -> ConfigError {
        match self.raw(key).1 {
            0 => ConfigError::field(format!("{key}: {msg}")),
            l => ConfigError::at(l, format!("{key}: {msg}")),
        }
    }

    fn str(&self, key: &str) -> &str {
        self.raw(key).0
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let v = self.str(key);
        v.parse().map_err(|_| self.err(key, format!("cannot parse '{v}'")))
    }

    fn real(&self, key: &str) -> Result<f64, ConfigError> {
        let x: f64 = self.num(key)?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.err(key, format!("must be finite, got {x}")))
        }
    }

    fn path(&self, key: &str, base: &Path) -> Option<PathBuf> {
        match self.str(key) {
            "" => None,
            p => Some(base.join(p)),
        }
    }
}

fn default_of(key: &str) -> &'static str {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).expect("known key")
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::at(line_no, format!("expected 'section.key = value', got '{line}'")));
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(&(key, _)) = KEYS.iter().find(|(name, _)| *name == k) else {
            return Err(ConfigError::at(line_no, format!("unknown key '{k}'")));
        };
        if let Some((_, first)) = map.insert(key, (v.to_string(), line_no)) {
            return Err(ConfigError::at(line_no, format!("duplicate key '{k}' (first set on line {first})")));
        }
    }
    Ok(Entries { map })
}

/// Parses and validates configuration text. Relative snapshot paths are
/// resolved against `base`.
pub fn parse_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;

    let grid = GridSpec::new(e.num("grid.nx")?, e.num("grid.ny")?, e.real("grid.lx")?, e.real("grid.ly")?)
        .map_err(|err| ConfigError::field(format!("grid: {err}")))?;
    let time = TimeSpec::new(e.real("time.T")?, e.real("time.dt")?)
        .map_err(|err| ConfigError::field(format!("time: {err}")))?;

    let mobility_law = match e.str("physics.mobility") {
        "constant" => MobilityLaw::Constant,
        "tanh" => MobilityLaw::Tanh,
        other => {
            return Err(e.err("physics.mobility", format!("expected constant or tanh, got '{other}'")));
        }
    };
    let (m0, m_amp) = (e.real("physics.m_const")?, e.real("physics.m_amp")?);
    let mobility = match mobility_law {
        MobilityLaw::Constant => Mobility::Constant(m0),
        MobilityLaw::Tanh => Mobility::Tanh { m_star: m0, m_amp },
    };
    let params = PhysParams {
        eta: e.real("physics.eta")?,
        nu_bar: e.real("physics.nu_bar")?,
        nu_amp: e.real("physics.nu_amp")?,
        mobility,
        stabilization: e.real("physics.stabilization")?,
        ..PhysParams::default()
    };
    params.validate().map_err(|err| ConfigError::field(format!("physics: {}", strip(&err))))?;

    let alpha = [e.real("cost.alpha1")?, e.real("cost.alpha2")?, e.real("cost.alpha3")?];
    nsch_core::constitutive::validate_weights(alpha[0], alpha[1], alpha[2])
        .map_err(|err| ConfigError::field(format!("cost: {}", strip(&err))))?;
    let target = match e.str("cost.target") {
        "self" => TargetMode::SelfGenerated(control_preset(
            &e,
            "cost.target_control",
            e.real("cost.target_amplitude")?,
        )?),
        "fixed" => TargetMode::Fixed {
            tracking: phase_preset(&e, "cost.target_phase")?,
            terminal: phase_preset(&e, "cost.terminal_phase")?,
        },
        other => return Err(e.err("cost.target", format!("expected self or fixed, got '{other}'"))),
    };

    let (lo, hi) = (e.real("bounds.u_min")?, e.real("bounds.u_max")?);
    ControlBounds::constant((lo, hi), (lo, hi)).map_err(|err| ConfigError::field(format!("bounds: {}", strip(&err))))?;
    let bounds = BoxBounds { x: (lo, hi), y: (lo, hi) };

    let phase = match e.path("initial.phase_file", base) {
        Some(p) => PhaseSource::Snapshot(p),
        None => PhaseSource::Preset(phase_preset(&e, "initial.phase")?),
    };
    let velocity = match e.path("initial.velocity_file", base) {
        Some(p) => VelocitySource::Snapshot(p),
        None => VelocitySource::Preset(control_preset(
            &e,
            "initial.velocity",
            e.real("initial.velocity_amplitude")?,
        )?),
    };
    let control = control_preset(&e, "control.preset", e.real("control.amplitude")?)?;

    let initial_step = match e.str("optimizer.initial_step") {
        "auto" => None,
        _ => Some(e.real("optimizer.initial_step")?),
    };
    let optimizer = OptimOptions {
        tol: e.real("optimizer.tol")?,
        rel_tol: e.real("optimizer.rel_tol")?,
        max_iter: e.num("optimizer.max_iter")?,
        c1: e.real("optimizer.c1")?,
        backtrack: e.real("optimizer.backtrack")?,
        max_halvings: e.num("optimizer.max_halvings")?,
        initial_step,
    };
    optimizer.validate().map_err(|err| ConfigError::field(format!("optimizer: {}", strip(&err))))?;

    let threads: usize = e.num("run.threads")?;
    if threads == 0 {
        return Err(e.err("run.threads", "must be at least 1".into()));
    }

    let cfg = RunConfig {
        grid,
        time,
        params,
        mobility_law,
        alpha,
        target,
        bounds,
        phase,
        velocity,
        control,
        optimizer,
        out_dir: PathBuf::from(e.str("output.dir")),
        snapshot_stride: e.num("output.snapshot_stride")?,
        threads,
        seed: e.num("run.seed")?,
    };
    for p in cfg.snapshot_paths() {
        if !p.is_file() {
            return Err(ConfigError::field(format!("snapshot file {} does not exist", p.display())));
        }
    }
    Ok(cfg)
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| ConfigError::field(format!("cannot read {}: {err}", path.display())))?;
    parse_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Drops the generic "invalid parameters:" prefix of core errors.
fn strip(err: &nsch_core::Error) -> String {
    match err {
        nsch_core::Error::InvalidParams(m) | nsch_core::Error::InvalidGrid(m) => m.clone(),
        other => other.to_string(),
    }
}

fn phase_preset(e: &Entries, key: &str) -> Result<PhasePreset, ConfigError> {
    PhasePreset::parse(e.str(key)).map_err(|err| e.err(key, strip(&err)))
}

fn control_preset(e: &Entries, key: &str, amplitude: f64) -> Result<ControlPreset, ConfigError> {
    ControlPreset::parse(e.str(key), amplitude).map_err(|err| e.err(key, strip(&err)))
}

impl RunConfig {
    fn snapshot_paths(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        if let PhaseSource::Snapshot(p) = &self.phase {
            out.push(p.as_path());
        }
        if let VelocitySource::Snapshot(p) = &self.velocity {
            out.push(p.as_path());
        }
        out
    }

    /// The control problem described by this configuration, with snapshots
    /// loaded and checked against the grid.
    pub fn problem_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let initial_phase = match &self.phase {
            PhaseSource::Preset(p) => InitialPhase::Preset(*p),
            PhaseSource::Snapshot(path) => {
                let (h, f) = load_scalar(path)
                    .map_err(|err| ConfigError::field(format!("initial.phase_file: {err}")))?;
                check_grid(&h.grid, &self.grid, "initial.phase_file")?;
                InitialPhase::Field(f)
            }
        };
        let initial_velocity = match &self.velocity {
            VelocitySource::Preset(p) => InitialVelocity::Preset(*p),
            VelocitySource::Snapshot(path) => {
                let (h, f) = load_faces(path)
                    .map_err(|err| ConfigError::field(format!("initial.velocity_file: {err}")))?;
                check_grid(&h.grid, &self.grid, "initial.velocity_file")?;
                InitialVelocity::Field(f)
            }
        };
        let target = match &self.target {
            TargetMode::SelfGenerated(c) => TargetSpec::SelfGenerated { control: *c },
            TargetMode::Fixed { tracking, terminal } => TargetSpec::Fixed {
                tracking: *tracking,
                terminal: *terminal,
            },
        };
        Ok(ProblemSpec {
            grid: self.grid,
            time: self.time,
            params: self.params,
            initial_phase,
            initial_velocity,
            control: self.control,
            alpha: self.alpha,
            target,
            bounds: self.bounds,
        })
    }
}

fn check_grid(found: &GridSpec, expected: &GridSpec, key: &str) -> Result<(), ConfigError> {
    if found == expected {
        Ok(())
    } else {
        Err(ConfigError::field(format!(
            "{key}: snapshot grid {}x{} on {}x{} does not match configured {}x{} on {}x{}",
            found.nx, found.ny, found.lx, found.ly, expected.nx, expected.ny, expected.lx, expected.ly
        )))
    }
}
