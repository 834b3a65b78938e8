use crate::adjoint::{require_constant_mobility, solve_adjoint, AdjointTrajectory};
use crate::constitutive::{validate_weights, CostSpec, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{FaceField, GridSpec, ScalarField};
use crate::presets::{ControlPreset, PhasePreset};
use crate::state::{simulate, TimeSpec, Trajectory};

use super::{evaluate_cost, reduced_gradient, ControlBounds, ControlField, CostBreakdown};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPhase {
    Preset(PhasePreset),
    Field(ScalarField),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialVelocity {
    Preset(ControlPreset),
    Field(FaceField),
}

/// Where `φ_Q` and `φ_Ω` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// Time-independent tracking target and terminal target.
    Fixed { tracking: PhasePreset, terminal: PhasePreset },
    /// Targets read off a forward run driven by the given control.
    SelfGenerated { control: ControlPreset },
}

/// Constant box `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

/// Resolution-independent description of a control problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub params: PhysParams,
    pub initial_phase: InitialPhase,
    pub initial_velocity: InitialVelocity,
    /// Reference control: the starting point of `optimize` and the base
    /// point of the verification checks.
    pub control: ControlPreset,
    pub alpha: [f64; 3],
    pub target: TargetSpec,
    pub bounds: BoxBounds,
}

impl ProblemSpec {
    /// Same problem with `h/2` and `dt/2`. Snapshot-based initial data
    /// cannot be resampled.
    pub fn refined(&self) -> Result<Self> {
        if matches!(self.initial_phase, InitialPhase::Field(_))
            || matches!(self.initial_velocity, InitialVelocity::Field(_))
        {
            return Err(Error::InvalidParams(
                "refinement needs preset initial data, not snapshots".into(),
            ));
        }
        Ok(Self {
            grid: self.grid.refined(),
            time: self.time.refined(),
            ..self.clone()
        })
    }

    /// Samples every field on the grid and builds the targets.
    pub fn realize(&self) -> Result<(Problem, ControlField)> {
        self.params.validate()?;
        validate_weights(self.alpha[0], self.alpha[1], self.alpha[2])?;
        let g = self.grid;
        let phi0 = match &self.initial_phase {
            InitialPhase::Preset(p) => p.field(&g),
            InitialPhase::Field(f) => {
                g.check_same(f.grid(), "initial phase snapshot")?;
                f.clone()
            }
        };
        let v0 = match &self.initial_velocity {
            InitialVelocity::Preset(p) => p.field(&g),
            InitialVelocity::Field(f) => {
                g.check_same(f.grid(), "initial velocity snapshot")?;
                f.clone()
            }
        };
        let n = self.time.n_steps();
        let (phi_q, phi_omega) = match &self.target {
            TargetSpec::Fixed { tracking, terminal } => (vec![tracking.field(&g); n + 1], terminal.field(&g)),
            TargetSpec::SelfGenerated { control } => {
                let run = simulate(&v0, &phi0, &control.series(&g, n), &self.time, &self.params)?;
                let last = run.last().phi.clone();
                (run.states.into_iter().map(|s| s.phi).collect(), last)
            }
        };
        let bounds = ControlBounds::constant(self.bounds.x, self.bounds.y)?;
        let cost = CostSpec {
            alpha1: self.alpha[0],
            alpha2: self.alpha[1],
            alpha3: self.alpha[2],
            phi_q,
            phi_omega,
        };
        let problem = Problem::new(self.time, self.params, v0, phi0, cost, bounds)?;
        let u = ControlField::from_preset(&self.control, &g, &self.time);
        Ok((problem, u))
    }
}

/// A fully sampled control problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub time: TimeSpec,
    pub params: PhysParams,
    pub v0: FaceField,
    pub phi0: ScalarField,
    pub cost: CostSpec,
    pub bounds: ControlBounds,
}

/// Cost, states, adjoint and gradient at one control.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: CostBreakdown,
    pub trajectory: Trajectory,
    pub adjoint: AdjointTrajectory,
    pub gradient: ControlField,
}

impl Problem {
    pub fn new(
        time: TimeSpec,
        params: PhysParams,
        v0: FaceField,
        phi0: ScalarField,
        cost: CostSpec,
        bounds: ControlBounds,
    ) -> Result<Self> {
        params.validate()?;
        cost.validate()?;
        let g = *phi0.grid();
        g.check_same(v0.grid(), "initial velocity")?;
        g.check_same(cost.phi_omega.grid(), "terminal target")?;
        if cost.phi_q.len() != time.n_steps() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "tracking target has {} nodes, time grid has {}",
                cost.phi_q.len(),
                time.n_steps() + 1
            )));
        }
        bounds.check_layout(&g, time.n_steps())?;
        Ok(Self {
            time,
            params,
            v0,
            phi0,
            cost,
            bounds,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.phi0.grid()
    }

    fn check_control(&self, u: &ControlField) -> Result<()> {
        let reference = ControlField::zeros(*self.grid(), &self.time);
        reference.check_compatible(u, "control")
    }

    pub fn simulate(&self, u: &ControlField) -> Result<Trajectory> {
        self.check_control(u)?;
        simulate(&self.v0, &self.phi0, u.steps(), &self.time, &self.params)
    }

    /// Reduced cost `J(S(u), u)` and the trajectory behind it.
    pub fn cost_of(&self, u: &ControlField) -> Result<(CostBreakdown, Trajectory)> {
        let traj = self.simulate(u)?;
        let c = evaluate_cost(&traj, u, &self.cost)?;
        Ok((c, traj))
    }

    /// Forward and adjoint solves at `u`.
    pub fn evaluate(&self, u: &ControlField) -> Result<Evaluation> {
        require_constant_mobility(&self.params)?;
        let (cost, trajectory) = self.cost_of(u)?;
        let adjoint = solve_adjoint(&trajectory, &self.cost)?;
        let gradient = reduced_gradient(u, &adjoint, &self.cost)?;
        Ok(Evaluation {
            cost,
            trajectory,
            adjoint,
            gradient,
        })
    }
}
