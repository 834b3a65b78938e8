//! Controls, the tracking cost, the reduced gradient and box projection.
//!
//! A control holds one face field per time step, constant on that step.
//! The control-space inner product is `Σₙ dt · Σ_faces w·a·b` with face
//! weight `hx·hy`, halved on boundary-normal faces. Admissible controls
//! vanish on those faces, where the halving has no effect.

mod optimize;
mod problem;
mod verify;

pub use optimize::{optimize, optimize_with, OptimOptions, OptimReport, OptimRow, Termination};
pub use problem::{BoxBounds, Evaluation, InitialPhase, InitialVelocity, Problem, ProblemSpec, TargetSpec};
pub use verify::{smooth_direction, verify, Check, VerifyReport};

use crate::adjoint::AdjointTrajectory;
use crate::constitutive::CostSpec;
use crate::error::{Error, Result};
use crate::grid::{FaceField, GridSpec};
use crate::presets::ControlPreset;
use crate::state::{TimeSpec, Trajectory};

/// Whether face `k` of the x (or y) block carries a boundary normal.
fn is_boundary_face(g: &GridSpec, is_x: bool, k: usize) -> bool {
    if is_x {
        let i = k % (g.nx + 1);
        i == 0 || i == g.nx
    } else {
        let j = k / g.nx;
        j == 0 || j == g.ny
    }
}

/// Face weights of the control quadrature, x-faces then y-faces.
fn face_weights(g: &GridSpec) -> impl Fn(bool, usize) -> f64 + '_ {
    let w = g.cell_volume();
    move |is_x, k| {
        if is_boundary_face(g, is_x, k) {
            0.5 * w
        } else {
            w
        }
    }
}

/// Spatial part of the control inner product.
pub fn face_quadrature(a: &FaceField, b: &FaceField) -> f64 {
    let g = *a.grid();
    let w = face_weights(&g);
    let sx: f64 = a.x().iter().zip(b.x()).enumerate().map(|(k, (p, q))| w(true, k) * p * q).sum();
    let sy: f64 = a.y().iter().zip(b.y()).enumerate().map(|(k, (p, q))| w(false, k) * p * q).sum();
    sx + sy
}

/// Piecewise-constant-in-time control, one face field per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    steps: Vec<FaceField>,
    dt: f64,
}

impl ControlField {
    pub fn new(steps: Vec<FaceField>, dt: f64) -> Result<Self> {
        if steps.is_empty() || !(dt > 0.0) {
            return Err(Error::InvalidParams("control needs at least one step and dt > 0".into()));
        }
        let g = *steps[0].grid();
        for s in &steps {
            g.check_same(s.grid(), "control step")?;
        }
        Ok(Self { steps, dt })
    }

    pub fn zeros(grid: GridSpec, time: &TimeSpec) -> Self {
        Self {
            steps: vec![FaceField::zeros(grid); time.n_steps()],
            dt: time.dt(),
        }
    }

    pub fn from_preset(preset: &ControlPreset, grid: &GridSpec, time: &TimeSpec) -> Self {
        Self {
            steps: preset.series(grid, time.n_steps()),
            dt: time.dt(),
        }
    }

    pub fn steps(&self) -> &[FaceField] {
        &self.steps
    }

    pub fn steps_mut(&mut self) -> &mut [FaceField] {
        &mut self.steps
    }

    pub fn into_steps(self) -> Vec<FaceField> {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &GridSpec {
        self.steps[0].grid()
    }

    /// `L²(Q)` inner product.
    pub fn dot(&self, other: &ControlField) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| self.dt * face_quadrature(a, b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.steps.iter().map(FaceField::max_abs).fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, alpha: f64, other: &ControlField) {
        for (a, b) in self.steps.iter_mut().zip(&other.steps) {
            a.axpy(alpha, b);
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            steps: self.steps.iter().map(|s| s.scaled(alpha)).collect(),
            dt: self.dt,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.steps.iter().all(FaceField::is_finite)
    }

    fn check_compatible(&self, other: &ControlField, what: &str) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ControlLength {
                expected: self.len(),
                got: other.len(),
            });
        }
        if self.dt != other.dt {
            return Err(Error::DimensionMismatch(format!("{what}: step {} vs {}", other.dt, self.dt)));
        }
        self.grid().check_same(other.grid(), what)
    }
}

/// One side of the admissible box.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundField {
    Constant { x: f64, y: f64 },
    /// One face field per step.
    PerStep(Vec<FaceField>),
}

impl BoundField {
    fn x_at(&self, n: usize, k: usize) -> f64 {
        match self {
            Self::Constant { x, .. } => *x,
            Self::PerStep(f) => f[n].x()[k],
        }
    }

    fn y_at(&self, n: usize, k: usize) -> f64 {
        match self {
            Self::Constant { y, .. } => *y,
            Self::PerStep(f) => f[n].y()[k],
        }
    }

    fn sup_abs(&self) -> f64 {
        match self {
            Self::Constant { x, y } => x.abs().max(y.abs()),
            Self::PerStep(f) => f.iter().map(FaceField::max_abs).fold(0.0, f64::max),
        }
    }
}

/// Componentwise box `u_min ≤ u ≤ u_max` on interior faces. Boundary-normal
/// faces are pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBounds {
    lower: BoundField,
    upper: BoundField,
}

impl ControlBounds {
    pub fn new(lower: BoundField, upper: BoundField) -> Result<Self> {
        let b = Self { lower, upper };
        let bad = |lo: f64, hi: f64| !(lo.is_finite() && hi.is_finite() && lo <= hi);
        match (&b.lower, &b.upper) {
            (BoundField::Constant { x: a, y: c }, BoundField::Constant { x: d, y: e }) => {
                if bad(*a, *d) || bad(*c, *e) {
                    return Err(Error::InvalidParams(format!(
                        "A4 violated: control bounds need u_min <= u_max, got x [{a}, {d}], y [{c}, {e}]"
                    )));
                }
            }
            _ => {
                let n = b.per_step_len().unwrap_or(0);
                let g = b.per_step_grid().expect("per-step bound present");
                for s in 0..n {
                    for k in 0..g.n_xfaces() {
                        if bad(b.lower.x_at(s, k), b.upper.x_at(s, k)) {
                            return Err(Error::InvalidParams(format!(
                                "A4 violated: u_min > u_max at step {s}, x-face {k}"
                            )));
                        }
                    }
                    for k in 0..g.n_yfaces() {
                        if bad(b.lower.y_at(s, k), b.upper.y_at(s, k)) {
                            return Err(Error::InvalidParams(format!(
                                "A4 violated: u_min > u_max at step {s}, y-face {k}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(b)
    }

    pub fn constant(x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        Self::new(
            BoundField::Constant { x: x.0, y: y.0 },
            BoundField::Constant { x: x.1, y: y.1 },
        )
    }

    /// Effectively unconstrained box.
    pub fn unbounded() -> Self {
        Self {
            lower: BoundField::Constant { x: f64::MIN, y: f64::MIN },
            upper: BoundField::Constant { x: f64::MAX, y: f64::MAX },
        }
    }

    fn per_step_len(&self) -> Option<usize> {
        match (&self.lower, &self.upper) {
            (BoundField::PerStep(a), BoundField::PerStep(b)) => Some(a.len().min(b.len())),
            (BoundField::PerStep(a), _) | (_, BoundField::PerStep(a)) => Some(a.len()),
            _ => None,
        }
    }

    fn per_step_grid(&self) -> Option<GridSpec> {
        match (&self.lower, &self.upper) {
            (BoundField::PerStep(a), _) | (_, BoundField::PerStep(a)) => a.first().map(|f| *f.grid()),
            _ => None,
        }
    }

    /// Checks that field-valued bounds match the control layout.
    pub fn check_layout(&self, grid: &GridSpec, n_steps: usize) -> Result<()> {
        for side in [&self.lower, &self.upper] {
            if let BoundField::PerStep(f) = side {
                if f.len() != n_steps {
                    return Err(Error::ControlLength {
                        expected: n_steps,
                        got: f.len(),
                    });
                }
                for s in f {
                    grid.check_same(s.grid(), "bound field")?;
                }
            }
        }
        Ok(())
    }

    pub fn lower(&self) -> &BoundField {
        &self.lower
    }

    pub fn upper(&self) -> &BoundField {
        &self.upper
    }

    /// Radius of the open ball containing the box: `max sup|u_bound| + 1`.
    pub fn radius(&self) -> f64 {
        self.lower.sup_abs().max(self.upper.sup_abs()) + 1.0
    }

    /// Whether every interior face lies in the box and boundary faces vanish.
    pub fn contains(&self, u: &ControlField) -> bool {
        u.steps.iter().enumerate().all(|(n, f)| {
            let g = f.grid();
            f.boundary_max() == 0.0
                && f.x().iter().enumerate().all(|(k, &v)| {
                    is_boundary_face(g, true, k) || (self.lower.x_at(n, k) <= v && v <= self.upper.x_at(n, k))
                })
                && f.y().iter().enumerate().all(|(k, &v)| {
                    is_boundary_face(g, false, k) || (self.lower.y_at(n, k) <= v && v <= self.upper.y_at(n, k))
                })
        })
    }
}

impl ControlBounds {
    /// Smallest distance from an interior face value to its bounds;
    /// negative when `u` is infeasible.
    pub fn margin(&self, u: &ControlField) -> f64 {
        let mut m = f64::INFINITY;
        for (n, f) in u.steps.iter().enumerate() {
            let g = f.grid();
            for (k, v) in f.x().iter().enumerate() {
                if !is_boundary_face(g, true, k) {
                    m = m.min(v - self.lower.x_at(n, k)).min(self.upper.x_at(n, k) - v);
                }
            }
            for (k, v) in f.y().iter().enumerate() {
                if !is_boundary_face(g, false, k) {
                    m = m.min(v - self.lower.y_at(n, k)).min(self.upper.y_at(n, k) - v);
                }
            }
        }
        m
    }
}

/// Componentwise clamp onto the box, with boundary-normal faces set to zero.
/// This is the `L²(Q)` projection onto the admissible set.
pub fn project_admissible(u: &ControlField, bounds: &ControlBounds) -> ControlField {
    let mut out = u.clone();
    for (n, f) in out.steps.iter_mut().enumerate() {
        for (k, v) in f.x_mut().iter_mut().enumerate() {
            *v = v.max(bounds.lower.x_at(n, k)).min(bounds.upper.x_at(n, k));
        }
        for (k, v) in f.y_mut().iter_mut().enumerate() {
            *v = v.max(bounds.lower.y_at(n, k)).min(bounds.upper.y_at(n, k));
        }
        f.zero_boundary();
    }
    out
}

/// Cost split into its three weighted parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub total: f64,
    pub tracking: f64,
    pub terminal: f64,
    pub control: f64,
}

/// `J = α₁/2 ∫_Q |φ−φ_Q|² + α₂/2 ∫_Ω |φ(T)−φ_Ω|² + α₃/2 ∫_Q |u|²`, trapezoid
/// in time for the tracking term.
pub fn evaluate_cost(traj: &Trajectory, u: &ControlField, cost: &CostSpec) -> Result<CostBreakdown> {
    let n = traj.time.n_steps();
    if u.len() != n {
        return Err(Error::ControlLength { expected: n, got: u.len() });
    }
    if cost.phi_q.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "tracking target has {} nodes, trajectory has {}",
            cost.phi_q.len(),
            n + 1
        )));
    }
    if u.dt() != traj.time.dt() {
        return Err(Error::DimensionMismatch(format!("control step {} vs {}", u.dt(), traj.time.dt())));
    }
    let g = traj.grid();
    g.check_same(u.grid(), "control")?;
    g.check_same(cost.phi_omega.grid(), "terminal target")?;
    let sq = |a: &crate::grid::ScalarField, b: &crate::grid::ScalarField| {
        let d = a.zip_map(b, |p, q| p - q);
        d.dot(&d)
    };
    let tracking = if cost.alpha1 == 0.0 {
        0.0
    } else {
        let s: f64 = (0..=n)
            .map(|k| traj.time.trapezoid_weight(k) * sq(&traj.states[k].phi, &cost.phi_q[k]))
            .sum();
        0.5 * cost.alpha1 * s
    };
    let terminal = 0.5 * cost.alpha2 * sq(&traj.last().phi, &cost.phi_omega);
    let control = 0.5 * cost.alpha3 * u.dot(u);
    Ok(CostBreakdown {
        total: tracking + terminal + control,
        tracking,
        terminal,
        control,
    })
}

/// `g = α₃ u + vᵃ`, step by step.
pub fn reduced_gradient(u: &ControlField, adj: &AdjointTrajectory, cost: &CostSpec) -> Result<ControlField> {
    if adj.states.len() != u.len() + 1 {
        return Err(Error::ControlLength {
            expected: adj.states.len().saturating_sub(1),
            got: u.len(),
        });
    }
    let steps = u
        .steps
        .iter()
        .zip(adj.step_velocities())
        .map(|(un, va)| {
            let mut g = va.clone();
            g.axpy(cost.alpha3, un);
            g
        })
        .collect();
    Ok(ControlField { steps, dt: u.dt })
}

/// `‖u − P(u − step·g)‖` in `L²(Q)`.
pub fn stationarity_residual(u: &ControlField, g: &ControlField, bounds: &ControlBounds, step: f64) -> f64 {
    let mut trial = u.clone();
    trial.axpy(-step, g);
    let mut r = project_admissible(&trial, bounds);
    r.axpy(-1.0, u);
    r.norm()
}
