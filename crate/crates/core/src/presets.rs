//! Named initial data and control fields, defined as functions of position
//! so they can be sampled on any grid.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::grid::{FaceField, GridSpec, ScalarField};

/// Smoothing length of the distance function at the center.
const CORE: f64 = 1.0;

/// Centered coordinate on an interval of length `l`, equal to `t + O(t⁵)`
/// near the center and even about both walls, so sampled profiles satisfy
/// every Neumann condition of the sixth-order problem. Raw distances have a
/// slope at the wall and a cone at the center; the stiff operator turns
/// both into an initial layer that first-order stepping cannot resolve.
fn wall_even(t: f64, l: f64) -> f64 {
    let th = PI * t / l;
    l / PI * 9.0 / 8.0 * (th.sin() - (3.0 * th).sin() / 27.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhasePreset {
    /// Pure phase `φ ≡ 1`.
    Equilibrium,
    /// Centered disc of the given radius with a unit-width tanh profile,
    /// built on a smoothed wall-compatible distance. `None` uses a quarter
    /// of the shorter edge.
    Bubble { radius: Option<f64> },
    /// Vertical band of the given width centered in x. `None` uses a third
    /// of the x-extent.
    Stripe { width: Option<f64> },
    Constant(f64),
}

impl PhasePreset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "equilibrium" => Ok(Self::Equilibrium),
            "bubble" => Ok(Self::Bubble { radius: None }),
            "stripe" => Ok(Self::Stripe { width: None }),
            other => Err(Error::InvalidParams(format!(
                "unknown phase preset '{other}' (expected equilibrium, bubble or stripe)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Equilibrium => "equilibrium",
            Self::Bubble { .. } => "bubble",
            Self::Stripe { .. } => "stripe",
            Self::Constant(_) => "constant",
        }
    }

    pub fn field(&self, grid: &GridSpec) -> ScalarField {
        let (cx, cy) = (0.5 * grid.lx, 0.5 * grid.ly);
        match *self {
            Self::Equilibrium => ScalarField::constant(*grid, 1.0),
            Self::Constant(c) => ScalarField::constant(*grid, c),
            Self::Bubble { radius } => {
                let r0 = radius.unwrap_or(0.25 * grid.lx.min(grid.ly));
                let rs = (r0 * r0 + CORE * CORE).sqrt();
                ScalarField::from_fn(*grid, |x, y| {
                    let (sx, sy) = (wall_even(x - cx, grid.lx), wall_even(y - cy, grid.ly));
                    let r = (sx * sx + sy * sy + CORE * CORE).sqrt();
                    ((rs - r) / SQRT_2).tanh()
                })
            }
            Self::Stripe { width } => {
                let w = width.unwrap_or(grid.lx / 3.0);
                let hs = (0.25 * w * w + CORE * CORE).sqrt();
                ScalarField::from_fn(*grid, |x, _| {
                    let sx = wall_even(x - cx, grid.lx);
                    ((hs - (sx * sx + CORE * CORE).sqrt()) / SQRT_2).tanh()
                })
            }
        }
    }
}

/// Divergence-free face field from a stream function sampled at corners.
/// The stream function must vanish on the boundary for no-slip output.
pub fn from_stream_function(grid: &GridSpec, psi: impl Fn(f64, f64) -> f64) -> FaceField {
    let (hx, hy) = (grid.hx(), grid.hy());
    let s = |i: usize, j: usize| psi(i as f64 * hx, j as f64 * hy);
    let mut out = FaceField::zeros(*grid);
    for j in 0..grid.ny {
        for i in 1..grid.nx {
            out.x_mut()[grid.xface(i, j)] = (s(i, j + 1) - s(i, j)) / hy;
        }
    }
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            out.y_mut()[grid.yface(i, j)] = -(s(i + 1, j) - s(i, j)) / hx;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlPreset {
    Zero,
    /// Steady single-cell vortex pair with stream function
    /// `A · sin(2πx/lx) · sin(2πy/ly) · lx / (2π)`.
    Cellular { amplitude: f64 },
    /// Uniform force `(a, b)` on interior faces.
    Uniform { x: f64, y: f64 },
}

impl ControlPreset {
    pub fn parse(name: &str, amplitude: f64) -> Result<Self> {
        match name {
            "zero" => Ok(Self::Zero),
            "cellular" => Ok(Self::Cellular { amplitude }),
            "uniform" => Ok(Self::Uniform { x: amplitude, y: 0.0 }),
            other => Err(Error::InvalidParams(format!(
                "unknown control preset '{other}' (expected zero, cellular or uniform)"
            ))),
        }
    }

    pub fn field(&self, grid: &GridSpec) -> FaceField {
        match *self {
            Self::Zero => FaceField::zeros(*grid),
            Self::Uniform { x, y } => FaceField::uniform_interior(*grid, x, y),
            Self::Cellular { amplitude } => {
                let (lx, ly) = (grid.lx, grid.ly);
                let scale = amplitude * lx / (2.0 * PI);
                from_stream_function(grid, |x, y| {
                    scale * (2.0 * PI * x / lx).sin() * (2.0 * PI * y / ly).sin()
                })
            }
        }
    }

    /// The same field at each of `n_steps` steps.
    pub fn series(&self, grid: &GridSpec, n_steps: usize) -> Vec<FaceField> {
        vec![self.field(grid); n_steps]
    }
}
