//! Shared fixtures for the benchmarks.

use nsch_core::control::{BoxBounds, InitialPhase, InitialVelocity, ProblemSpec, TargetSpec};
use nsch_core::presets::{ControlPreset, PhasePreset};
use nsch_core::{GridSpec, PhysParams, TimeSpec};

/// Bubble tracking problem on an `n × n` grid with `steps` time steps.
pub fn tracking_spec(n: usize, steps: usize) -> ProblemSpec {
    let dt = 1e-3;
    ProblemSpec {
        grid: GridSpec::new(n, n, 16.0, 16.0).expect("valid grid"),
        time: TimeSpec::new(dt * steps as f64, dt).expect("valid time"),
        params: PhysParams::default(),
        initial_phase: InitialPhase::Preset(PhasePreset::Bubble { radius: None }),
        initial_velocity: InitialVelocity::Preset(ControlPreset::Zero),
        control: ControlPreset::Cellular { amplitude: 1.0 },
        alpha: [1.0, 1.0, 2e-6],
        target: TargetSpec::SelfGenerated { control: ControlPreset::Cellular { amplitude: 2.0 } },
        bounds: BoxBounds { x: (-10.0, 10.0), y: (-10.0, 10.0) },
    }
}
