use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{gradient_to_faces, GridSpec, ScalarField};
use crate::linearized::solve_linearized;
use crate::presets::from_stream_function;
use crate::state::{TimeSpec, Trajectory};

use super::{ControlField, Problem, ProblemSpec};

pub const MASS_TOL: f64 = 1e-12;
pub const ENERGY_RATIO: (f64, f64) = (1.7, 2.3);
/// Largest step at which the energy law is checked; coarser configured steps
/// are halved until they reach it.
pub const ENERGY_DT_MAX: f64 = 5e-4;
pub const FRECHET_EPS: [f64; 3] = [1e-1, 5e-2, 2.5e-2];
pub const FRECHET_RATIO: f64 = 1.8;
pub const DUALITY_TOL: f64 = 1e-2;
pub const GRADIENT_DIRECTIONS: usize = 3;
pub const GRADIENT_EPS: f64 = 1e-3;
pub const GRADIENT_COSINE: f64 = 0.999;
pub const GRADIENT_MAGNITUDE: f64 = 2e-2;

/// Relative roundoff slack in the energy monotonicity test.
const ENERGY_SLACK: f64 = 1e-12;
const MODES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Mass,
    Energy,
    Frechet,
    Duality,
    Gradient,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::Mass, Check::Energy, Check::Frechet, Check::Duality, Check::Gradient];

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown check '{s}' (expected mass, energy, frechet, duality or gradient)")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mass => "mass",
            Self::Energy => "energy",
            Self::Frechet => "frechet",
            Self::Duality => "duality",
            Self::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub check: Check,
    pub passed: bool,
    pub metrics: Vec<(String, f64)>,
    pub summary: String,
}

impl VerifyReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Seeded smooth direction, independent of the resolution: a solenoidal
/// part from sine stream-function modes plus a gradient part from cosine
/// modes, each modulated in time and sampled at step midpoints. Scaled to
/// unit max norm.
pub fn smooth_direction(grid: &GridSpec, time: &TimeSpec, seed: u64) -> ControlField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stream = Vec::new();
    let mut potential = Vec::new();
    for a in 1..=MODES {
        for b in 1..=MODES {
            let s = 1.0 / (a * a + b * b) as f64;
            stream.push((a, b, s * rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    for a in 0..MODES {
        for b in 0..MODES {
            if a + b > 0 {
                let s = 0.5 / (a * a + b * b) as f64;
                potential.push((a, b, s * rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let (lx, ly, t_final) = (grid.lx, grid.ly, time.t_final());
    let steps = (0..time.n_steps())
        .map(|n| {
            let t = time.time_at(n) + 0.5 * time.dt();
            let w = |c: f64, d: f64| c * (1.0 + d * (PI * t / t_final).cos());
            let mut f = from_stream_function(grid, |x, y| {
                stream
                    .iter()
                    .map(|&(a, b, c, d)| {
                        w(c, d) * lx / PI * (a as f64 * PI * x / lx).sin() * (b as f64 * PI * y / ly).sin()
                    })
                    .sum()
            });
            let chi = ScalarField::from_fn(*grid, |x, y| {
                potential
                    .iter()
                    .map(|&(a, b, c, d)| {
                        w(c, d) * lx / PI * (a as f64 * PI * x / lx).cos() * (b as f64 * PI * y / ly).cos()
                    })
                    .sum()
            });
            f.axpy(1.0, &gradient_to_faces(&chi));
            f
        })
        .collect();
    let h = ControlField::new(steps, time.dt()).expect("nonempty time grid");
    let m = h.max_abs();
    h.scaled(1.0 / m)
}

/// `L²(Q)` norm of the phase difference of two runs, trapezoid in time.
fn phase_distance(a: &Trajectory, b: &Trajectory, psi_scale: f64, psi: Option<&[ScalarField]>) -> f64 {
    let mut s = 0.0;
    for (n, (sa, sb)) in a.states.iter().zip(&b.states).enumerate() {
        let mut d = sa.phi.zip_map(&sb.phi, |x, y| x - y);
        if let Some(p) = psi {
            d.axpy(-psi_scale, &p[n]);
        }
        s += a.time.trapezoid_weight(n) * d.dot(&d);
    }
    s.sqrt()
}

fn shifted(u: &ControlField, h: &ControlField, eps: f64) -> ControlField {
    let mut v = u.clone();
    v.axpy(eps, h);
    v
}

fn check_mass(problem: &Problem, u: &ControlField) -> Result<VerifyReport> {
    let traj = problem.simulate(u)?;
    let drift = traj.mass_drift().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let vmax = traj.states.iter().map(|s| s.v.max_abs()).fold(0.0, f64::max);
    Ok(VerifyReport {
        check: Check::Mass,
        passed: drift <= MASS_TOL,
        metrics: vec![("max_mass_drift".into(), drift), ("max_velocity".into(), vmax)],
        summary: format!("max |mean(phi_n) - mean(phi_0)| = {drift:.3e} (tol {MASS_TOL:e})"),
    })
}

fn energy_run(spec: &ProblemSpec, time: TimeSpec) -> Result<(f64, bool, f64)> {
    let s = ProblemSpec { time, ..spec.clone() };
    let (problem, _) = s.realize()?;
    let zero = ControlField::zeros(*problem.grid(), &time);
    let traj = problem.simulate(&zero)?;
    let e = traj.total_energy();
    let mut worst_rise: f64 = 0.0;
    let mut mono = true;
    for w in e.windows(2) {
        let rise = w[1] - w[0];
        worst_rise = worst_rise.max(rise);
        if rise > ENERGY_SLACK * w[0].abs().max(1.0) {
            mono = false;
        }
    }
    let residual = traj.energy_residual().last().copied().unwrap_or(0.0).abs();
    Ok((residual, mono, worst_rise))
}

fn check_energy(spec: &ProblemSpec) -> Result<VerifyReport> {
    let mut coarse = spec.time;
    while coarse.dt() > ENERGY_DT_MAX {
        coarse = coarse.refined();
    }
    let dt = coarse.dt();
    let fine = coarse.refined();
    let runs: Vec<Result<(f64, bool, f64)>> = [coarse, fine]
        .into_par_iter()
        .map(|t| energy_run(spec, t))
        .collect();
    let mut runs = runs.into_iter();
    let (r1, m1, w1) = runs.next().expect("coarse run")?;
    let (r2, m2, w2) = runs.next().expect("fine run")?;
    let ratio = r1 / r2;
    let in_range = ratio >= ENERGY_RATIO.0 && ratio <= ENERGY_RATIO.1;
    Ok(VerifyReport {
        check: Check::Energy,
        passed: m1 && m2 && in_range,
        metrics: vec![
            ("dt".into(), dt),
            ("residual_dt".into(), r1),
            ("residual_dt_half".into(), r2),
            ("residual_ratio".into(), ratio),
            ("max_energy_rise_dt".into(), w1),
            ("max_energy_rise_dt_half".into(), w2),
        ],
        summary: format!(
            "energy non-increasing: {m1} (dt={dt:e}), {m2} (dt/2); residual ratio {ratio:.3} (need [{}, {}])",
            ENERGY_RATIO.0, ENERGY_RATIO.1
        ),
    })
}

fn check_frechet(problem: &Problem, u: &ControlField, seed: u64) -> Result<VerifyReport> {
    let mut h = smooth_direction(problem.grid(), &problem.time, seed);
    // Keep u ± εh admissible when u is interior.
    let margin = problem.bounds.margin(u);
    if margin > 0.0 && margin < FRECHET_EPS[0] {
        h = h.scaled(margin / FRECHET_EPS[0]);
    }
    let base = problem.simulate(u)?;
    let lin = solve_linearized(&base, h.steps())?;
    let psi: Vec<ScalarField> = lin.states.into_iter().map(|s| s.psi).collect();
    let runs: Vec<Result<Trajectory>> = FRECHET_EPS
        .par_iter()
        .map(|&e| problem.simulate(&shifted(u, &h, e)))
        .collect();
    let mut errs = Vec::new();
    for (r, &eps) in runs.into_iter().zip(&FRECHET_EPS) {
        errs.push(phase_distance(&r?, &base, eps, Some(&psi)) / eps);
    }
    let size = base
        .states
        .iter()
        .enumerate()
        .map(|(n, st)| base.time.trapezoid_weight(n) * st.phi.dot(&st.phi))
        .sum::<f64>()
        .sqrt();
    let mut metrics: Vec<(String, f64)> = FRECHET_EPS
        .iter()
        .zip(&errs)
        .map(|(e, r)| (format!("e({e:e})"), *r))
        .collect();
    let mut passed = true;
    let mut notes = Vec::new();
    for i in 0..errs.len() - 1 {
        let ratio = errs[i] / errs[i + 1];
        // Roundoff floor of the difference quotient at the finer ε.
        let floor = 1e3 * f64::EPSILON * size / FRECHET_EPS[i + 1];
        let at_floor = errs[i + 1] <= 5.0 * floor;
        metrics.push((format!("ratio_{}", i + 1), ratio));
        if !(ratio >= FRECHET_RATIO || at_floor) {
            passed = false;
        }
        notes.push(format!("{ratio:.3}{}", if at_floor { " (floor)" } else { "" }));
    }
    Ok(VerifyReport {
        check: Check::Frechet,
        passed,
        metrics,
        summary: format!("remainder ratios per eps-halving: {} (need >= {FRECHET_RATIO})", notes.join(", ")),
    })
}

/// Both sides of the duality identity at one resolution.
fn duality_mismatch(spec: &ProblemSpec, seed: u64) -> Result<(f64, f64, f64)> {
    let (problem, u) = spec.realize()?;
    let eval = problem.evaluate(&u)?;
    let h = smooth_direction(problem.grid(), &problem.time, seed);
    let lin = solve_linearized(&eval.trajectory, h.steps())?;
    let c = &problem.cost;
    let traj = &eval.trajectory;
    let mut rhs = 0.0;
    for (n, (s, l)) in traj.states.iter().zip(&lin.states).enumerate() {
        let d = s.phi.zip_map(&c.phi_q[n], |a, b| a - b);
        rhs += c.alpha1 * traj.time.trapezoid_weight(n) * d.dot(&l.psi);
    }
    let d = traj.last().phi.zip_map(&c.phi_omega, |a, b| a - b);
    rhs += c.alpha2 * d.dot(&lin.states.last().expect("nodes").psi);
    let va = ControlField::new(eval.adjoint.step_velocities().cloned().collect(), u.dt())?;
    let lhs = h.dot(&va);
    let rel = (lhs - rhs).abs() / (lhs.abs() + rhs.abs());
    Ok((lhs, rhs, rel))
}

fn check_duality(spec: &ProblemSpec, seed: u64) -> Result<VerifyReport> {
    let fine = spec.refined()?;
    let out: Vec<Result<(f64, f64, f64)>> = [spec.clone(), fine]
        .into_par_iter()
        .map(|s| duality_mismatch(&s, seed))
        .collect();
    let mut out = out.into_iter();
    let (l1, r1, m1) = out.next().expect("coarse run")?;
    let (_, _, m2) = out.next().expect("refined run")?;
    let passed = m1 <= DUALITY_TOL && m2 < m1;
    Ok(VerifyReport {
        check: Check::Duality,
        passed,
        metrics: vec![
            ("lhs".into(), l1),
            ("rhs".into(), r1),
            ("mismatch".into(), m1),
            ("mismatch_refined".into(), m2),
        ],
        summary: format!(
            "relative mismatch {m1:.3e} (tol {DUALITY_TOL:e}), after refinement {m2:.3e}"
        ),
    })
}

fn check_gradient(problem: &Problem, u: &ControlField, seed: u64) -> Result<VerifyReport> {
    let eval = problem.evaluate(u)?;
    let dirs: Vec<ControlField> = (0..GRADIENT_DIRECTIONS)
        .map(|i| smooth_direction(problem.grid(), &problem.time, seed.wrapping_add(i as u64)))
        .collect();
    let jobs: Vec<(usize, f64)> = (0..dirs.len()).flat_map(|i| [(i, GRADIENT_EPS), (i, -GRADIENT_EPS)]).collect();
    let costs: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(i, e)| problem.cost_of(&shifted(u, &dirs[i], e)).map(|(c, _)| c.total))
        .collect();
    let costs: Vec<f64> = costs.into_iter().collect::<Result<_>>()?;
    let fd: Vec<f64> = (0..dirs.len())
        .map(|i| (costs[2 * i] - costs[2 * i + 1]) / (2.0 * GRADIENT_EPS))
        .collect();
    let ad: Vec<f64> = dirs.iter().map(|h| eval.gradient.dot(h)).collect();
    let dot: f64 = fd.iter().zip(&ad).map(|(a, b)| a * b).sum();
    let nf = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
    let na = ad.iter().map(|a| a * a).sum::<f64>().sqrt();
    let cosine = dot / (nf * na);
    let magnitude = (na - nf).abs() / nf;
    let mut metrics = vec![("cosine".into(), cosine), ("magnitude_error".into(), magnitude)];
    for (i, (a, f)) in ad.iter().zip(&fd).enumerate() {
        metrics.push((format!("adjoint_{i}"), *a));
        metrics.push((format!("fd_{i}"), *f));
    }
    Ok(VerifyReport {
        check: Check::Gradient,
        passed: cosine >= GRADIENT_COSINE && magnitude <= GRADIENT_MAGNITUDE,
        metrics,
        summary: format!(
            "cosine {cosine:.6} (need >= {GRADIENT_COSINE}), magnitude error {magnitude:.3e} (need <= {GRADIENT_MAGNITUDE:e})"
        ),
    })
}

/// Runs one cross-module check at the spec's reference control.
pub fn verify(spec: &ProblemSpec, check: Check, seed: u64) -> Result<VerifyReport> {
    match check {
        Check::Energy => check_energy(spec),
        Check::Duality => check_duality(spec, seed),
        _ => {
            let (problem, u) = spec.realize()?;
            match check {
                Check::Mass => check_mass(&problem, &u),
                Check::Frechet => check_frechet(&problem, &u, seed),
                Check::Gradient => check_gradient(&problem, &u, seed),
                Check::Energy | Check::Duality => unreachable!(),
            }
        }
    }
}
