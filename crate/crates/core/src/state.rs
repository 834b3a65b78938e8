//! Forward solver: projection-method Navier–Stokes with variable viscosity
//! and capillary forcing, split from a stabilized implicit–explicit step of
//! the sixth-order convective Cahn–Hilliard equation.
//!
//! One step advances `(v, φ)` in two stages. The momentum stage uses
//! `(φⁿ, μⁿ)` and returns `vⁿ⁺¹`; the phase stage then transports `φⁿ` with
//! `vⁿ⁺¹`, so mass is conserved exactly.

use crate::constitutive::{
    constraint_integrals, free_energy, mu_of_phi, potential_f, potential_fp, PhysParams,
};
use crate::error::{Error, Result};
use crate::grid::{
    advect_scalar, divergence_of_faces, face_average, face_laplacian, gradient_to_faces,
    helmholtz_faces, helmholtz_poly_solve, korteweg_force, laplacian, momentum_advection,
    project_divergence_free, viscous_force, FaceField, GridSpec, ScalarField,
};

/// Largest admissible `|φ|` before a run is declared blown up.
pub const BLOWUP_BOUND: f64 = 1e6;

/// Uniform time grid on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpec {
    t_final: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeSpec {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time grid needs T > 0 and dt > 0, got T = {t_final}, dt = {dt}"
            )));
        }
        let n = (t_final / dt).round();
        if n < 1.0 || (n * dt - t_final).abs() > 1e-12 * t_final.max(1.0) {
            return Err(Error::InvalidParams(format!(
                "T = {t_final} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(Self {
            t_final,
            dt,
            n_steps: n as usize,
        })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Same horizon with half the step.
    pub fn refined(&self) -> Self {
        Self {
            t_final: self.t_final,
            dt: 0.5 * self.dt,
            n_steps: 2 * self.n_steps,
        }
    }

    /// Trapezoid weight of node `n`.
    pub fn trapezoid_weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.n_steps {
            0.5 * self.dt
        } else {
            self.dt
        }
    }
}

/// Solution at one time node. `mu` and `omega` are always recomputed from
/// `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v: FaceField,
    pub p: ScalarField,
    pub phi: ScalarField,
    pub mu: ScalarField,
    pub omega: ScalarField,
    pub time: f64,
}

impl State {
    pub fn new(v: FaceField, p: ScalarField, phi: ScalarField, time: f64, params: &PhysParams) -> Self {
        let (mu, omega) = mu_of_phi(&phi, params);
        Self {
            v,
            p,
            phi,
            mu,
            omega,
            time,
        }
    }

    /// Initial state: zero pressure.
    pub fn initial(v0: FaceField, phi0: ScalarField, params: &PhysParams) -> Self {
        let p = ScalarField::zeros(*phi0.grid());
        Self::new(v0, p, phi0, 0.0, params)
    }
}

/// Per-node diagnostics. Dissipation and work columns are cumulative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub willmore: f64,
    pub gl: f64,
    pub kinetic: f64,
    pub dissipation_v: f64,
    pub dissipation_mu: f64,
    pub divergence_max: f64,
    pub work: f64,
}

impl Diagnostics {
    pub const CSV_HEADER: [&'static str; 10] = [
        "step",
        "time",
        "mass",
        "energy",
        "willmore",
        "gl",
        "kinetic",
        "dissipation_v",
        "dissipation_mu",
        "divergence_max",
    ];

    pub fn csv_row(&self) -> [String; 10] {
        [
            self.step.to_string(),
            format!("{:.17e}", self.time),
            format!("{:.17e}", self.mass),
            format!("{:.17e}", self.energy),
            format!("{:.17e}", self.willmore),
            format!("{:.17e}", self.gl),
            format!("{:.17e}", self.kinetic),
            format!("{:.17e}", self.dissipation_v),
            format!("{:.17e}", self.dissipation_mu),
            format!("{:.17e}", self.divergence_max),
        ]
    }

    /// `½‖v‖² + E(φ) + dissipated − work`, constant for the exact system.
    pub fn energy_ledger(&self) -> f64 {
        self.kinetic + self.energy + self.dissipation_v + self.dissipation_mu - self.work
    }
}

/// States at every node with their diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub diagnostics: Vec<Diagnostics>,
    pub time: TimeSpec,
    pub params: PhysParams,
}

impl Trajectory {
    pub fn grid(&self) -> &GridSpec {
        self.states[0].phi.grid()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has nodes")
    }

    /// Energy-balance residual at each node relative to the initial node.
    pub fn energy_residual(&self) -> Vec<f64> {
        let e0 = self.diagnostics[0].energy_ledger();
        self.diagnostics.iter().map(|d| d.energy_ledger() - e0).collect()
    }

    /// Deviation of the mean of `φ` from its initial value, per node.
    pub fn mass_drift(&self) -> Vec<f64> {
        let m0 = self.states[0].phi.mean();
        self.states.iter().map(|s| s.phi.mean() - m0).collect()
    }

    /// Total energy `½‖v‖² + E(φ)` per node.
    pub fn total_energy(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.kinetic + d.energy).collect()
    }
}

fn blow_up(step: usize, what: &str) -> Error {
    Error::BlowUp {
        step,
        reason: format!("non-finite {what}"),
    }
}

fn check_phi(phi: &ScalarField, step: usize) -> Result<()> {
    if !phi.is_finite() {
        return Err(blow_up(step, "phase field"));
    }
    let m = phi.max_abs();
    if m > BLOWUP_BOUND {
        return Err(Error::BlowUp {
            step,
            reason: format!("max |phi| = {m:e} exceeds {BLOWUP_BOUND:e}"),
        });
    }
    Ok(())
}

/// Non-leading part of the chemical potential, `N(φ) = −Δf(φ) + (f′+η) ω`.
pub(crate) fn chemical_remainder(phi: &ScalarField, omega: &ScalarField, params: &PhysParams) -> ScalarField {
    let mut n = phi.zip_map(omega, |p, w| (potential_fp(p) + params.eta) * w);
    n.axpy(-1.0, &laplacian(&phi.map(potential_f)));
    n
}

/// Symbol coefficients of the implicit phase-field operator
/// `I + dt·m̄·(−Δ)³ + dt·S·Δ²`.
pub(crate) fn ch_symbol(dt: f64, params: &PhysParams) -> [f64; 4] {
    [1.0, 0.0, dt * params.stabilization, dt * params.mobility.upper()]
}

fn ch_step_at(phi_n: &ScalarField, v: &FaceField, dt: f64, params: &PhysParams, step: usize) -> Result<ScalarField> {
    check_phi(phi_n, step)?;
    if !v.is_finite() {
        return Err(blow_up(step, "transport velocity"));
    }
    let m_bar = params.mobility.upper();
    let (mu, omega) = mu_of_phi(phi_n, params);
    let l2 = laplacian(&laplacian(phi_n));
    let mut rhs = phi_n.clone();
    rhs.axpy(dt * m_bar, &laplacian(&chemical_remainder(phi_n, &omega, params)));
    rhs.axpy(dt * params.stabilization, &l2);
    rhs.axpy(-dt, &advect_scalar(v, phi_n));
    if !params.mobility.is_constant() {
        let (m, _) = params.mobility_field(phi_n);
        let excess = face_average(&m.map(|a| a - m_bar));
        let flux = excess.zip_map(&gradient_to_faces(&mu), |a, b| a * b);
        rhs.axpy(dt, &divergence_of_faces(&flux));
    }
    if !rhs.is_finite() {
        return Err(blow_up(step, "phase-field right-hand side"));
    }
    let phi = helmholtz_poly_solve(ch_symbol(dt, params), &rhs)?;
    check_phi(&phi, step)?;
    Ok(phi)
}

/// One phase-field step transported by `v` (the already updated velocity).
pub fn ch_step(phi_n: &ScalarField, v: &FaceField, dt: f64, params: &PhysParams) -> Result<ScalarField> {
    ch_step_at(phi_n, v, dt, params, 1)
}

/// Explicit momentum terms: transport, viscous stress minus its implicit
/// constant-coefficient part.
pub(crate) fn momentum_explicit(v: &FaceField, nu: &ScalarField, params: &PhysParams) -> FaceField {
    let mut e = momentum_advection(v, v).scaled(-1.0);
    e.axpy(1.0, &viscous_force(nu, v));
    e.axpy(-params.nu_bar, &face_laplacian(v));
    e
}

fn ns_step_at(
    v_n: &FaceField,
    phi_n: &ScalarField,
    mu_n: &ScalarField,
    u_n: &FaceField,
    dt: f64,
    params: &PhysParams,
    step: usize,
) -> Result<(FaceField, ScalarField)> {
    if !(v_n.is_finite() && phi_n.is_finite() && mu_n.is_finite()) {
        return Err(blow_up(step, "momentum input"));
    }
    if !u_n.is_finite() {
        return Err(Error::InvalidParams(format!("control at step {step} is not finite")));
    }
    let (nu, _) = params.viscosity_field(phi_n);
    let mut r = v_n.clone();
    r.axpy(dt, &momentum_explicit(v_n, &nu, params));
    let mut s = helmholtz_faces(&r, dt * params.nu_bar)?;
    s.axpy(dt, &korteweg_force(mu_n, phi_n));
    s.axpy(dt, u_n);
    s.zero_boundary();
    if !s.is_finite() {
        return Err(blow_up(step, "velocity"));
    }
    project_divergence_free(&s, dt)
}

/// One momentum step; returns `(vⁿ⁺¹, pⁿ⁺¹)`.
pub fn ns_step(
    v_n: &FaceField,
    phi_n: &ScalarField,
    mu_n: &ScalarField,
    u_n: &FaceField,
    dt: f64,
    params: &PhysParams,
) -> Result<(FaceField, ScalarField)> {
    ns_step_at(v_n, phi_n, mu_n, u_n, dt, params, 1)
}

/// Full step from `state` with control `u`; `step` is the 1-based index of
/// the node being produced.
pub fn advance(state: &State, u: &FaceField, dt: f64, params: &PhysParams, step: usize) -> Result<State> {
    let (v, p) = ns_step_at(&state.v, &state.phi, &state.mu, u, dt, params, step)?;
    let phi = ch_step_at(&state.phi, &v, dt, params, step)?;
    Ok(State::new(v, p, phi, state.time + dt, params))
}

fn diagnostics(state: &State, step: usize, params: &PhysParams) -> Diagnostics {
    let e = free_energy(&state.phi, params);
    let (mass, _) = constraint_integrals(&state.phi);
    Diagnostics {
        step,
        time: state.time,
        mass,
        energy: e.total,
        willmore: e.willmore,
        gl: e.gl,
        kinetic: state.v.kinetic_energy(),
        dissipation_v: 0.0,
        dissipation_mu: 0.0,
        divergence_max: divergence_of_faces(&state.v).max_abs(),
        work: 0.0,
    }
}

fn mobility_dissipation(state: &State, params: &PhysParams) -> f64 {
    let (m, _) = params.mobility_field(&state.phi);
    let gm = gradient_to_faces(&state.mu);
    let mf = face_average(&m);
    gm.zip_map(&mf, |g, m| m * g * g).iter().sum::<f64>() * state.phi.grid().cell_volume()
}

/// Forward run with one control field per step.
pub fn simulate(
    v0: &FaceField,
    phi0: &ScalarField,
    controls: &[FaceField],
    time: &TimeSpec,
    params: &PhysParams,
) -> Result<Trajectory> {
    params.validate()?;
    let g = *phi0.grid();
    g.check_same(v0.grid(), "initial velocity")?;
    if controls.len() != time.n_steps() {
        return Err(Error::ControlLength {
            expected: time.n_steps(),
            got: controls.len(),
        });
    }
    for u in controls {
        g.check_same(u.grid(), "control")?;
    }
    if !v0.is_finite() || !phi0.is_finite() {
        return Err(Error::NonFinite("initial data"));
    }
    let scale = v0.max_abs().max(1.0);
    if v0.boundary_max() > 1e-12 * scale {
        return Err(Error::BoundaryFlux(v0.boundary_max()));
    }
    let div0 = divergence_of_faces(v0).max_abs();
    if div0 > 1e-8 {
        return Err(Error::InvalidParams(format!(
            "initial velocity is not divergence-free (max |div| = {div0:e})"
        )));
    }
    let dt = time.dt();
    let mut states = Vec::with_capacity(time.n_steps() + 1);
    let mut diags = Vec::with_capacity(time.n_steps() + 1);
    let first = State::initial(v0.clone(), phi0.clone(), params);
    diags.push(diagnostics(&first, 0, params));
    states.push(first);
    for (n, u) in controls.iter().enumerate() {
        let next = advance(&states[n], u, dt, params, n + 1)?;
        let (nu, _) = params.viscosity_field(&next.phi);
        let prev = diags[n];
        let mut d = diagnostics(&next, n + 1, params);
        d.dissipation_v = prev.dissipation_v + dt * crate::grid::dissipation(&nu, &next.v);
        d.dissipation_mu = prev.dissipation_mu + dt * mobility_dissipation(&next, params);
        d.work = prev.work + dt * u.dot(&next.v);
        diags.push(d);
        states.push(next);
    }
    Ok(Trajectory {
        states,
        diagnostics: diags,
        time: *time,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(16, 16, 8.0, 8.0).unwrap()
    }

    #[test]
    fn time_spec() {
        let t = TimeSpec::new(0.1, 1e-3).unwrap();
        assert_eq!(t.n_steps(), 100);
        assert!(TimeSpec::new(0.1, 0.03).is_err());
        assert!(TimeSpec::new(0.1, 0.0).is_err());
        assert_eq!(t.refined().n_steps(), 200);
    }

    #[test]
    fn constant_phase_is_fixed() {
        let g = grid();
        let p = PhysParams::default();
        let v = FaceField::zeros(g);
        for c in [1.0, -1.0, 0.3] {
            let phi = ScalarField::constant(g, c);
            let next = ch_step(&phi, &v, 1e-3, &p).unwrap();
            assert!(next.zip_map(&phi, |a, b| a - b).max_abs() < 1e-14);
        }
    }

    #[test]
    fn rest_state_and_gradient_forcing() {
        let g = grid();
        let p = PhysParams::default();
        let phi = ScalarField::constant(g, 1.0);
        let (mu, _) = mu_of_phi(&phi, &p);
        let v = FaceField::zeros(g);
        let (v1, p1) = ns_step(&v, &phi, &mu, &v, 1e-3, &p).unwrap();
        assert_eq!(v1.max_abs(), 0.0);
        assert_eq!(p1.max_abs(), 0.0);
        let f = ScalarField::from_fn(g, |x, y| (x * 0.7).sin() + (y * 0.3).cos());
        let u = gradient_to_faces(&f);
        let (v1, p1) = ns_step(&v, &phi, &mu, &u, 1e-3, &p).unwrap();
        assert!(v1.max_abs() < 1e-12, "{}", v1.max_abs());
        assert!(p1.max_abs() > 0.1);
    }

    #[test]
    fn mass_is_preserved_by_random_transport() {
        let g = grid();
        let p = PhysParams::default();
        let phi = ScalarField::from_fn(g, |x, y| (x * 1.3).sin() * (y * 0.9 + 0.2).cos());
        let raw = FaceField::from_fn(g, |x, y| ((y * 0.8).sin() + x, (x * 0.5).cos() * y));
        let mut raw = raw;
        raw.zero_boundary();
        let (v, _) = project_divergence_free(&raw, 1.0).unwrap();
        let next = ch_step(&phi, &v, 1e-3, &p).unwrap();
        assert!((next.mean() - phi.mean()).abs() < 1e-13);
    }

    #[test]
    fn control_length_is_checked() {
        let g = grid();
        let t = TimeSpec::new(0.01, 1e-3).unwrap();
        let err = simulate(
            &FaceField::zeros(g),
            &ScalarField::constant(g, 1.0),
            &vec![FaceField::zeros(g); 3],
            &t,
            &PhysParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ControlLength { expected: 10, got: 3 }));
    }
}
