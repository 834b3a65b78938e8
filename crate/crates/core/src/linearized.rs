//! Sensitivity solver: the exact tangent of the forward step around a stored
//! trajectory, so that `ψ` is the derivative of the control-to-phase map in
//! the direction `h`.

use crate::constitutive::{mu_linearization, potential_fp, potential_fpp, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{
    advect_scalar, divergence_of_faces, face_average, gradient_to_faces, helmholtz_faces,
    helmholtz_poly_solve, korteweg_force, laplacian, momentum_advection, project_divergence_free,
    viscous_force, FaceField, GridSpec, ScalarField,
};
use crate::state::{ch_symbol, State, Trajectory};

/// Linearized variables at one node. `w_aux` is the linearized `ω` and
/// `theta` the linearized `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedState {
    pub w: FaceField,
    pub q: ScalarField,
    pub psi: ScalarField,
    pub theta: ScalarField,
    pub w_aux: ScalarField,
    pub time: f64,
}

impl LinearizedState {
    pub fn zero(grid: GridSpec, time: f64) -> Self {
        Self {
            w: FaceField::zeros(grid),
            q: ScalarField::zeros(grid),
            psi: ScalarField::zeros(grid),
            theta: ScalarField::zeros(grid),
            w_aux: ScalarField::zeros(grid),
            time,
        }
    }
}

/// Derivative of `N(φ) = −Δf(φ) + (f′+η) ω` in direction `ψ`, given the
/// linearized `ω′`.
pub(crate) fn remainder_linearization(
    phi: &ScalarField,
    omega: &ScalarField,
    psi: &ScalarField,
    omega_lin: &ScalarField,
    params: &PhysParams,
) -> ScalarField {
    let fp_psi = phi.zip_map(psi, |p, s| potential_fp(p) * s);
    let mut out = laplacian(&fp_psi).scaled(-1.0);
    let (pv, wv, sv, ov) = (phi.values(), omega.values(), psi.values(), omega_lin.values());
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        *o += potential_fpp(pv[k]) * sv[k] * wv[k] + (potential_fp(pv[k]) + params.eta) * ov[k];
    }
    out
}

fn linearized_state(
    base: &State,
    w: FaceField,
    q: ScalarField,
    psi: ScalarField,
    params: &PhysParams,
) -> LinearizedState {
    let (theta, w_aux) = mu_linearization(&base.phi, &base.omega, &psi, params);
    LinearizedState {
        w,
        q,
        psi,
        theta,
        w_aux,
        time: base.time,
    }
}

/// One step of the tangent system from node `n` to `n + 1`.
pub fn linearized_step(
    base_n: &State,
    base_np1: &State,
    lin_n: &LinearizedState,
    h_n: &FaceField,
    dt: f64,
    params: &PhysParams,
) -> Result<LinearizedState> {
    let (phi, v) = (&base_n.phi, &base_n.v);
    let (w, psi) = (&lin_n.w, &lin_n.psi);
    let (nu, dnu) = params.viscosity_field(phi);
    let (theta, omega_lin) = mu_linearization(phi, &base_n.omega, psi, params);

    // Momentum stage.
    let mut e = momentum_advection(w, v);
    e.axpy(1.0, &momentum_advection(v, w));
    e = e.scaled(-1.0);
    e.axpy(1.0, &viscous_force(&nu, w));
    e.axpy(1.0, &viscous_force(&dnu.zip_map(psi, |a, b| a * b), v));
    e.axpy(-params.nu_bar, &crate::grid::face_laplacian(w));
    let mut r = w.clone();
    r.axpy(dt, &e);
    let mut s = helmholtz_faces(&r, dt * params.nu_bar)?;
    s.axpy(dt, &korteweg_force(&theta, phi));
    s.axpy(dt, &korteweg_force(&base_n.mu, psi));
    s.axpy(dt, h_n);
    s.zero_boundary();
    let (w_next, q) = project_divergence_free(&s, dt)?;

    // Phase stage.
    let m_bar = params.mobility.upper();
    let n_lin = remainder_linearization(phi, &base_n.omega, psi, &omega_lin, params);
    let mut rhs = psi.clone();
    rhs.axpy(dt * m_bar, &laplacian(&n_lin));
    rhs.axpy(dt * params.stabilization, &laplacian(&laplacian(psi)));
    rhs.axpy(-dt, &advect_scalar(&w_next, phi));
    rhs.axpy(-dt, &advect_scalar(&base_np1.v, psi));
    if !params.mobility.is_constant() {
        let (m, dm) = params.mobility_field(phi);
        let grad_mu = gradient_to_faces(&base_n.mu);
        let mut flux = face_average(&dm.zip_map(psi, |a, b| a * b)).zip_map(&grad_mu, |a, b| a * b);
        let excess = face_average(&m.map(|a| a - m_bar));
        flux.axpy(1.0, &excess.zip_map(&gradient_to_faces(&theta), |a, b| a * b));
        rhs.axpy(dt, &divergence_of_faces(&flux));
    }
    let psi_next = helmholtz_poly_solve(ch_symbol(dt, params), &rhs)?;
    if !(psi_next.is_finite() && w_next.is_finite()) {
        return Err(Error::BlowUp {
            step: 0,
            reason: "non-finite linearized state".into(),
        });
    }
    Ok(linearized_state(base_np1, w_next, q, psi_next, params))
}

/// Tangent trajectory with zero initial data.
#[derive(Debug, Clone)]
pub struct LinearizedTrajectory {
    pub states: Vec<LinearizedState>,
}

impl LinearizedTrajectory {
    /// `ψ` at every node.
    pub fn psi(&self) -> impl Iterator<Item = &ScalarField> {
        self.states.iter().map(|s| &s.psi)
    }
}

/// Solves the tangent system along `base` for the direction `h` (one field
/// per step).
pub fn solve_linearized(base: &Trajectory, h: &[FaceField]) -> Result<LinearizedTrajectory> {
    let n_steps = base.time.n_steps();
    if h.len() != n_steps {
        return Err(Error::ControlLength {
            expected: n_steps,
            got: h.len(),
        });
    }
    let g = *base.grid();
    for hn in h {
        g.check_same(hn.grid(), "direction")?;
    }
    let dt = base.time.dt();
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(LinearizedState::zero(g, 0.0));
    for n in 0..n_steps {
        let next = linearized_step(&base.states[n], &base.states[n + 1], &states[n], &h[n], dt, &base.params)
            .map_err(|e| match e {
                Error::BlowUp { reason, .. } => Error::BlowUp { step: n + 1, reason },
                other => other,
            })?;
        states.push(next);
    }
    Ok(LinearizedTrajectory { states })
}
