//! Backward adjoint solver for constant mobility.
//!
//! Each backward step is the transpose of [`crate::linearized::linearized_step`],
//! with the tracking source `α₁(φ − φ_Q)` entering at the later node of the
//! step. The velocity component `vᵃ` at node `n` pairs with the control of
//! step `n`, so the reduced gradient is `α₃ uₙ + vᵃₙ`.

use crate::constitutive::{mu_linearization_transpose, potential_fp, potential_fpp, CostSpec, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{
    advect_scalar_transpose_field, advect_scalar_transpose_velocity, divergence_of_faces,
    face_average, face_average_transpose, face_dot_to_cells, face_laplacian, gradient_to_faces,
    helmholtz_faces, helmholtz_poly_solve, laplacian, momentum_advection_transpose,
    project_divergence_free, viscous_force, viscous_force_phi_transpose, AdvectionSlot, FaceField,
    ScalarField,
};
use crate::state::{ch_symbol, State, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub va: FaceField,
    pub pa: ScalarField,
    pub phia: ScalarField,
    pub mua: ScalarField,
    pub omegaa: ScalarField,
    pub time: f64,
    /// Adjoint of the pre-projection velocity, carried to the next
    /// backward step.
    carry: FaceField,
}

/// Refuses anything but constant mobility.
pub fn require_constant_mobility(params: &PhysParams) -> Result<()> {
    if params.mobility.is_constant() {
        Ok(())
    } else {
        Err(Error::NonConstantMobility(params.mobility.to_string()))
    }
}

fn complete(
    base: &State,
    va: FaceField,
    pa: ScalarField,
    phia: ScalarField,
    carry: FaceField,
    params: &PhysParams,
) -> AdjointState {
    let mut mua = laplacian(&phia).scaled(-1.0);
    mua.axpy(-1.0, &face_dot_to_cells(&gradient_to_faces(&base.phi), &va));
    let mut omegaa = base.phi.zip_map(&mua, |p, m| (potential_fp(p) + params.eta) * m);
    omegaa.axpy(-1.0, &laplacian(&mua));
    AdjointState {
        va,
        pa,
        phia,
        mua,
        omegaa,
        time: base.time,
        carry,
    }
}

/// Terminal data: `vᵃ = 0`, `φᵃ = α₂ (φ(T) − φ_Ω)`.
pub fn adjoint_terminal(base_last: &State, cost: &CostSpec, params: &PhysParams) -> AdjointState {
    let g = *base_last.phi.grid();
    let phia = base_last
        .phi
        .zip_map(&cost.phi_omega, |p, t| cost.alpha2 * (p - t));
    complete(
        base_last,
        FaceField::zeros(g),
        ScalarField::zeros(g),
        phia,
        FaceField::zeros(g),
        params,
    )
}

/// Transpose of `ξ ↦` the linearized chemical remainder.
fn remainder_transpose(phi: &ScalarField, omega: &ScalarField, xi: &ScalarField, params: &PhysParams) -> ScalarField {
    let fp = phi.map(potential_fp);
    let a = fp.zip_map(xi, |d, x| (d + params.eta) * x);
    let mut out = laplacian(&a).scaled(-1.0);
    out.axpy(1.0, &fp.zip_map(&a, |d, x| d * x));
    out.axpy(-1.0, &fp.zip_map(&laplacian(xi), |d, l| d * l));
    let (pv, wv, xv) = (phi.values(), omega.values(), xi.values());
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        *o += potential_fpp(pv[k]) * wv[k] * xv[k];
    }
    out
}

/// One backward step from node `n + 1` to node `n`; `n` indexes `base_n`.
pub fn adjoint_step(
    base_n: &State,
    base_np1: &State,
    adj_np1: &AdjointState,
    cost: &CostSpec,
    n: usize,
    dt: f64,
    params: &PhysParams,
) -> Result<AdjointState> {
    require_constant_mobility(params)?;
    let (phi, v) = (&base_n.phi, &base_n.v);
    let (nu, dnu) = params.viscosity_field(phi);
    let m = params.mobility.upper();

    // Phase stage, transposed.
    let mut lam = adj_np1.phia.clone();
    if cost.alpha1 != 0.0 {
        let q = &cost.phi_q[n + 1];
        lam.axpy(dt * cost.alpha1, &base_np1.phi.zip_map(q, |p, t| p - t));
    }
    let rho = helmholtz_poly_solve(ch_symbol(dt, params), &lam)?;
    let mut phia = rho.clone();
    phia.axpy(dt * m, &remainder_transpose(phi, &base_n.omega, &laplacian(&rho), params));
    phia.axpy(dt * params.stabilization, &laplacian(&laplacian(&rho)));
    phia.axpy(-dt, &advect_scalar_transpose_field(&base_np1.v, &rho));
    let mut lam_v = adj_np1.carry.clone();
    lam_v.axpy(-dt, &advect_scalar_transpose_velocity(phi, &rho));
    lam_v.zero_boundary();

    // Momentum stage, transposed.
    let (y, pa) = project_divergence_free(&lam_v, dt)?;
    let z = helmholtz_faces(&y, dt * params.nu_bar)?;
    let mut e = momentum_advection_transpose(AdvectionSlot::Transport, v, &z);
    e.axpy(1.0, &momentum_advection_transpose(AdvectionSlot::Transported, v, &z));
    e = e.scaled(-1.0);
    e.axpy(1.0, &viscous_force(&nu, &z));
    e.axpy(-params.nu_bar, &face_laplacian(&z));
    let mut carry = z.clone();
    carry.axpy(dt, &e);

    phia.axpy(dt, &viscous_force_phi_transpose(&dnu, v, &z));
    let k2 = face_average(&base_n.mu).zip_map(&y, |a, b| a * b);
    phia.axpy(-dt, &divergence_of_faces(&k2));
    let chi = face_average_transpose(&y.zip_map(&gradient_to_faces(phi), |a, b| a * b)).scaled(dt);
    phia.axpy(1.0, &mu_linearization_transpose(phi, &base_n.omega, &chi, params));

    if !(phia.is_finite() && y.is_finite()) {
        return Err(Error::BlowUp {
            step: n,
            reason: "non-finite adjoint state".into(),
        });
    }
    Ok(complete(base_n, y, pa, phia, carry, params))
}

/// Adjoint states at every node, index-aligned with the forward trajectory.
#[derive(Debug, Clone)]
pub struct AdjointTrajectory {
    pub states: Vec<AdjointState>,
}

impl AdjointTrajectory {
    /// Adjoint velocity paired with the control of each step.
    pub fn step_velocities(&self) -> impl Iterator<Item = &FaceField> {
        let n = self.states.len() - 1;
        self.states[..n].iter().map(|s| &s.va)
    }
}

/// Backward sweep from the terminal data.
pub fn solve_adjoint(base: &Trajectory, cost: &CostSpec) -> Result<AdjointTrajectory> {
    let params = &base.params;
    require_constant_mobility(params)?;
    cost.validate()?;
    let n_steps = base.time.n_steps();
    if cost.phi_q.len() != n_steps + 1 {
        return Err(Error::DimensionMismatch(format!(
            "tracking target has {} nodes, trajectory has {}",
            cost.phi_q.len(),
            n_steps + 1
        )));
    }
    base.grid().check_same(cost.phi_omega.grid(), "terminal target")?;
    let dt = base.time.dt();
    let mut rev = Vec::with_capacity(n_steps + 1);
    rev.push(adjoint_terminal(base.last(), cost, params));
    for n in (0..n_steps).rev() {
        let prev = rev.last().expect("nonempty");
        let next = adjoint_step(&base.states[n], &base.states[n + 1], prev, cost, n, dt, params)?;
        rev.push(next);
    }
    rev.reverse();
    Ok(AdjointTrajectory { states: rev })
}
