//! Pointwise laws (potential, viscosity, mobility) and the energy functionals
//! built from them.

use crate::error::{Error, Result};
use crate::grid::{gradient_to_faces, laplacian, ScalarField};

/// Double-well potential `F(s) = ¼ (s² − 1)²`.
#[allow(non_snake_case)]
pub fn potential_F(s: f64) -> f64 {
    let a = s * s - 1.0;
    0.25 * a * a
}

/// `f = F′ = s³ − s`.
pub fn potential_f(s: f64) -> f64 {
    s * s * s - s
}

/// `f′ = 3s² − 1`.
pub fn potential_fp(s: f64) -> f64 {
    3.0 * s * s - 1.0
}

/// `f″ = 6s`.
pub fn potential_fpp(s: f64) -> f64 {
    6.0 * s
}

/// Potential family. Only the quartic double well is provided; the growth
/// constants are carried as metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Quartic,
}

impl Potential {
    /// Growth constants `(γ₁, γ₂)` with `s F′(s) ≥ (2 + γ₁) F(s) − γ₂`.
    pub fn gammas(&self) -> (f64, f64) {
        match self {
            Potential::Quartic => (1.0, 1.0),
        }
    }

    /// Lower bound `F ≥ −c_F`.
    pub fn c_f(&self) -> f64 {
        match self {
            Potential::Quartic => 0.0,
        }
    }
}

/// Mobility law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mobility {
    Constant(f64),
    /// `m(s) = m_star + m_amp · tanh²(s)`.
    Tanh { m_star: f64, m_amp: f64 },
}

impl Mobility {
    pub fn is_constant(&self) -> bool {
        match *self {
            Mobility::Constant(_) => true,
            Mobility::Tanh { m_amp, .. } => m_amp == 0.0,
        }
    }

    /// `(m(s), m′(s))`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match *self {
            Mobility::Constant(m) => (m, 0.0),
            Mobility::Tanh { m_star, m_amp } => {
                let t = s.tanh();
                (m_star + m_amp * t * t, 2.0 * m_amp * t * (1.0 - t * t))
            }
        }
    }

    /// Supremum of `m`, used as the implicit mobility.
    pub fn upper(&self) -> f64 {
        match *self {
            Mobility::Constant(m) => m,
            Mobility::Tanh { m_star, m_amp } => m_star + m_amp.max(0.0),
        }
    }

    /// Infimum of `m`.
    pub fn lower(&self) -> f64 {
        match *self {
            Mobility::Constant(m) => m,
            Mobility::Tanh { m_star, m_amp } => m_star + m_amp.min(0.0),
        }
    }
}

impl std::fmt::Display for Mobility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mobility::Constant(m) => write!(f, "constant mobility {m}"),
            Mobility::Tanh { m_star, m_amp } => {
                write!(f, "mobility {m_star} + {m_amp} tanh^2(phi)")
            }
        }
    }
}

/// Physical parameters. `eps` is fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub eta: f64,
    pub eps: f64,
    pub nu_bar: f64,
    pub nu_amp: f64,
    pub mobility: Mobility,
    pub potential: Potential,
    /// Linear stabilization constant of the phase-field step.
    pub stabilization: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            eps: 1.0,
            nu_bar: 1.0,
            nu_amp: 0.5,
            mobility: Mobility::Constant(1.0),
            potential: Potential::Quartic,
            stabilization: 2.0,
        }
    }
}

impl PhysParams {
    /// Lower viscosity bound `ν_* = nu_bar − |nu_amp|`.
    pub fn nu_star(&self) -> f64 {
        self.nu_bar - self.nu_amp.abs()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta, self.eps, self.nu_bar, self.nu_amp, self.stabilization];
        if finite.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParams("physical parameters must be finite".into()));
        }
        if self.eps != 1.0 {
            return Err(Error::InvalidParams(format!("eps is fixed at 1, got {}", self.eps)));
        }
        if self.nu_star() <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "A1 positivity violated: nu_bar - |nu_amp| = {} must be > 0",
                self.nu_star()
            )));
        }
        let (m_lo, m_hi) = (self.mobility.lower(), self.mobility.upper());
        if !(m_lo > 0.0 && m_hi.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "A2 positivity violated: mobility lower bound {m_lo} must be > 0"
            )));
        }
        if self.stabilization < 0.0 {
            return Err(Error::InvalidParams(format!(
                "stabilization must be >= 0, got {}",
                self.stabilization
            )));
        }
        Ok(())
    }

    /// `(ν(s), ν′(s))` for `ν(s) = nu_bar + nu_amp · tanh(s)`.
    pub fn viscosity(&self, s: f64) -> (f64, f64) {
        let t = s.tanh();
        (self.nu_bar + self.nu_amp * t, self.nu_amp * (1.0 - t * t))
    }

    /// Cell fields `ν(φ)` and `ν′(φ)`.
    pub fn viscosity_field(&self, phi: &ScalarField) -> (ScalarField, ScalarField) {
        (phi.map(|s| self.viscosity(s).0), phi.map(|s| self.viscosity(s).1))
    }

    /// Cell fields `m(φ)` and `m′(φ)`.
    pub fn mobility_field(&self, phi: &ScalarField) -> (ScalarField, ScalarField) {
        (
            phi.map(|s| self.mobility.eval(s).0),
            phi.map(|s| self.mobility.eval(s).1),
        )
    }
}

/// `ω = −Δφ + f(φ)`.
pub fn omega_of_phi(phi: &ScalarField) -> ScalarField {
    let mut w = phi.map(potential_f);
    w.axpy(-1.0, &laplacian(phi));
    w
}

/// Chemical potential `μ = −Δω + (f′(φ) + η) ω`; returns `(μ, ω)`.
pub fn mu_of_phi(phi: &ScalarField, params: &PhysParams) -> (ScalarField, ScalarField) {
    let omega = omega_of_phi(phi);
    let mut mu = phi.zip_map(&omega, |p, w| (potential_fp(p) + params.eta) * w);
    mu.axpy(-1.0, &laplacian(&omega));
    (mu, omega)
}

/// Derivative of `φ ↦ (μ, ω)` at `(φ, ω)` in direction `ψ`; returns
/// `(θ, ω′)` with `ω′ = −Δψ + f′ψ` and
/// `θ = −Δω′ + f″ ψ ω + (f′ + η) ω′`.
pub fn mu_linearization(
    phi: &ScalarField,
    omega: &ScalarField,
    psi: &ScalarField,
    params: &PhysParams,
) -> (ScalarField, ScalarField) {
    let mut wp = phi.zip_map(psi, |p, s| potential_fp(p) * s);
    wp.axpy(-1.0, &laplacian(psi));
    let mut theta = laplacian(&wp).scaled(-1.0);
    for (k, t) in theta.values_mut().iter_mut().enumerate() {
        let (p, w, s, o) = (phi.values()[k], omega.values()[k], psi.values()[k], wp.values()[k]);
        *t += potential_fpp(p) * s * w + (potential_fp(p) + params.eta) * o;
    }
    (theta, wp)
}

/// Transpose of `ψ ↦ θ` from [`mu_linearization`] applied to `chi`.
pub fn mu_linearization_transpose(
    phi: &ScalarField,
    omega: &ScalarField,
    chi: &ScalarField,
    params: &PhysParams,
) -> ScalarField {
    let fp = phi.map(potential_fp);
    // (−Δ + f′ + η) χ
    let mut a = fp.zip_map(chi, |d, c| (d + params.eta) * c);
    a.axpy(-1.0, &laplacian(chi));
    // (−Δ + f′) a + f″ ω χ
    let mut out = fp.zip_map(&a, |d, x| d * x);
    out.axpy(-1.0, &laplacian(&a));
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        *o += potential_fpp(phi.values()[k]) * omega.values()[k] * chi.values()[k];
    }
    out
}

/// Free energy split into its bending and Ginzburg–Landau parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy {
    pub total: f64,
    pub willmore: f64,
    pub gl: f64,
}

/// `E(φ) = ½ ∫ω² + η ∫(½|∇φ|² + F(φ))`.
pub fn free_energy(phi: &ScalarField, params: &PhysParams) -> FreeEnergy {
    let omega = omega_of_phi(phi);
    let willmore = 0.5 * omega.dot(&omega);
    let gl = params.eta * ginzburg_landau(phi);
    FreeEnergy {
        total: willmore + gl,
        willmore,
        gl,
    }
}

fn ginzburg_landau(phi: &ScalarField) -> f64 {
    let g = gradient_to_faces(phi);
    0.5 * g.dot(&g) + phi.map(potential_F).integral()
}

/// Volume and surface surrogates `A(φ) = ∫φ`, `B(φ) = ∫(½|∇φ|² + F(φ))`.
pub fn constraint_integrals(phi: &ScalarField) -> (f64, f64) {
    let a = phi.integral();
    let grad = gradient_to_faces(phi);
    let mut b = 0.5 * grad.dot(&grad);
    b += phi.values().iter().map(|&s| potential_F(s)).sum::<f64>() * phi.grid().cell_volume();
    (a, b)
}

/// Tracking cost weights and targets. `phi_q` holds one field per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub phi_q: Vec<ScalarField>,
    pub phi_omega: ScalarField,
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        validate_weights(self.alpha1, self.alpha2, self.alpha3)?;
        let g = *self.phi_omega.grid();
        for (n, q) in self.phi_q.iter().enumerate() {
            g.check_same(q.grid(), "tracking target")?;
            if !q.is_finite() {
                return Err(Error::InvalidParams(format!("tracking target at node {n} is not finite")));
            }
        }
        if !self.phi_omega.is_finite() {
            return Err(Error::InvalidParams("terminal target is not finite".into()));
        }
        Ok(())
    }
}

/// Cost weights must be nonnegative and not all zero.
pub fn validate_weights(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<()> {
    let a = [alpha1, alpha2, alpha3];
    if a.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || a.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "A6 violated: cost weights must be nonnegative and not all zeros, got ({alpha1}, {alpha2}, {alpha3})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn potential_values() {
        assert_eq!(potential_F(1.0), 0.0);
        assert_eq!(potential_F(-1.0), 0.0);
        assert_eq!(potential_f(1.0), 0.0);
        assert_eq!(potential_fp(1.0), 2.0);
        assert_eq!(potential_F(0.0), 0.25);
        assert_eq!(potential_fp(0.0), -1.0);
        assert_eq!(potential_fpp(0.0), 0.0);
        assert_eq!(potential_fpp(2.0), 12.0);
    }

    #[test]
    fn viscosity_law() {
        let p = PhysParams { nu_amp: 0.0, ..Default::default() };
        assert_eq!(p.viscosity(3.0), (1.0, 0.0));
        let p = PhysParams::default();
        assert_eq!(p.viscosity(0.0), (p.nu_bar, p.nu_amp));
        for s in [-2.0, 0.0, 3.0] {
            let h = 1e-5;
            let fd = (p.viscosity(s + h).0 - p.viscosity(s - h).0) / (2.0 * h);
            assert!((fd - p.viscosity(s).1).abs() < 1e-8);
        }
    }

    #[test]
    fn mobility_derivative() {
        let m = Mobility::Tanh { m_star: 0.5, m_amp: 0.5 };
        for s in [-1.3, 0.2, 2.0] {
            let h = 1e-5;
            let fd = (m.eval(s + h).0 - m.eval(s - h).0) / (2.0 * h);
            assert!((fd - m.eval(s).1).abs() < 1e-8);
        }
        assert_eq!(m.upper(), 1.0);
        assert!(!m.is_constant());
    }

    #[test]
    fn guards() {
        let p = PhysParams { nu_bar: 0.01, nu_amp: 0.05, ..Default::default() };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("A1 positivity violated"), "{msg}");
        let msg = validate_weights(0.0, 0.0, 0.0).unwrap_err().to_string();
        assert!(msg.contains("A6") && msg.contains("nonnegative and not all zeros"));
        assert!(validate_weights(0.0, 1.0, 0.0).is_ok());
        assert!(PhysParams::default().validate().is_ok());
    }

    #[test]
    fn constant_field_chemical_potential() {
        let g = GridSpec::new(8, 8, 1.0, 1.0).unwrap();
        let p = PhysParams { eta: 0.0, ..Default::default() };
        let (mu, omega) = mu_of_phi(&ScalarField::constant(g, 2.0), &p);
        assert!(omega.values().iter().all(|&w| (w - 6.0).abs() < 1e-12));
        assert!(mu.values().iter().all(|&m| (m - 66.0).abs() < 1e-12));
        let (mu, _) = mu_of_phi(&ScalarField::constant(g, 1.0), &p);
        assert_eq!(mu.max_abs(), 0.0);
    }

    #[test]
    fn energy_of_constants() {
        let g = GridSpec::new(8, 8, 1.0, 1.0).unwrap();
        let p = PhysParams::default();
        assert_eq!(free_energy(&ScalarField::constant(g, 1.0), &p).total, 0.0);
        let e = free_energy(&ScalarField::zeros(g), &p);
        assert!((e.total - 0.25).abs() < 1e-15);
        assert_eq!(constraint_integrals(&ScalarField::zeros(g)), (0.0, 0.25));
        let (a, b) = constraint_integrals(&ScalarField::constant(g, 1.0));
        assert!((a - 1.0).abs() < 1e-15 && b == 0.0);
    }

    #[test]
    fn linearization_transpose_pairs() {
        let g = GridSpec::new(6, 5, 1.2, 1.0).unwrap();
        let p = PhysParams { eta: -0.7, ..Default::default() };
        let phi = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * (2.0 * y).cos());
        let psi = ScalarField::from_fn(g, |x, y| x * x - y);
        let chi = ScalarField::from_fn(g, |x, y| (x + 2.0 * y).cos());
        let omega = omega_of_phi(&phi);
        let (theta, _) = mu_linearization(&phi, &omega, &psi, &p);
        let back = mu_linearization_transpose(&phi, &omega, &chi, &p);
        let (a, b) = (theta.dot(&chi), psi.dot(&back));
        assert!((a - b).abs() < 1e-11 * a.abs().max(1.0), "{a} vs {b}");
    }
}
