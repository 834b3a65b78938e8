use nsch_core::control::{
    evaluate_cost, face_quadrature, optimize, optimize_with, project_admissible, reduced_gradient,
    stationarity_residual, BoundField, BoxBounds, InitialPhase, InitialVelocity, OptimOptions, ProblemSpec,
    TargetSpec, Termination,
};
use nsch_core::presets::{ControlPreset, PhasePreset};
use nsch_core::state::simulate;
use nsch_core::{
    ControlBounds, ControlField, CostSpec, FaceField, GridSpec, Mobility, PhysParams, ScalarField, TimeSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_spec(alpha: [f64; 3]) -> ProblemSpec {
    ProblemSpec {
        grid: GridSpec::new(16, 16, 8.0, 8.0).unwrap(),
        time: TimeSpec::new(0.02, 2e-3).unwrap(),
        params: PhysParams::default(),
        initial_phase: InitialPhase::Preset(PhasePreset::Bubble { radius: None }),
        initial_velocity: InitialVelocity::Preset(ControlPreset::Zero),
        control: ControlPreset::Cellular { amplitude: 1.0 },
        alpha,
        target: TargetSpec::SelfGenerated {
            control: ControlPreset::Cellular { amplitude: 3.0 },
        },
        bounds: BoxBounds {
            x: (-10.0, 10.0),
            y: (-10.0, 10.0),
        },
    }
}

fn default_spec() -> ProblemSpec {
    ProblemSpec {
        grid: GridSpec::new(64, 64, 16.0, 16.0).unwrap(),
        time: TimeSpec::new(0.1, 1e-3).unwrap(),
        ..small_spec([1.0, 1.0, 2e-6])
    }
}

#[test]
fn cost_vanishes_on_target() {
    let (p, _) = small_spec([1.0, 1.0, 1.0]).realize().unwrap();
    let target_u = ControlField::from_preset(&ControlPreset::Cellular { amplitude: 3.0 }, p.grid(), &p.time);
    let traj = p.simulate(&target_u).unwrap();
    let zero = ControlField::zeros(*p.grid(), &p.time);
    let c = evaluate_cost(&traj, &zero, &p.cost).unwrap();
    assert_eq!(c.total, 0.0);
}

#[test]
fn unit_control_on_unit_square() {
    let g = GridSpec::new(4, 4, 1.0, 1.0).unwrap();
    let time = TimeSpec::new(1.0, 0.25).unwrap();
    let mut ex = FaceField::zeros(g);
    for v in ex.x_mut() {
        *v = 1.0;
    }
    let u = ControlField::new(vec![ex; 4], 0.25).unwrap();
    let traj = simulate(
        &FaceField::zeros(g),
        &ScalarField::zeros(g),
        u.steps(),
        &time,
        &PhysParams::default(),
    )
    .unwrap();
    let cost = CostSpec {
        alpha1: 0.0,
        alpha2: 0.0,
        alpha3: 2.0,
        phi_q: vec![ScalarField::zeros(g); 5],
        phi_omega: ScalarField::zeros(g),
    };
    let c = evaluate_cost(&traj, &u, &cost).unwrap();
    assert!((c.total - 1.0).abs() < 1e-14, "J = {}", c.total);
}

#[test]
fn cost_matches_naive_quadrature() {
    let (p, _) = small_spec([0.7, 1.3, 0.4]).realize().unwrap();
    let g = *p.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut u = ControlField::zeros(g, &p.time);
    for s in u.steps_mut() {
        for v in s.iter_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
        s.zero_boundary();
    }
    let traj = p.simulate(&u).unwrap();
    let c = evaluate_cost(&traj, &u, &p.cost).unwrap();

    // Independent double loops over cells and faces.
    let (hx, hy) = (g.lx / g.nx as f64, g.ly / g.ny as f64);
    let n = p.time.n_steps();
    let dt = p.time.dt();
    let mut track = 0.0;
    for k in 0..=n {
        let w = if k == 0 || k == n { 0.5 * dt } else { dt };
        for j in 0..g.ny {
            for i in 0..g.nx {
                let d = traj.states[k].phi.at(i, j) - p.cost.phi_q[k].at(i, j);
                track += w * d * d * hx * hy;
            }
        }
    }
    let mut term = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let d = traj.states[n].phi.at(i, j) - p.cost.phi_omega.at(i, j);
            term += d * d * hx * hy;
        }
    }
    let mut ctrl = 0.0;
    for s in u.steps() {
        for v in s.x().iter().chain(s.y()) {
            ctrl += dt * v * v * hx * hy;
        }
    }
    let expect = 0.5 * (0.7 * track + 1.3 * term + 0.4 * ctrl);
    assert!((c.total - expect).abs() <= 1e-12 * expect, "{} vs {}", c.total, expect);
}

#[test]
fn gradient_limits() {
    let (p, u) = small_spec([1.0, 1.0, 0.0]).realize().unwrap();
    let e = p.evaluate(&u).unwrap();
    for (g, a) in e.gradient.steps().iter().zip(e.adjoint.step_velocities()) {
        assert_eq!(g, a);
    }
    let (p, u) = small_spec([0.0, 0.0, 1.0]).realize().unwrap();
    let e = p.evaluate(&u).unwrap();
    assert_eq!(e.gradient, u);
    let g = reduced_gradient(&u, &e.adjoint, &p.cost).unwrap();
    assert_eq!(g, u);
}

#[test]
fn directional_derivative_forward_difference() {
    let (p, u) = default_spec().realize().unwrap();
    let e = p.evaluate(&u).unwrap();
    let h = nsch_core::control::smooth_direction(p.grid(), &p.time, 4);
    let eps = 1e-3;
    let mut up = u.clone();
    up.axpy(eps, &h);
    let (jp, _) = p.cost_of(&up).unwrap();
    let fd = (jp.total - e.cost.total) / eps;
    let ad = e.gradient.dot(&h);
    assert!((fd - ad).abs() <= 1e-2 * fd.abs(), "fd {fd:e} vs adjoint {ad:e}");
}

#[test]
fn stationary_start_returns_immediately() {
    let (p, _) = small_spec([0.0, 0.0, 1.0]).realize().unwrap();
    let zero = ControlField::zeros(*p.grid(), &p.time);
    let (u, rep) = optimize(&zero, &p, &OptimOptions::default()).unwrap();
    assert_eq!(rep.termination, Termination::Converged);
    assert_eq!(rep.iterations, 0);
    assert_eq!(rep.rows.len(), 1);
    assert_eq!(u, zero);
}

#[test]
fn pure_control_cost_converges_to_zero() {
    let (p, u0) = small_spec([0.0, 0.0, 0.5]).realize().unwrap();
    let (u, rep) = optimize(&u0, &p, &OptimOptions::default()).unwrap();
    assert_eq!(rep.termination, Termination::Converged);
    assert!(u.max_abs() < 1e-12);
    assert!(rep.final_cost() < 1e-20);
}

#[test]
fn interior_stationary_point_satisfies_projection_formula() {
    let (p, _) = small_spec([1.0, 1.0, 1e-3]).realize().unwrap();
    let zero = ControlField::zeros(*p.grid(), &p.time);
    let opts = OptimOptions {
        tol: 1e-12,
        rel_tol: 0.0,
        max_iter: 200,
        ..OptimOptions::default()
    };
    let mut inside = true;
    let (u, rep) = optimize_with(&zero, &p, &opts, |_, it| inside &= p.bounds.contains(it)).unwrap();
    assert!(inside);
    assert!(rep.is_monotone());
    assert_eq!(rep.termination, Termination::Converged, "{:?}", rep.rows.last());
    // Strictly interior: α₃ u + vᵃ = 0 up to the tolerance.
    assert!(u.max_abs() < 9.0);
    let e = p.evaluate(&u).unwrap();
    assert!(e.gradient.norm() <= 10.0 * opts.tol);
    // Projection formula ũ = P(−vᵃ/α₃).
    let va = ControlField::new(e.adjoint.step_velocities().cloned().collect(), u.dt()).unwrap();
    let mut diff = project_admissible(&va.scaled(-1.0 / p.cost.alpha3), &p.bounds);
    diff.axpy(-1.0, &u);
    assert!(diff.norm() * p.cost.alpha3 <= 10.0 * opts.tol);
}

#[test]
fn active_bounds_are_respected() {
    let mut spec = small_spec([1.0, 1.0, 1e-6]);
    spec.bounds = BoxBounds {
        x: (-0.05, 0.05),
        y: (-0.05, 0.05),
    };
    let (p, _) = spec.realize().unwrap();
    let zero = ControlField::zeros(*p.grid(), &p.time);
    let mut inside = true;
    let (u, rep) = optimize_with(&zero, &p, &OptimOptions::default(), |_, it| inside &= p.bounds.contains(it)).unwrap();
    assert!(inside);
    assert!(rep.is_monotone());
    assert!(rep.final_cost() < rep.initial_cost());
    assert!((u.max_abs() - 0.05).abs() < 1e-15, "bound should be active: {}", u.max_abs());
}

#[test]
fn optimizer_refuses_nonconstant_mobility() {
    let mut spec = small_spec([1.0, 1.0, 1e-3]);
    spec.params.mobility = Mobility::Tanh { m_star: 1.0, m_amp: 0.5 };
    let (p, u) = spec.realize().unwrap();
    let err = optimize(&u, &p, &OptimOptions::default()).unwrap_err();
    assert!(err.to_string().contains("constant mobility"));
}

#[test]
fn infeasible_start_is_rejected() {
    let mut spec = small_spec([1.0, 1.0, 1e-3]);
    spec.bounds = BoxBounds { x: (-0.1, 0.1), y: (-0.1, 0.1) };
    let (p, u) = spec.realize().unwrap();
    assert!(optimize(&u, &p, &OptimOptions::default()).is_err());
}

#[test]
fn stationarity_residual_examples() {
    let g = GridSpec::new(4, 4, 1.0, 1.0).unwrap();
    let b = ControlBounds::constant((-1.0, 1.0), (-1.0, 1.0)).unwrap();
    let u = ControlField::new(vec![FaceField::uniform_interior(g, 1.0, 0.0); 2], 0.5).unwrap();
    let zero = ControlField::new(vec![FaceField::zeros(g); 2], 0.5).unwrap();
    assert_eq!(stationarity_residual(&u, &zero, &b, 1.0), 0.0);
    // Gradient pushing against an active bound is stationary.
    let push = ControlField::new(vec![FaceField::uniform_interior(g, -3.0, 0.0); 2], 0.5).unwrap();
    assert_eq!(stationarity_residual(&u, &push, &b, 1.0), 0.0);
    let pull = push.scaled(-1.0);
    assert!(stationarity_residual(&u, &pull, &b, 1.0) > 0.0);
}

#[test]
fn projection_example_and_field_bounds() {
    let g = GridSpec::new(4, 4, 1.0, 1.0).unwrap();
    let b = ControlBounds::new(
        BoundField::Constant { x: -1.0, y: -1.0 },
        BoundField::Constant { x: 1.0, y: 1.0 },
    )
    .unwrap();
    let u = ControlField::new(vec![FaceField::uniform_interior(g, 1.5, -0.3)], 1.0).unwrap();
    let p = project_admissible(&u, &b);
    let f = &p.steps()[0];
    assert_eq!(f.x()[g.xface(2, 2)], 1.0);
    assert_eq!(f.y()[g.yface(2, 2)], -0.3);
    assert!(face_quadrature(f, f) > 0.0);
}
