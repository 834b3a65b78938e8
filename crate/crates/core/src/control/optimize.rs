use crate::adjoint::require_constant_mobility;
use crate::error::{Error, Result};

use super::{project_admissible, stationarity_residual, ControlField, CostBreakdown, Problem};

/// Projected-gradient settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    /// Absolute stop on the stationarity residual.
    pub tol: f64,
    /// Stop once the residual falls below `rel_tol · ‖g₀‖`.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub max_halvings: usize,
    /// `None` uses `1/α₃`, or 1 when `α₃ = 0`.
    pub initial_step: Option<f64>,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            rel_tol: 1e-3,
            max_iter: 50,
            c1: 1e-4,
            backtrack: 0.5,
            max_halvings: 30,
            initial_step: None,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol >= 0.0
            && self.rel_tol >= 0.0
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.initial_step.map_or(true, |s| s > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// One line of the optimization log. Rejected trials carry NaN gradient
/// and stationarity columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimRow {
    pub iter: usize,
    pub cost: CostBreakdown,
    pub grad_norm: f64,
    pub stationarity: f64,
    pub step: f64,
    pub accepted: bool,
}

impl OptimRow {
    pub const CSV_HEADER: [&'static str; 9] = [
        "iter",
        "J",
        "J_track",
        "J_terminal",
        "J_control",
        "grad_norm",
        "stationarity",
        "step",
        "accepted",
    ];

    pub fn csv_row(&self) -> [String; 9] {
        let f = |x: f64| format!("{x:.17e}");
        [
            self.iter.to_string(),
            f(self.cost.total),
            f(self.cost.tracking),
            f(self.cost.terminal),
            f(self.cost.control),
            f(self.grad_norm),
            f(self.stationarity),
            f(self.step),
            u8::from(self.accepted).to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed { iteration: usize, halvings: usize, step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimReport {
    pub rows: Vec<OptimRow>,
    pub termination: Termination,
    pub initial_grad_norm: f64,
    pub final_stationarity: f64,
    pub iterations: usize,
}

impl OptimReport {
    pub fn accepted(&self) -> impl Iterator<Item = &OptimRow> {
        self.rows.iter().filter(|r| r.accepted)
    }

    pub fn initial_cost(&self) -> f64 {
        self.rows[0].cost.total
    }

    pub fn final_cost(&self) -> f64 {
        self.accepted().last().expect("initial row is accepted").cost.total
    }

    /// Accepted costs never increase.
    pub fn is_monotone(&self) -> bool {
        let j: Vec<f64> = self.accepted().map(|r| r.cost.total).collect();
        j.windows(2).all(|w| w[1] <= w[0])
    }

    /// Error for a failed line search, if any.
    pub fn failure(&self) -> Option<Error> {
        match self.termination {
            Termination::LineSearchFailed { iteration, halvings, step } => Some(Error::LineSearch {
                iteration,
                halvings,
                step,
            }),
            _ => None,
        }
    }
}

/// Projected gradient descent with Armijo backtracking.
///
/// The trial `u(s) = P(uₖ − s gₖ)` is accepted when
/// `J(u(s)) ≤ J(uₖ) − c₁/s · ‖u(s) − uₖ‖²`, which reduces to the
/// `c₁ s ‖gₖ‖²` test whenever no bound is active.
pub fn optimize(u0: &ControlField, problem: &Problem, opts: &OptimOptions) -> Result<(ControlField, OptimReport)> {
    optimize_with(u0, problem, opts, |_, _| {})
}

/// [`optimize`] with a callback on every accepted iterate, including `u0`.
pub fn optimize_with(
    u0: &ControlField,
    problem: &Problem,
    opts: &OptimOptions,
    mut observe: impl FnMut(usize, &ControlField),
) -> Result<(ControlField, OptimReport)> {
    require_constant_mobility(&problem.params)?;
    opts.validate()?;
    if !problem.bounds.contains(u0) {
        return Err(Error::InvalidParams("initial control lies outside the admissible set".into()));
    }
    let s0 = opts.initial_step.unwrap_or(if problem.cost.alpha3 > 0.0 {
        1.0 / problem.cost.alpha3
    } else {
        1.0
    });
    let mut u = u0.clone();
    observe(0, &u);
    let mut eval = problem.evaluate(&u)?;
    let g0 = eval.gradient.norm();
    let stop = opts.tol.max(opts.rel_tol * g0);
    let mut res = stationarity_residual(&u, &eval.gradient, &problem.bounds, 1.0);
    let mut rows = vec![OptimRow {
        iter: 0,
        cost: eval.cost,
        grad_norm: g0,
        stationarity: res,
        step: 0.0,
        accepted: true,
    }];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    for k in 1..=opts.max_iter {
        if res <= stop {
            termination = Termination::Converged;
            break;
        }
        let mut step = s0;
        let mut accepted = None;
        for halving in 0..=opts.max_halvings {
            let mut trial = u.clone();
            trial.axpy(-step, &eval.gradient);
            let trial = project_admissible(&trial, &problem.bounds);
            let mut diff = trial.clone();
            diff.axpy(-1.0, &u);
            let decrease = opts.c1 / step * diff.dot(&diff);
            // Blow-up at a long step is a failed trial, not a failed run.
            let cost = match problem.cost_of(&trial) {
                Ok((c, _)) => Some(c),
                Err(Error::BlowUp { .. }) => None,
                Err(e) => return Err(e),
            };
            let ok = cost.map_or(false, |c| c.total <= eval.cost.total - decrease);
            if ok {
                accepted = Some(trial);
                break;
            }
            rows.push(OptimRow {
                iter: k,
                cost: cost.unwrap_or(CostBreakdown {
                    total: f64::INFINITY,
                    tracking: f64::NAN,
                    terminal: f64::NAN,
                    control: f64::NAN,
                }),
                grad_norm: f64::NAN,
                stationarity: f64::NAN,
                step,
                accepted: false,
            });
            if halving == opts.max_halvings {
                break;
            }
            step *= opts.backtrack;
        }
        let Some(next) = accepted else {
            termination = Termination::LineSearchFailed {
                iteration: k,
                halvings: opts.max_halvings,
                step,
            };
            break;
        };
        u = next;
        observe(k, &u);
        eval = problem.evaluate(&u)?;
        res = stationarity_residual(&u, &eval.gradient, &problem.bounds, 1.0);
        iterations = k;
        rows.push(OptimRow {
            iter: k,
            cost: eval.cost,
            grad_norm: eval.gradient.norm(),
            stationarity: res,
            step,
            accepted: true,
        });
    }
    if termination == Termination::MaxIterations && res <= stop {
        termination = Termination::Converged;
    }
    Ok((
        u,
        OptimReport {
            rows,
            termination,
            initial_grad_norm: g0,
            final_stationarity: res,
            iterations,
        },
    ))
}
