//! Min-max Stackelberg games `min_x max_{y : g(x,y) >= 0} f(x,y)`.
//!
//! Constraints follow the convention `g_k(x, y) >= 0` means feasible.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::mirror::{FeasibleSet, Halfspace};

pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Profile {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Profile { x, y }
    }
}

/// Evaluation callbacks of a game. Implementations must be pure so a game can
/// be shared across threads.
pub trait StackelbergGame {
    fn outer_set(&self) -> &FeasibleSet;
    fn inner_set(&self) -> &FeasibleSet;
    fn num_constraints(&self) -> usize;

    fn objective(&self, x: &[f64], y: &[f64]) -> f64;
    fn grad_x_objective(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    fn grad_y_objective(&self, x: &[f64], y: &[f64]) -> Vec<f64>;

    fn constraints(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    /// One gradient per constraint.
    fn grad_x_constraints(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>>;
    fn grad_y_constraints(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>>;

    fn best_response(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Optimal KKT multipliers of the inner problem at `(x, y)`.
    fn kkt_multipliers(&self, _x: &[f64], _y: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn global_multiplier(&self) -> Option<Vec<f64>> {
        None
    }

    /// `{y : g(x, y) >= 0}` as halfspaces, when the constraints are affine in y.
    fn inner_halfspaces(&self, _x: &[f64]) -> Option<Vec<Halfspace>> {
        None
    }
}

fn check_profile<G: StackelbergGame + ?Sized>(game: &G, x: &[f64], y: &[f64]) -> Result<()> {
    check_dim("x", game.outer_set().dim(), x.len())?;
    check_dim("y", game.inner_set().dim(), y.len())
}

fn check_multipliers(k: usize, lambda: &[f64]) -> Result<()> {
    check_dim("multipliers", k, lambda.len())?;
    match lambda.iter().position(|l| !(*l >= 0.0)) {
        Some(index) => Err(Error::NegativeMultiplier {
            index,
            value: lambda[index],
        }),
        None => Ok(()),
    }
}

pub fn objective_eval<G: StackelbergGame + ?Sized>(game: &G, p: &Profile) -> Result<f64> {
    check_profile(game, &p.x, &p.y)?;
    Ok(game.objective(&p.x, &p.y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianEval {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

/// `L(x, y, lambda) = f(x, y) + sum_k lambda_k g_k(x, y)` with both partial
/// gradients.
pub fn lagrangian_eval<G: StackelbergGame + ?Sized>(game: &G, p: &Profile, lambda: &[f64]) -> Result<LagrangianEval> {
    check_profile(game, &p.x, &p.y)?;
    check_multipliers(game.num_constraints(), lambda)?;
    Ok(lagrangian_unchecked(game, &p.x, &p.y, lambda))
}

pub(crate) fn lagrangian_value<G: StackelbergGame + ?Sized>(game: &G, x: &[f64], y: &[f64], lambda: &[f64]) -> f64 {
    let g = game.constraints(x, y);
    game.objective(x, y) + lambda.iter().zip(&g).map(|(l, gk)| l * gk).sum::<f64>()
}

pub(crate) fn lagrangian_grad_x<G: StackelbergGame + ?Sized>(game: &G, x: &[f64], y: &[f64], lambda: &[f64]) -> Vec<f64> {
    let mut grad = game.grad_x_objective(x, y);
    for (l, gk) in lambda.iter().zip(game.grad_x_constraints(x, y)) {
        if *l != 0.0 {
            for (a, b) in grad.iter_mut().zip(gk) {
                *a += l * b;
            }
        }
    }
    grad
}

pub(crate) fn lagrangian_grad_y<G: StackelbergGame + ?Sized>(game: &G, x: &[f64], y: &[f64], lambda: &[f64]) -> Vec<f64> {
    let mut grad = game.grad_y_objective(x, y);
    for (l, gk) in lambda.iter().zip(game.grad_y_constraints(x, y)) {
        if *l != 0.0 {
            for (a, b) in grad.iter_mut().zip(gk) {
                *a += l * b;
            }
        }
    }
    grad
}

fn lagrangian_unchecked<G: StackelbergGame + ?Sized>(game: &G, x: &[f64], y: &[f64], lambda: &[f64]) -> LagrangianEval {
    LagrangianEval {
        value: lagrangian_value(game, x, y, lambda),
        grad_x: lagrangian_grad_x(game, x, y, lambda),
        grad_y: lagrangian_grad_y(game, x, y, lambda),
    }
}

pub fn best_response<G: StackelbergGame + ?Sized>(game: &G, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("x", game.outer_set().dim(), x.len())?;
    let y = game.best_response(x).ok_or(Error::MissingOracle("best-response"))?;
    check_dim("best response", game.inner_set().dim(), y.len())?;
    Ok(y)
}

/// `V(x) = max_{y in Y : g(x,y) >= 0} f(x, y)`
pub fn value_function<G: StackelbergGame + ?Sized>(game: &G, x: &[f64]) -> Result<f64> {
    let y = best_response(game, x)?;
    Ok(game.objective(x, &y))
}

pub fn kkt_multipliers<G: StackelbergGame + ?Sized>(game: &G, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_profile(game, x, y)?;
    let lambda = game.kkt_multipliers(x, y).ok_or(Error::MissingOracle("KKT multiplier"))?;
    check_multipliers(game.num_constraints(), &lambda)?;
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `V(x) - V*`, absent when no optimal value was supplied.
    pub outer_eps: Option<f64>,
    /// `V(x) - f(x, y)`
    pub inner_delta: f64,
}

fn clamp_small(v: f64, tol: f64) -> f64 {
    if v < 0.0 && v >= -tol {
        0.0
    } else {
        v
    }
}

/// The `(eps, delta)` of an approximate Stackelberg equilibrium.
pub fn stackelberg_residual<G: StackelbergGame + ?Sized>(game: &G, p: &Profile, v_star: Option<f64>) -> Result<Residuals> {
    let report = feasibility_check(game, p, FEASIBILITY_TOL)?;
    if !report.feasible {
        return Err(Error::InfeasibleProfile {
            violation: report.violation,
        });
    }
    let v = value_function(game, &p.x)?;
    Ok(Residuals {
        outer_eps: v_star.map(|vs| clamp_small(v - vs, FEASIBILITY_TOL)),
        inner_delta: clamp_small(v - game.objective(&p.x, &p.y), FEASIBILITY_TOL),
    })
}

/// `max_y L(x_bar, y, lambda*) - min_x L(x, y_bar, lambda*)`.
///
/// `inner_max` maps `x_bar` to the maximum over Y, `inner_min` maps `y_bar` to
/// the minimum over X.
pub fn saddle_residual<G, Fmax, Fmin>(
    game: &G,
    p: &Profile,
    lambda_star: &[f64],
    inner_max: Fmax,
    inner_min: Fmin,
) -> Result<f64>
where
    G: StackelbergGame + ?Sized,
    Fmax: Fn(&[f64]) -> Result<f64>,
    Fmin: Fn(&[f64]) -> Result<f64>,
{
    check_profile(game, &p.x, &p.y)?;
    check_multipliers(game.num_constraints(), lambda_star)?;
    let hi = inner_max(&p.x)?;
    let lo = inner_min(&p.y)?;
    Ok(clamp_small(hi - lo, FEASIBILITY_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Largest violation across constraints and set membership (0 if none).
    pub violation: f64,
    /// `min_k g_k(x, y)`, positive when every constraint is slack.
    pub slack: f64,
}

pub fn feasibility_check<G: StackelbergGame + ?Sized>(game: &G, p: &Profile, tol: f64) -> Result<FeasibilityReport> {
    check_profile(game, &p.x, &p.y)?;
    let g = game.constraints(&p.x, &p.y);
    let slack = g.iter().copied().fold(f64::INFINITY, f64::min);
    let violation = (-slack)
        .max(game.outer_set().violation(&p.x))
        .max(game.inner_set().violation(&p.y))
        .max(0.0);
    Ok(FeasibilityReport {
        feasible: violation <= tol,
        violation,
        slack,
    })
}

/// Minimum of `h` over a box of dimension at most 2 by dense grid search at
/// the given resolution. Returns `(argmin, min)`.
pub fn grid_minimize<F: Fn(&[f64]) -> f64>(set: &FeasibleSet, resolution: f64, h: F) -> Result<(Vec<f64>, f64)> {
    let (lower, upper) = match set {
        FeasibleSet::Box { lower, upper } => (lower, upper),
        _ => return Err(Error::InvalidParameter("grid search needs a box".into())),
    };
    if lower.len() > 2 || !(resolution > 0.0) {
        return Err(Error::InvalidParameter("grid search supports at most two dimensions".into()));
    }
    let axis = |k: usize| -> Vec<f64> {
        let n = libm::ceil((upper[k] - lower[k]) / resolution) as usize;
        (0..=n)
            .map(|i| (lower[k] + i as f64 * resolution).min(upper[k]))
            .collect()
    };
    let mut best = (alloc::vec![0.0; lower.len()], f64::INFINITY);
    let a0 = axis(0);
    if lower.len() == 1 {
        for &u in &a0 {
            let v = h(&[u]);
            if v < best.1 {
                best = (alloc::vec![u], v);
            }
        }
    } else {
        let a1 = axis(1);
        let mut point = [0.0; 2];
        for &u in &a0 {
            point[0] = u;
            for &w in &a1 {
                point[1] = w;
                let v = h(&point);
                if v < best.1 {
                    best = (point.to_vec(), v);
                }
            }
        }
    }
    Ok(best)
}
