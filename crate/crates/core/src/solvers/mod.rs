//! Learning dynamics for min-max Stackelberg games.

mod regret;
mod trace;

pub use regret::{
    asymmetric_regret, lagrangian_regret, vanilla_regret, OnlineLoss, RegretKind, RegretLedger, Side,
};
pub use trace::{average_iterate, IterateTrace, Record, FULL_TRACE_STEPS};

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::game::{self, lagrangian_grad_x, lagrangian_grad_y, lagrangian_value, Profile, StackelbergGame};
use crate::mirror::{alternating_project_onto, mirror_step, FeasibleSet, Regularizer, StepSchedule};
use crate::mirror::{ALT_PROJ_MAX_ITER, ALT_PROJ_TOL};
use crate::vec::all_finite;

/// Steps inspected by the degeneracy detector of [`lmda`].
pub const DEGENERACY_WINDOW: usize = 100;
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub profile: Profile,
    pub trace: IterateTrace,
}

fn check_start(set: &FeasibleSet, p: &[f64], what: &'static str) -> Result<()> {
    check_dim(what, set.dim(), p.len())?;
    let v = set.violation(p);
    if v > game::FEASIBILITY_TOL {
        return Err(Error::InfeasibleProfile { violation: v });
    }
    Ok(())
}

fn finite(step: usize, v: &[f64]) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

/// Max-oracle mirror descent: the inner player best-responds exactly and the
/// outer player runs mirror descent on the value function through the
/// Lagrangian gradient. Returns `(x_bar_T, BR(x_bar_T))`.
pub fn max_oracle_md<G: StackelbergGame + ?Sized>(
    game: &G,
    reg: Regularizer,
    sched: StepSchedule,
    steps: usize,
    x0: &[f64],
) -> Result<SolverOutcome> {
    sched.validate()?;
    check_start(game.outer_set(), x0, "x0")?;
    let mut trace = IterateTrace::new(x0.len(), game.inner_set().dim());
    let mut x = x0.to_vec();
    let mut y = game::best_response(game, &x)?;
    let mut lambda = game::kkt_multipliers(game, &x, &y)?;
    for t in 1..=steps {
        let grad = lagrangian_grad_x(game, &x, &y, &lambda);
        let eta = sched.eta(t);
        x = mirror_step(reg, game.outer_set(), &x, &grad, eta)?;
        finite(t, &x)?;
        y = game::best_response(game, &x)?;
        lambda = game::kkt_multipliers(game, &x, &y)?;
        trace.push(
            x.clone(),
            y.clone(),
            game.objective(&x, &y),
            lagrangian_value(game, &x, &y, &lambda),
            eta,
        );
    }
    let x_bar = trace.average().map_or_else(|| x0.to_vec(), |p| p.x);
    let y_bar = game::best_response(game, &x_bar)?;
    Ok(SolverOutcome {
        profile: Profile::new(x_bar, y_bar),
        trace,
    })
}

struct InnerAscent<'a> {
    reg: Regularizer,
    sched: StepSchedule,
    steps: usize,
    set: &'a FeasibleSet,
}

impl InnerAscent<'_> {
    fn run<G: StackelbergGame + ?Sized>(&self, game: &G, x: &[f64], mut y: Vec<f64>) -> Result<Vec<f64>> {
        let halfspaces = game.inner_halfspaces(x);
        for k in 1..=self.steps {
            let ascent: Vec<f64> = game.grad_y_objective(x, &y).iter().map(|g| -g).collect();
            y = mirror_step(self.reg, self.set, &y, &ascent, self.sched.eta(k))?;
            if let Some(hs) = &halfspaces {
                y = alternating_project_onto(Some(self.set), hs, &y, ALT_PROJ_MAX_ITER, ALT_PROJ_TOL)?;
            }
        }
        Ok(y)
    }
}

/// Nested mirror descent ascent: max-oracle MD where the best response is
/// replaced by `inner_steps` warm-started mirror-ascent steps on `f(x, .)`
/// over `{y in Y : g(x, y) >= 0}`.
///
/// With `inner_steps = 0` the inner player never moves from `y0`. The inner
/// feasible set is only enforced when the game exposes it as halfspaces.
#[allow(clippy::too_many_arguments)]
pub fn nested_mda<G: StackelbergGame + ?Sized>(
    game: &G,
    reg_x: Regularizer,
    reg_y: Regularizer,
    sched_x: StepSchedule,
    sched_y: StepSchedule,
    steps: usize,
    inner_steps: usize,
    x0: &[f64],
    y0: &[f64],
) -> Result<SolverOutcome> {
    sched_x.validate()?;
    sched_y.validate()?;
    check_start(game.outer_set(), x0, "x0")?;
    check_start(game.inner_set(), y0, "y0")?;
    let inner = InnerAscent {
        reg: reg_y,
        sched: sched_y,
        steps: inner_steps,
        set: game.inner_set(),
    };
    let mut trace = IterateTrace::new(x0.len(), y0.len());
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    for t in 1..=steps {
        y = inner.run(game, &x, y)?;
        finite(t, &y)?;
        let gap = game.best_response(&x).map_or(f64::NAN, |br| game.objective(&x, &br) - game.objective(&x, &y));
        let lambda = game::kkt_multipliers(game, &x, &y)?;
        let grad = lagrangian_grad_x(game, &x, &y, &lambda);
        let eta = sched_x.eta(t);
        x = mirror_step(reg_x, game.outer_set(), &x, &grad, eta)?;
        finite(t, &x)?;
        trace.inner_residuals.push(gap);
        trace.push(
            x.clone(),
            y.clone(),
            game.objective(&x, &y),
            lagrangian_value(game, &x, &y, &lambda),
            eta,
        );
    }
    let x_bar = trace.average().map_or_else(|| x0.to_vec(), |p| p.x);
    let y_hat = inner.run(game, &x_bar, y)?;
    Ok(SolverOutcome {
        profile: Profile::new(x_bar, y_hat),
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct LmdaOutcome {
    pub trace: IterateTrace,
    /// `|grad_y L| <= 1e-12` for every one of the first 100 steps.
    pub degenerate: bool,
}

impl LmdaOutcome {
    pub fn average(&self) -> Option<Profile> {
        self.trace.average()
    }
}

#[allow(clippy::too_many_arguments)]
fn simultaneous<G: StackelbergGame + ?Sized>(
    game: &G,
    lambda: &[f64],
    reg: Regularizer,
    sched_x: StepSchedule,
    sched_y: StepSchedule,
    steps: usize,
    x0: &[f64],
    y0: &[f64],
) -> Result<LmdaOutcome> {
    sched_x.validate()?;
    sched_y.validate()?;
    check_start(game.outer_set(), x0, "x0")?;
    check_start(game.inner_set(), y0, "y0")?;
    let mut trace = IterateTrace::new(x0.len(), y0.len());
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut flat = true;
    for t in 1..=steps {
        let gx = lagrangian_grad_x(game, &x, &y, lambda);
        let gy = lagrangian_grad_y(game, &x, &y, lambda);
        if t <= DEGENERACY_WINDOW {
            flat &= crate::vec::norm(&gy) <= DEGENERACY_TOL;
        }
        let ascent: Vec<f64> = gy.iter().map(|g| -g).collect();
        let eta_x = sched_x.eta(t);
        let x_next = mirror_step(reg, game.outer_set(), &x, &gx, eta_x)?;
        let y_next = mirror_step(reg, game.inner_set(), &y, &ascent, sched_y.eta(t))?;
        x = x_next;
        y = y_next;
        finite(t, &x)?;
        finite(t, &y)?;
        trace.push(
            x.clone(),
            y.clone(),
            game.objective(&x, &y),
            lagrangian_value(game, &x, &y, lambda),
            eta_x,
        );
    }
    Ok(LmdaOutcome {
        trace,
        degenerate: steps > 0 && flat,
    })
}

/// Lagrangian mirror descent ascent: both players take simultaneous mirror
/// steps on `L(., ., lambda*)`, each anchored at its previous iterate.
#[allow(clippy::too_many_arguments)]
pub fn lmda<G: StackelbergGame + ?Sized>(
    game: &G,
    lambda_star: &[f64],
    reg: Regularizer,
    sched_x: StepSchedule,
    sched_y: StepSchedule,
    steps: usize,
    x0: &[f64],
    y0: &[f64],
) -> Result<LmdaOutcome> {
    check_dim("multipliers", game.num_constraints(), lambda_star.len())?;
    if let Some(index) = lambda_star.iter().position(|l| !(*l >= 0.0)) {
        return Err(Error::NegativeMultiplier {
            index,
            value: lambda_star[index],
        });
    }
    simultaneous(game, lambda_star, reg, sched_x, sched_y, steps, x0, y0)
}

/// Both players run mirror descent/ascent on `f` alone, ignoring the coupling
/// constraint. This is the dynamic that minimizes vanilla regret.
pub fn vanilla_gda<G: StackelbergGame + ?Sized>(
    game: &G,
    reg: Regularizer,
    sched_x: StepSchedule,
    sched_y: StepSchedule,
    steps: usize,
    x0: &[f64],
    y0: &[f64],
) -> Result<LmdaOutcome> {
    let zero = alloc::vec![0.0; game.num_constraints()];
    simultaneous(game, &zero, reg, sched_x, sched_y, steps, x0, y0)
}

/// Projects the average inner iterate onto `{y in Y : g(x_bar, y) >= 0}` to
/// obtain a feasible profile. The raw trace is left untouched.
pub fn feasible_certificate<G: StackelbergGame + ?Sized>(game: &G, average: &Profile) -> Result<Profile> {
    let hs = game
        .inner_halfspaces(&average.x)
        .ok_or(Error::MissingOracle("inner feasible set"))?;
    let y = alternating_project_onto(Some(game.inner_set()), &hs, &average.y, ALT_PROJ_MAX_ITER, ALT_PROJ_TOL)?;
    Ok(Profile::new(average.x.clone(), y))
}

#[derive(Debug, Clone)]
pub struct OnlineRun {
    /// Record `t` holds the point played in round `t` and its loss.
    pub trace: IterateTrace,
    /// The point prepared for round `T + 1`.
    pub next: Vec<f64>,
}

/// Online mirror descent: `x_1 = x0`, `x_{t+1} = argmin <grad l_t(x_t), x> + (1/eta_t) B(x || x_t)`.
pub fn online_mirror_descent<L: OnlineLoss + ?Sized>(
    losses: &L,
    reg: Regularizer,
    set: &FeasibleSet,
    sched: StepSchedule,
    rounds: usize,
    x0: &[f64],
) -> Result<OnlineRun> {
    sched.validate()?;
    check_start(set, x0, "x0")?;
    let mut trace = IterateTrace::new(x0.len(), 0);
    let mut x = x0.to_vec();
    for t in 1..=rounds {
        let eta = sched.eta(t);
        let loss = losses.loss(t, &x);
        let grad = losses.grad(t, &x);
        let next = mirror_step(reg, set, &x, &grad, eta)?;
        finite(t, &next)?;
        trace.push(core::mem::replace(&mut x, next), Vec::new(), loss, loss, eta);
    }
    Ok(OnlineRun { trace, next: x })
}

/// Projected online gradient descent, the euclidean case of
/// [`online_mirror_descent`].
pub fn projected_ogd_online<L: OnlineLoss + ?Sized>(
    losses: &L,
    set: &FeasibleSet,
    sched: StepSchedule,
    rounds: usize,
    x0: &[f64],
) -> Result<OnlineRun> {
    online_mirror_descent(losses, Regularizer::Euclidean, set, sched, rounds, x0)
}
