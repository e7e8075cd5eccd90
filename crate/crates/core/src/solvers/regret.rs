use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{self, lagrangian_value, StackelbergGame};

use super::IterateTrace;

/// A sequence of convex losses indexed by round `t >= 1`.
pub trait OnlineLoss {
    fn loss(&self, t: usize, x: &[f64]) -> f64;
    fn grad(&self, t: usize, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegretKind {
    Vanilla,
    Asymmetric,
    LagrangianX,
    LagrangianY,
    /// Plain online learning against a loss sequence.
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Outer,
    Inner,
}

/// Cumulative regret against the best fixed strategy in hindsight. Losses are
/// stored with the minimizing sign, so an inner (maximizing) player books
/// `-L` and the comparator total is a minimum in every case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretLedger {
    pub kind: RegretKind,
    pub realized: f64,
    pub comparator: f64,
    pub rounds: usize,
}

impl RegretLedger {
    /// `(1/T)(realized - comparator)`
    pub fn average(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            (self.realized - self.comparator) / self.rounds as f64
        }
    }
}

fn require_full(trace: &IterateTrace) -> Result<()> {
    if trace.is_thinned() {
        Err(Error::InvalidParameter("regret needs an unthinned trace".into()))
    } else {
        Ok(())
    }
}

/// `(1/T) sum_t V(x_t) - min_x (1/T) sum_t V(x)`.
///
/// `comparator` returns the minimizer of the average value function.
pub fn asymmetric_regret<G, C>(trace: &IterateTrace, game: &G, comparator: C) -> Result<RegretLedger>
where
    G: StackelbergGame + ?Sized,
    C: FnOnce(&IterateTrace) -> Result<Vec<f64>>,
{
    require_full(trace)?;
    let mut realized = 0.0;
    for r in trace.records() {
        realized += game::value_function(game, &r.x)?;
    }
    let best = comparator(trace)?;
    let n = trace.records().len();
    Ok(RegretLedger {
        kind: RegretKind::Asymmetric,
        realized,
        comparator: n as f64 * game::value_function(game, &best)?,
        rounds: n,
    })
}

fn payoff_regret<G, C, F>(trace: &IterateTrace, game: &G, side: Side, comparator: C, kind: RegretKind, payoff: F) -> Result<RegretLedger>
where
    G: StackelbergGame + ?Sized,
    C: FnOnce(&IterateTrace) -> Result<Vec<f64>>,
    F: Fn(&[f64], &[f64]) -> f64,
{
    require_full(trace)?;
    let best = comparator(trace)?;
    let records = trace.records();
    let (mut realized, mut fixed) = (0.0, 0.0);
    match side {
        Side::Outer => {
            crate::error::check_dim("comparator", game.outer_set().dim(), best.len())?;
            for r in records {
                realized += payoff(&r.x, &r.y);
                fixed += payoff(&best, &r.y);
            }
        }
        Side::Inner => {
            crate::error::check_dim("comparator", game.inner_set().dim(), best.len())?;
            for r in records {
                realized -= payoff(&r.x, &r.y);
                fixed -= payoff(&r.x, &best);
            }
        }
    }
    Ok(RegretLedger {
        kind,
        realized,
        comparator: fixed,
        rounds: records.len(),
    })
}

/// Lagrangian regret of one player with `lambda*` plugged in. For the outer
/// player `(1/T) sum L(x_t, y_t) - min_x (1/T) sum L(x, y_t)`; for the inner
/// player `max_y (1/T) sum L(x_t, y) - (1/T) sum L(x_t, y_t)`.
///
/// `comparator` returns the best fixed strategy of the chosen side.
pub fn lagrangian_regret<G, C>(trace: &IterateTrace, game: &G, lambda_star: &[f64], side: Side, comparator: C) -> Result<RegretLedger>
where
    G: StackelbergGame + ?Sized,
    C: FnOnce(&IterateTrace) -> Result<Vec<f64>>,
{
    crate::error::check_dim("multipliers", game.num_constraints(), lambda_star.len())?;
    let kind = match side {
        Side::Outer => RegretKind::LagrangianX,
        Side::Inner => RegretKind::LagrangianY,
    };
    payoff_regret(trace, game, side, comparator, kind, |x, y| lagrangian_value(game, x, y, lambda_star))
}

/// Regret with respect to `f` alone, ignoring the coupling constraint.
pub fn vanilla_regret<G, C>(trace: &IterateTrace, game: &G, side: Side, comparator: C) -> Result<RegretLedger>
where
    G: StackelbergGame + ?Sized,
    C: FnOnce(&IterateTrace) -> Result<Vec<f64>>,
{
    payoff_regret(trace, game, side, comparator, RegretKind::Vanilla, |x, y| game.objective(x, y))
}
