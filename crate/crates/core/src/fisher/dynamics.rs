use alloc::format;
use alloc::vec::Vec;

use super::{
    allocation_gradient, distance_to_ce, floored, market_demand, price_gradient, solve_ce, FisherMarket,
    MarketOutcome, UtilityKind,
};
use crate::error::{check_dim, Error, Result};
use crate::mirror::{alternating_project, Halfspace, StepSchedule, ALT_PROJ_MAX_ITER, ALT_PROJ_TOL};
use crate::rng::Stream;

/// The market faced at each step `t >= 1`.
pub trait MarketSequence {
    fn buyers(&self) -> usize;
    fn goods(&self) -> usize;
    fn market(&self, t: usize) -> Result<FisherMarket>;

    /// True when every step faces the same market.
    fn is_static(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct StaticMarket(pub FisherMarket);

impl MarketSequence for StaticMarket {
    fn buyers(&self) -> usize {
        self.0.buyers()
    }

    fn goods(&self) -> usize {
        self.0.goods()
    }

    fn market(&self, _t: usize) -> Result<FisherMarket> {
        Ok(self.0.clone())
    }

    fn is_static(&self) -> bool {
        true
    }
}

/// Uniform sampling ranges `[lo, hi]` for market parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketRanges {
    pub budget: (f64, f64),
    pub valuation: (f64, f64),
    pub supply: (f64, f64),
}

impl MarketRanges {
    /// Ranges used with tâtonnement: b ~ U[10,20], v ~ U[5,15], s ~ U[100,110].
    pub const TATONNEMENT: MarketRanges = MarketRanges {
        budget: (10.0, 20.0),
        valuation: (5.0, 15.0),
        supply: (100.0, 110.0),
    };

    /// Ranges used with myopic best response: b ~ U[10,15], v ~ U[10,20], s ~ U[10,15].
    pub const MYOPIC: MarketRanges = MarketRanges {
        budget: (10.0, 15.0),
        valuation: (10.0, 20.0),
        supply: (10.0, 15.0),
    };

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("budget", self.budget), ("valuation", self.valuation), ("supply", self.supply)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} range [{lo}, {hi}] must satisfy 0 < lo <= hi")));
            }
        }
        Ok(())
    }
}

/// Market `t` of the online sequence identified by `seed`. Budgets are drawn
/// first, then valuations row by row, then supplies, all from the stream
/// `(seed, t)`.
pub fn sample_online_market(
    ranges: &MarketRanges,
    kind: UtilityKind,
    buyers: usize,
    goods: usize,
    seed: u64,
    t: usize,
) -> Result<FisherMarket> {
    ranges.validate()?;
    let mut rng = Stream::derive(seed, t as u64);
    let budgets: Vec<f64> = (0..buyers).map(|_| rng.uniform(ranges.budget.0, ranges.budget.1)).collect();
    let valuations: Vec<Vec<f64>> = (0..buyers)
        .map(|_| (0..goods).map(|_| rng.uniform(ranges.valuation.0, ranges.valuation.1)).collect())
        .collect();
    let supplies: Vec<f64> = (0..goods).map(|_| rng.uniform(ranges.supply.0, ranges.supply.1)).collect();
    FisherMarket::new(kind, valuations, budgets, supplies)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineFisherSequence {
    pub kind: UtilityKind,
    pub buyers: usize,
    pub goods: usize,
    pub ranges: MarketRanges,
    pub seed: u64,
}

impl OnlineFisherSequence {
    /// Initial prices drawn uniformly from `range`, independent of every
    /// market in the sequence.
    pub fn initial_prices(&self, range: (f64, f64)) -> Vec<f64> {
        let mut rng = Stream::derive(self.seed, u64::MAX);
        (0..self.goods).map(|_| rng.uniform(range.0, range.1)).collect()
    }
}

impl MarketSequence for OnlineFisherSequence {
    fn buyers(&self) -> usize {
        self.buyers
    }

    fn goods(&self) -> usize {
        self.goods
    }

    fn market(&self, t: usize) -> Result<FisherMarket> {
        sample_online_market(&self.ranges, self.kind, self.buyers, self.goods, self.seed, t)
    }
}

/// Outcomes of a dynamic; entry `t - 1` holds `(p_t, X_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherTrace {
    pub steps: Vec<MarketOutcome>,
}

fn check_prices(goods: usize, p0: &[f64]) -> Result<()> {
    check_dim("initial prices", goods, p0.len())?;
    match p0.iter().position(|p| !(*p >= 0.0 && p.is_finite())) {
        Some(k) => Err(Error::InvalidParameter(format!("initial price {k} must be nonnegative"))),
        None => Ok(()),
    }
}

fn wrap(step: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { .. } => Error::NonFinite { step },
        Error::ZeroUtility { buyer } => Error::Domain(format!("buyer {buyer} has zero utility at step {step}")),
        other => Error::Domain(format!("step {step}: {other}")),
    }
}

/// Tâtonnement: buyers demand at the previous prices and prices move against
/// excess supply, `p_t = max(0, p_{t-1} - eta_t (s_t - sum_i x_i,t))`.
/// Demand is evaluated at prices floored at [`super::PRICE_FLOOR`].
pub fn tatonnement<S: MarketSequence + ?Sized>(seq: &S, sched: StepSchedule, p0: &[f64], steps: usize) -> Result<FisherTrace> {
    sched.validate()?;
    check_prices(seq.goods(), p0)?;
    let mut p = p0.to_vec();
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        let market = seq.market(t)?;
        let x = market_demand(&market, &floored(&p)).map_err(|e| wrap(t, e))?;
        let g = price_gradient(&market, &x)?;
        let eta = sched.eta(t);
        p = p.iter().zip(&g).map(|(pj, gj)| (pj - eta * gj).max(0.0)).collect();
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: t });
        }
        out.push(MarketOutcome {
            prices: p.clone(),
            allocation: x,
        });
    }
    Ok(FisherTrace { steps: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MyopicOptions {
    /// Also project each bundle onto the budget set `{x >= 0 : p'x <= b}` at
    /// the new prices.
    pub budget_projection: bool,
}

/// Every buyer gets an equal share of the supply: `x_ij = s_j / n`.
pub fn equal_split(market: &FisherMarket) -> Vec<Vec<f64>> {
    let n = market.buyers() as f64;
    (0..market.buyers())
        .map(|_| market.supplies().iter().map(|s| s / n).collect())
        .collect()
}

/// Myopic best-response dynamics: a simultaneous projected gradient step for
/// the seller on the prices and for every buyer on its bundle, both using
/// market `t` and the previous state.
pub fn myopic_br<S: MarketSequence + ?Sized>(
    seq: &S,
    sched_p: StepSchedule,
    sched_x: StepSchedule,
    p0: &[f64],
    x0: &[Vec<f64>],
    steps: usize,
    options: MyopicOptions,
) -> Result<FisherTrace> {
    sched_p.validate()?;
    sched_x.validate()?;
    check_prices(seq.goods(), p0)?;
    check_dim("initial allocation rows", seq.buyers(), x0.len())?;
    for row in x0 {
        check_dim("initial allocation row", seq.goods(), row.len())?;
        if row.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("initial allocation must be nonnegative".into()));
        }
    }
    let mut p = p0.to_vec();
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        let market = seq.market(t)?;
        let gp = price_gradient(&market, &x)?;
        let gx = allocation_gradient(&market, &p, &x).map_err(|e| wrap(t, e))?;
        let (eta_p, eta_x) = (sched_p.eta(t), sched_x.eta(t));
        let p_next: Vec<f64> = p.iter().zip(&gp).map(|(pj, g)| (pj - eta_p * g).max(0.0)).collect();
        let mut x_next: Vec<Vec<f64>> = x
            .iter()
            .zip(&gx)
            .map(|(row, g)| row.iter().zip(g).map(|(a, d)| (a + eta_x * d).max(0.0)).collect())
            .collect();
        if options.budget_projection {
            for (i, row) in x_next.iter_mut().enumerate() {
                let budget = [Halfspace::new(p_next.clone(), market.budgets()[i])];
                *row = alternating_project(&budget, true, row, ALT_PROJ_MAX_ITER, ALT_PROJ_TOL).map_err(|e| wrap(t, e))?;
                for v in row.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        if !p_next.iter().chain(x_next.iter().flatten()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: t });
        }
        p = p_next;
        x = x_next;
        out.push(MarketOutcome {
            prices: p.clone(),
            allocation: x.clone(),
        });
    }
    Ok(FisherTrace { steps: out })
}

/// Distance of every step of `trace` to the equilibrium of the market faced
/// at that step.
pub fn distance_trace<S: MarketSequence + ?Sized>(seq: &S, trace: &FisherTrace, tol: f64) -> Result<Vec<f64>> {
    let mut cached: Option<MarketOutcome> = None;
    let is_static = seq.is_static();
    trace
        .steps
        .iter()
        .enumerate()
        .map(|(k, outcome)| {
            let t = k + 1;
            let eq = match (&cached, is_static) {
                (Some(eq), true) => eq.clone(),
                _ => {
                    let eq = solve_ce(&seq.market(t)?, tol).map_err(|e| wrap(t, e))?;
                    cached = Some(eq.clone());
                    eq
                }
            };
            Ok(distance_to_ce(outcome, &eq)?.value)
        })
        .collect()
}
