use alloc::vec::Vec;

use super::{demand, floored, ipm, market_demand, utility_eval, FisherMarket, MarketOutcome, UtilityKind};
use crate::error::{check_dim, Error, Result};

/// Leontief goods whose unsold supply exceeds this fraction of the supply get
/// a price of exactly zero.
const LEFTOVER_ZERO_PRICE: f64 = 1e-7;

/// Competitive equilibrium of a market, certified by [`ce_check`] at `tol`.
///
/// Cobb-Douglas markets use the closed form `p_j = sum_i b_i v_ij / s_j`.
/// Linear and Leontief markets are solved through the dual of the
/// Eisenberg-Gale program with an interior point method.
pub fn solve_ce(market: &FisherMarket, tol: f64) -> Result<MarketOutcome> {
    let outcome = match market.kind() {
        UtilityKind::CobbDouglas => {
            let prices: Vec<f64> = (0..market.goods())
                .map(|j| {
                    let spent: f64 = (0..market.buyers())
                        .map(|i| market.budgets()[i] * market.valuations()[i][j])
                        .sum();
                    spent / market.supplies()[j]
                })
                .collect();
            let allocation = market_demand(market, &prices)?;
            MarketOutcome { prices, allocation }
        }
        _ => {
            let sol = ipm::solve(market)?;
            let mut prices = sol.prices;
            if let Some(leftover) = sol.leftover {
                for ((p, w), s) in prices.iter_mut().zip(&leftover).zip(market.supplies()) {
                    if *w > LEFTOVER_ZERO_PRICE * s {
                        *p = 0.0;
                    }
                }
            }
            MarketOutcome {
                prices,
                allocation: sol.allocation,
            }
        }
    };
    let report = ce_check(market, &outcome, tol)?;
    if report.passed {
        Ok(outcome)
    } else {
        Err(Error::NonConvergence {
            iterations: 0,
            residual: report.worst(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeReport {
    /// `max_j |sum_i x_ij - s_j|` over priced goods, excess demand only for
    /// free goods.
    pub clearing_residual: f64,
    /// `u_i(demand_i(p)) - u_i(x_i)` per buyer.
    pub optimality_gaps: Vec<f64>,
    /// `max(0, p'x_i - b_i)` per buyer.
    pub budget_violations: Vec<f64>,
    pub passed: bool,
}

impl CeReport {
    pub fn worst(&self) -> f64 {
        let gaps = self.optimality_gaps.iter().fold(0.0f64, |a, b| a.max(*b));
        let budget = self.budget_violations.iter().fold(0.0f64, |a, b| a.max(*b));
        self.clearing_residual.max(gaps).max(budget)
    }
}

/// Checks the equilibrium conditions. Clearing and budgets are compared to
/// `tol` absolutely; optimality gaps relative to `1 + u_i(demand_i(p))`.
pub fn ce_check(market: &FisherMarket, outcome: &MarketOutcome, tol: f64) -> Result<CeReport> {
    check_dim("prices", market.goods(), outcome.prices.len())?;
    check_dim("allocation rows", market.buyers(), outcome.allocation.len())?;
    for row in &outcome.allocation {
        check_dim("allocation row", market.goods(), row.len())?;
    }
    let p = &outcome.prices;
    let x = &outcome.allocation;
    let mut clearing_residual: f64 = 0.0;
    for j in 0..market.goods() {
        let excess = x.iter().map(|row| row[j]).sum::<f64>() - market.supplies()[j];
        let r = if p[j] > 0.0 { excess.abs() } else { excess.max(0.0) };
        clearing_residual = clearing_residual.max(r);
    }
    let eval_prices = floored(p);
    let mut optimality_gaps = Vec::with_capacity(market.buyers());
    let mut budget_violations = Vec::with_capacity(market.buyers());
    let mut gaps_ok = true;
    for (i, (v, xi)) in market.valuations().iter().zip(x).enumerate() {
        let b = market.budgets()[i];
        let best = demand(market.kind(), v, b, &eval_prices)?;
        let u_best = utility_eval(market.kind(), v, &best);
        let gap = u_best - utility_eval(market.kind(), v, xi);
        gaps_ok &= gap <= tol * (1.0 + u_best.abs());
        optimality_gaps.push(gap);
        let spent: f64 = xi.iter().zip(p).map(|(a, q)| a * q).sum();
        budget_violations.push((spent - b).max(0.0));
    }
    let budget_ok = budget_violations.iter().all(|v| *v <= tol);
    let nonneg = x.iter().flatten().chain(p).all(|v| *v >= -tol);
    Ok(CeReport {
        passed: clearing_residual <= tol && gaps_ok && budget_ok && nonneg,
        clearing_residual,
        optimality_gaps,
        budget_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeDistance {
    pub value: f64,
    /// Goods left out because a column of either allocation sums to zero.
    pub skipped_columns: usize,
}

/// `|p* - p| + |X* - X|_F` with both allocations scaled so that every column
/// sums to one.
pub fn distance_to_ce(outcome: &MarketOutcome, eq: &MarketOutcome) -> Result<CeDistance> {
    check_dim("prices", eq.prices.len(), outcome.prices.len())?;
    check_dim("allocation rows", eq.allocation.len(), outcome.allocation.len())?;
    for (a, b) in outcome.allocation.iter().zip(&eq.allocation) {
        check_dim("allocation row", b.len(), a.len())?;
    }
    let price_dist = crate::vec::dist(&outcome.prices, &eq.prices);
    let column_sum = |x: &[Vec<f64>], j: usize| x.iter().map(|row| row[j]).sum::<f64>();
    let mut sq = 0.0;
    let mut skipped_columns = 0;
    for j in 0..eq.prices.len() {
        let c1 = column_sum(&outcome.allocation, j);
        let c2 = column_sum(&eq.allocation, j);
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            skipped_columns += 1;
            continue;
        }
        for (a, b) in outcome.allocation.iter().zip(&eq.allocation) {
            let d = a[j] / c1 - b[j] / c2;
            sq += d * d;
        }
    }
    Ok(CeDistance {
        value: price_dist + libm::sqrt(sq),
        skipped_columns,
    })
}
