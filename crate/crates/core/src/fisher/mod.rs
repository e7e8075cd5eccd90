//! Fisher markets: utilities, demand, competitive equilibria and the two
//! price-adjustment dynamics.
//!
//! A market with `n` buyers and `m` goods is the Stackelberg game in which a
//! seller picks prices `p >= 0` to minimize
//! `sum_j s_j p_j + sum_i b_i log u_i(x_i*(p))` and buyers demand utility
//! maximizing bundles within their budgets.

mod dynamics;
mod equilibrium;
mod ipm;

pub use dynamics::{
    distance_trace, equal_split, myopic_br, sample_online_market, tatonnement, FisherTrace, MarketRanges,
    MarketSequence, MyopicOptions, OnlineFisherSequence, StaticMarket,
};
pub use equilibrium::{ce_check, distance_to_ce, solve_ce, CeDistance, CeReport};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};

/// Prices below this are raised to it before demand is evaluated.
pub const PRICE_FLOOR: f64 = 1e-9;
/// Cobb-Douglas allocations are clamped here before logs and divisions.
pub const ALLOCATION_FLOOR: f64 = 1e-12;
/// Relative tolerance identifying bang-per-buck ties in linear demand.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UtilityKind {
    Linear,
    CobbDouglas,
    Leontief,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 3] = [UtilityKind::Linear, UtilityKind::CobbDouglas, UtilityKind::Leontief];

    pub fn name(&self) -> &'static str {
        match self {
            UtilityKind::Linear => "linear",
            UtilityKind::CobbDouglas => "cobb-douglas",
            UtilityKind::Leontief => "leontief",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherMarket {
    kind: UtilityKind,
    valuations: Vec<Vec<f64>>,
    budgets: Vec<f64>,
    supplies: Vec<f64>,
}

fn check_positive(what: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
        Some(k) => Err(Error::InvalidParameter(format!("{what} entry {k} must be positive, got {}", v[k]))),
        None => Ok(()),
    }
}

impl FisherMarket {
    /// Builds a market. Cobb-Douglas valuation rows are scaled to sum to one.
    pub fn new(kind: UtilityKind, valuations: Vec<Vec<f64>>, budgets: Vec<f64>, supplies: Vec<f64>) -> Result<Self> {
        let mut market = Self::unnormalized(kind, valuations, budgets, supplies)?;
        if kind == UtilityKind::CobbDouglas {
            for row in &mut market.valuations {
                let total: f64 = row.iter().sum();
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
        }
        Ok(market)
    }

    /// Builds a market whose Cobb-Douglas rows already sum to one (within
    /// 1e-12) and keeps them bit for bit.
    pub fn with_normalized_valuations(
        kind: UtilityKind,
        valuations: Vec<Vec<f64>>,
        budgets: Vec<f64>,
        supplies: Vec<f64>,
    ) -> Result<Self> {
        let market = Self::unnormalized(kind, valuations, budgets, supplies)?;
        if kind == UtilityKind::CobbDouglas {
            for (i, row) in market.valuations.iter().enumerate() {
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "cobb-douglas valuations of buyer {i} sum to {total}, not 1"
                    )));
                }
            }
        }
        Ok(market)
    }

    fn unnormalized(kind: UtilityKind, valuations: Vec<Vec<f64>>, budgets: Vec<f64>, supplies: Vec<f64>) -> Result<Self> {
        check_dim("valuation rows", budgets.len(), valuations.len())?;
        if budgets.is_empty() || supplies.is_empty() {
            return Err(Error::InvalidParameter("a market needs at least one buyer and one good".into()));
        }
        for row in &valuations {
            check_dim("valuation row", supplies.len(), row.len())?;
            check_positive("valuation", row)?;
        }
        check_positive("budget", &budgets)?;
        check_positive("supply", &supplies)?;
        Ok(FisherMarket {
            kind,
            valuations,
            budgets,
            supplies,
        })
    }

    pub fn kind(&self) -> UtilityKind {
        self.kind
    }

    pub fn buyers(&self) -> usize {
        self.budgets.len()
    }

    pub fn goods(&self) -> usize {
        self.supplies.len()
    }

    pub fn valuations(&self) -> &[Vec<f64>] {
        &self.valuations
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn supplies(&self) -> &[f64] {
        &self.supplies
    }

    fn check_prices(&self, p: &[f64]) -> Result<()> {
        check_dim("prices", self.goods(), p.len())
    }

    fn check_allocation(&self, x: &[Vec<f64>]) -> Result<()> {
        check_dim("allocation rows", self.buyers(), x.len())?;
        for row in x {
            check_dim("allocation row", self.goods(), row.len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketOutcome {
    pub prices: Vec<f64>,
    /// One row per buyer.
    pub allocation: Vec<Vec<f64>>,
}

pub fn utility_eval(kind: UtilityKind, v: &[f64], x: &[f64]) -> f64 {
    match kind {
        UtilityKind::Linear => v.iter().zip(x).map(|(a, b)| a * b).sum(),
        UtilityKind::CobbDouglas => v.iter().zip(x).map(|(a, b)| libm::pow(b.max(0.0), *a)).product(),
        UtilityKind::Leontief => v
            .iter()
            .zip(x)
            .map(|(a, b)| b / a)
            .fold(f64::INFINITY, f64::min),
    }
}

fn leontief_bottleneck(v: &[f64], x: &[f64]) -> usize {
    let mut k = 0;
    for j in 1..v.len() {
        if x[j] / v[j] < x[k] / v[k] {
            k = j;
        }
    }
    k
}

/// A (super)gradient of the utility. Cobb-Douglas coordinates are clamped at
/// [`ALLOCATION_FLOOR`]; Leontief picks the lowest-index bottleneck good.
pub fn utility_subgrad(kind: UtilityKind, v: &[f64], x: &[f64]) -> Vec<f64> {
    match kind {
        UtilityKind::Linear => v.to_vec(),
        UtilityKind::CobbDouglas => {
            let clamped: Vec<f64> = x.iter().map(|xj| xj.max(ALLOCATION_FLOOR)).collect();
            let u = utility_eval(kind, v, &clamped);
            v.iter().zip(&clamped).map(|(a, b)| a * u / b).collect()
        }
        UtilityKind::Leontief => {
            let k = leontief_bottleneck(v, x);
            let mut g = alloc::vec![0.0; v.len()];
            g[k] = 1.0 / v[k];
            g
        }
    }
}

/// Utility-maximizing bundle of a buyer with valuations `v` and budget `b` at
/// strictly positive prices `p`.
pub fn demand(kind: UtilityKind, v: &[f64], b: f64, p: &[f64]) -> Result<Vec<f64>> {
    check_dim("prices", v.len(), p.len())?;
    if let Some(good) = p.iter().position(|pj| !(*pj > 0.0 && pj.is_finite())) {
        return Err(Error::NonPositivePrice { good, value: p[good] });
    }
    Ok(match kind {
        UtilityKind::Linear => {
            let best = v.iter().zip(p).map(|(a, q)| a / q).fold(0.0, f64::max);
            let threshold = best * (1.0 - TIE_TOL);
            let ties: Vec<bool> = v.iter().zip(p).map(|(a, q)| a / q >= threshold).collect();
            let k = ties.iter().filter(|t| **t).count() as f64;
            ties.iter()
                .zip(p)
                .map(|(t, q)| if *t { b / (k * q) } else { 0.0 })
                .collect()
        }
        UtilityKind::CobbDouglas => {
            let total: f64 = v.iter().sum();
            v.iter().zip(p).map(|(a, q)| b * a / (total * q)).collect()
        }
        UtilityKind::Leontief => {
            let cost: f64 = v.iter().zip(p).map(|(a, q)| a * q).sum();
            v.iter().map(|a| b * a / cost).collect()
        }
    })
}

pub(crate) fn floored(p: &[f64]) -> Vec<f64> {
    p.iter().map(|q| q.max(PRICE_FLOOR)).collect()
}

/// Demand of every buyer at `p`.
pub fn market_demand(market: &FisherMarket, p: &[f64]) -> Result<Vec<Vec<f64>>> {
    market.check_prices(p)?;
    market
        .valuations
        .iter()
        .zip(&market.budgets)
        .map(|(v, b)| demand(market.kind, v, *b, p))
        .collect()
}

/// `sum_j s_j p_j + sum_i b_i log u_i(x_i*(p))`
pub fn eg_value(market: &FisherMarket, p: &[f64]) -> Result<f64> {
    let x = market_demand(market, p)?;
    let mut value: f64 = market.supplies.iter().zip(p).map(|(s, q)| s * q).sum();
    for (i, (v, xi)) in market.valuations.iter().zip(&x).enumerate() {
        let u = utility_eval(market.kind, v, xi);
        if !(u > 0.0) {
            return Err(Error::ZeroUtility { buyer: i });
        }
        value += market.budgets[i] * libm::log(u);
    }
    Ok(value)
}

/// `s - sum_i x_i`, the gradient of the Lagrangian in the prices.
pub fn price_gradient(market: &FisherMarket, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    market.check_allocation(x)?;
    let mut g = market.supplies.clone();
    for row in x {
        for (gj, xij) in g.iter_mut().zip(row) {
            *gj -= xij;
        }
    }
    Ok(g)
}

/// Row `i` is `(b_i / u_i(x_i)) grad u_i(x_i) - p`, the gradient of the
/// Lagrangian in buyer `i`'s bundle with unit multipliers.
pub fn allocation_gradient(market: &FisherMarket, p: &[f64], x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    market.check_prices(p)?;
    market.check_allocation(x)?;
    let mut out = Vec::with_capacity(x.len());
    for (i, (v, xi)) in market.valuations.iter().zip(x).enumerate() {
        let u = match market.kind {
            UtilityKind::CobbDouglas => {
                let clamped: Vec<f64> = xi.iter().map(|a| a.max(ALLOCATION_FLOOR)).collect();
                utility_eval(market.kind, v, &clamped)
            }
            _ => utility_eval(market.kind, v, xi),
        };
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::ZeroUtility { buyer: i });
        }
        let scale = market.budgets[i] / u;
        let grad = utility_subgrad(market.kind, v, xi);
        out.push(grad.iter().zip(p).map(|(g, q)| scale * g - q).collect());
    }
    Ok(out)
}
