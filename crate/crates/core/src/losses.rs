//! Seeded sequences of Lipschitz convex losses for exercising online mirror
//! descent, each with a closed-form best fixed action in hindsight.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mirror::{FeasibleSet, Regularizer, StepSchedule};
use crate::rng::Stream;
use crate::solvers::{online_mirror_descent, OnlineLoss, OnlineRun, RegretKind, RegretLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossFamily {
    /// `<g_t, x>` on `[-1, 1]^d`, `g_t ~ U[-1, 1]^d`.
    Linear,
    /// `(1/2)|x - a_t|^2` on `[-1, 1]^d`, `a_t ~ U[-1, 1]^d`.
    Quadratic,
    /// `sum_j |x_j - a_tj|` on `[-1, 1]^d`, `a_t ~ U[-1, 1]^d`.
    Absolute,
    /// `<c_t, x>` on the probability simplex with the entropy regularizer,
    /// `c_t ~ U[0, 1]^d`.
    Experts,
}

impl LossFamily {
    pub const ALL: [LossFamily; 4] = [LossFamily::Linear, LossFamily::Quadratic, LossFamily::Absolute, LossFamily::Experts];

    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::Linear => "linear",
            LossFamily::Quadratic => "quadratic",
            LossFamily::Absolute => "absolute",
            LossFamily::Experts => "experts",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSequence {
    family: LossFamily,
    dim: usize,
    seed: u64,
    set: FeasibleSet,
}

impl LossSequence {
    /// The experts family needs `dim >= 4` so that its Bregman radius
    /// `ln d` is at least `4/3`.
    pub fn new(family: LossFamily, dim: usize, seed: u64) -> Result<Self> {
        let min_dim = if family == LossFamily::Experts { 4 } else { 1 };
        if dim < min_dim {
            return Err(Error::InvalidParameter(format!(
                "{} losses need dimension >= {min_dim}, got {dim}",
                family.name()
            )));
        }
        let set = match family {
            LossFamily::Experts => FeasibleSet::simplex(dim, 1.0)?,
            _ => FeasibleSet::cube(dim, -1.0, 1.0)?,
        };
        Ok(LossSequence { family, dim, seed, set })
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn regularizer(&self) -> Regularizer {
        match self.family {
            LossFamily::Experts => Regularizer::NegativeEntropy,
            _ => Regularizer::Euclidean,
        }
    }

    /// Center of the box, or the uniform distribution.
    pub fn start(&self) -> Vec<f64> {
        match self.family {
            LossFamily::Experts => vec![1.0 / self.dim as f64; self.dim],
            _ => vec![0.0; self.dim],
        }
    }

    /// Largest Bregman divergence between points of the set seen from the
    /// start: `diam^2 / 2` for boxes, `ln d` for the simplex.
    pub fn radius(&self) -> f64 {
        match self.family {
            LossFamily::Experts => libm::log(self.dim as f64),
            _ => 0.5 * self.set.diameter() * self.set.diameter(),
        }
    }

    /// Bound on the dual norm of every (sub)gradient.
    pub fn lipschitz(&self) -> f64 {
        let d = self.dim as f64;
        match self.family {
            LossFamily::Linear | LossFamily::Absolute => libm::sqrt(d),
            LossFamily::Quadratic => 2.0 * libm::sqrt(d),
            LossFamily::Experts => 1.0,
        }
    }

    /// `g_t`, `a_t` or `c_t` depending on the family.
    pub fn data(&self, t: usize) -> Vec<f64> {
        let mut rng = Stream::derive(self.seed, t as u64);
        let (lo, hi) = match self.family {
            LossFamily::Experts => (0.0, 1.0),
            _ => (-1.0, 1.0),
        };
        (0..self.dim).map(|_| rng.uniform(lo, hi)).collect()
    }

    /// Best fixed action for rounds `1..=rounds`.
    pub fn comparator(&self, rounds: usize) -> Vec<f64> {
        let d = self.dim;
        match self.family {
            LossFamily::Linear | LossFamily::Experts => {
                let mut total = vec![0.0; d];
                for t in 1..=rounds {
                    for (s, v) in total.iter_mut().zip(self.data(t)) {
                        *s += v;
                    }
                }
                if self.family == LossFamily::Linear {
                    total.iter().map(|s| if *s > 0.0 { -1.0 } else { 1.0 }).collect()
                } else {
                    let best = (0..d).fold(0, |b, j| if total[j] < total[b] { j } else { b });
                    let mut x = vec![0.0; d];
                    x[best] = 1.0;
                    x
                }
            }
            LossFamily::Quadratic => {
                let mut mean = vec![0.0; d];
                for t in 1..=rounds {
                    for (s, v) in mean.iter_mut().zip(self.data(t)) {
                        *s += v;
                    }
                }
                mean.iter().map(|s| (s / rounds.max(1) as f64).clamp(-1.0, 1.0)).collect()
            }
            LossFamily::Absolute => {
                let mut cols = vec![Vec::with_capacity(rounds); d];
                for t in 1..=rounds {
                    for (c, v) in cols.iter_mut().zip(self.data(t)) {
                        c.push(v);
                    }
                }
                cols.into_iter()
                    .map(|mut c| {
                        if c.is_empty() {
                            return 0.0;
                        }
                        c.sort_by(f64::total_cmp);
                        c[(c.len() - 1) / 2]
                    })
                    .collect()
            }
        }
    }

    /// `c L sqrt(2 / T)` with this sequence's constants.
    pub fn regret_bound(&self, rounds: usize) -> f64 {
        regret_bound(self.radius(), self.lipschitz(), rounds)
    }

    /// The fixed-horizon step size `c / (L sqrt(2T))`.
    pub fn schedule(&self, rounds: usize) -> StepSchedule {
        StepSchedule::FixedHorizon {
            c: self.radius(),
            lipschitz: self.lipschitz(),
            horizon: rounds,
        }
    }
}

impl OnlineLoss for LossSequence {
    fn loss(&self, t: usize, x: &[f64]) -> f64 {
        let a = self.data(t);
        match self.family {
            LossFamily::Linear | LossFamily::Experts => a.iter().zip(x).map(|(g, v)| g * v).sum(),
            LossFamily::Quadratic => 0.5 * a.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum::<f64>(),
            LossFamily::Absolute => a.iter().zip(x).map(|(c, v)| (v - c).abs()).sum(),
        }
    }

    fn grad(&self, t: usize, x: &[f64]) -> Vec<f64> {
        let a = self.data(t);
        match self.family {
            LossFamily::Linear | LossFamily::Experts => a,
            LossFamily::Quadratic => x.iter().zip(&a).map(|(v, c)| v - c).collect(),
            LossFamily::Absolute => x
                .iter()
                .zip(&a)
                .map(|(v, c)| {
                    if v > c {
                        1.0
                    } else if v < c {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        }
    }
}

/// `c L sqrt(2 / T)`
pub fn regret_bound(radius: f64, lipschitz: f64, rounds: usize) -> f64 {
    radius * lipschitz * libm::sqrt(2.0 / rounds as f64)
}

/// Runs online mirror descent with the fixed-horizon step size and books its
/// regret against the best fixed action.
pub fn omd_regret(seq: &LossSequence, rounds: usize) -> Result<(OnlineRun, RegretLedger)> {
    let run = online_mirror_descent(seq, seq.regularizer(), seq.set(), seq.schedule(rounds), rounds, &seq.start())?;
    let best = seq.comparator(rounds);
    let realized: f64 = run.trace.records().iter().map(|r| r.objective).sum();
    let comparator: f64 = (1..=rounds).map(|t| seq.loss(t, &best)).sum();
    Ok((
        run,
        RegretLedger {
            kind: RegretKind::Online,
            realized,
            comparator,
            rounds,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparators_beat_perturbations() {
        for family in LossFamily::ALL {
            let seq = LossSequence::new(family, 4, 11).unwrap();
            let best = seq.comparator(200);
            let total = |x: &[f64]| (1..=200).map(|t| seq.loss(t, x)).sum::<f64>();
            let base = total(&best);
            let mut rng = Stream::new(5);
            for _ in 0..50 {
                let other: Vec<f64> = match family {
                    LossFamily::Experts => {
                        let w: Vec<f64> = (0..4).map(|_| rng.unit()).collect();
                        let s: f64 = w.iter().sum();
                        w.iter().map(|v| v / s).collect()
                    }
                    _ => (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                };
                assert!(base <= total(&other) + 1e-9, "{family:?}");
            }
        }
    }

    #[test]
    fn experts_need_four_arms() {
        assert!(LossSequence::new(LossFamily::Experts, 3, 0).is_err());
        let seq = LossSequence::new(LossFamily::Experts, 4, 0).unwrap();
        assert!(seq.radius() >= 4.0 / 3.0);
    }

    #[test]
    fn regret_within_bound() {
        for family in LossFamily::ALL {
            let seq = LossSequence::new(family, 4, 2).unwrap();
            let (_, ledger) = omd_regret(&seq, 500).unwrap();
            assert!(ledger.average() <= seq.regret_bound(500), "{family:?}");
        }
    }
}
