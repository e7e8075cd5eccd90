//! Regularizers, Bregman divergences, mirror steps and projections.
//!
//! A mirror step solves `argmin_{x in C} <g, x> + (1/eta) B(x || x_t)`, so
//! with the euclidean regularizer it is exactly projected gradient descent.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::vec::{dot, norm};

/// Entropy inputs are floored here before taking logarithms.
pub const ENTROPY_FLOOR: f64 = 1e-12;

pub const ALT_PROJ_MAX_ITER: usize = 10_000;
pub const ALT_PROJ_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    NonnegativeOrthant { dim: usize },
    /// `{x >= 0 : sum x = mass}`
    Simplex { dim: usize, mass: f64 },
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidParameter("empty box".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter("box lower bound exceeds upper bound".into()));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn orthant(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("empty orthant".into()));
        }
        Ok(FeasibleSet::NonnegativeOrthant { dim })
    }

    pub fn simplex(dim: usize, mass: f64) -> Result<Self> {
        if dim == 0 || !(mass > 0.0) {
            return Err(Error::InvalidParameter("simplex needs dim > 0 and mass > 0".into()));
        }
        Ok(FeasibleSet::Simplex { dim, mass })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::NonnegativeOrthant { dim } | FeasibleSet::Simplex { dim, .. } => *dim,
        }
    }

    /// Largest coordinatewise violation of membership (0 for members).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::NonnegativeOrthant { .. } => x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max),
            FeasibleSet::Simplex { mass, .. } => {
                let neg = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
                neg.max((x.iter().sum::<f64>() - mass).abs())
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && self.violation(x) <= tol
    }

    /// Euclidean diameter, infinite for the orthant.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => {
                libm::sqrt(lower.iter().zip(upper).map(|(l, u)| (u - l) * (u - l)).sum())
            }
            FeasibleSet::NonnegativeOrthant { .. } => f64::INFINITY,
            FeasibleSet::Simplex { dim, mass } => {
                if *dim == 1 {
                    0.0
                } else {
                    mass * core::f64::consts::SQRT_2
                }
            }
        }
    }
}

pub fn project(set: &FeasibleSet, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("projection input", set.dim(), x.len())?;
    Ok(match set {
        FeasibleSet::Box { lower, upper } => x
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(v, (l, u))| v.max(*l).min(*u))
            .collect(),
        FeasibleSet::NonnegativeOrthant { .. } => x.iter().map(|v| v.max(0.0)).collect(),
        FeasibleSet::Simplex { mass, .. } => project_simplex(x, *mass),
    })
}

// Sort-based projection onto {x >= 0, sum x = mass}.
fn project_simplex(x: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - mass) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// `psi(x) = |x|^2 / 2`
    Euclidean,
    /// `psi(x) = sum x_j log x_j` on the positive orthant.
    NegativeEntropy,
}

impl Regularizer {
    pub fn strong_convexity(&self) -> f64 {
        1.0
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        match self {
            Regularizer::Euclidean => 0.5 * dot(x, x),
            Regularizer::NegativeEntropy => x
                .iter()
                .map(|&v| {
                    let v = v.max(ENTROPY_FLOOR);
                    v * libm::log(v)
                })
                .sum(),
        }
    }
}

/// `B(w || u) = psi(w) - psi(u) - <grad psi(u), w - u>`.
///
/// For the entropy this is the generalized KL divergence
/// `sum w log(w/u) - w + u` with `0 log 0 = 0`.
pub fn bregman(reg: Regularizer, w: &[f64], u: &[f64]) -> Result<f64> {
    check_dim("bregman arguments", w.len(), u.len())?;
    match reg {
        Regularizer::Euclidean => Ok(0.5 * w.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()),
        Regularizer::NegativeEntropy => {
            let mut total = 0.0;
            for (j, (&wj, &uj)) in w.iter().zip(u).enumerate() {
                if !(uj > 0.0) {
                    return Err(Error::Domain(alloc::format!(
                        "entropy divergence needs a positive reference point, coordinate {j} is {uj}"
                    )));
                }
                if wj < 0.0 {
                    return Err(Error::Domain(alloc::format!(
                        "entropy divergence needs a nonnegative point, coordinate {j} is {wj}"
                    )));
                }
                let term = if wj == 0.0 { 0.0 } else { wj * libm::log(wj / uj) };
                total += term - wj + uj;
            }
            Ok(total.max(0.0))
        }
    }
}

/// One mirror-descent step `argmin_{x in set} <grad, x> + (1/eta) B(x || x_t)`.
pub fn mirror_step(reg: Regularizer, set: &FeasibleSet, x_t: &[f64], grad: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_dim("mirror step point", set.dim(), x_t.len())?;
    check_dim("mirror step gradient", set.dim(), grad.len())?;
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("step size must be positive, got {eta}")));
    }
    match reg {
        Regularizer::Euclidean => {
            let moved: Vec<f64> = x_t.iter().zip(grad).map(|(x, g)| x - eta * g).collect();
            project(set, &moved)
        }
        Regularizer::NegativeEntropy => {
            if let Some(j) = x_t.iter().position(|v| *v < 0.0) {
                return Err(Error::Domain(alloc::format!(
                    "entropy step from a point with negative coordinate {j}"
                )));
            }
            let moved: Vec<f64> = x_t
                .iter()
                .zip(grad)
                .map(|(x, g)| x.max(ENTROPY_FLOOR) * libm::exp(-eta * g))
                .collect();
            match set {
                FeasibleSet::Simplex { mass, .. } => {
                    let total: f64 = moved.iter().sum();
                    Ok(moved.iter().map(|v| mass * v / total).collect())
                }
                FeasibleSet::NonnegativeOrthant { .. } => Ok(moved),
                FeasibleSet::Box { lower, upper } => {
                    if let Some(j) = lower.iter().position(|l| *l < 0.0) {
                        return Err(Error::Domain(alloc::format!(
                            "entropy regularizer on a box with negative lower bound at coordinate {j}"
                        )));
                    }
                    // The divergence is separable, so clamping the unconstrained
                    // minimizer solves each coordinate exactly.
                    Ok(moved
                        .iter()
                        .zip(lower.iter().zip(upper))
                        .map(|(v, (l, u))| v.max(*l).min(*u))
                        .collect())
                }
            }
        }
    }
}

/// `{x : <normal, x> <= offset}`
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        (dot(&self.normal, x) - self.offset).max(0.0)
    }

    fn project(&self, x: &mut [f64]) {
        let excess = dot(&self.normal, x) - self.offset;
        let nn = dot(&self.normal, &self.normal);
        if excess > 0.0 && nn > 0.0 {
            let scale = excess / nn;
            for (xi, ni) in x.iter_mut().zip(&self.normal) {
                *xi -= scale * ni;
            }
        }
    }
}

/// Cyclic projections onto `base` and each halfspace until every constraint is
/// met within `tol`. The limit is a point of the intersection, not in general
/// its nearest point.
pub fn alternating_project_onto(
    base: Option<&FeasibleSet>,
    halfspaces: &[Halfspace],
    x: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    for h in halfspaces {
        check_dim("halfspace normal", x.len(), h.normal.len())?;
        if norm(&h.normal) == 0.0 && h.offset < 0.0 {
            return Err(Error::InvalidParameter("empty halfspace".into()));
        }
    }
    if let Some(set) = base {
        check_dim("alternating projection input", set.dim(), x.len())?;
    }
    let worst = |z: &[f64]| {
        let h = halfspaces.iter().map(|h| h.violation(z)).fold(0.0, f64::max);
        h.max(base.map_or(0.0, |s| s.violation(z)))
    };
    let mut z = x.to_vec();
    for _ in 0..max_iter {
        if worst(&z) <= tol {
            return Ok(z);
        }
        for h in halfspaces {
            h.project(&mut z);
        }
        if let Some(set) = base {
            z = project(set, &z)?;
        }
    }
    let residual = worst(&z);
    if residual <= tol {
        Ok(z)
    } else {
        Err(Error::NonConvergence {
            iterations: max_iter,
            residual,
        })
    }
}

/// Alternating projections onto an intersection of halfspaces, optionally
/// intersected with the nonnegative orthant.
pub fn alternating_project(
    halfspaces: &[Halfspace],
    orthant: bool,
    x: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let set = FeasibleSet::NonnegativeOrthant { dim: x.len() };
    alternating_project_onto(orthant.then_some(&set), halfspaces, x, max_iter, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `eta = c / (L sqrt(2 T))` at every step.
    FixedHorizon { c: f64, lipschitz: f64, horizon: usize },
    /// `eta_t = a / sqrt(t)`
    InverseSqrt(f64),
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Constant(eta) => eta > 0.0 && eta.is_finite(),
            StepSchedule::FixedHorizon { c, lipschitz, horizon } => {
                c > 0.0 && lipschitz > 0.0 && horizon > 0 && c.is_finite() && lipschitz.is_finite()
            }
            StepSchedule::InverseSqrt(a) => a > 0.0 && a.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("step schedule {self:?} is not positive")))
        }
    }

    /// Step size for step `t >= 1`.
    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::FixedHorizon { c, lipschitz, horizon } => {
                c / (lipschitz * libm::sqrt(2.0 * horizon as f64))
            }
            StepSchedule::InverseSqrt(a) => a / libm::sqrt(t.max(1) as f64),
        }
    }
}
