//! Equilibrium tracking in online min-max games with drifting quadratic
//! losses.
//!
//! At step `t` the players face
//! `f_t(x, y) = (mu_x/2)|x - a_t|^2 - (mu_y/2)|y - c_t|^2 + x'Qy`
//! whose centers drift by at most `d` per step. Projected gradient play
//! contracts towards the moving equilibrium at a rate governed by
//! `delta = 2 eta mu L / (L + mu)`.
//!
//! Step convention: `x_{t+1}` is computed from `f_t` at `x_t`, the distance
//! at step `t` is `|x*_t - x_t|`, and the drift term of step `t` is
//! `|x*_t - x*_{t-1}|`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::game::Profile;
use crate::mirror::{project, FeasibleSet};
use crate::rng::Stream;
use crate::vec::{dist, dot};

/// Distances may exceed a bound by this relative amount before a step counts
/// as a violation (floating-point rounding only).
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSaddleSequence {
    pub mu_x: f64,
    pub mu_y: f64,
    /// `dim_x` rows of length `dim_y`.
    pub q: Vec<Vec<f64>>,
    /// Centers `a_0, ..., a_T`.
    pub centers_x: Vec<Vec<f64>>,
    /// Centers `c_0, ..., c_T`.
    pub centers_y: Vec<Vec<f64>>,
    pub drift: f64,
    pub set_x: FeasibleSet,
    pub set_y: FeasibleSet,
}

fn drift_path(rng: &mut Stream, dim: usize, steps: usize, d: f64) -> Vec<Vec<f64>> {
    let mut path = Vec::with_capacity(steps + 1);
    let mut cur: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    path.push(cur.clone());
    for _ in 0..steps {
        let dir = rng.direction(dim);
        let size = rng.uniform(0.0, d);
        for (c, u) in cur.iter_mut().zip(&dir) {
            *c += size * u;
        }
        path.push(cur.clone());
    }
    path
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

impl QuadraticSaddleSequence {
    /// Centers start uniformly in `[-1, 1]^dim` and move each step in a
    /// uniformly random direction by a length drawn from `U[0, d]`. The boxes
    /// are sized so every equilibrium stays at least `10 d + 1` inside them.
    pub fn generate(mu_x: f64, mu_y: f64, q: Vec<Vec<f64>>, dim_x: usize, dim_y: usize, drift: f64, horizon: usize, seed: u64) -> Result<Self> {
        if !(mu_x > 0.0 && mu_y > 0.0 && mu_x.is_finite() && mu_y.is_finite()) {
            return Err(Error::InvalidParameter("strong convexity moduli must be positive".into()));
        }
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(Error::InvalidParameter(format!("drift bound must be nonnegative, got {drift}")));
        }
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".into()));
        }
        check_dim("coupling rows", dim_x, q.len())?;
        for row in &q {
            check_dim("coupling row", dim_y, row.len())?;
        }
        let qm = DMatrix::from_fn(dim_x, dim_y, |i, j| q[i][j]);
        let qn = spectral_norm(&qm);
        if qn * qn >= mu_x * mu_y {
            return Err(Error::InvalidParameter(format!(
                "coupling norm {qn} must satisfy |Q|^2 < mu_x mu_y"
            )));
        }
        let mut rng = Stream::derive(seed, 0);
        let centers_x = drift_path(&mut rng, dim_x, horizon, drift);
        let centers_y = drift_path(&mut rng, dim_y, horizon, drift);
        let mut seq = QuadraticSaddleSequence {
            mu_x,
            mu_y,
            q,
            centers_x,
            centers_y,
            drift,
            set_x: FeasibleSet::cube(dim_x, -1.0, 1.0)?,
            set_y: FeasibleSet::cube(dim_y, -1.0, 1.0)?,
        };
        let mut reach: f64 = 1.0;
        for t in 0..=horizon {
            let p = seq.nash_oracle(t)?;
            let far = p.x.iter().chain(&p.y).chain(&seq.centers_x[t]).chain(&seq.centers_y[t]);
            reach = far.fold(reach, |r, v| r.max(v.abs()));
        }
        let half = reach + 10.0 * drift + 1.0;
        seq.set_x = FeasibleSet::cube(dim_x, -half, half)?;
        seq.set_y = FeasibleSet::cube(dim_y, -half, half)?;
        Ok(seq)
    }

    pub fn horizon(&self) -> usize {
        self.centers_x.len() - 1
    }

    pub fn dim_x(&self) -> usize {
        self.q.len()
    }

    pub fn dim_y(&self) -> usize {
        self.centers_y[0].len()
    }

    fn qy(&self, y: &[f64]) -> Vec<f64> {
        self.q.iter().map(|row| dot(row, y)).collect()
    }

    fn qtx(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim_y())
            .map(|j| self.q.iter().zip(x).map(|(row, xi)| row[j] * xi).sum())
            .collect()
    }

    pub fn objective(&self, t: usize, x: &[f64], y: &[f64]) -> f64 {
        let a = &self.centers_x[t];
        let c = &self.centers_y[t];
        let dx: f64 = x.iter().zip(a).map(|(u, v)| (u - v) * (u - v)).sum();
        let dy: f64 = y.iter().zip(c).map(|(u, v)| (u - v) * (u - v)).sum();
        0.5 * self.mu_x * dx - 0.5 * self.mu_y * dy + dot(x, &self.qy(y))
    }

    pub fn grad_x(&self, t: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
        let qy = self.qy(y);
        x.iter()
            .zip(&self.centers_x[t])
            .zip(&qy)
            .map(|((xi, ai), q)| self.mu_x * (xi - ai) + q)
            .collect()
    }

    pub fn grad_y(&self, t: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
        let qtx = self.qtx(x);
        y.iter()
            .zip(&self.centers_y[t])
            .zip(&qtx)
            .map(|((yi, ci), q)| -self.mu_y * (yi - ci) + q)
            .collect()
    }

    /// `argmax_y f_t(x, y) = c_t + Q'x / mu_y`
    pub fn best_response_y(&self, t: usize, x: &[f64]) -> Vec<f64> {
        self.centers_y[t]
            .iter()
            .zip(self.qtx(x))
            .map(|(c, q)| c + q / self.mu_y)
            .collect()
    }

    /// `argmin_x f_t(x, y) = a_t - Q y / mu_x`
    pub fn best_response_x(&self, t: usize, y: &[f64]) -> Vec<f64> {
        self.centers_x[t]
            .iter()
            .zip(self.qy(y))
            .map(|(a, q)| a - q / self.mu_x)
            .collect()
    }

    /// Gradient of `V_t(x) = max_y f_t(x, y)`.
    pub fn value_grad(&self, t: usize, x: &[f64]) -> Vec<f64> {
        self.grad_x(t, x, &self.best_response_y(t, x))
    }

    pub fn value(&self, t: usize, x: &[f64]) -> f64 {
        self.objective(t, x, &self.best_response_y(t, x))
    }

    /// Smoothness of the joint gradient: the spectral norm of the Hessian
    /// `[[mu_x I, Q], [Q', -mu_y I]]`.
    pub fn lipschitz(&self) -> f64 {
        let (n, m) = (self.dim_x(), self.dim_y());
        let h = DMatrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
            (true, true) => {
                if i == j {
                    self.mu_x
                } else {
                    0.0
                }
            }
            (true, false) => self.q[i][j - n],
            (false, true) => self.q[j][i - n],
            (false, false) => {
                if i == j {
                    -self.mu_y
                } else {
                    0.0
                }
            }
        });
        h.symmetric_eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Smoothness of `V_t`: `mu_x + |Q|^2 / mu_y`.
    pub fn value_smoothness(&self) -> f64 {
        let qm = DMatrix::from_fn(self.dim_x(), self.dim_y(), |i, j| self.q[i][j]);
        let qn = spectral_norm(&qm);
        self.mu_x + qn * qn / self.mu_y
    }

    /// The same sequence seen from the other player: `(y, x)` with loss `-f_t`.
    pub fn swapped(&self) -> Self {
        QuadraticSaddleSequence {
            mu_x: self.mu_y,
            mu_y: self.mu_x,
            q: (0..self.dim_y())
                .map(|j| self.q.iter().map(|row| -row[j]).collect())
                .collect(),
            centers_x: self.centers_y.clone(),
            centers_y: self.centers_x.clone(),
            drift: self.drift,
            set_x: self.set_y.clone(),
            set_y: self.set_x.clone(),
        }
    }

    /// Equilibrium of `f_t`, from the stationarity system
    /// `mu_x (x - a_t) + Q y = 0`, `-mu_y (y - c_t) + Q'x = 0`.
    pub fn nash_oracle(&self, t: usize) -> Result<Profile> {
        if t > self.horizon() {
            return Err(Error::InvalidParameter(format!("step {t} is past the horizon {}", self.horizon())));
        }
        let (n, m) = (self.dim_x(), self.dim_y());
        let a = DMatrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
            (true, true) => {
                if i == j {
                    self.mu_x
                } else {
                    0.0
                }
            }
            (true, false) => self.q[i][j - n],
            (false, true) => -self.q[j][i - n],
            (false, false) => {
                if i == j {
                    self.mu_y
                } else {
                    0.0
                }
            }
        });
        let rhs = DVector::from_iterator(
            n + m,
            self.centers_x[t]
                .iter()
                .map(|v| self.mu_x * v)
                .chain(self.centers_y[t].iter().map(|v| self.mu_y * v)),
        );
        let sol = a.lu().solve(&rhs).ok_or(Error::Singular)?;
        Ok(Profile::new(sol.rows(0, n).iter().copied().collect(), sol.rows(n, m).iter().copied().collect()))
    }
}

/// `delta = 2 eta mu L / (L + mu)`
pub fn contraction(mu: f64, lipschitz: f64, eta: f64) -> f64 {
    2.0 * eta * mu * lipschitz / (lipschitz + mu)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 + 1e-12 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("contraction constant {delta} is outside (0, 1]")))
    }
}

/// `(1 - delta)^{T/2} init + 2 d / delta`
pub fn robustness_bound(mu: f64, lipschitz: f64, eta: f64, d: f64, steps: usize, init_dist: f64) -> Result<f64> {
    let delta = contraction(mu, lipschitz, eta);
    check_delta(delta)?;
    let delta = delta.min(1.0);
    Ok(libm::pow(1.0 - delta, steps as f64 / 2.0) * init_dist + 2.0 * d / delta)
}

/// `(1 - delta)^{T/2} init + sum_{t=1}^T (1 - delta)^{(T-t)/2} drift_t` with
/// `drifts[t - 1] = drift_t`.
pub fn geometric_sum_bound(mu: f64, lipschitz: f64, eta: f64, drifts: &[f64], init_dist: f64) -> Result<f64> {
    let delta = contraction(mu, lipschitz, eta);
    check_delta(delta)?;
    let rho = libm::sqrt(1.0 - delta.min(1.0));
    let mut sum = 0.0;
    for d in drifts {
        sum = rho * sum + d;
    }
    Ok(libm::pow(rho, drifts.len() as f64) * init_dist + sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRow {
    pub t: usize,
    pub dist_x: f64,
    /// Zero in the asymmetric setting.
    pub dist_y: f64,
    /// Sum-form bound on `dist_x + dist_y`.
    pub bound_sum: f64,
    /// Simplified bound on `dist_x + dist_y`.
    pub bound_simple: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    /// `delta` of the outer player, or `min(delta_x, delta_y)`.
    pub delta: f64,
    pub delta_x: f64,
    pub delta_y: Option<f64>,
    pub lipschitz: f64,
    pub rows: Vec<TrackingRow>,
    /// Steps where a distance exceeded one of its bounds.
    pub violations: usize,
}

fn exceeds(value: f64, bound: f64) -> bool {
    value > bound + BOUND_SLACK * (1.0 + bound.abs())
}

struct SideTracker {
    rho: f64,
    init: f64,
    drift_sum: f64,
    pow: f64,
}

impl SideTracker {
    fn new(delta: f64, init: f64) -> Self {
        SideTracker {
            rho: libm::sqrt(1.0 - delta.min(1.0)),
            init,
            drift_sum: 0.0,
            pow: 1.0,
        }
    }

    fn advance(&mut self, drift: f64) {
        self.drift_sum = self.rho * self.drift_sum + drift;
        self.pow *= self.rho;
    }

    fn sum_bound(&self) -> f64 {
        self.pow * self.init + self.drift_sum
    }
}

/// Projected gradient descent on the value functions `V_t`, measured against
/// their minimizers. The smoothness used for the step-size condition is the
/// larger of the joint constant and that of `V_t`.
pub fn run_asym_tracking(seq: &QuadraticSaddleSequence, eta: f64, x0: &[f64]) -> Result<RobustnessReport> {
    check_dim("x0", seq.dim_x(), x0.len())?;
    let lipschitz = seq.lipschitz().max(seq.value_smoothness());
    let mu = seq.mu_x;
    let limit = 2.0 / (mu + lipschitz);
    if !(eta > 0.0 && eta <= limit * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("step size {eta} must lie in (0, {limit}]")));
    }
    let delta = contraction(mu, lipschitz, eta).min(1.0);
    check_delta(delta)?;
    let mut x = x0.to_vec();
    let mut star = seq.nash_oracle(0)?.x;
    let init = dist(&star, &x);
    let mut side = SideTracker::new(delta, init);
    let mut max_drift: f64 = 0.0;
    let mut rows = vec![TrackingRow {
        t: 0,
        dist_x: init,
        dist_y: 0.0,
        bound_sum: init,
        bound_simple: init + 2.0 * seq.drift / delta,
    }];
    let mut violations = 0;
    for t in 1..=seq.horizon() {
        let g = seq.value_grad(t - 1, &x);
        let moved: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
        x = project(&seq.set_x, &moved)?;
        let next = seq.nash_oracle(t)?.x;
        let drift = dist(&next, &star);
        star = next;
        max_drift = max_drift.max(drift);
        side.advance(drift);
        let d = seq.drift.max(max_drift);
        let dist_x = dist(&star, &x);
        let bound_sum = side.sum_bound();
        let bound_simple = side.pow * init + 2.0 * d / delta;
        if exceeds(dist_x, bound_sum) || exceeds(dist_x, bound_simple) {
            violations += 1;
        }
        rows.push(TrackingRow {
            t,
            dist_x,
            dist_y: 0.0,
            bound_sum,
            bound_simple,
        });
    }
    Ok(RobustnessReport {
        delta,
        delta_x: delta,
        delta_y: None,
        lipschitz,
        rows,
        violations,
    })
}

/// Simultaneous projected gradient descent/ascent on `f_t`, each player
/// measured against its best response to the other's current play.
pub fn run_sym_tracking(seq: &QuadraticSaddleSequence, eta_x: f64, eta_y: f64, x0: &[f64], y0: &[f64]) -> Result<RobustnessReport> {
    check_dim("x0", seq.dim_x(), x0.len())?;
    check_dim("y0", seq.dim_y(), y0.len())?;
    let lipschitz = seq.lipschitz();
    for (name, eta, mu) in [("x", eta_x, seq.mu_x), ("y", eta_y, seq.mu_y)] {
        let limit = 2.0 / (mu + lipschitz);
        if !(eta > 0.0 && eta <= limit * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("{name} step size {eta} must lie in (0, {limit}]")));
        }
    }
    let delta_x = contraction(seq.mu_x, lipschitz, eta_x).min(1.0);
    let delta_y = contraction(seq.mu_y, lipschitz, eta_y).min(1.0);
    check_delta(delta_x)?;
    check_delta(delta_y)?;
    let delta = delta_x.min(delta_y);

    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    let mut star_x = seq.best_response_x(0, &y);
    let mut star_y = seq.best_response_y(0, &x);
    let init_x = dist(&star_x, &x);
    let init_y = dist(&star_y, &y);
    let mut sx = SideTracker::new(delta_x, init_x);
    let mut sy = SideTracker::new(delta_y, init_y);
    let rho = libm::sqrt(1.0 - delta);
    let mut pow = 1.0;
    let mut max_drift: f64 = 0.0;
    let mut rows = vec![TrackingRow {
        t: 0,
        dist_x: init_x,
        dist_y: init_y,
        bound_sum: init_x + init_y,
        bound_simple: 2.0 * (init_x + init_y) + 4.0 * seq.drift / delta,
    }];
    let mut violations = 0;
    for t in 1..=seq.horizon() {
        let gx = seq.grad_x(t - 1, &x, &y);
        let gy = seq.grad_y(t - 1, &x, &y);
        let nx: Vec<f64> = x.iter().zip(&gx).map(|(a, b)| a - eta_x * b).collect();
        let ny: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a + eta_y * b).collect();
        x = project(&seq.set_x, &nx)?;
        y = project(&seq.set_y, &ny)?;
        let next_x = seq.best_response_x(t, &y);
        let next_y = seq.best_response_y(t, &x);
        let (dx, dy) = (dist(&next_x, &star_x), dist(&next_y, &star_y));
        star_x = next_x;
        star_y = next_y;
        max_drift = max_drift.max(dx).max(dy);
        sx.advance(dx);
        sy.advance(dy);
        pow *= rho;
        let d = seq.drift.max(max_drift);
        let dist_x = dist(&star_x, &x);
        let dist_y = dist(&star_y, &y);
        let bound_sum = sx.sum_bound() + sy.sum_bound();
        let bound_simple = 2.0 * pow * (init_x + init_y) + 4.0 * d / delta;
        if exceeds(dist_x, sx.sum_bound()) || exceeds(dist_y, sy.sum_bound()) || exceeds(dist_x + dist_y, bound_simple) {
            violations += 1;
        }
        rows.push(TrackingRow {
            t,
            dist_x,
            dist_y,
            bound_sum,
            bound_simple,
        });
    }
    Ok(RobustnessReport {
        delta,
        delta_x,
        delta_y: Some(delta_y),
        lipschitz,
        rows,
        violations,
    })
}
