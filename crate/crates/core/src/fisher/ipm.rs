//! Primal-dual interior point method on the dual of the Eisenberg-Gale
//! program, used for linear and Leontief equilibria.
//!
//! Variables are prices `p` and utility prices `beta_i = b_i / u_i`:
//!
//! ```text
//! min  s'p - sum_i b_i log beta_i   s.t.  A (p, beta) >= 0
//! ```
//!
//! Linear markets have one row `p_j - v_ij beta_i >= 0` per pair, whose
//! multiplier is the allocation `x_ij`. Leontief markets have one row
//! `v_i'p - beta_i >= 0` per buyer (multiplier: utility `u_i`) and one row
//! `p_j >= 0` per good (multiplier: unsold supply).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{FisherMarket, UtilityKind};
use crate::error::{Error, Result};

const MAX_ITER: usize = 80;
const BOUNDARY_FRACTION: f64 = 0.99;

pub(crate) struct IpmSolution {
    pub prices: Vec<f64>,
    pub allocation: Vec<Vec<f64>>,
    /// Unsold supply per good, Leontief only.
    pub leftover: Option<Vec<f64>>,
}

struct Rows {
    rows: Vec<Vec<(usize, f64)>>,
    cols: usize,
}

impl Rows {
    fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|(c, a)| a * z[*c]).sum()).collect()
    }

    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, yk) in self.rows.iter().zip(y) {
            for (c, a) in r {
                out[*c] += a * yk;
            }
        }
        out
    }

    // A' diag(d) A
    fn gram(&self, d: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.cols, self.cols);
        for (r, dk) in self.rows.iter().zip(d) {
            for (c1, a1) in r {
                for (c2, a2) in r {
                    h[(*c1, *c2)] += dk * a1 * a2;
                }
            }
        }
        h
    }
}

fn step_length(v: &[f64], dv: &[f64], fraction: f64) -> f64 {
    let mut alpha: f64 = 1.0;
    for (x, d) in v.iter().zip(dv) {
        if *d < 0.0 {
            alpha = alpha.min(-fraction * x / d);
        }
    }
    alpha
}

pub(crate) fn solve(market: &FisherMarket) -> Result<IpmSolution> {
    let (n, m) = (market.buyers(), market.goods());
    let v = market.valuations();
    let b = market.budgets();
    let s = market.supplies();
    let total_budget: f64 = b.iter().sum();

    let (a, mut y, beta, p) = match market.kind() {
        UtilityKind::Linear => {
            let mut rows = Vec::with_capacity(n * m);
            for i in 0..n {
                for j in 0..m {
                    rows.push(vec![(j, 1.0), (m + i, -v[i][j])]);
                }
            }
            let y: Vec<f64> = (0..n * m).map(|k| s[k % m] / n as f64).collect();
            let beta: Vec<f64> = (0..n)
                .map(|i| b[i] / (0..m).map(|j| v[i][j] * y[i * m + j]).sum::<f64>())
                .collect();
            let p: Vec<f64> = (0..m)
                .map(|j| 2.0 * (0..n).map(|i| beta[i] * v[i][j]).fold(0.0, f64::max))
                .collect();
            (Rows { rows, cols: m + n }, y, beta, p)
        }
        UtilityKind::Leontief => {
            let mut rows = Vec::with_capacity(n + m);
            for i in 0..n {
                let mut r: Vec<(usize, f64)> = (0..m).map(|j| (j, v[i][j])).collect();
                r.push((m + i, -1.0));
                rows.push(r);
            }
            for j in 0..m {
                rows.push(vec![(j, 1.0)]);
            }
            let u: Vec<f64> = (0..n)
                .map(|i| (0..m).map(|j| s[j] / (2.0 * n as f64 * v[i][j])).fold(f64::INFINITY, f64::min))
                .collect();
            let w: Vec<f64> = (0..m).map(|j| s[j] - (0..n).map(|i| u[i] * v[i][j]).sum::<f64>()).collect();
            let beta: Vec<f64> = (0..n).map(|i| b[i] / u[i]).collect();
            let level = 2.0 * (0..n).map(|i| beta[i] / v[i].iter().sum::<f64>()).fold(0.0, f64::max);
            let mut y = u;
            y.extend(w);
            (Rows { rows, cols: m + n }, y, beta, vec![level; m])
        }
        UtilityKind::CobbDouglas => {
            return Err(Error::InvalidParameter("cobb-douglas equilibria have a closed form".into()))
        }
    };

    let k = a.rows.len() as f64;
    let mut z = p;
    z.extend(beta);
    let mut r = a.apply(&z);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let grad_f: Vec<f64> = s.iter().copied().chain((0..n).map(|i| -b[i] / z[m + i])).collect();
        let aty = a.apply_t(&y);
        let rd: Vec<f64> = grad_f.iter().zip(&aty).map(|(g, t)| g - t).collect();
        let az = a.apply(&z);
        let rp: Vec<f64> = az.iter().zip(&r).map(|(x, w)| x - w).collect();
        let gap: f64 = y.iter().zip(&r).map(|(a, b)| a * b).sum();
        let mu = gap / k;
        let rd_max = rd.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let grad_max = grad_f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        residual = gap / total_budget;
        if (gap < 1e-13 * total_budget && rd_max < 1e-11 * grad_max) || gap < 1e-15 * total_budget {
            return Ok(extract(market, &z, &y));
        }

        let d: Vec<f64> = y.iter().zip(&r).map(|(a, b)| a / b).collect();
        let mut h = a.gram(&d);
        for i in 0..n {
            h[(m + i, m + i)] += b[i] / (z[m + i] * z[m + i]);
        }
        let chol = factor(h)?;
        let d_rp: Vec<f64> = d.iter().zip(&rp).map(|(a, b)| a * b).collect();
        let at_drp = a.apply_t(&d_rp);

        let newton = |rc: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            let rc_r: Vec<f64> = rc.iter().zip(&r).map(|(c, w)| c / w).collect();
            let at_rcr = a.apply_t(&rc_r);
            let rhs = DVector::from_iterator(
                m + n,
                (0..m + n).map(|c| -rd[c] - at_drp[c] + at_rcr[c]),
            );
            let dz: Vec<f64> = chol.solve(&rhs).iter().copied().collect();
            let adz = a.apply(&dz);
            let dy: Vec<f64> = (0..y.len()).map(|q| -d[q] * (rp[q] + adz[q]) + rc_r[q]).collect();
            let dr: Vec<f64> = (0..y.len()).map(|q| (rc[q] - r[q] * dy[q]) / y[q]).collect();
            (dz, dy, dr)
        };

        let rc_aff: Vec<f64> = y.iter().zip(&r).map(|(a, b)| -a * b).collect();
        let (dz, dy, dr) = newton(&rc_aff);
        let alpha = step_length(&y, &dy, 1.0)
            .min(step_length(&r, &dr, 1.0))
            .min(step_length(&z[m..], &dz[m..], 1.0));
        let mu_aff = (0..y.len())
            .map(|q| (y[q] + alpha * dy[q]) * (r[q] + alpha * dr[q]))
            .sum::<f64>()
            / k;
        let mut sigma = libm::pow(mu_aff / mu, 3.0);
        if rd_max > 1e-3 * (gap / total_budget) * grad_max {
            sigma = sigma.max(0.5);
        }
        let rc: Vec<f64> = (0..y.len())
            .map(|q| sigma * mu - y[q] * r[q] - dy[q] * dr[q])
            .collect();
        let (dz, dy, dr) = newton(&rc);
        let alpha = step_length(&y, &dy, BOUNDARY_FRACTION)
            .min(step_length(&r, &dr, BOUNDARY_FRACTION))
            .min(step_length(&z[m..], &dz[m..], BOUNDARY_FRACTION));
        for (a, d) in z.iter_mut().zip(&dz) {
            *a += alpha * d;
        }
        for (a, d) in y.iter_mut().zip(&dy) {
            *a += alpha * d;
        }
        for (a, d) in r.iter_mut().zip(&dr) {
            *a += alpha * d;
        }
        if !z.iter().chain(&y).all(|q| q.is_finite()) {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        residual,
    })
}

// Equilibrium prices need not be unique, in which case the system turns
// singular near the solution. A small diagonal shift keeps it solvable.
fn factor(h: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = h.diagonal().iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut shifted = h.clone();
        for c in 0..shifted.nrows() {
            shifted[(c, c)] += shift;
        }
        if let Some(chol) = shifted.cholesky() {
            return Ok(chol);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    Err(Error::Singular)
}

fn extract(market: &FisherMarket, z: &[f64], y: &[f64]) -> IpmSolution {
    let (n, m) = (market.buyers(), market.goods());
    let prices = z[..m].to_vec();
    match market.kind() {
        UtilityKind::Linear => IpmSolution {
            prices,
            allocation: (0..n).map(|i| y[i * m..(i + 1) * m].to_vec()).collect(),
            leftover: None,
        },
        _ => {
            let v = market.valuations();
            IpmSolution {
                prices,
                allocation: (0..n).map(|i| v[i].iter().map(|vij| y[i] * vij).collect()).collect(),
                leftover: Some(y[n..].to_vec()),
            }
        }
    }
}
