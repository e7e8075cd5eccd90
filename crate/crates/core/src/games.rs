//! Bundled test games with closed-form oracles.
//!
//! Both games live on `X = Y = [-1, 1]` with the coupling constraint
//! `g(x, y) = 1 - x - y >= 0`.
//!
//! * [`ExampleGame::degenerate`]: `f = x^2 + y + 1`. The Stackelberg
//!   equilibrium is `(1/2, 1/2)` with value `7/4`. With `lambda* = 1` the
//!   Lagrangian `x^2 - x + 2` does not depend on `y`.
//! * [`ExampleGame::strictly_concave`]: `f = x^2 - y^2 + y + 1`. The
//!   equilibrium is `(0, 1/2)` with value `5/4`, and `lambda* = 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::game::{StackelbergGame, FEASIBILITY_TOL};
use crate::mirror::{FeasibleSet, Halfspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerObjective {
    Linear,
    StrictlyConcave,
}

#[derive(Debug, Clone)]
pub struct ExampleGame {
    pub inner: InnerObjective,
    set: FeasibleSet,
}

impl ExampleGame {
    pub fn degenerate() -> Self {
        Self::new(InnerObjective::Linear)
    }

    pub fn strictly_concave() -> Self {
        Self::new(InnerObjective::StrictlyConcave)
    }

    fn new(inner: InnerObjective) -> Self {
        ExampleGame {
            inner,
            set: FeasibleSet::Box {
                lower: vec![-1.0],
                upper: vec![1.0],
            },
        }
    }

    fn df_dy(&self, y: f64) -> f64 {
        match self.inner {
            InnerObjective::Linear => 1.0,
            InnerObjective::StrictlyConcave => 1.0 - 2.0 * y,
        }
    }

    fn h(&self, y: f64) -> f64 {
        match self.inner {
            InnerObjective::Linear => y + 1.0,
            InnerObjective::StrictlyConcave => -y * y + y + 1.0,
        }
    }

    /// The multiplier of the coupling constraint at the equilibrium.
    pub fn lambda_star(&self) -> f64 {
        match self.inner {
            InnerObjective::Linear => 1.0,
            InnerObjective::StrictlyConcave => 0.0,
        }
    }

    /// Minimizer of the value function.
    pub fn outer_solution(&self) -> f64 {
        match self.inner {
            InnerObjective::Linear => 0.5,
            InnerObjective::StrictlyConcave => 0.0,
        }
    }

    pub fn equilibrium(&self) -> (f64, f64) {
        let x = self.outer_solution();
        (x, self.best_response_scalar(x))
    }

    /// `min_x V(x)`
    pub fn optimal_value(&self) -> f64 {
        match self.inner {
            InnerObjective::Linear => 1.75,
            InnerObjective::StrictlyConcave => 1.25,
        }
    }

    fn best_response_scalar(&self, x: f64) -> f64 {
        let unconstrained: f64 = match self.inner {
            InnerObjective::Linear => 1.0,
            InnerObjective::StrictlyConcave => 0.5,
        };
        unconstrained.min(1.0 - x).max(-1.0)
    }

    /// `max_{y in Y} L(x, y, lambda*)`
    pub fn lagrangian_inner_max(&self, x: f64) -> f64 {
        match self.inner {
            InnerObjective::Linear => x * x - x + 2.0,
            InnerObjective::StrictlyConcave => x * x + 1.25,
        }
    }

    /// `min_{x in X} L(x, y, lambda*)`
    pub fn lagrangian_outer_min(&self, y: f64) -> f64 {
        match self.inner {
            InnerObjective::Linear => 1.75,
            InnerObjective::StrictlyConcave => self.h(y),
        }
    }

    /// `argmin_{x in X} (1/T) sum_t L(x, y_t, lambda*)`. The Lagrangian is
    /// separable, so this does not depend on the `y_t`.
    pub fn lagrangian_outer_argmin(&self) -> f64 {
        self.outer_solution()
    }

    /// `argmax_{y in Y} (1/T) sum_t L(x_t, y, lambda*)`; `None` when every y
    /// attains it.
    pub fn lagrangian_inner_argmax(&self) -> Option<f64> {
        match self.inner {
            InnerObjective::Linear => None,
            InnerObjective::StrictlyConcave => Some(0.5),
        }
    }

    /// `max_{X x Y} |grad_x L(x, y, lambda*)|`
    pub fn lagrangian_lipschitz(&self) -> f64 {
        match self.inner {
            InnerObjective::Linear => 3.0,
            InnerObjective::StrictlyConcave => 2.0,
        }
    }

    /// `max_{x in X} |x|`, equal to `max_{y in Y} |y|`.
    pub fn radius(&self) -> f64 {
        1.0
    }
}

impl StackelbergGame for ExampleGame {
    fn outer_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn inner_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        x[0] * x[0] + self.h(y[0])
    }

    fn grad_x_objective(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![2.0 * x[0]]
    }

    fn grad_y_objective(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![self.df_dy(y[0])]
    }

    fn constraints(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![1.0 - x[0] - y[0]]
    }

    fn grad_x_constraints(&self, _x: &[f64], _y: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![-1.0]]
    }

    fn grad_y_constraints(&self, _x: &[f64], _y: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![-1.0]]
    }

    fn best_response(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![self.best_response_scalar(x[0])])
    }

    // Stationarity of the inner problem reads df/dy - lambda + mu_box = 0.
    // When the box bound y <= 1 is active as well, lambda = 0 is the
    // minimum-norm choice.
    fn kkt_multipliers(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let g = 1.0 - x[0] - y[0];
        let active = g.abs() <= FEASIBILITY_TOL;
        let at_box = y[0] >= 1.0 - FEASIBILITY_TOL;
        let lambda = if active && !at_box { self.df_dy(y[0]).max(0.0) } else { 0.0 };
        Some(vec![lambda])
    }

    fn global_multiplier(&self) -> Option<Vec<f64>> {
        Some(vec![self.lambda_star()])
    }

    fn inner_halfspaces(&self, x: &[f64]) -> Option<Vec<Halfspace>> {
        Some(vec![Halfspace::new(vec![1.0], 1.0 - x[0])])
    }
}
