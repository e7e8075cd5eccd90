use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::Profile;

/// Steps stored in full before the trace starts thinning.
pub const FULL_TRACE_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub lagrangian: f64,
    pub eta: f64,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
}

/// Time-indexed iterates with exact running averages.
///
/// Once more than `capacity` records are held the trace keeps only every
/// `stride`-th step, doubling the stride as needed. Running sums always
/// cover every step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    records: Vec<Record>,
    capacity: usize,
    stride: usize,
    steps: usize,
    sum_x: Vec<f64>,
    sum_y: Vec<f64>,
    /// Per-step inner-loop gap `V(x) - f(x, y_hat)`, only filled by nested
    /// dynamics.
    pub inner_residuals: Vec<f64>,
}

impl IterateTrace {
    pub fn new(dim_x: usize, dim_y: usize) -> Self {
        Self::with_capacity(dim_x, dim_y, FULL_TRACE_STEPS)
    }

    pub fn with_capacity(dim_x: usize, dim_y: usize, capacity: usize) -> Self {
        IterateTrace {
            records: Vec::new(),
            capacity: capacity.max(2),
            stride: 1,
            steps: 0,
            sum_x: vec![0.0; dim_x],
            sum_y: vec![0.0; dim_y],
            inner_residuals: Vec::new(),
        }
    }

    /// Appends step `steps + 1`.
    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>, objective: f64, lagrangian: f64, eta: f64) {
        self.steps += 1;
        let t = self.steps;
        for (s, v) in self.sum_x.iter_mut().zip(&x) {
            *s += v;
        }
        for (s, v) in self.sum_y.iter_mut().zip(&y) {
            *s += v;
        }
        if t % self.stride != 0 {
            return;
        }
        let n = t as f64;
        let x_bar = self.sum_x.iter().map(|s| s / n).collect();
        let y_bar = self.sum_y.iter().map(|s| s / n).collect();
        self.records.push(Record {
            t,
            x,
            y,
            objective,
            lagrangian,
            eta,
            x_bar,
            y_bar,
        });
        if self.records.len() > self.capacity {
            self.stride *= 2;
            let stride = self.stride;
            self.records.retain(|r| r.t % stride == 0);
        }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Number of steps taken, including thinned ones.
    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }

    pub fn is_thinned(&self) -> bool {
        self.stride > 1
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Mean of all steps so far.
    pub fn average(&self) -> Option<Profile> {
        if self.steps == 0 {
            return None;
        }
        let n = self.steps as f64;
        Some(Profile::new(
            self.sum_x.iter().map(|s| s / n).collect(),
            self.sum_y.iter().map(|s| s / n).collect(),
        ))
    }
}

/// Mean of the first `upto` profiles.
pub fn average_iterate(trace: &IterateTrace, upto: usize) -> Result<Profile> {
    if upto == 0 || upto > trace.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "average over {upto} steps requested from a trace of {}",
            trace.len()
        )));
    }
    if upto == trace.len() {
        return Ok(trace.average().expect("nonempty trace"));
    }
    let idx = trace
        .records
        .binary_search_by_key(&upto, |r| r.t)
        .map_err(|_| Error::InvalidParameter(alloc::format!("step {upto} was thinned from the trace")))?;
    let r = &trace.records[idx];
    Ok(Profile::new(r.x_bar.clone(), r.y_bar.clone()))
}
