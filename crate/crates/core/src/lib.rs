//! Learning dynamics for min-max Stackelberg games with dependent strategy
//! sets, online Fisher markets, and equilibrium tracking under drift.
//!
//! The crate is `no_std` (it needs `alloc`). Floating-point math goes
//! through `libm` so results are identical across targets.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod fisher;
pub mod game;
pub mod games;
pub mod losses;
pub mod mirror;
pub mod online;
pub mod rng;
pub mod solvers;
mod vec;

pub use error::{Error, Result};
pub use game::{Profile, StackelbergGame};
pub use mirror::{FeasibleSet, Halfspace, Regularizer, StepSchedule};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
