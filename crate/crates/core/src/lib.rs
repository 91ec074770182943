//! Actively coupled sensor configuration and path planning.
//!
//! An ego vehicle crosses a gridded workspace through an unknown,
//! time-varying threat field while a small fleet of mobile sensors is
//! greedily repositioned to reduce uncertainty in the cost of the ego's
//! planned path. The crate provides the field model, a Kalman estimator,
//! the planner, the information reward, the episode engine, evaluation
//! metrics and an experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crmi;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod estimation;
pub mod harness;
pub mod planning;
pub mod threat;
pub mod workspace;

pub use error::{Error, Result};
