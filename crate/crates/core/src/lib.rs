//! State-lattice motion planning with online parameter identification for
//! systems whose dynamics are linear in an uncertain parameter matrix.
//!
//! The crate is organised bottom-up:
//!
//! * [`param_space`] — parameter matrices and polytopes (diameter, projection, membership).
//! * [`dynamics`] — linearly parameterized models, RK4 integration, quadrotor instances.
//! * [`adaptive_id`] — multi-model vertex identifier shrinking the model set online.
//! * [`tube_control`] — feedforward/feedback correction keeping the plant in a tube.
//! * [`primitives`] — lattice, boundary-value primitive generation, primitive library.
//! * [`planner`] — constraint tightening, nominal selection and A* lattice search.
//! * [`harness`] — scenarios, repeated-execution campaigns, metrics and plots.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive_id;
pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod numfmt;
pub mod param_space;
pub mod planner;
pub mod primitives;
pub mod tube_control;

pub use error::{Error, Result};
