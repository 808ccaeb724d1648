//! The simulated true plant: the only holder of the true parameters.

use crate::dynamics::SystemModel;
use crate::error::Result;
use crate::param_space::{LumpedParams, ParamPolytope, MEMBERSHIP_TOL};
use nalgebra::DVector;
use std::sync::atomic::{AtomicUsize, Ordering};

/// True system `ẋ = Θ X(x, u)`. The parameters are private: the only way to
/// use them is [`TruePlant::derivative`], and every use is counted.
#[derive(Debug)]
pub struct TruePlant {
    theta: LumpedParams,
    reads: AtomicUsize,
}

impl TruePlant {
    pub fn new(theta: LumpedParams) -> Self {
        Self { theta, reads: AtomicUsize::new(0) }
    }

    /// Plant dynamics for the measured state and applied input.
    pub fn derivative(&self, sys: &SystemModel, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.reads.fetch_add(1, Ordering::Relaxed);
        sys.rhs(&self.theta, t, x, u)
    }

    /// Number of dynamics evaluations performed so far.
    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::Relaxed)
    }

    /// Test-side membership check (does not count as a dynamics read).
    pub fn inside(&self, set: &ParamPolytope, tol: f64) -> Result<bool> {
        set.contains(&self.theta, tol)
    }

    /// Test-side distance check (does not count as a dynamics read).
    pub fn distance_to(&self, set: &ParamPolytope) -> Result<f64> {
        set.distance(&self.theta)
    }

    /// Validation that the truth lies in the admissible set.
    pub fn check_admissible(&self, psi: &ParamPolytope) -> Result<bool> {
        psi.contains(&self.theta, MEMBERSHIP_TOL)
    }
}
