//! Exact full counting statistics from the tilted generator.
//!
//! All operations are pure functions of their inputs. Evaluations at
//! different counting fields are independent and can be dispatched in
//! parallel without coordination.

mod cumulants;
mod distribution;
mod eigen;
mod n1;
mod transient;

pub use cumulants::{
    cross_check_cumulants, cross_check_cumulants_default, default_fd_step, stationary_cumulants,
    FD_REFINE_TOLERANCE,
    FiniteDifferenceReport, MAX_FD_ORDER, MAX_RECURSION_ORDER,
};
pub use distribution::{
    counting_distribution, counting_distribution_with, CountingDistribution, DistributionOptions,
};
pub use eigen::{
    dominant_eigenvalue, dominant_eigenvalue_with, EigenOptions, EigenSolver, DEFAULT_MAX_STEP,
    DENSE_DIM_THRESHOLD,
};
pub use n1::{analytic_cgf_n1, analytic_cumulants_n1};
pub use transient::{
    finite_time_cumulants, propagate_states, propagate_transient, InitialState, PropagatedState,
    TransientCGF, TransientOptions,
};

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::eom::ClosureKind;

/// How a set of cumulants was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CumulantMethod {
    EigenvalueRecursion,
    FiniteDifference,
    AnalyticN1,
    EomClosure(ClosureKind),
}

impl fmt::Display for CumulantMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CumulantMethod::EigenvalueRecursion => write!(f, "eigenvalue-recursion"),
            CumulantMethod::FiniteDifference => write!(f, "finite-difference"),
            CumulantMethod::AnalyticN1 => write!(f, "analytic-N1"),
            CumulantMethod::EomClosure(k) => write!(f, "eom-closure-{k}"),
        }
    }
}

/// Stationary current cumulants `⟨⟨I_1⟩⟩ … ⟨⟨I_order⟩⟩`, in units of rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    pub order: usize,
    pub values: Vec<f64>,
    pub method: CumulantMethod,
}

impl CumulantSet {
    /// `⟨⟨I_k⟩⟩`, 1-based.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }
}
