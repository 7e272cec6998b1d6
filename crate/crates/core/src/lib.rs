//! Unbalanced optimal transport for the quadratic cost through its semi-dual.
//!
//! The crate is organised bottom-up: [`measures`] and [`entropy`] provide the
//! inputs, [`potentials`] the strongly convex search classes with their
//! conjugates, [`semidual`] the objective and its diagnostics,
//! [`primal`] an independent solver over couplings, [`estimator`] the
//! empirical potential, and [`harness`] the rate experiments and CLI glue.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod measures;
pub mod numeric;
pub mod potentials;
pub mod primal;
pub mod semidual;

pub use entropy::{Entropy, EntropyKind};
pub use error::{Error, Result};
pub use measures::{DensitySpec, DiscreteMeasure, Seed};
pub use potentials::{GridSpec, Potential, PotentialClass, PotentialKind, PotentialSpec};
pub use estimator::{fit, uot_estimate, FitConfig, FitResult};
pub use primal::{solve_primal, Coupling, PrimalOptions, PrimalSolution};
pub use semidual::{SemiDualProblem, StabilityReport};
