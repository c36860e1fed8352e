//! Finite-volume quantum lattice systems: exact Gibbs states, the KMS
//! fixed-point equation, cluster expansions, spin correlation inequalities
//! and complex-rotation correlation bounds.

pub mod clusters;
pub mod commutator_decomposition;
pub mod error;
pub mod gibbs;
pub mod graph;
pub mod interaction;
pub mod kms_fixed_point;
pub mod mermin_wagner;
pub mod operators;
pub mod spin_inequalities;

pub use error::{Error, Result};
pub use graph::Graph;
pub use interaction::{Couplings, Interaction};
pub use operators::{DenseOperator, SiteSet, SpinValue, C64};
