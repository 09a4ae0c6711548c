//! Rate computations for the discrete memoryless and additive Gaussian relay
//! channel whose state is known strictly causally at the relay, with
//! finite-capacity conferencing links between source and relay.
//!
//! The crate computes:
//!
//! - the general lower bound on capacity over factored input distributions
//!   with a coordination codeword `U` and a state description `V`,
//! - the cut-set upper bound,
//! - closed-form capacities that hold under structural kernel conditions
//!   (deterministic output, identifiable state), with and without
//!   conferencing,
//! - the binary modulo-additive example and the additive Gaussian model with
//!   their closed forms, and
//! - Monte Carlo plug-in estimates of every information term, as an
//!   implementation-independent oracle.
//!
//! All searches are deterministic: fixed seeds, fixed grids, and
//! thread-count-independent reductions. Every maximization returns a
//! [`RateResult`] carrying a certificate that reproduces the reported rate.

pub mod channel;
pub mod dm;
pub mod error;
pub mod gaussian;
pub mod mc;
pub mod modulo;
pub mod opt;
pub mod prob;
pub mod result;

pub use channel::{CostConstraint, DmChannelSpec, InnerDistribution};
pub use error::{Error, Result};
pub use gaussian::{GaussianParams, GaussianSpec, GridConfig};
pub use modulo::BinaryModuloParams;
pub use opt::{OptimizerTrace, SearchConfig};
pub use prob::{JointPmf, Variable};
pub use result::{Certificate, Objective, RateResult};
