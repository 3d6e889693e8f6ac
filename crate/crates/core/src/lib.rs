//! Super compact pairwise (SCPW) model of SIS epidemics on networks whose
//! only structural input is the first three moments of the degree
//! distribution.
//!
//! The crate covers the model itself, its disease-free threshold and
//! bifurcation, endemic equilibria (exact and asymptotic), moment
//! sensitivities, and a stochastic network simulator used as an
//! independent check.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod moments;
pub mod netsim;
pub mod sensitivity;
pub mod sweep;
pub mod threshold;

pub use equilibrium::{solve_endemic, EquilibriumSolution, Method};
pub use error::{Result, ScpwError};
pub use model::{derive_params, NState, ScpwParams};
pub use moments::DegreeMoments;
