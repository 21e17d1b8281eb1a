//! Overdamped RSJ junction under harmonic bias, `phi' + sin(phi) = B + A cos(omega t)`,
//! solved through its exact reduction to a double confluent Heun equation.
//!
//! The crate builds the Heun polynomial solutions and their spectral
//! constraints, and ships brute-force numerical routes (RK4 integration,
//! cofactor determinants, quadrature) to certify every closed-form object.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod heun_poly;
pub mod io;
pub mod model;
pub mod poly;
pub mod quad;
pub mod rsj_dynamics;
pub mod spectral;
pub mod structure;
pub mod transforms;

pub use error::{Error, Result};
pub use model::{
    dche_to_params, params_to_dche, DcheCandidate, DcheParams, HeunPolynomial, PhaseTrajectory,
    RsjParams, Sign, Trajectory, XyTrajectory,
};
