//! Reduced-order diffeomorphic registration.
//!
//! Landmark and jet-particle geodesic shooting on finite-dimensional
//! configuration spaces, together with the lattice discretization of image
//! matching. The velocity field is always a finite kernel combination
//! supported at the particles, so every registration problem becomes an ODE
//! on `(positions, momenta)` plus an optimisation over the initial momentum.
//!
//! The numeric core is generic over [`Scalar`]; `f64` aliases are provided
//! at the crate root for the common case.

pub mod dynamics;
pub mod error;
pub mod image;
pub mod kernel;
pub mod matching;
pub mod scalar;
pub mod state;
pub mod tensor;

pub use error::{Error, Result};
pub use kernel::{eval_k, eval_k_deriv, gram_matrix, GramMatrix, KernelConfig, MultiIndex};
pub use scalar::{Dual, Scalar};
pub use state::{
    format_phase_point, parse_landmarks, parse_phase_point, project_order, read_landmarks, read_state, write_state,
    FlatLayout, JetMomentum, JetOrder, JetState, PhasePoint,
};

pub type KernelConfig64 = KernelConfig<f64>;
pub type JetState64 = JetState<f64>;
pub type JetMomentum64 = JetMomentum<f64>;
pub type PhasePoint64 = PhasePoint<f64>;
pub type RasterImage64 = image::RasterImage<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type FlowMap64 = dynamics::FlowMap<f64>;
pub type ShootingProblem64 = matching::ShootingProblem<f64>;
pub type Target64 = matching::Target<f64>;
