//! Geodesic dynamics of jet particles: velocity field, energy, equations of
//! motion, time integration and transport of jets along the flow.

pub mod flow;
pub mod hamiltonian;
pub mod integrate;
pub mod rhs;
pub mod transport;
pub mod velocity;

pub use flow::{flow_map, flow_points, FlowMap, SeedJet};
pub use hamiltonian::{hamiltonian, hamiltonian_momentum_gradient, momentum_coefficients};
pub use integrate::{integrate, IntegratorConfig, Trajectory};
pub use rhs::{rhs, rhs_flat, rhs_vjp, PhaseTangent};
pub use transport::{pairing, pull_back_vector_jet, push_forward_vector_jet, pushforward_momentum, MapJet, VectorJet};
pub use velocity::{velocity_at, VelocityField, VelocityJet};
