//! Landmark, jet and image matching by geodesic shooting.

pub mod optimize;
pub mod shooting;
pub mod target;

pub use optimize::{solve, Diagnostics, Method, OptimizerSettings, Solution, Status};
pub use shooting::{shooting_energy, shooting_energy_and_gradient, shooting_gradient, EnergyParts, ShootingProblem};
pub use target::{dissimilarity, dissimilarity_gradient, ImageTarget, JetTarget, JetWeights, LandmarkTarget, Target};
