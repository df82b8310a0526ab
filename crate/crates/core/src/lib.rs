//! Greedy energy sequences on spheres: kernels, minimizers, sequence
//! builders and the diagnostics that compare them with asymptotics.

pub mod analysis;
pub mod checkpoint;
pub mod circle;
pub mod error;
pub mod greedy;
pub mod green_runs;
pub mod kernels;
pub mod optimize;
mod par;
pub mod quad;
pub mod report;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};
pub use greedy::{build_sequence, energy, extend_sequence, polarization, Configuration};
pub use kernels::{KernelKind, KernelSpec};
pub use optimize::{minimize_potential, potential, potential_gradient, MinResult, SolverParams};
pub use sphere::SpherePoint;
