//! Quasi-static phase-field fracture in two dimensions for cracks driven
//! by fluid pressure and a temperature drop.

pub mod analytic;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod params;
pub mod physics;
pub mod postprocess;
pub mod scalar;
pub mod simulation;
pub mod solver;
pub mod thermal;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mesh = mesh::QuadMesh<f64>;
pub type DofMap = fem::DofMap<f64>;
pub type Elasticity = physics::Elasticity<f64>;
pub type Strain = physics::Strain2<f64>;
pub type Coefficients = fem::Coefficients<f64>;
pub type Sim = simulation::Simulation<f64>;
