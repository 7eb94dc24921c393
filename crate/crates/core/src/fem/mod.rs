//! Q1 finite elements on the quadtree mesh.

pub mod assembly;
pub mod dofs;
pub mod element;
pub mod sparse;

pub use assembly::{assemble, energies, lumped_mass, Energies, System};
pub use element::Coefficients;
pub use dofs::DofMap;
pub use sparse::CsrMatrix;
