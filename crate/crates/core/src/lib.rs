//! Finite-lattice workbench for the functional formalism of perturbative
//! algebraic QFT.

pub mod lattice;
pub mod linalg;
pub mod scalar;
pub mod functionals;
pub mod koszul;
pub mod quantize;
pub mod cones;
pub mod probe;
pub mod sampling;
pub mod suite;
