//! Numerical workbench for graded quasi-local structure on finite fermion
//! chains: CAR algebra, standard potentials, Gibbs/KMS states, relative and
//! conditional entropy, and local thermal stability checks.

pub mod car;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod interaction;
pub mod linalg;
pub mod report;
pub mod stability;
pub mod symmetry;
pub mod state;

pub use error::{Error, Result};
