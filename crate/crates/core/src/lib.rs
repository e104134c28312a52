pub mod analysis;
pub mod energy;
pub mod error;
pub mod kernels;
pub mod lattice;
pub mod profiles;
pub mod quadrature;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
