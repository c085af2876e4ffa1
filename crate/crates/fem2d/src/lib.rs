//! Adaptive 2D finite element library with equilibrated flux (Raviart-Thomas)
//! and gradient (Nedelec) recovery a posteriori error estimators for odd-order
//! nonconforming and interior-penalty DG approximations of diffusion problems
//! with discontinuous coefficients.

pub mod coeff;
pub mod dgfem;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod ncfem;
pub mod poly;
pub mod problems;
pub mod quad;
pub mod recovery;
pub mod sparse;

pub use error::FemError;

pub type Result<T> = std::result::Result<T, FemError>;
