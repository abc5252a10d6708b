pub mod densities;
pub mod error;
pub mod functionals;
pub mod jet;
pub mod quadrature;
pub mod inequalities;
pub mod transforms;
pub mod verification;

pub use densities::{Density, Family, Modifier};
pub use error::{Error, Result};
pub use quadrature::{Interval, QuadratureConfig, QuadratureResult};
