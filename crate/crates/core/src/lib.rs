//! A first-order convex optimization testbed.
//!
//! Projected subgradient descent together with the hard function families
//! behind query lower bounds for it. Monte Carlo estimators check the
//! probabilistic facts those lower bounds rely on.
//!
//! Indices are 0-based everywhere.

pub mod error;
pub mod groupquery;
pub mod instances;
pub mod linalg;
pub mod optimize;
pub mod oracle;
pub mod random;
pub mod verify;
pub mod wall;

/// Version of this library, recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use instances::{Family, Instance, MaxCoordInstance, NemYudInstance, Sign};
pub use linalg::{project_ball, DenseVector};
pub use oracle::{Disclosure, FirstOrderOracle, OracleAnswer, Projection, WallBranch};
pub use random::{OrthonormalTuple, RngStream};
pub use wall::{WallInstance, WallParams};
