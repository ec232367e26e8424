//! Exact, asymptotic and simulated laws of the largest queue in a closed network made of
//! one infinite-server hub and `n` single-server queues.
//!
//! ```
//! use closednet::{exact, NetworkSpec};
//!
//! let spec = NetworkSpec::homogeneous(2, 2, 1.0);
//! let max = exact::max_law(&spec).unwrap();
//! assert!((max.cdf(1) - 7.0 / 11.0).abs() < 1e-12);
//! ```

pub mod asymptotics;
pub mod cli;
mod error;
pub mod exact;
pub mod model;
pub mod numerics;
pub mod simplex;
pub mod simulate;

pub use error::{Error, Result};
pub use exact::Pmf;
pub use model::{classify, NetworkSpec, Regime, RegimeReport};
pub use numerics::LogWeight;
