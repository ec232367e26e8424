//! Exact finite-instance laws and the enumeration oracle.

pub mod compositions;
mod laws;
pub mod oracle;
mod pmf;

pub use compositions::{bounded_compositions, simplex_max_cdf, SimplexMaxProb};
pub use laws::{
    hub_law, joint_cdf, marginal_law, max_law, partition_function, total_population_law, PartitionFunction,
    JOINT_CDF_MAX_QUEUES,
};
pub(crate) use laws::{concave_conv, unbounded_level, LogSeq, Population};
pub use oracle::Oracle;
pub use pmf::Pmf;
