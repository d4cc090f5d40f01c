//! Dense storage, topologies and contraction of tensor-network models.

mod dense;
mod model;
mod topology;

pub use dense::DenseTensor;
pub use model::{TensorNetworkModel, DEFAULT_MATERIALIZE_LIMIT};
pub(crate) use model::dot;
pub use topology::{TnTopology, TopologyKind};
