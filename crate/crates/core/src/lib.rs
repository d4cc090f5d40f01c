//! Exact Shapley values and Shapley interaction indices of multilinear
//! tensor-network models.
//!
//! A model evaluates `g(x̃₁, …, x̃ₙ) = 𝒯 ×₁ x̃₁ ⋯ ×ₙ x̃ₙ` on lifted inputs
//! `x̃ᵢ = [φᵢ(xᵢ), 1]`. Switching a feature off replaces its lift by the
//! bias-only vector, so coalition values are contractions of the network.
//! Scaling the data channels of all non-target legs by `t` turns each
//! index into a polynomial in `t` of degree at most `n − k`, which is
//! recovered from `n − k + 1` contractions at Chebyshev nodes.
//!
//! Modules:
//! - [`tensor`]: dense tensors, tensor-train and binary-tree networks
//! - [`lift`]: feature maps and diagonal selectors
//! - [`attribute`]: probe interpolation (`explain`)
//! - [`oracle`]: exhaustive `2ⁿ` enumeration, exact indices, Möbius transforms
//! - [`fit`]: synthetic teachers, ALS student fitting and quality metrics
//! - [`io`]: model JSON and attribution CSV

pub mod attribute;
pub mod error;
pub mod fit;
pub mod io;
pub mod lift;
pub mod map;
pub mod oracle;
pub mod tensor;

pub use attribute::{explain, explain_batch, AttributionSet, ExplainOptions, ProbeMode, Subsets};
pub use error::{Error, Result};
pub use lift::{FeatureMap, LiftSpec};
pub use map::MultilinearMap;
pub use tensor::{DenseTensor, TensorNetworkModel, TnTopology, TopologyKind};
