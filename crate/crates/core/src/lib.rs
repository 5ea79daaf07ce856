//! Inhomogeneous random graphs `G(n, K, p)`.
//!
//! Vertices get i.i.d. types from a probability space `(S, μ)` and each pair
//! is joined independently with probability `K(x, y)·p`. The crate computes
//! the deterministic quantities that govern the diameter (partition graphs,
//! `Δ_u`, `Δ_ℓ`, the expansion factor `Φ`), samples graphs at scale, measures
//! exact diameters and runs Monte Carlo checks of the predicted regimes.

pub mod distance;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod graphalg;
pub mod kernel;
pub mod partition;
pub mod regimes;
pub mod rng;
pub mod sampler;

pub use distance::Distance;
pub use error::{Error, Result};
pub use kernel::{Cell, Kernel, Point, TypeSpace};
pub use partition::{DeltaBounds, Partition, PartitionGraph};
