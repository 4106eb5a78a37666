//! Rate-distortion and relevance-complexity regions of the two-agent CEO
//! problem under logarithmic loss, for discrete and vector Gaussian sources.
//!
//! All information quantities are in nats. Gaussian entropies use the
//! circularly-symmetric convention `h = log det(πe Σ)` (no ½ factor).

pub mod error;
pub mod linalg;
pub mod probcore;

pub use error::{Error, Result};
pub mod classify;
pub mod cli;
pub mod dm_ceo;
pub mod gauss_ba;
pub mod gauss_model;
pub mod region;
pub mod region_analytic;

pub use region::{Permutation, PointKind, RegionPoint};
