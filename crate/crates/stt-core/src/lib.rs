//! Tensor-train surrogate modeling and compressed Sobol sensitivity indices.
//!
//! The crate builds low-rank tensor-train (TT) surrogates of multiparametric
//! models — by adaptive cross approximation of a black box, by alternating
//! least squares completion of scattered samples, or by conversion from
//! CP/Tucker/polynomial-chaos representations — and extracts from them a
//! 2x...x2 "Sobol tensor train" that holds all 2^N - 1 variance-based
//! sensitivity indices at once. Aggregated index families (superset, closed,
//! total) are slice-level linear transforms of that tensor, and mask-based
//! queries (per-order contributions, constrained argmax/top-k) run directly
//! in the compressed domain.
//!
//! The `stt` binary exposes the pipeline: build a surrogate, extract the
//! Sobol tensor, aggregate, query, report.

pub mod aggregate;
pub mod error;
pub mod grid;
mod linalg;
pub mod models;
pub mod sample;
pub mod sobol;
pub mod tt;

pub use error::{Result, SttError};
pub use grid::{Coord, Grid, GridAxis};
pub use sample::{Sample, SampleSet, Split};
pub use sobol::{anova_term, sobol_star, sobol_tensor, SobolTt};
pub use tt::{TtTensor, Weights};
