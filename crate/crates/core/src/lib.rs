//! Geometric consistency sets for self-supervised 2D representation learning.
//!
//! The crate builds a pipeline from 3D scene geometry to contrastive training
//! signals for 2D feature maps:
//!
//! - [`geometry`]: point clouds, normal estimation, k-NN adjacency and
//!   synthetic desk-scale scenes.
//! - [`segmentation`]: normal-based graph-cut over-segmentation producing the
//!   geometric consistency sets.
//! - [`projection`]: pinhole projection of the sets into posed RGB-D views,
//!   depth-validity filtering, overlap-based pair mining and match indices.
//! - [`contrast`]: pixel InfoNCE, set InfoNCE and pixel-to-point InfoNCE with
//!   analytic gradients.
//! - [`metrics`]: coding rate, intra-set similarity and PCA visualisation.
//! - [`trainer`]: a two-stage SGD trainer over per-pixel embedding tables.
//! - [`io`] and [`cli`]: file formats and the `geoset` command-line driver.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod contrast;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod projection;
pub mod segmentation;
pub mod trainer;

pub use error::{Error, Result};
