//! Document image binarization toolkit.
//!
//! The crate is organized around the three processing stages and the
//! evaluation harness:
//!
//! - [`raster`]: pixel containers, channel split, bicubic resampling, Otsu and
//!   fixed-threshold binarization, image file IO.
//! - [`patching`]: lossless tiling into fixed-size patches and reassembly.
//! - [`wavelet`]: single-level 2-D Haar analysis/synthesis and sigmoid
//!   intensity normalization (the per-channel preprocessing stage).
//! - [`pipeline`]: per-channel ground-truth synthesis, pluggable enhancers,
//!   channel fusion and local/global prediction fusion.
//! - [`metrics`]: FM, pseudo-FM, PSNR, DRD, NUBN and Avg-Score.
//! - [`cli`]: dataset ingestion, patch manifests, batch commands and reports.

pub mod cli;
pub mod error;
pub mod metrics;
pub mod patching;
pub mod pipeline;
pub mod raster;
pub mod wavelet;

pub use error::{Error, Result};
pub use raster::{BinaryMask, ChannelBundle, FloatPlane, Raster};
