//! Color local binary pattern face identification with wavelet-domain
//! illumination correction.
//!
//! Images are enhanced ([`illumination`]), the face is cropped with a skin
//! model ([`segmentation`]), each color channel is described by regional LBP
//! histograms ([`features`]) and compared with a symmetric KL distance
//! ([`matching`]). Per-channel results are combined in [`fusion`].

pub mod analysis;
pub mod color;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod features;
pub mod fusion;
pub mod gallery;
pub mod histogram;
pub mod illumination;
pub mod matching;
pub mod pipeline;
pub mod raster;
pub mod segmentation;
pub mod synth;

pub use error::{Error, Result};
