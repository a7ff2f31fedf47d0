//! Exemplar-based grayscale colorization with per-category feature weights.
//!
//! Images are cut into superpixels, each target superpixel is matched to the
//! reference superpixel that minimizes a weighted sum of four local feature
//! distances, and the matched chroma is refined and spread over the image.
//! The weights are learned per texture cluster from example pairs.

pub mod clustering;
pub mod config;
pub mod crf;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod globalfeat;
pub mod imagecore;
pub mod localfeat;
pub mod matching;
pub mod pipeline;
pub mod spreader;
pub mod superpixel;
pub mod synthetic;
pub mod trainer;

pub use config::Config;
pub use error::{Error, Result};
