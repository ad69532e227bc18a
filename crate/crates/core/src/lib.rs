//! Wavelet-domain scale saliency.
//!
//! The pipeline decomposes a grayscale [`Image`] with one of four wavelet
//! back-ends ([`wavelet`]), turns the sub-bands into per-pixel energy
//! descriptors ([`descriptors`]), and scores every pixel by the entropy of
//! its inter-band energy distribution weighted by the information gained
//! between consecutive scales ([`saliency`]). A pixel-histogram scale
//! saliency baseline ([`pss`]) and fixation-based scoring ([`eval`]) sit
//! alongside for comparison.

pub mod descriptors;
pub mod error;
pub mod eval;
pub mod imagedata;
pub mod pss;
pub mod saliency;
pub mod wavelet;

pub use error::{Error, Result};
pub use imagedata::{FixationSet, Image, SaliencyMap};
