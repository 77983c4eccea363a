//! Detection of GAN-generated ("deep") face morphs with handcrafted
//! features.
//!
//! The pipeline resizes every image to a canonical grayscale grid, extracts
//! LBP histograms ([`lbp`]) or radially averaged Fourier spectra
//! ([`spectral`]), trains a two-class LDA ([`linear`]) and evaluates it with
//! AUC and EER ([`metrics`]) under intra- and cross-dataset protocols
//! ([`protocol`]). Pairs of systems can be fused at score level with
//! logistic regression. [`synthfix`] generates deterministic stand-in
//! datasets.

pub mod image;
pub mod lbp;
pub mod linear;
pub mod metrics;
pub mod protocol;
pub mod spectral;
pub mod synthfix;
