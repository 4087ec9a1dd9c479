//! Blind video super-resolution.
//!
//! The building blocks follow the degradation model
//! `L_j = S · K · warp(I, u_j) + n_j`:
//!
//! - [`operators`]: blur, decimation, derivative filters and warping with exact adjoints
//! - [`estimator`]: blur-kernel estimation from HR/LR pairs
//! - [`deconv`]: gradient-regularized deconvolution of one LR frame
//! - [`flow`]: optical flow and guide alignment
//! - [`pipeline`]: the three-frame super-resolution driver
//! - [`metrics`]: PSNR, SSIM and the kernel-accuracy protocol

pub mod deconv;
pub mod error;
pub mod estimator;
pub mod flow;
pub mod image;
pub mod io;
pub mod metrics;
pub mod operators;
pub mod pipeline;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use image::{Frame, Sequence};
pub use operators::{BlurKernel, FlowField};
