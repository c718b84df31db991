//! Reconstruction of objects seen through strongly scattering media from
//! camera-array light fields.
//!
//! The pipeline refocuses the multi-view capture onto the object plane, which
//! turns the ballistic projections into a diffuse source blurred by the
//! medium's diffusion Green function, and then inverts that blur with a
//! Wiener filter built from the analytic kernel. A Monte Carlo slab simulator
//! provides synthetic captures with known ground truth.

// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backscatter;
pub mod deconv;
pub mod diffusion;
pub mod error;
mod fft;
pub mod geometry;
pub mod image;
pub mod io;
pub mod kernel;
pub mod lightfield;
pub mod mcscatter;
pub mod metrics;
pub mod refocus;

pub use deconv::{conv2, wiener_deconv, Padding, WienerConfig};
pub use diffusion::{rasterize_kernel, DiffuseKernel, MediumParams};
pub use error::{Error, Result};
pub use fft::next_fast_len;
pub use geometry::{map_object_to_sensor, CameraArrayGeometry, ObjectPlane, ViewIndex};
pub use image::Image;
pub use kernel::Kernel2D;
pub use lightfield::LightField;
pub use metrics::{psnr, ssim, QualityReport};
pub use refocus::{refocus, RefocusConfig};
