pub mod error;
pub mod cli;
pub mod fourier;
pub mod iou_metrics;
pub mod quadrature;
pub mod segmap;
pub mod spectral_ce;
pub mod spectral_grad;
pub mod stats;
pub mod synth;
pub mod truncation;

pub use error::{Error, Result};
