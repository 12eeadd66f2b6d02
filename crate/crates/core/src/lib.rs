//! Cardiac MRI data-engineering toolkit: image containers, NIfTI-1 I/O,
//! preprocessing, landmark-guided myocardial rotation augmentation,
//! procedural phantoms, training-set assembly and segmentation metrics.

pub mod augment;
pub mod constants;
pub mod dataset;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod preprocess;

pub use error::{Error, Result};
