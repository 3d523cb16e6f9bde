//! Quantitative transversality on a flat model.
//!
//! - [`transversality`]: surjectivity moduli and the linear inequalities.
//! - [`integral_geometry`]: Grassmannian sampling, Crofton volumes, Vitushkin variations, packings.
//! - [`polynomial`]: polynomial maps, near-critical points, elimination, good regular values.
//! - [`model`]: the Bargmann model of a prequantum bundle, concentration estimates, nets.
//! - [`donaldson`]: the stage schedule, local and scattered perturbations, globalization.

pub mod error;
pub mod mc;
pub mod transversality;

pub use error::{Error, Result};
pub mod integral_geometry;
pub mod polynomial;
pub mod model;
pub mod donaldson;
