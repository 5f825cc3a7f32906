//! Object-detection evaluation toolkit: COCO-style AP/AR, upper-bound AP from
//! classifier predictions, staged error diagnosis, and generation of
//! invariance-analysis dataset variants.

pub mod datamodel;
pub mod diagnosis;
pub mod evaluator;
pub mod geometry;
pub mod seed;
pub mod transforms;
pub mod upperbound;

mod error;

pub use error::{Error, Result};
