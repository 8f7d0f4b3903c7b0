pub mod cyclotomic;
pub mod error;
pub mod geometry;
pub mod matrix;
pub mod orientation;
pub mod parallel;
pub mod postprocess;
pub mod problem;
pub mod search;

pub use error::{Error, Result};
