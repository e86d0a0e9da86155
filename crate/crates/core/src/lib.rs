pub mod anatomy;
pub mod arith;
pub mod compress;
pub mod diagonal;
pub mod error;
pub mod harness;
pub mod model;
pub mod quality;
pub mod resolution;

pub use error::{Error, Result};
