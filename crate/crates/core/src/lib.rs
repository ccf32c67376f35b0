pub mod analysis;
pub mod assembly;
pub mod cli_io;
pub mod dtn;
pub mod eigensolve;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod sparse;
pub mod special;
pub mod transplant;

pub use error::{Error, Result};
