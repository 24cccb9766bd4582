pub mod diagnostics;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod preprocess;
pub mod systems;

pub use error::{HavokError, Result};
