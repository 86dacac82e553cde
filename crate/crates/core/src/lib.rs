pub mod bmp;
pub mod coxeter;
pub mod error;
pub mod graph;
pub mod io;
pub mod kl;
pub mod linalg;
pub mod module;
pub mod poly;
pub mod sheaf;
pub mod zmod;

pub use error::{Error, Result};
