pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod linear;
pub mod mlp;
pub mod model;
pub mod numeric;
pub mod tree;

pub use error::{Error, ErrorKind, Result};
