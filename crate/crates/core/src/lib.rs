pub mod bvp;
pub mod error;
pub mod estimate;
pub mod feq;
pub mod kernel;
pub mod model;
pub mod simulate;
pub mod symmetric;

pub use error::{Error, Result};
pub use model::ModelParams;
