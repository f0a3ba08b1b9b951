pub mod angular;
pub mod assembly;
pub mod density;
pub mod eigensolver;
pub mod error;
pub mod linalg;
pub mod potential;
pub mod radial_fem;
pub mod sweep;

pub use error::{Error, Result};
