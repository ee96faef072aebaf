pub mod channels;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod optimize;
pub mod protocols;
pub mod rains;

pub use error::{Error, Result};
