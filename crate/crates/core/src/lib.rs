pub mod analysis;
pub mod canonical;
pub mod cli;
pub mod critical;
pub mod dense;
pub mod error;
pub mod fixtures;
pub mod grassmann;
pub mod instability;
pub mod io;
pub mod linalg;
pub mod multiview;
pub mod random;
pub mod reconstruction;

pub use error::{Error, Result};
