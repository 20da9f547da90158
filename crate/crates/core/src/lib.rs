pub mod algebra;
pub mod averaging;
pub mod classical;
pub mod error;
pub mod fock;
pub mod geometry;
pub mod numerics;
pub mod spectra;

pub use error::{GyronError, Result};
