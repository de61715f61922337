pub mod cli;
pub mod clustering;
pub mod correlation;
pub mod dimensionality;
pub mod dse;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod selection;
pub mod separability;
pub mod synth_data;
pub mod tensor_io;
pub mod theory_lab;

pub use error::{DseError, Result};
