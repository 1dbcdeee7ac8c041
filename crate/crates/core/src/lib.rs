pub mod cli;
pub mod density;
pub mod dgl;
pub mod error;
pub mod kpm;
pub mod lanczos;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod reference;
pub mod stochastic;

pub use error::{DosError, Result};
