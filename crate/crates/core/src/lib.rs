pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod fiber;
pub mod forces;
pub mod langevin;
pub mod modes;
pub mod output;
pub mod quadrature;
pub mod response;
pub mod spectral;

pub use error::{Error, Result};
