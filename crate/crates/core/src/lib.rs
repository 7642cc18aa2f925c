pub mod analysis;
pub mod cli;
pub mod error;
pub mod exact_arith;
pub mod io;
pub mod mc_oracle;
pub mod moments;
pub mod ratfind;
pub mod reconstruct;
pub mod sepprob;
pub mod weighted;

pub use error::{Error, Result};
