//! Numerical workbench for dilations of commuting and non-commuting row
//! contractions on truncated Fock and Drury–Arveson spaces.

pub mod cli;
pub mod dilation;
pub mod error;
pub mod fock;
pub mod io;
pub mod lifting;
pub mod linalg;
pub mod operator;
pub mod pick;
pub mod sampling;

pub use error::{Error, Result};
