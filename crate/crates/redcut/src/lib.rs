//! Loaders, a similarity cache, the evaluation harness and the command-line
//! front end for [`redcut_core`].

pub mod cache;
pub mod cli;
mod error;
pub mod eval;
pub mod io;

pub use error::{Error, Result};
