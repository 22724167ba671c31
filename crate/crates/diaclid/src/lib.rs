//! File formats, dataset IO, evaluation harness, benchmarking and the
//! command-line front end around [`diaclid_core`].

pub mod bench;
pub mod bundled;
pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod eval;
pub mod image_io;
pub mod model;
pub mod output;

pub use diaclid_core as core;
pub use error::{Error, ModelError};
