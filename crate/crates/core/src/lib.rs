//! Diacritic-based language identification of text in images.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only enables
//! runtime CPU dispatch in the GEMM backend and `std::error::Error` impls.

#![cfg_attr(not(feature = "std"), no_std)]
extern crate alloc;

pub mod corpus;
pub mod detector;
pub mod langid;
pub mod nn;
pub mod pipeline;
pub mod table;

mod error;

pub use error::Error;
pub use table::{Language, DIACRITIC_COUNT, LANGUAGE_COUNT};
