//! Neural text classification with an ensemble of a language-model word LSTM
//! and a character-trigram attention LSTM, built on a small reverse-mode
//! tensor engine.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod nn;
pub mod synth;
pub mod tensor;
pub mod text;
pub mod train;

mod par;

pub use error::{Error, Result};
