use alloc::string::String;

use crate::nn::NnError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no glyph for codepoint U+{code:04X} ({0:?})", code = *.0 as u32)]
    UnknownGlyph(char),
    #[error("only {found} qualifying words for {language}, {wanted} requested")]
    InsufficientWords {
        language: crate::Language,
        wanted: usize,
        found: usize,
    },
    #[error("rendered text does not fit: {0}")]
    Overflow(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("training diverged at step {step}: {msg}")]
    Diverged { step: u64, msg: String },
}
