//! False-belief benchmark synthesis and conversion.
//!
//! Stories are built from a small templatic grammar, replayed against a
//! symbolic belief oracle, converted into action-choice instances and
//! rendered into prompts for the supported reasoning strategies.

pub mod convert;
pub mod error;
pub mod gen;
pub mod oracle;
pub mod prompts;
pub mod story;

pub use error::{Error, Result};
