//! Crate-wide error type. Front-end errors carry source positions; value-level
//! errors (width mismatches, invalid decodes) carry enough context to name the
//! offending component.

use thiserror::Error;

/// A position in a `.pk` source text (1-based line and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {span}: {msg}")]
    Syntax { span: Span, msg: String },

    #[error("expansion error at {span}: {msg}")]
    Expand { span: Span, msg: String },

    #[error("type error at {span}: {msg}")]
    Type { span: Span, msg: String },

    #[error("{0}")]
    Op(#[from] crate::bitvec::OpError),

    #[error("{0}")]
    Adt(#[from] crate::adt::AdtError),

    #[error("normalization error in `{circuit}`: {msg}")]
    Normalize { circuit: String, msg: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("emission error: {0}")]
    Emit(String),

    #[error("verification error: {0}")]
    Verify(String),

    #[error("synthesis error: {0}")]
    Synth(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn syntax(span: Span, msg: impl Into<String>) -> Self {
        Error::Syntax { span, msg: msg.into() }
    }
    pub fn expand(span: Span, msg: impl Into<String>) -> Self {
        Error::Expand { span, msg: msg.into() }
    }
    pub fn ty(span: Span, msg: impl Into<String>) -> Self {
        Error::Type { span, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
