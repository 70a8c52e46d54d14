//! The model language (`.wmodel`) and the trace language (`.wtrace`).
//!
//! Parsing is fail-fast: the first syntax or binding error is returned with
//! the span of the offending token. Binding checks run after the whole file
//! has been read, in a fixed order (entities, aspects, ownership, contexts,
//! rules, warrants), so statement order in the source does not matter.
//! Structural problems that the model can represent (an ownership cycle, a
//! missing bundled rule, a bad parameter) are accepted here and reported by
//! [`crate::check`].

#![allow(clippy::result_large_err)]

mod lexer;
mod lint;
mod parser;
mod render;
mod span;
mod trace;

pub use lint::{lint, Lint, LintCode};
pub use parser::{parse_document, parse_model, parse_model_bytes};
pub use render::render_model;
pub use span::SourceSpan;
pub use trace::{parse_trace, parse_trace_bytes, render_trace};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::metamodel::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Syntax,
    InvalidUtf8,
    DuplicateId,
    UnknownEntity,
    UnknownAspect,
    UnknownContext,
    UnknownRule,
    UnknownRoleType,
    AlreadyEmbodied,
    DeadlineOnNonObligation,
    UnknownVerb,
    Arity,
    Sequence,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Syntax => "syntax",
            ErrorCode::InvalidUtf8 => "invalid-utf8",
            ErrorCode::DuplicateId => "duplicate-id",
            ErrorCode::UnknownEntity => "unknown-entity",
            ErrorCode::UnknownAspect => "unknown-aspect",
            ErrorCode::UnknownContext => "unknown-context",
            ErrorCode::UnknownRule => "unknown-rule",
            ErrorCode::UnknownRoleType => "unknown-role-type",
            ErrorCode::AlreadyEmbodied => "already-embodied",
            ErrorCode::DeadlineOnNonObligation => "deadline-on-non-obligation",
            ErrorCode::UnknownVerb => "unknown-verb",
            ErrorCode::Arity => "arity",
            ErrorCode::Sequence => "sequence",
        }
    }

    /// Binding errors found after the syntax was accepted.
    pub fn is_semantic(self) -> bool {
        !matches!(
            self,
            ErrorCode::Syntax
                | ErrorCode::InvalidUtf8
                | ErrorCode::UnknownVerb
                | ErrorCode::Arity
                | ErrorCode::Sequence
        )
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A syntax or binding error. `found` is the offending source text and is
/// always contained in the text under `span`; it is empty at end of line or
/// end of input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
    pub message: String,
    pub code: ErrorCode,
}

impl ParseError {
    pub(crate) fn syntax(span: SourceSpan, expected: Vec<String>, found: &str, message: String) -> Self {
        Self {
            span,
            expected,
            found: found.to_owned(),
            message,
            code: ErrorCode::Syntax,
        }
    }

    pub(crate) fn at(code: ErrorCode, span: &SourceSpan, found: &str, message: String) -> Self {
        Self {
            span: span.clone(),
            expected: Vec::new(),
            found: found.to_owned(),
            message,
            code,
        }
    }
}

/// Declaration sites of the ids in a parsed model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Spans {
    pub entities: BTreeMap<String, SourceSpan>,
    pub aspects: BTreeMap<String, SourceSpan>,
    pub contexts: BTreeMap<String, SourceSpan>,
    pub rules: BTreeMap<String, SourceSpan>,
    pub warrants: BTreeMap<String, SourceSpan>,
}

/// A parsed model together with where each id was declared.
#[derive(Debug, Clone)]
pub struct Document {
    pub file: String,
    pub model: Model,
    pub spans: Spans,
}

/// Decodes UTF-8, reporting the first invalid byte as a parse error.
pub(crate) fn decode<'a>(bytes: &'a [u8], file: &str) -> Result<&'a str, ParseError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let offset = e.valid_up_to();
        let prefix = std::str::from_utf8(&bytes[..offset]).expect("valid prefix");
        let line = prefix.matches('\n').count() + 1;
        let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError {
            span: SourceSpan::new(file, line, column, 0),
            expected: vec!["UTF-8 text".into()],
            found: String::new(),
            message: format!("invalid UTF-8 at byte offset {offset}"),
            code: ErrorCode::InvalidUtf8,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_utf8_reports_first_bad_offset() {
        let err = decode(b"entity a : Inert\nent\xffity", "m").unwrap_err();
        assert_eq!(err.code, ErrorCode::InvalidUtf8);
        assert_eq!(err.span, SourceSpan::new("m", 2, 4, 0));
        assert!(err.message.contains("offset 20"));
    }
}
