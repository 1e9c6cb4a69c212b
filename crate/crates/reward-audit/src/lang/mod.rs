//! Textual format for reward specs (`.rspec`) and scenarios (`.scn`).
//!
//! The grammar is line-oriented: a document is a header line followed by
//! blocks of `key = value` pairs in braces. Comments run from `#` to end of
//! line. Identifiers are `[a-z][a-z0-9_]*`, numbers are decimal with an
//! optional exponent, and expressions use standard operator precedence with
//! the closed function set `min`, `max`, `abs`, `clip`, `cond`.

mod lexer;
mod parser;
mod render;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::RewardSpec;
use crate::trajectory::ScenarioSpec;

pub use parser::{parse_baselines, parse_scenario, parse_spec_document};
pub use render::render_spec;

/// A parsed document together with its raw text and the source location of
/// each top-level construct (keyed like `attribute speed`, `episode`, ...).
#[derive(Debug, Clone)]
pub struct SpecDocument {
    pub raw: String,
    pub spec: RewardSpec,
    pub locations: BTreeMap<String, (u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {expected}")]
    Syntax {
        line: u32,
        col: u32,
        expected: String,
    },
    #[error("{line}:{col}: unknown key `{key}` in {block}")]
    UnknownKey {
        line: u32,
        col: u32,
        key: String,
        block: String,
    },
    #[error("{line}:{col}: duplicate key `{key}` in {block}")]
    DuplicateKey {
        line: u32,
        col: u32,
        key: String,
        block: String,
    },
    #[error("{line}:{col}: missing key `{key}` in {block}")]
    MissingKey {
        line: u32,
        col: u32,
        key: String,
        block: String,
    },
    #[error("{line}:{col}: unknown feature `{name}` referenced by {site}")]
    UnknownFeature {
        line: u32,
        col: u32,
        name: String,
        site: String,
    },
    #[error("{line}:{col}: unknown outcome tag `{tag}`")]
    UnknownTag { line: u32, col: u32, tag: String },
    #[error("{line}:{col}: duplicate terminal rule for `{event}`")]
    DuplicateTerminalRule { line: u32, col: u32, event: String },
    #[error("{line}:{col}: clip bounds inverted (lo {lo} > hi {hi})")]
    InvalidClipBounds {
        line: u32,
        col: u32,
        lo: f64,
        hi: f64,
    },
    #[error("{line}:{col}: invalid value: {message}")]
    InvalidValue {
        line: u32,
        col: u32,
        message: String,
    },
}

impl ParseError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::UnknownKey { line, col, .. }
            | ParseError::DuplicateKey { line, col, .. }
            | ParseError::MissingKey { line, col, .. }
            | ParseError::UnknownFeature { line, col, .. }
            | ParseError::UnknownTag { line, col, .. }
            | ParseError::DuplicateTerminalRule { line, col, .. }
            | ParseError::InvalidClipBounds { line, col, .. }
            | ParseError::InvalidValue { line, col, .. } => (*line, *col),
        }
    }
}

/// Parses a `.rspec` document, returning just the spec.
pub fn parse_spec(text: &str) -> Result<RewardSpec, ParseError> {
    parse_spec_document(text).map(|doc| doc.spec)
}

/// Convenience wrapper accepting raw bytes (must be UTF-8).
pub fn parse_spec_bytes(bytes: &[u8]) -> Result<RewardSpec, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::Syntax {
        line: 1,
        col: 1,
        expected: format!("UTF-8 input ({e})"),
    })?;
    parse_spec(text)
}

/// Convenience wrapper accepting raw bytes (must be UTF-8).
pub fn parse_scenario_bytes(bytes: &[u8]) -> Result<ScenarioSpec, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::Syntax {
        line: 1,
        col: 1,
        expected: format!("UTF-8 input ({e})"),
    })?;
    parse_scenario(text)
}
