use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Location of a syntactic object. `line` and `column` are 1-based; `offset`
/// and `length` are in bytes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: usize,
    pub column: usize,
    pub length: usize,
    pub offset: usize,
}

impl Default for SourceSpan {
    fn default() -> Self {
        SourceSpan {
            file: "<builtin>".into(),
            line: 1,
            column: 1,
            length: 0,
            offset: 0,
        }
    }
}

impl SourceSpan {
    /// Smallest span covering `self` through the end of `end`.
    pub fn to(&self, end: &SourceSpan) -> SourceSpan {
        let stop = end.offset + end.length;
        SourceSpan {
            length: stop.saturating_sub(self.offset),
            ..self.clone()
        }
    }

    /// The source line containing the start of this span.
    pub fn line_text<'s>(&self, source: &'s str) -> Option<&'s str> {
        source.lines().nth(self.line - 1)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}
