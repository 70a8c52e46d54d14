use std::fmt;

use serde::{Deserialize, Serialize};

/// A region of source text. Lines and columns are 1-based; columns and
/// length count characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(file: &str, line: usize, column: usize, length: usize) -> Self {
        Self {
            file: file.to_owned(),
            line,
            column,
            length,
        }
    }

    /// The spanned text within `source`, if the span lies inside it.
    pub fn slice<'a>(&self, source: &'a str) -> Option<&'a str> {
        let line = source.split('\n').nth(self.line.checked_sub(1)?)?;
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut indices = line.char_indices().map(|(i, _)| i).chain(std::iter::once(line.len()));
        let start = indices.nth(self.column.checked_sub(1)?)?;
        let end = if self.length == 0 {
            start
        } else {
            indices.nth(self.length - 1)?
        };
        line.get(start..end)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_characters() {
        let src = "entity a : X\naspect é1 of a\r\n";
        assert_eq!(SourceSpan::new("m", 1, 8, 1).slice(src), Some("a"));
        assert_eq!(SourceSpan::new("m", 2, 8, 2).slice(src), Some("é1"));
        assert_eq!(SourceSpan::new("m", 2, 14, 1).slice(src), Some("a"));
        assert_eq!(SourceSpan::new("m", 9, 1, 1).slice(src), None);
        assert_eq!(SourceSpan::new("m", 1, 13, 0).slice(src), Some(""));
    }
}
