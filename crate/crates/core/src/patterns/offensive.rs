use std::collections::BTreeSet;
use std::fmt;

/// The bundled term list, one lowercase term per line.
pub const DEFAULT_BLOCKLIST: &str = include_str!("../../data/blocklist.txt");

/// A society's judgement of whether published content is offensive.
/// Implementations must be deterministic.
pub trait OffensivePredicate: fmt::Debug + Send + Sync {
    fn is_offensive(&self, content: &str) -> bool;
}

/// Term blocklist. A term matches when its words occur as a contiguous run
/// of words in the content, ignoring case and punctuation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blocklist {
    terms: BTreeSet<Vec<String>>,
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Blocklist {
    /// Parses the file format: UTF-8, one term per line, `#` comments.
    pub fn parse(text: &str) -> Self {
        let terms = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or(""))
            .map(words)
            .filter(|w| !w.is_empty())
            .collect();
        Self { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = S>, S: AsRef<str>>(terms: I) -> Self {
        Self {
            terms: terms
                .into_iter()
                .map(|t| words(t.as_ref()))
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl OffensivePredicate for Blocklist {
    fn is_offensive(&self, content: &str) -> bool {
        let content = words(content);
        self.terms
            .iter()
            .any(|term| content.windows(term.len()).any(|w| w == term.as_slice()))
    }
}
