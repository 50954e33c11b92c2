//! Byte-offset spans into document text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A half-open byte range `[start, end)` into a document's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Non-empty intersection.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start.max(other.start) < self.end.min(other.end)
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Slice `text` at this span, `None` when out of bounds or off a char boundary.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.is_empty() {
            return None;
        }
        text.get(self.start..self.end)
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(span: Span) -> Self {
        (span.start, span.end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed span `{0}`, expected `start:end`")]
pub struct ParseSpanError(pub String);

impl FromStr for Span {
    type Err = ParseSpanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| ParseSpanError(s.to_string()))?;
        let start = a.trim().parse().map_err(|_| ParseSpanError(s.to_string()))?;
        let end = b.trim().parse().map_err(|_| ParseSpanError(s.to_string()))?;
        Ok(Span { start, end })
    }
}

/// How two annotation spans are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanMatch {
    #[default]
    Exact,
    Overlap,
}

impl SpanMatch {
    pub fn matches(self, a: &Span, b: &Span) -> bool {
        match self {
            SpanMatch::Exact => a == b,
            SpanMatch::Overlap => a.overlaps(b),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpanMatch::Exact => "exact",
            SpanMatch::Overlap => "overlap",
        }
    }
}

impl FromStr for SpanMatch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SpanMatch::Exact),
            "overlap" => Ok(SpanMatch::Overlap),
            other => Err(format!("unknown span match `{other}` (expected exact|overlap)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_is_strict_intersection() {
        let a = Span::new(10, 20);
        assert!(a.overlaps(&Span::new(12, 20)));
        assert!(a.overlaps(&Span::new(19, 30)));
        assert!(!a.overlaps(&Span::new(20, 30)));
        assert!(!a.overlaps(&Span::new(0, 10)));
    }

    #[test]
    fn parse_and_display() {
        let s: Span = "3:9".parse().unwrap();
        assert_eq!(s, Span::new(3, 9));
        assert_eq!(s.to_string(), "3:9");
        assert!("3-9".parse::<Span>().is_err());
    }

    #[test]
    fn slice_respects_char_boundaries() {
        let text = "héllo";
        assert_eq!(Span::new(0, 3).slice(text), Some("hé"));
        assert_eq!(Span::new(0, 2).slice(text), None);
        assert_eq!(Span::new(4, 4).slice(text), None);
    }
}
