//! Tab-separated line records with backslash escaping.
//!
//! Fields never contain a raw tab, newline, carriage return or backslash;
//! those are written as `\t`, `\n`, `\r` and `\\`.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Row {
        path: String,
        line: usize,
        message: String,
    },
}

/// One data row of a TSV file, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub line: usize,
    pub fields: Vec<String>,
}

impl Row {
    pub fn field(&self, i: usize) -> &str {
        self.fields.get(i).map_or("", String::as_str)
    }
}

/// Split `text` into rows, skipping blank lines and `#` comment lines.
/// Each row must have between `min` and `max` fields.
pub fn parse_rows(text: &str, origin: &str, min: usize, max: usize) -> Result<Vec<Row>, TsvError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split(line);
        if fields.len() < min || fields.len() > max {
            return Err(TsvError::Row {
                path: origin.to_string(),
                line: i + 1,
                message: if min == max {
                    format!("expected {min} fields, found {}", fields.len())
                } else {
                    format!("expected {min} to {max} fields, found {}", fields.len())
                },
            });
        }
        rows.push(Row { line: i + 1, fields });
    }
    Ok(rows)
}

pub fn read_rows(path: &Path, min: usize, max: usize) -> Result<Vec<Row>, TsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rows(&text, &path.display().to_string(), min, max)
}

/// Error for a field that failed to parse.
pub fn row_error(origin: &str, row: &Row, message: impl Into<String>) -> TsvError {
    TsvError::Row {
        path: origin.to_string(),
        line: row.line,
        message: message.into(),
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), TsvError> {
    std::fs::write(path, contents).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Join already-unescaped fields into one escaped line (no trailing newline).
pub fn join<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    fields
        .into_iter()
        .map(|f| escape(f.as_ref()))
        .collect::<Vec<_>>()
        .join("\t")
}

pub fn split(line: &str) -> Vec<String> {
    line.split('\t').map(unescape).collect()
}
