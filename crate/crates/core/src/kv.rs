//! The `key = value` configuration text format.
//!
//! One entry per line. Blank lines and lines starting with `#` are ignored.
//! Keys are case-sensitive and may contain dots (`embed.dim`). Whitespace
//! around keys and values is trimmed. A key may appear only once.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub fn parse(text: &str) -> Result<BTreeMap<String, String>, KvError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(KvError::Malformed { line: i + 1 })?;
        let key = k.trim();
        if key.is_empty() {
            return Err(KvError::Malformed { line: i + 1 });
        }
        if out.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(KvError::Duplicate {
                line: i + 1,
                key: key.to_string(),
            });
        }
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<BTreeMap<String, String>, KvError> {
    let text = std::fs::read_to_string(path).map_err(|source| KvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dotted_keys() {
        let kv = parse("# comment\n\nembed.dim = 50\nseed=7\n").unwrap();
        assert_eq!(kv["embed.dim"], "50");
        assert_eq!(kv["seed"], "7");
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(matches!(parse("a=1\na=2"), Err(KvError::Duplicate { line: 2, .. })));
        assert!(matches!(parse("just text"), Err(KvError::Malformed { line: 1 })));
    }
}
