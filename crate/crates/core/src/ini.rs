//! Minimal sectioned key/value reader used by run configs and network profiles.
//!
//! Keeps the line number of every section header and entry so that value
//! errors can be reported against the source line.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct IniError {
    pub line: usize,
    pub msg: String,
}

impl IniError {
    pub fn new(line: usize, msg: impl Into<String>) -> Self {
        Self { line, msg: msg.into() }
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct Section {
    /// Header text with internal whitespace collapsed, e.g. `link 0 1`.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn words(&self) -> Vec<&str> {
        self.name.split_whitespace().collect()
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    /// Parses the value for `key` if present.
    pub fn parse<T>(&self, key: &str) -> Result<Option<T>, IniError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err| IniError::new(e.line, format!("{}: invalid value {:?}: {err}", e.key, e.value))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

/// Parses `#`/`;` comments, `[section words]` headers and `key = value` lines.
pub fn parse(text: &str) -> Result<Document, IniError> {
    let mut doc = Document::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = strip_comment(raw).trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(rest) = stripped.strip_prefix('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| IniError::new(line, "unterminated section header"))?;
            let name = inner.split_whitespace().collect::<Vec<_>>().join(" ");
            if name.is_empty() {
                return Err(IniError::new(line, "empty section name"));
            }
            doc.sections.push(Section { name, line, entries: Vec::new() });
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| IniError::new(line, format!("expected key = value, got {stripped:?}")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(IniError::new(line, "empty key"));
        }
        let section = doc
            .sections
            .last_mut()
            .ok_or_else(|| IniError::new(line, "entry outside of any section"))?;
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(doc)
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_entries() {
        let doc = parse("# top\n[model]\nnum_mh = 3000 ; trailing\n\n[link  0   1]\nlatency_ms=10.5\n").unwrap();
        assert_eq!(doc.sections.len(), 2);
        let m = doc.section("model").unwrap();
        assert_eq!(m.parse::<u64>("num_mh").unwrap(), Some(3000));
        let l = doc.section("link 0 1").unwrap();
        assert_eq!(l.words(), ["link", "0", "1"]);
        assert_eq!(l.get("latency_ms").unwrap().line, 6);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse("[a]\nnonsense\n").unwrap_err().line, 2);
        assert_eq!(parse("k = v\n").unwrap_err().line, 1);
        assert_eq!(parse("[a\n").unwrap_err().line, 1);
        let doc = parse("[a]\n\nx = abc\n").unwrap();
        let err = doc.section("a").unwrap().parse::<f64>("x").unwrap_err();
        assert_eq!(err.line, 3);
    }
}
