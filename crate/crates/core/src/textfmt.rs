//! Line-oriented `key = value` records shared by camera, coefficient and
//! config files.

use crate::error::{Error, Result};

/// One `key = value` (or `key: value`) entry with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Splits a line into key and value on the first `=` or `:`.
pub(crate) fn split_entry(line: &str) -> Option<(&str, &str)> {
    let idx = line.find(['=', ':'])?;
    Some((line[..idx].trim(), line[idx + 1..].trim()))
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

pub(crate) fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            split_entry(line).ok_or_else(|| Error::Input(format!("line {}: expected `key = value`", i + 1)))?;
        out.push(Entry {
            key: key.to_ascii_lowercase(),
            value: value.to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

pub(crate) fn parse_floats(value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Input(format!("line {line}: `{s}` is not a number")))
        })
        .collect()
}

pub(crate) fn format_floats(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}
