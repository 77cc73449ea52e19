// SPDX-License-Identifier: Apache-2.0

//! Small lexical helpers shared by the line-oriented file formats
//! (`package.accel`, `*.mixin`, `platform.desc`, `*.cfg`, `*.kdl`).

use std::path::{Component, Path};

use crate::error::{Error, Result};

/// Lowercase ASCII alphanumerics and underscore, nonempty.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

pub(crate) fn check_identifier(s: &str, what: &str, line: Option<usize>) -> Result<()> {
    if is_identifier(s) {
        Ok(())
    } else {
        Err(Error::Parse {
            source_name: None,
            line,
            message: format!("invalid {what} `{s}` (expected lowercase letters, digits and `_`)"),
        })
    }
}

/// A relative path that stays inside its base directory.
pub fn is_contained_relpath(s: &str) -> bool {
    if s.is_empty() || s.starts_with('/') || s.starts_with('\\') {
        return false;
    }
    Path::new(s)
        .components()
        .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

pub(crate) fn check_relpath(s: &str, what: &str, line: usize) -> Result<()> {
    if is_contained_relpath(s) {
        Ok(())
    } else {
        Err(Error::parse(
            line,
            format!("{what} `{s}` must be a relative path without `..`"),
        ))
    }
}

/// One significant line of a key/value file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Line<'a> {
    /// 1-based line number.
    pub number: usize,
    /// Leading spaces.
    pub indent: usize,
    pub key: &'a str,
    /// Trimmed value, possibly empty.
    pub value: &'a str,
}

/// Split `text` into `key: value` lines, dropping blanks and `#` comments.
pub(crate) fn key_value_lines(text: &str) -> Result<Vec<Line<'_>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let content = strip_comment(raw).trim_end();
        if content.trim().is_empty() {
            continue;
        }
        if content.contains('\t') {
            return Err(Error::parse(number, "tabs are not allowed; indent with spaces"));
        }
        let indent = content.len() - content.trim_start().len();
        let body = content.trim_start();
        let Some((key, value)) = body.split_once(':') else {
            return Err(Error::parse(number, format!("expected `key: value`, found `{body}`")));
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::parse(number, format!("malformed key `{key}`")));
        }
        out.push(Line {
            number,
            indent,
            key,
            value: value.trim(),
        });
    }
    Ok(out)
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parse a comma-separated list, rejecting empty elements.
pub(crate) fn comma_list(value: &str, line: usize) -> Result<Vec<String>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            if item.is_empty() {
                Err(Error::parse(line, "empty element in list"))
            } else {
                Ok(item.to_string())
            }
        })
        .collect()
}

pub(crate) fn parse_positive(value: &str, key: &str, line: usize) -> Result<u32> {
    match value.parse::<u32>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::parse(
            line,
            format!("`{key}` must be a positive integer, found `{value}`"),
        )),
    }
}

pub(crate) fn parse_count(value: &str, key: &str, line: usize) -> Result<u64> {
    value.parse::<u64>().map_err(|_| {
        Error::parse(
            line,
            format!("`{key}` must be a nonnegative integer, found `{value}`"),
        )
    })
}
