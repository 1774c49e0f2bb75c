//! Line-oriented artifact files.
//!
//! Every artifact starts with the header line `bo-inner-lab/v1 <kind>`
//! followed by one JSON object per line.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "bo-inner-lab/v1";

pub fn header(kind: &str) -> String {
    format!("{FORMAT_VERSION} {kind}")
}

pub fn write_json_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Body lines of an artifact as `(line number, text)`, checking the header.
/// A trailing line without a newline is dropped when `allow_partial_tail`
/// holds (an interrupted append) and rejected otherwise.
pub fn read_body(
    text: &str,
    kind: &'static str,
    allow_partial_tail: bool,
) -> Result<Vec<(usize, String)>> {
    let mut lines = text.split_inclusive('\n');
    let expected = header(kind);
    match lines.next() {
        Some(h) if h.trim_end() == expected => {}
        Some(h) => {
            return Err(Error::Format {
                what: kind,
                line: 1,
                message: format!("expected header `{expected}`, found `{}`", h.trim_end()),
            })
        }
        None => {
            return Err(Error::Format {
                what: kind,
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line_no = i + 2;
        if !raw.ends_with('\n') {
            if allow_partial_tail {
                break;
            }
            return Err(Error::Format {
                what: kind,
                line: line_no,
                message: "truncated line".into(),
            });
        }
        out.push((line_no, raw.trim_end().to_string()));
    }
    Ok(out)
}

pub fn parse_line<T: DeserializeOwned>(what: &'static str, line: usize, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format {
        what,
        line,
        message: e.to_string(),
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_checked() {
        let err = read_body("bo-inner-lab/v2 store\n", "store", false).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        assert!(read_body("", "store", false).is_err());
    }

    #[test]
    fn partial_tail_handling() {
        let text = "bo-inner-lab/v1 store\n{\"a\":1}\n{\"a\":";
        assert_eq!(read_body(text, "store", true).unwrap().len(), 1);
        assert!(matches!(
            read_body(text, "store", false),
            Err(Error::Format { line: 3, .. })
        ));
    }
}
