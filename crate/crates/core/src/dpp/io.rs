//! Frame files: JSON `{"p": .., "n": .., "rows": [[..], ..]}` or CSV with one
//! frame row per line.

use super::Frame;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameFile {
    pub p: usize,
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl From<&Frame> for FrameFile {
    fn from(f: &Frame) -> Self {
        Self { p: f.p(), n: f.n(), rows: f.rows().to_vec() }
    }
}

impl FrameFile {
    pub fn into_frame(self) -> Result<Frame> {
        if self.rows.len() != self.p {
            return Err(Error::InvalidFrame(format!("p = {} but {} rows given", self.p, self.rows.len())));
        }
        if let Some(r) = self.rows.iter().find(|r| r.len() != self.n) {
            return Err(Error::InvalidFrame(format!("n = {} but a row has {} entries", self.n, r.len())));
        }
        Frame::from_rows_lenient(self.rows)
    }
}

pub fn frame_from_json(text: &str) -> Result<Frame> {
    let file: FrameFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_frame()
}

pub fn frame_to_json(f: &Frame) -> String {
    serde_json::to_string_pretty(&FrameFile::from(f)).expect("frame serialises")
}

pub fn frame_from_csv(text: &str) -> Result<Frame> {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number `{t}`", i + 1)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Frame::from_rows_lenient(rows)
}

/// Reads a frame, choosing the format from the extension (`.csv` or JSON).
pub fn load_frame(path: &Path) -> Result<Frame> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => frame_from_csv(&text),
        _ => frame_from_json(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let f = Frame::example1();
        let back = frame_from_json(&frame_to_json(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_with_rounding_is_repaired() {
        let f = frame_from_csv("0.70710678,0,0.70710678,0\n0,0.70710678,0,0.70710678\n").unwrap();
        assert!(f.reorthonormalized());
        assert_eq!((f.p(), f.n()), (2, 4));
    }

    #[test]
    fn header_mismatch_is_rejected() {
        assert!(frame_from_json(r#"{"p":3,"n":4,"rows":[[1,0,0,0]]}"#).is_err());
        assert!(frame_from_json(r#"{"p":1,"n":3,"rows":[[1,0,0,0]]}"#).is_err());
        assert!(frame_from_json("not json").is_err());
        assert!(frame_from_csv("1,x\n").is_err());
    }
}
