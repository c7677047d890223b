//! Frame-indexed alignment files: `phone<TAB>start<TAB>end` with a
//! `phone\tstart\tend` header row.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::PhoneSegment;

pub const HEADER: &str = "phone\tstart\tend";

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("missing header row, expected \"phone\\tstart\\tend\"")]
    MissingHeader,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn parse_alignment(text: &str) -> Result<Vec<PhoneSegment>, AlignmentError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
        _ => return Err(AlignmentError::MissingHeader),
    }
    let mut out = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| AlignmentError::Malformed { line: i + 1, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(malformed(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let start: usize = fields[1]
            .parse()
            .map_err(|_| malformed(format!("bad start frame {:?}", fields[1])))?;
        let end: usize = fields[2]
            .parse()
            .map_err(|_| malformed(format!("bad end frame {:?}", fields[2])))?;
        if fields[0].is_empty() {
            return Err(malformed("empty phone label".into()));
        }
        out.push(PhoneSegment { phone: fields[0].to_string(), start_frame: start, end_frame: end });
    }
    Ok(out)
}

pub fn format_alignment(segments: &[PhoneSegment]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for seg in segments {
        s.push_str(&format!("{}\t{}\t{}\n", seg.phone, seg.start_frame, seg.end_frame));
    }
    s
}

pub fn read_alignment(path: &Path) -> Result<Vec<PhoneSegment>, AlignmentError> {
    parse_alignment(&fs::read_to_string(path)?)
}

pub fn write_alignment(path: &Path, segments: &[PhoneSegment]) -> std::io::Result<()> {
    fs::write(path, format_alignment(segments))
}
