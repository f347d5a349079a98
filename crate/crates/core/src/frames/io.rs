//! Frames files (JSON lines) and encoded-frames files (plain text matrices).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DefinitionFrame, EncodedFrame, SCHEMA, SCHEMA_ROWS};
use crate::corpus::Relation;
use crate::error::{Error, Result};
use crate::linalg::fmt_f64;

pub const ENCODED_VERSION: &str = "defframe-enc/1";

#[derive(Serialize)]
struct FrameOut<'a> {
    concept: &'a str,
    relations: BTreeMap<Relation, &'a [String]>,
}

#[derive(Deserialize)]
struct FrameIn {
    concept: String,
    #[serde(default)]
    relations: BTreeMap<String, Vec<String>>,
}

pub fn write_frames<W: Write>(mut w: W, frames: &[DefinitionFrame]) -> std::io::Result<()> {
    for frame in frames {
        let record = FrameOut {
            concept: &frame.concept,
            relations: frame.relations().collect(),
        };
        serde_json::to_writer(&mut w, &record)?;
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_frames_file(path: impl AsRef<Path>, frames: &[DefinitionFrame]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_frames(BufWriter::new(file), frames).map_err(|e| Error::io(path, e))
}

pub fn read_frames<R: BufRead>(reader: R, source: &Path) -> Result<Vec<DefinitionFrame>> {
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameIn =
            serde_json::from_str(&line).map_err(|e| Error::format(source, i + 1, e.to_string()))?;
        let mut frame = DefinitionFrame::new(record.concept);
        for (name, terms) in record.relations {
            let relation: Relation = name
                .parse()
                .map_err(|_| Error::format(source, i + 1, format!("unknown relation `{name}`")))?;
            for term in terms {
                frame.add_term(relation, term);
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn read_frames_file(path: impl AsRef<Path>) -> Result<Vec<DefinitionFrame>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_frames(BufReader::new(file), path)
}

/// Write encoded frames. `dim` is only consulted for an empty list.
pub fn write_encoded<W: Write>(mut w: W, frames: &[EncodedFrame], dim: usize) -> std::io::Result<()> {
    let d = frames.first().map_or(dim, |f| f.dim());
    writeln!(w, "{ENCODED_VERSION} {SCHEMA_ROWS} {d}")?;
    let mut line = String::new();
    for frame in frames {
        assert_eq!(frame.dim(), d, "encoded frames must share one dimension");
        writeln!(w, "{}", frame.concept)?;
        for row in SCHEMA {
            line.clear();
            for (j, x) in frame.row(row).iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&fmt_f64(*x));
            }
            writeln!(w, "{line}")?;
        }
    }
    w.flush()
}

pub fn write_encoded_file(path: impl AsRef<Path>, frames: &[EncodedFrame], dim: usize) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_encoded(BufWriter::new(file), frames, dim).map_err(|e| Error::io(path, e))
}

/// Read an encoded-frames file; returns the frames and the declared `d`.
pub fn read_encoded<R: BufRead>(reader: R, source: &Path) -> Result<(Vec<EncodedFrame>, usize)> {
    let mut lines = reader.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::EmptyFile(source.to_path_buf()));
    };
    let header = header.map_err(|e| Error::io(source, e))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&ENCODED_VERSION) {
        return Err(Error::Version {
            expected: ENCODED_VERSION.to_string(),
            found: fields.first().unwrap_or(&"").to_string(),
        });
    }
    let parse_dim = |s: Option<&&str>| s.and_then(|s| s.parse::<usize>().ok());
    let (Some(k), Some(d)) = (parse_dim(fields.get(1)), parse_dim(fields.get(2))) else {
        return Err(Error::format(source, 1, "header must be `defframe-enc/1 k d`"));
    };
    if k != SCHEMA_ROWS {
        return Err(Error::format(source, 1, format!("expected {SCHEMA_ROWS} rows, header says {k}")));
    }

    let mut frames = Vec::new();
    loop {
        let Some((i, concept)) = lines.next() else { break };
        let concept = concept.map_err(|e| Error::io(source, e))?;
        let mut matrix = Vec::with_capacity(k * d);
        for r in 0..k {
            let Some((j, row)) = lines.next() else {
                return Err(Error::format(
                    source,
                    i + 1,
                    format!("frame `{concept}` ends after {r} of {k} rows"),
                ));
            };
            let row = row.map_err(|e| Error::io(source, e))?;
            let before = matrix.len();
            for tok in row.split_whitespace() {
                let x: f64 = tok
                    .parse()
                    .map_err(|_| Error::format(source, j + 1, format!("invalid number `{tok}`")))?;
                matrix.push(x);
            }
            if matrix.len() - before != d {
                return Err(Error::format(
                    source,
                    j + 1,
                    format!("expected {d} values, found {}", matrix.len() - before),
                ));
            }
        }
        frames.push(EncodedFrame::from_matrix(concept, d, matrix)?);
    }
    Ok((frames, d))
}

pub fn read_encoded_file(path: impl AsRef<Path>) -> Result<(Vec<EncodedFrame>, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_encoded(BufReader::new(file), path)
}
