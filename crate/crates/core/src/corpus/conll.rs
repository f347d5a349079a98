//! Tagged-corpus format: one token per line with TAB-separated columns
//! `surface POS chunk query_flag bio_label`, a `# concept = <string>` comment
//! before each sentence and a blank line after it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{BioLabel, TaggedSentence, Token};
use crate::error::{Error, Result};

const CONCEPT_PREFIX: &str = "# concept = ";

pub fn write_conll<W: Write>(mut w: W, sentences: &[TaggedSentence]) -> std::io::Result<()> {
    for s in sentences {
        writeln!(w, "{CONCEPT_PREFIX}{}", s.concept)?;
        for (t, label) in s.tokens.iter().zip(&s.labels) {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                t.surface,
                t.pos,
                t.chunk,
                u8::from(t.is_query),
                label
            )?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_conll_file(path: impl AsRef<Path>, sentences: &[TaggedSentence]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_conll(BufWriter::new(file), sentences).map_err(|e| Error::io(path, e))
}

pub fn read_conll_file(path: impl AsRef<Path>) -> Result<Vec<TaggedSentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_conll(BufReader::new(file), path)
}

/// Read a tagged corpus; every sentence is checked against the
/// [`TaggedSentence`] invariants.
pub fn read_conll<R: BufRead>(reader: R, source: &Path) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    let mut current = empty_sentence();
    // line where the current sentence (header or first token) begins
    let mut start: Option<usize> = None;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            flush(&mut current, start.take(), &mut sentences, source)?;
            continue;
        }
        if let Some(concept) = line.strip_prefix(CONCEPT_PREFIX) {
            flush(&mut current, start.take(), &mut sentences, source)?;
            current.concept = concept.to_string();
            start = Some(line_no);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        start.get_or_insert(line_no);
        let cols: Vec<&str> = line.split('\t').collect();
        let [surface, pos, chunk, flag, label] = cols[..] else {
            return Err(Error::format(
                source,
                line_no,
                format!("expected 5 TAB-separated columns, found {}", cols.len()),
            ));
        };
        let is_query = match flag {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::format(
                    source,
                    line_no,
                    format!("query flag must be 0 or 1, found `{other}`"),
                ))
            }
        };
        let label: BioLabel = label
            .parse()
            .map_err(|e: Error| Error::format(source, line_no, e.to_string()))?;
        current.tokens.push(Token::new(surface, pos, chunk, is_query));
        current.labels.push(label);
    }
    flush(&mut current, start, &mut sentences, source)?;
    Ok(sentences)
}

fn empty_sentence() -> TaggedSentence {
    TaggedSentence {
        concept: String::new(),
        tokens: Vec::new(),
        labels: Vec::new(),
    }
}

fn flush(
    current: &mut TaggedSentence,
    start: Option<usize>,
    out: &mut Vec<TaggedSentence>,
    source: &Path,
) -> Result<()> {
    let sentence = std::mem::replace(current, empty_sentence());
    if sentence.tokens.is_empty() {
        return Ok(());
    }
    sentence
        .validate()
        .map_err(|m| Error::format(source, start.unwrap_or(0), m))?;
    out.push(sentence);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{align_triples, Relation, RelationTriple};

    #[test]
    fn round_trip() {
        let out = align_triples(
            &[
                RelationTriple::new("Sun", Relation::IsA, "star", "Sun is a star"),
                RelationTriple::new("Sun", Relation::PartOf, "Solar System", "Sun is in our Solar System"),
            ],
            true,
        );
        let mut buf = Vec::new();
        write_conll(&mut buf, &out.sentences).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# concept = Sun\nSun\tNN\tB-NP\t1\tO\n"));
        let back = read_conll(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back, out.sentences);
    }

    #[test]
    fn bad_rows_are_rejected() {
        let err = read_conll("# concept = x\nx\tNN\tO\t2\tO\n".as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
        let err = read_conll("x\tNN\tO\n".as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        let err = read_conll("a\tNN\tO\t0\tI-IsA\n".as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }
}
