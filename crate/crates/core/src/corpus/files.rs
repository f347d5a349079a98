//! Readers for similarity benchmarks, definition sentences and relation
//! triples.

use std::fs;
use std::path::Path;

use super::{tokenize, RelationTriple};
use crate::error::{Error, Result};

/// One benchmark word pair with its raw and min-max normalized gold score.
#[derive(Clone, Debug, PartialEq)]
pub struct SimPair {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
    pub gold_norm: f64,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parse a `word1 TAB word2 TAB score` benchmark (comma-separated for
/// `.csv`). Lines starting with `#` are comments.
pub fn parse_similarity(path: impl AsRef<Path>) -> Result<Vec<SimPair>> {
    let path = path.as_ref();
    let csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    parse_similarity_str(&read_to_string(path)?, csv, path)
}

pub fn parse_similarity_str(text: &str, csv: bool, source: &Path) -> Result<Vec<SimPair>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if csv {
            trimmed.split(',').map(str::trim).collect()
        } else if trimmed.contains('\t') {
            trimmed.split('\t').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        let [word1, word2, score] = fields[..] else {
            return Err(Error::format(
                source,
                i + 1,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        };
        let gold: f64 = score
            .parse()
            .ok()
            .filter(|g: &f64| g.is_finite())
            .ok_or_else(|| Error::format(source, i + 1, format!("non-numeric score `{score}`")))?;
        pairs.push(SimPair {
            word1: word1.to_string(),
            word2: word2.to_string(),
            gold,
            gold_norm: 0.0,
        });
    }

    let min = pairs.iter().map(|p| p.gold).fold(f64::INFINITY, f64::min);
    let max = pairs.iter().map(|p| p.gold).fold(f64::NEG_INFINITY, f64::max);
    for p in &mut pairs {
        p.gold_norm = if max > min { (p.gold - min) / (max - min) } else { 0.5 };
    }
    Ok(pairs)
}

/// Parse `concept TAB sentence` lines. The line is split at the first TAB;
/// blank lines are ignored.
pub fn parse_definitions(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    parse_definitions_str(&read_to_string(path)?, path)
}

pub fn parse_definitions_str(text: &str, source: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (concept, sentence) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(source, i + 1, "missing TAB between concept and sentence"))?;
        out.push((concept.trim().to_string(), sentence.trim().to_string()));
    }
    Ok(out)
}

/// Parse a triples file: `concept TAB relation TAB term TAB sentence`, with
/// two optional trailing columns holding space-separated POS and chunk tags
/// aligned to the tokenized sentence.
pub fn read_triples(path: impl AsRef<Path>) -> Result<Vec<RelationTriple>> {
    let path = path.as_ref();
    read_triples_str(&read_to_string(path)?, path)
}

pub fn read_triples_str(text: &str, source: &Path) -> Result<Vec<RelationTriple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (concept, relation, term, sentence, tags) = match cols[..] {
            [c, r, t, s] => (c, r, t, s, None),
            [c, r, t, s, pos, chunk] => (c, r, t, s, Some((pos, chunk))),
            _ => {
                return Err(Error::format(
                    source,
                    line_no,
                    format!("expected 4 or 6 TAB-separated columns, found {}", cols.len()),
                ))
            }
        };
        let relation = relation
            .trim()
            .parse()
            .map_err(|e: Error| Error::format(source, line_no, e.to_string()))?;
        if sentence.trim().is_empty() {
            return Err(Error::format(source, line_no, "empty sentence"));
        }
        let tags = match tags {
            None => None,
            Some((pos, chunk)) => {
                let pos: Vec<&str> = pos.split_whitespace().collect();
                let chunk: Vec<&str> = chunk.split_whitespace().collect();
                let n = tokenize(sentence).len();
                if pos.len() != n || chunk.len() != n {
                    return Err(Error::format(
                        source,
                        line_no,
                        format!("tag columns must have {n} entries (one per token)"),
                    ));
                }
                Some(pos.into_iter().zip(chunk).map(|(p, c)| (p.to_string(), c.to_string())).collect())
            }
        };
        out.push(RelationTriple {
            concept: concept.trim().to_string(),
            relation,
            term: term.trim().to_string(),
            sentence: sentence.trim().to_string(),
            tags,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Relation;

    fn sim(text: &str) -> Result<Vec<SimPair>> {
        parse_similarity_str(text, false, Path::new("mem.txt"))
    }

    #[test]
    fn normalizes_min_max() {
        let p = sim("a\tb\t10\nc\td\t0\n").unwrap();
        assert_eq!((p[0].gold_norm, p[1].gold_norm), (1.0, 0.0));
        let p = sim("a\tb\t0\nc\td\t5\ne\tf\t10\n").unwrap();
        let norms: Vec<f64> = p.iter().map(|x| x.gold_norm).collect();
        assert_eq!(norms, [0.0, 0.5, 1.0]);
        assert_eq!(sim("a\tb\t5\n").unwrap()[0].gold_norm, 0.5);
    }

    #[test]
    fn csv_and_comments() {
        let p = parse_similarity_str("# header\ncar,automobile,9.5\ncar,wheel,3\n", true, Path::new("x.csv")).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].word2, "automobile");
    }

    #[test]
    fn bad_score_names_line() {
        let err = sim("a\tb\t1\n\nc\td\tmany\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }));
    }

    #[test]
    fn definitions_split_once() {
        let src = Path::new("defs.tsv");
        let d = parse_definitions_str("Moon\tThe Moon is an astronomical body...\n", src).unwrap();
        assert_eq!(d, vec![("Moon".into(), "The Moon is an astronomical body...".into())]);
        assert!(parse_definitions_str("", src).unwrap().is_empty());
        let d = parse_definitions_str("x\ty\tz\n", src).unwrap();
        assert_eq!(d[0], ("x".into(), "y\tz".into()));
        assert!(parse_definitions_str("no tab here\n", src).is_err());
    }

    #[test]
    fn triples_with_and_without_tags() {
        let text = "Sun\tIsA\tstar\tSun is a star\nSun\tpartof\tSolar System\tSun is in our Solar System\tNN VBZ IN PRP$ NNP NNP\tB-NP B-VP B-PP B-NP I-NP I-NP\n";
        let t = read_triples_str(text, Path::new("t.tsv")).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].relation, Relation::PartOf);
        assert_eq!(t[1].tags.as_ref().unwrap()[3].0, "PRP$");
        assert!(read_triples_str("Sun\tLikes\tstar\tSun is a star\n", Path::new("t")).is_err());
    }
}
