//! Definition Frames: extraction from tagged sentences, encoding into a
//! fixed-schema `k x d` matrix over the basis space, masked similarity and
//! decoding back to vocabulary terms.

mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::basis::BasisStore;
use crate::corpus::Relation;
use crate::error::{Error, Result};
use crate::linalg;
use crate::tagger::{prepare_sentence, TaggerModel};

pub use io::{
    read_encoded, read_encoded_file, read_frames, read_frames_file, write_encoded, write_encoded_file,
    write_frames, write_frames_file, ENCODED_VERSION,
};

/// A row of the encoded matrix: the concept's own embedding or one relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Row {
    Word,
    Rel(Relation),
}

/// Row order of every encoded frame.
pub const SCHEMA: [Row; 7] = [
    Row::Word,
    Row::Rel(Relation::IsA),
    Row::Rel(Relation::PartOf),
    Row::Rel(Relation::HasA),
    Row::Rel(Relation::MadeOf),
    Row::Rel(Relation::UsedFor),
    Row::Rel(Relation::Cause),
];

/// Number of schema rows.
pub const SCHEMA_ROWS: usize = SCHEMA.len();

impl Row {
    pub fn index(self) -> usize {
        match self {
            Row::Word => 0,
            Row::Rel(r) => 1 + r as usize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Row::Word => "self",
            Row::Rel(r) => r.name(),
        }
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Row {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("self") || s.eq_ignore_ascii_case("word") {
            return Ok(Row::Word);
        }
        s.parse().map(Row::Rel)
    }
}

/// A nonempty subset of schema rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RowMask(u8);

impl RowMask {
    /// Every schema row (`DF_all`).
    pub fn all() -> Self {
        RowMask((1 << SCHEMA_ROWS) - 1)
    }

    /// The word itself and its `IsA` row (`DF_basic`).
    pub fn basic() -> Self {
        Self::from_rows(&[Row::Word, Row::Rel(Relation::IsA)]).unwrap()
    }

    pub fn from_rows(rows: &[Row]) -> Result<Self> {
        let bits = rows.iter().fold(0u8, |acc, r| acc | (1 << r.index()));
        if bits == 0 {
            return Err(Error::InvalidArgument("row mask must select at least one row".into()));
        }
        Ok(RowMask(bits))
    }

    pub fn contains(self, row: Row) -> bool {
        self.0 & (1 << row.index()) != 0
    }

    pub fn rows(self) -> impl Iterator<Item = Row> {
        SCHEMA.into_iter().filter(move |r| self.contains(*r))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for RowMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == RowMask::all() {
            return f.write_str("DF_all");
        }
        if *self == RowMask::basic() {
            return f.write_str("DF_basic");
        }
        let names: Vec<&str> = self.rows().map(Row::name).collect();
        write!(f, "custom:{}", names.join(","))
    }
}

impl FromStr for RowMask {
    type Err = Error;

    /// `DF_all`, `DF_basic` or `custom:self,IsA,...`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DF_all" | "all" => Ok(RowMask::all()),
            "DF_basic" | "basic" => Ok(RowMask::basic()),
            _ => {
                let list = s
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown mask `{s}`")))?;
                let rows = list
                    .split(',')
                    .filter(|r| !r.trim().is_empty())
                    .map(|r| r.trim().parse())
                    .collect::<Result<Vec<Row>>>()?;
                RowMask::from_rows(&rows)
            }
        }
    }
}

/// A concept with its related terms per relation, each list in order of
/// first appearance and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefinitionFrame {
    pub concept: String,
    relations: BTreeMap<Relation, Vec<String>>,
}

impl DefinitionFrame {
    pub fn new(concept: impl Into<String>) -> Self {
        DefinitionFrame {
            concept: concept.into(),
            relations: BTreeMap::new(),
        }
    }

    /// Add a term; returns `false` if it was already listed.
    pub fn add_term(&mut self, relation: Relation, term: impl Into<String>) -> bool {
        let term = term.into();
        let terms = self.relations.entry(relation).or_default();
        if terms.contains(&term) {
            return false;
        }
        terms.push(term);
        true
    }

    pub fn with_terms<I, S>(mut self, relation: Relation, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for t in terms {
            self.add_term(relation, t);
        }
        self
    }

    pub fn terms(&self, relation: Relation) -> &[String] {
        self.relations.get(&relation).map_or(&[], Vec::as_slice)
    }

    /// Nonempty relations in schema order.
    pub fn relations(&self) -> impl Iterator<Item = (Relation, &[String])> {
        self.relations
            .iter()
            .filter(|(_, t)| !t.is_empty())
            .map(|(r, t)| (*r, t.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.relations().next().is_none()
    }
}

/// A frame encoded as a `SCHEMA_ROWS x dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedFrame {
    pub concept: String,
    dim: usize,
    matrix: Vec<f64>,
}

impl EncodedFrame {
    pub fn zeros(concept: impl Into<String>, dim: usize) -> Self {
        EncodedFrame {
            concept: concept.into(),
            dim,
            matrix: vec![0.0; SCHEMA_ROWS * dim],
        }
    }

    pub fn from_matrix(concept: impl Into<String>, dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != SCHEMA_ROWS * dim {
            return Err(Error::Dimension {
                expected: SCHEMA_ROWS * dim,
                found: matrix.len(),
            });
        }
        Ok(EncodedFrame {
            concept: concept.into(),
            dim,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row(&self, row: Row) -> &[f64] {
        let i = row.index();
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, row: Row) -> &mut [f64] {
        let i = row.index();
        &mut self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_zero_row(&self, row: Row) -> bool {
        self.row(row).iter().all(|&x| x == 0.0)
    }

    /// Masked rows, in schema order, concatenated.
    pub fn masked(&self, mask: RowMask) -> Vec<f64> {
        let mut out = Vec::with_capacity(mask.len() * self.dim);
        for row in mask.rows() {
            out.extend_from_slice(self.row(row));
        }
        out
    }

    /// Copy with every row outside `mask` zeroed.
    pub fn restricted(&self, mask: RowMask) -> Self {
        let mut out = self.clone();
        for row in SCHEMA {
            if !mask.contains(row) {
                out.row_mut(row).iter_mut().for_each(|x| *x = 0.0);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EncodeReport {
    /// Terms that resolved in the basis.
    pub resolved: usize,
    /// Terms skipped because none of their tokens is in the basis.
    pub skipped: usize,
    pub concept_resolved: bool,
}

/// Encode a frame: row 0 is the concept's embedding, every relation row the
/// mean embedding of its resolvable terms, and zero where nothing resolves.
pub fn encode(frame: &DefinitionFrame, basis: &BasisStore) -> (EncodedFrame, EncodeReport) {
    let d = basis.dim();
    let mut enc = EncodedFrame::zeros(frame.concept.clone(), d);
    let mut report = EncodeReport::default();

    if let Some(v) = basis.lookup_term(&frame.concept) {
        enc.row_mut(Row::Word).copy_from_slice(&v);
        report.concept_resolved = true;
    }
    for (relation, terms) in frame.relations() {
        let mut sum = vec![0.0; d];
        let mut n = 0usize;
        for term in terms {
            match basis.lookup_term(term) {
                Some(v) => {
                    sum.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
                    n += 1;
                }
                None => report.skipped += 1,
            }
        }
        report.resolved += n;
        if n > 0 {
            let row = enc.row_mut(Row::Rel(relation));
            let inv = n as f64;
            row.iter_mut().zip(&sum).for_each(|(r, s)| *r = s / inv);
        }
    }
    (enc, report)
}

/// Cosine of two encoded frames restricted to a row mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub score: f64,
    /// Either masked concatenation was all-zero; `score` is then 0.
    pub degenerate: bool,
}

/// Cosine of the row-concatenated masked matrices. Rows are never compared
/// across relations.
pub fn frame_similarity(a: &EncodedFrame, b: &EncodedFrame, mask: RowMask) -> Result<Similarity> {
    if a.dim != b.dim {
        return Err(Error::Dimension {
            expected: a.dim,
            found: b.dim,
        });
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for row in mask.rows() {
        for (x, y) in a.row(row).iter().zip(b.row(row)) {
            ab += x * y;
            aa += x * x;
            bb += y * y;
        }
    }
    if aa == 0.0 || bb == 0.0 {
        return Ok(Similarity {
            score: 0.0,
            degenerate: true,
        });
    }
    Ok(Similarity {
        score: ab / (aa * bb).sqrt(),
        degenerate: false,
    })
}

/// Nearest basis terms of one encoded row.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedRow {
    pub row: Row,
    pub terms: Vec<(String, f64)>,
}

/// Map every nonzero row back to its `k` nearest basis terms; zero rows
/// decode to empty lists.
pub fn decode(enc: &EncodedFrame, basis: &BasisStore, k: usize) -> Result<Vec<DecodedRow>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if enc.dim != basis.dim() {
        return Err(Error::Dimension {
            expected: basis.dim(),
            found: enc.dim,
        });
    }
    SCHEMA
        .into_iter()
        .map(|row| {
            let terms = if enc.is_zero_row(row) {
                Vec::new()
            } else {
                basis.nearest_terms(enc.row(row), k)?
            };
            Ok(DecodedRow { row, terms })
        })
        .collect()
}

/// A frame pulled from one definition sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub frame: DefinitionFrame,
    /// `false` when the concept could not be located in the sentence and
    /// the query flags were left unset.
    pub concept_found: bool,
}

/// Tag a definition sentence and group the predicted spans into a frame.
/// There is no cap on the number of spans or relations.
pub fn extract_frame(model: &TaggerModel, concept: &str, sentence: &str, basis: &BasisStore) -> Extraction {
    let (tagged, concept_found) = prepare_sentence(concept, sentence);
    let mut frame = DefinitionFrame::new(concept);
    if tagged.is_empty() {
        return Extraction { frame, concept_found };
    }
    let labels = model.predict(&tagged, basis);
    for span in crate::corpus::spans_of(&labels) {
        let term: Vec<&str> = tagged.tokens[span.start..span.end]
            .iter()
            .map(|t| t.surface.as_str())
            .collect();
        frame.add_term(span.relation, term.join(" "));
    }
    Extraction { frame, concept_found }
}

/// Cosine of two flat vectors, 0 (and degenerate) when either is zero.
pub(crate) fn flat_similarity(a: &[f64], b: &[f64]) -> Similarity {
    match linalg::cosine(a, b) {
        Some(score) => Similarity { score, degenerate: false },
        None => Similarity { score: 0.0, degenerate: true },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn toy() -> BasisStore {
        BasisStore::from_reader(
            "a 1 0\nb 0 1\nstar 0.6 0.8\nsun 1 1\n".as_bytes(),
            Path::new("toy"),
            true,
        )
        .unwrap()
    }

    #[test]
    fn encoding_means_and_zero_rows() {
        let basis = toy();
        let frame = DefinitionFrame::new("Sun").with_terms(Relation::IsA, ["a", "b"]);
        let (enc, report) = encode(&frame, &basis);
        assert_eq!(enc.row(Row::Word), &[1.0, 1.0]);
        assert_eq!(enc.row(Row::Rel(Relation::IsA)), &[0.5, 0.5]);
        assert_eq!(enc.row(Row::Rel(Relation::MadeOf)), &[0.0, 0.0]);
        assert!(report.concept_resolved);

        let single = DefinitionFrame::new("x").with_terms(Relation::IsA, ["star", "zzz"]);
        let (enc, report) = encode(&single, &basis);
        assert_eq!(enc.row(Row::Rel(Relation::IsA)), &[0.6, 0.8]);
        assert!(enc.is_zero_row(Row::Word));
        assert_eq!((report.resolved, report.skipped), (1, 1));
    }

    #[test]
    fn frames_deduplicate_terms() {
        let mut f = DefinitionFrame::new("c");
        assert!(f.add_term(Relation::IsA, "x"));
        assert!(!f.add_term(Relation::IsA, "x"));
        assert_eq!(f.terms(Relation::IsA), ["x"]);
        assert!(f.terms(Relation::HasA).is_empty());
    }

    #[test]
    fn masks_parse_and_print() {
        assert_eq!("DF_all".parse::<RowMask>().unwrap(), RowMask::all());
        assert_eq!("DF_basic".parse::<RowMask>().unwrap().len(), 2);
        let m: RowMask = "custom:self,PartOf".parse().unwrap();
        assert!(m.contains(Row::Word) && m.contains(Row::Rel(Relation::PartOf)));
        assert_eq!(m.to_string(), "custom:self,PartOf");
        assert_eq!(m.to_string().parse::<RowMask>().unwrap(), m);
        assert!("DF_most".parse::<RowMask>().is_err());
        assert!("custom:".parse::<RowMask>().is_err());
        assert!("custom:Likes".parse::<RowMask>().is_err());
    }

    #[test]
    fn orthogonal_blocks_have_zero_similarity() {
        let mut a = EncodedFrame::zeros("a", 2);
        let mut b = EncodedFrame::zeros("b", 2);
        a.row_mut(Row::Rel(Relation::IsA)).copy_from_slice(&[1.0, 0.0]);
        b.row_mut(Row::Rel(Relation::PartOf)).copy_from_slice(&[1.0, 0.0]);
        let s = frame_similarity(&a, &b, RowMask::all()).unwrap();
        assert_eq!(s, Similarity { score: 0.0, degenerate: false });
        assert!((frame_similarity(&a, &a, RowMask::all()).unwrap().score - 1.0).abs() < 1e-12);
        assert!(frame_similarity(&a, &b, RowMask::basic()).unwrap().degenerate);
        assert!(frame_similarity(&a, &EncodedFrame::zeros("c", 3), RowMask::all()).is_err());
    }

    #[test]
    fn decode_recovers_single_terms() {
        let basis = toy();
        let frame = DefinitionFrame::new("sun")
            .with_terms(Relation::IsA, ["star"])
            .with_terms(Relation::PartOf, ["b"]);
        let (enc, _) = encode(&frame, &basis);
        let rows = decode(&enc, &basis, 1).unwrap();
        assert_eq!(rows[0].terms[0].0, "sun");
        assert_eq!(rows[1].terms[0].0, "star");
        assert_eq!(rows[2].terms[0].0, "b");
        assert!(rows[3..].iter().all(|r| r.terms.is_empty()));
        assert!((rows[1].terms[0].1 - 1.0).abs() < 1e-9);

        let zero = decode(&EncodedFrame::zeros("z", 2), &basis, 3).unwrap();
        assert!(zero.iter().all(|r| r.terms.is_empty()));
    }
}
