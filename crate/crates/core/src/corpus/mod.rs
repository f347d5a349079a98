//! Corpus artifacts: relation labels, BIO-tagged sentences, triple alignment,
//! CoNLL I/O and the benchmark/definition file readers.

mod align;
mod conll;
mod files;
mod pos;
mod split;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use align::{align_triples, find_span, AlignOutput, RelationTriple, SkipReason, SkipReport};
pub use conll::{read_conll, read_conll_file, write_conll, write_conll_file};
pub use files::{
    parse_definitions, parse_definitions_str, parse_similarity, parse_similarity_str, read_triples,
    read_triples_str, SimPair,
};
pub use pos::heuristic_tags;
pub use split::{split_corpus, DEFAULT_SPLIT};
pub use tokenize::tokenize;

/// Definitional relations, in schema order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    IsA,
    PartOf,
    HasA,
    MadeOf,
    UsedFor,
    Cause,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::IsA,
        Relation::PartOf,
        Relation::HasA,
        Relation::MadeOf,
        Relation::UsedFor,
        Relation::Cause,
    ];

    /// Relations that appear in training corpora (`Cause` is excluded).
    pub const TRAINING: [Relation; 5] = [
        Relation::IsA,
        Relation::PartOf,
        Relation::HasA,
        Relation::MadeOf,
        Relation::UsedFor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::IsA => "IsA",
            Relation::PartOf => "PartOf",
            Relation::HasA => "HasA",
            Relation::MadeOf => "MadeOf",
            Relation::UsedFor => "UsedFor",
            Relation::Cause => "Cause",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown relation `{s}`")))
    }
}

/// A BIO tag over the relation labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BioLabel {
    O,
    B(Relation),
    I(Relation),
}

impl BioLabel {
    /// `O` followed by `B-X`, `I-X` for every training relation (11 labels).
    pub fn training_set() -> Vec<BioLabel> {
        let mut labels = vec![BioLabel::O];
        for r in Relation::TRAINING {
            labels.push(BioLabel::B(r));
            labels.push(BioLabel::I(r));
        }
        labels
    }

    pub fn relation(self) -> Option<Relation> {
        match self {
            BioLabel::O => None,
            BioLabel::B(r) | BioLabel::I(r) => Some(r),
        }
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::O => f.write_str("O"),
            BioLabel::B(r) => write!(f, "B-{r}"),
            BioLabel::I(r) => write!(f, "I-{r}"),
        }
    }
}

impl FromStr for BioLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioLabel::O);
        }
        match s.split_once('-') {
            Some(("B", r)) => Ok(BioLabel::B(r.parse()?)),
            Some(("I", r)) => Ok(BioLabel::I(r.parse()?)),
            _ => Err(Error::InvalidArgument(format!("invalid BIO label `{s}`"))),
        }
    }
}

/// A labelled span `[start, end)` over token positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub relation: Relation,
}

/// Maximal spans of a label sequence. A stray `I-X` opens a new span, which
/// matches what [`repair_bio`] would turn it into.
pub fn spans_of(labels: &[BioLabel]) -> Vec<Span> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    for (i, label) in labels.iter().enumerate() {
        match *label {
            BioLabel::O => open = false,
            BioLabel::B(r) => {
                spans.push(Span { start: i, end: i + 1, relation: r });
                open = true;
            }
            BioLabel::I(r) => match spans.last_mut() {
                Some(last) if open && last.relation == r && last.end == i => last.end = i + 1,
                _ => {
                    spans.push(Span { start: i, end: i + 1, relation: r });
                    open = true;
                }
            },
        }
    }
    spans
}

/// Rewrite every `I-X` not preceded by `B-X`/`I-X` into `B-X`.
pub fn repair_bio(labels: &mut [BioLabel]) {
    let mut prev = BioLabel::O;
    for label in labels.iter_mut() {
        if let BioLabel::I(r) = *label {
            if prev.relation() != Some(r) {
                *label = BioLabel::B(r);
            }
        }
        prev = *label;
    }
}

/// Check the BIO well-formedness invariant.
pub fn is_valid_bio(labels: &[BioLabel]) -> bool {
    let mut prev = BioLabel::O;
    for &label in labels {
        if let BioLabel::I(r) = label {
            if prev.relation() != Some(r) {
                return false;
            }
        }
        prev = label;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: String,
    pub chunk: String,
    pub is_query: bool,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>, chunk: impl Into<String>, is_query: bool) -> Self {
        Token {
            surface: surface.into(),
            pos: pos.into(),
            chunk: chunk.into(),
            is_query,
        }
    }
}

/// Tokens with features and gold BIO labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSentence {
    pub concept: String,
    pub tokens: Vec<Token>,
    pub labels: Vec<BioLabel>,
}

impl TaggedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> Vec<Span> {
        spans_of(&self.labels)
    }

    pub fn surface(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Verify the sentence invariants, describing the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.labels.len() != self.tokens.len() {
            return Err(format!(
                "{} labels for {} tokens",
                self.labels.len(),
                self.tokens.len()
            ));
        }
        if let Some(t) = self.tokens.iter().find(|t| t.surface.is_empty()) {
            return Err(format!("empty token surface (pos {})", t.pos));
        }
        if !is_valid_bio(&self.labels) {
            return Err("I- label without a matching B-/I- predecessor".into());
        }
        let query: Vec<usize> = (0..self.len()).filter(|&i| self.tokens[i].is_query).collect();
        if let (Some(&first), Some(&last)) = (query.first(), query.last()) {
            if last - first + 1 != query.len() {
                return Err("query flags are not contiguous".into());
            }
        }
        if query.iter().any(|&i| self.labels[i] != BioLabel::O) {
            return Err("query token carries a relation label".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use BioLabel::*;
    use Relation::*;

    #[test]
    fn label_round_trip_and_order() {
        let set = BioLabel::training_set();
        assert_eq!(set.len(), 11);
        for l in &set {
            assert_eq!(&l.to_string().parse::<BioLabel>().unwrap(), l);
        }
        assert!(IsA < PartOf && PartOf < HasA && HasA < MadeOf && MadeOf < UsedFor && UsedFor < Cause);
        assert!("B-Foo".parse::<BioLabel>().is_err());
        assert_eq!("isa".parse::<Relation>().unwrap(), IsA);
    }

    #[test]
    fn repair_rewrites_stray_inside() {
        let mut labels = vec![O, I(IsA)];
        repair_bio(&mut labels);
        assert_eq!(labels, vec![O, B(IsA)]);

        let mut labels = vec![B(IsA), I(PartOf), I(PartOf)];
        repair_bio(&mut labels);
        assert_eq!(labels, vec![B(IsA), B(PartOf), I(PartOf)]);
        assert!(is_valid_bio(&labels));
    }

    #[test]
    fn spans_group_maximal_runs() {
        let labels = [O, B(IsA), I(IsA), O, B(IsA), B(PartOf), I(PartOf)];
        let spans = spans_of(&labels);
        assert_eq!(
            spans,
            vec![
                Span { start: 1, end: 3, relation: IsA },
                Span { start: 4, end: 5, relation: IsA },
                Span { start: 5, end: 7, relation: PartOf },
            ]
        );
        // stray I- opens a span just like its repaired form would
        let mut stray = vec![O, I(IsA), I(IsA)];
        let before = spans_of(&stray);
        repair_bio(&mut stray);
        assert_eq!(before, spans_of(&stray));
    }
}
