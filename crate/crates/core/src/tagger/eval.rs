use std::collections::{BTreeMap, HashSet};

use super::TaggerModel;
use crate::basis::BasisStore;
use crate::corpus::{spans_of, BioLabel, Relation, Span, TaggedSentence};

/// Exact-match span precision, recall and F1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpanScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold spans.
    pub support: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl SpanScore {
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        SpanScore {
            precision,
            recall,
            f1,
            support: gold,
            predicted,
            correct,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanEvaluation {
    pub micro: SpanScore,
    pub per_relation: BTreeMap<Relation, SpanScore>,
}

/// Score predicted label sequences against gold ones. A predicted span is
/// correct iff its boundaries and relation match a gold span exactly.
pub fn score_spans(gold: &[Vec<BioLabel>], predicted: &[Vec<BioLabel>]) -> SpanEvaluation {
    assert_eq!(gold.len(), predicted.len(), "gold and predicted sentence counts differ");
    // relation -> (correct, predicted, gold)
    let mut counts: BTreeMap<Relation, (usize, usize, usize)> = BTreeMap::new();
    for (g, p) in gold.iter().zip(predicted) {
        let gold_spans: HashSet<Span> = spans_of(g).into_iter().collect();
        for s in &gold_spans {
            counts.entry(s.relation).or_default().2 += 1;
        }
        for s in spans_of(p) {
            let entry = counts.entry(s.relation).or_default();
            entry.1 += 1;
            if gold_spans.contains(&s) {
                entry.0 += 1;
            }
        }
    }
    let (c, p, g) = counts
        .values()
        .fold((0, 0, 0), |acc, v| (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2));
    SpanEvaluation {
        micro: SpanScore::from_counts(c, p, g),
        per_relation: counts
            .into_iter()
            .map(|(r, (c, p, g))| (r, SpanScore::from_counts(c, p, g)))
            .collect(),
    }
}

/// Predict every sentence of `corpus` and score against its gold labels.
pub fn evaluate_spans(model: &TaggerModel, corpus: &[TaggedSentence], basis: &BasisStore) -> SpanEvaluation {
    let gold: Vec<Vec<BioLabel>> = corpus.iter().map(|s| s.labels.clone()).collect();
    let predicted: Vec<Vec<BioLabel>> = corpus.iter().map(|s| model.predict(s, basis)).collect();
    score_spans(&gold, &predicted)
}
