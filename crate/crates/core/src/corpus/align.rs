//! Turning (concept, relation, term, sentence) triples into BIO-labelled
//! training sentences.

use std::collections::HashMap;
use std::fmt;

use super::{heuristic_tags, tokenize, BioLabel, Relation, TaggedSentence, Token};

/// One relation instance with the sentence it was read from.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationTriple {
    pub concept: String,
    pub relation: Relation,
    pub term: String,
    pub sentence: String,
    /// Pre-computed `(pos, chunk)` per token of `tokenize(sentence)`.
    pub tags: Option<Vec<(String, String)>>,
}

impl RelationTriple {
    pub fn new(concept: &str, relation: Relation, term: &str, sentence: &str) -> Self {
        RelationTriple {
            concept: concept.to_string(),
            relation,
            term: term.to_string(),
            sentence: sentence.to_string(),
            tags: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SkipReason {
    /// `Cause` never enters a training corpus.
    ExcludedRelation,
    EmptySentence,
    ConceptNotFound,
    TermNotFound,
    /// The term span overlaps one already labelled in the same sentence.
    OverlappingSpan,
    /// Pre-tagged columns do not match the token count.
    TagMismatch,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipReason::ExcludedRelation => "excluded-relation",
            SkipReason::EmptySentence => "empty-sentence",
            SkipReason::ConceptNotFound => "concept-not-found",
            SkipReason::TermNotFound => "term-not-found",
            SkipReason::OverlappingSpan => "overlapping-span",
            SkipReason::TagMismatch => "tag-mismatch",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SkipReport {
    pub total: usize,
    /// `(triple index, reason)` in input order.
    pub skipped: Vec<(usize, SkipReason)>,
}

impl SkipReport {
    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }

    pub fn aligned(&self) -> usize {
        self.total - self.skipped.len()
    }

    pub fn count(&self, reason: SkipReason) -> usize {
        self.skipped.iter().filter(|(_, r)| *r == reason).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignOutput {
    pub sentences: Vec<TaggedSentence>,
    pub report: SkipReport,
}

/// Leftmost case-insensitive occurrence of `pattern` in `tokens` that does
/// not intersect `avoid`. Returns `[start, end)`.
pub fn find_span<S: AsRef<str>, P: AsRef<str>>(
    tokens: &[S],
    pattern: &[P],
    avoid: Option<(usize, usize)>,
) -> Option<(usize, usize)> {
    let n = pattern.len();
    if n == 0 || n > tokens.len() {
        return None;
    }
    (0..=tokens.len() - n).map(|s| (s, s + n)).find(|&(s, e)| {
        let clear = avoid.is_none_or(|(a, b)| e <= a || s >= b);
        clear
            && tokens[s..e]
                .iter()
                .zip(pattern)
                .all(|(t, p)| eq_fold(t.as_ref(), p.as_ref()))
    })
}

fn eq_fold(a: &str, b: &str) -> bool {
    a == b || a.to_lowercase() == b.to_lowercase()
}

struct Group {
    concept: String,
    surface: Vec<String>,
    tags: Option<Vec<(String, String)>>,
    query: Option<(usize, usize)>,
    labels: Vec<BioLabel>,
    claimed: Vec<(usize, usize)>,
    used: bool,
}

/// Align triples to their sentences. Triples sharing a sentence and concept
/// merge into one sentence with several labelled spans; unalignable triples
/// are skipped and reported.
pub fn align_triples(triples: &[RelationTriple], tagger_fallback: bool) -> AlignOutput {
    let mut report = SkipReport {
        total: triples.len(),
        skipped: Vec::new(),
    };
    let mut groups: Vec<Group> = Vec::new();
    let mut by_key: HashMap<(String, String), usize> = HashMap::new();

    for (i, triple) in triples.iter().enumerate() {
        if triple.relation == Relation::Cause {
            report.skipped.push((i, SkipReason::ExcludedRelation));
            continue;
        }
        let key = (triple.sentence.clone(), triple.concept.to_lowercase());
        let g = match by_key.get(&key) {
            Some(&g) => g,
            None => {
                let surface = tokenize(&triple.sentence);
                let query = find_span(&surface, &tokenize(&triple.concept), None);
                let n = surface.len();
                groups.push(Group {
                    concept: triple.concept.clone(),
                    surface,
                    tags: None,
                    query,
                    labels: vec![BioLabel::O; n],
                    claimed: Vec::new(),
                    used: false,
                });
                by_key.insert(key, groups.len() - 1);
                groups.len() - 1
            }
        };
        let group = &mut groups[g];

        if group.surface.is_empty() {
            report.skipped.push((i, SkipReason::EmptySentence));
            continue;
        }
        if let Some(tags) = &triple.tags {
            if tags.len() != group.surface.len() {
                report.skipped.push((i, SkipReason::TagMismatch));
                continue;
            }
        }
        let Some(query) = group.query else {
            report.skipped.push((i, SkipReason::ConceptNotFound));
            continue;
        };
        let Some((start, end)) = find_span(&group.surface, &tokenize(&triple.term), Some(query)) else {
            report.skipped.push((i, SkipReason::TermNotFound));
            continue;
        };
        if group.claimed.iter().any(|&(a, b)| start < b && a < end) {
            report.skipped.push((i, SkipReason::OverlappingSpan));
            continue;
        }

        group.labels[start] = BioLabel::B(triple.relation);
        for label in &mut group.labels[start + 1..end] {
            *label = BioLabel::I(triple.relation);
        }
        group.claimed.push((start, end));
        if group.tags.is_none() {
            group.tags.clone_from(&triple.tags);
        }
        group.used = true;
    }

    let sentences = groups
        .into_iter()
        .filter(|g| g.used)
        .map(|g| build_sentence(g, tagger_fallback))
        .collect();
    AlignOutput { sentences, report }
}

fn build_sentence(group: Group, tagger_fallback: bool) -> TaggedSentence {
    let tags = match group.tags {
        Some(tags) => tags,
        None if tagger_fallback => heuristic_tags(&group.surface),
        None => vec![("X".to_string(), "O".to_string()); group.surface.len()],
    };
    let (qs, qe) = group.query.unwrap_or((0, 0));
    let tokens = group
        .surface
        .into_iter()
        .zip(tags)
        .enumerate()
        .map(|(i, (surface, (pos, chunk)))| Token {
            surface,
            pos,
            chunk,
            is_query: i >= qs && i < qe,
        })
        .collect();
    TaggedSentence {
        concept: group.concept,
        tokens,
        labels: group.labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use BioLabel::*;
    use Relation::*;

    #[test]
    fn sun_is_a_star() {
        let out = align_triples(&[RelationTriple::new("Sun", IsA, "star", "Sun is a star")], false);
        assert_eq!(out.sentences.len(), 1);
        let s = &out.sentences[0];
        assert_eq!(s.surface(), ["Sun", "is", "a", "star"]);
        assert_eq!(s.labels, [O, O, O, B(IsA)]);
        let query: Vec<bool> = s.tokens.iter().map(|t| t.is_query).collect();
        assert_eq!(query, [true, false, false, false]);
        assert_eq!(s.tokens[0].pos, "X");
        assert_eq!(s.tokens[0].chunk, "O");
    }

    #[test]
    fn multiword_term_gets_inside_labels() {
        let out = align_triples(
            &[RelationTriple::new("Sun", PartOf, "Solar System", "Sun is in our Solar System")],
            true,
        );
        let s = &out.sentences[0];
        assert_eq!(&s.labels[4..], [B(PartOf), I(PartOf)]);
        assert_eq!(s.tokens[1].pos, "VBZ");
    }

    #[test]
    fn unfindable_term_is_skipped() {
        let out = align_triples(&[RelationTriple::new("Sun", IsA, "galaxy", "Sun is a star")], false);
        assert!(out.sentences.is_empty());
        assert_eq!(out.report.skip_count(), 1);
        assert_eq!(out.report.skipped[0], (0, SkipReason::TermNotFound));
    }

    #[test]
    fn shared_sentence_merges_and_overlap_skips() {
        let sentence = "A wheel is a part of a car and has a rim";
        let triples = [
            RelationTriple::new("wheel", PartOf, "car", sentence),
            RelationTriple::new("wheel", HasA, "rim", sentence),
            RelationTriple::new("wheel", IsA, "car", sentence),
            RelationTriple::new("wheel", Cause, "rim", sentence),
            RelationTriple::new("tyre", IsA, "car", sentence),
        ];
        let out = align_triples(&triples, false);
        assert_eq!(out.sentences.len(), 1);
        let s = &out.sentences[0];
        assert_eq!(s.spans().len(), 2);
        assert_eq!(
            out.report.skipped,
            vec![
                (2, SkipReason::OverlappingSpan),
                (3, SkipReason::ExcludedRelation),
                (4, SkipReason::ConceptNotFound)
            ]
        );
        assert!(s.validate().is_ok());
    }

    #[test]
    fn term_never_overlaps_query() {
        // "star" is both the concept and the term: the second occurrence is used
        let out = align_triples(&[RelationTriple::new("star", IsA, "star", "a star is a star")], false);
        assert_eq!(out.sentences[0].labels, [O, O, O, O, B(IsA)]);
    }

    #[test]
    fn pretagged_columns_are_used() {
        let mut t = RelationTriple::new("Sun", IsA, "star", "Sun is a star");
        t.tags = Some(vec![
            ("NNP".into(), "B-NP".into()),
            ("VBZ".into(), "B-VP".into()),
            ("DT".into(), "B-NP".into()),
            ("NN".into(), "I-NP".into()),
        ]);
        let out = align_triples(&[t.clone()], true);
        assert_eq!(out.sentences[0].tokens[0].pos, "NNP");

        t.tags.as_mut().unwrap().pop();
        let out = align_triples(&[t], true);
        assert_eq!(out.report.skipped, vec![(0, SkipReason::TagMismatch)]);
    }
}
