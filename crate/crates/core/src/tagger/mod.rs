//! The relation tagger: a bidirectional LSTM over frozen basis vectors and
//! POS/chunk/query features, trained with per-token cross-entropy.

mod checkpoint;
mod config;
mod eval;
mod model;
mod train;

pub use checkpoint::TAGGER_VERSION;
pub use config::TaggerConfig;
pub use eval::{evaluate_spans, score_spans, SpanEvaluation, SpanScore};
pub use model::{argmax_labels, Block, FeatureVocab, TaggerModel, BLOCK_NAMES};
pub use train::{train, train_with_progress, EpochStats, TrainReport};

/// Feature columns for raw text: tokenize and fill POS/chunk with the
/// heuristic tagger, flagging the concept span when it can be found.
/// Returns the sentence (all labels `O`) and whether the concept was found.
pub fn prepare_sentence(concept: &str, sentence: &str) -> (crate::corpus::TaggedSentence, bool) {
    use crate::corpus::{find_span, heuristic_tags, tokenize, BioLabel, TaggedSentence, Token};

    let surface = tokenize(sentence);
    let query = find_span(&surface, &tokenize(concept), None);
    let tags = heuristic_tags(&surface);
    let (qs, qe) = query.unwrap_or((0, 0));
    let tokens: Vec<Token> = surface
        .into_iter()
        .zip(tags)
        .enumerate()
        .map(|(i, (s, (pos, chunk)))| Token::new(s, pos, chunk, i >= qs && i < qe))
        .collect();
    let n = tokens.len();
    (
        TaggedSentence {
            concept: concept.to_string(),
            tokens,
            labels: vec![BioLabel::O; n],
        },
        query.is_some(),
    )
}
