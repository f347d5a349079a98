//! Generators shared by the integration tests: toy bases, templated
//! definition corpora and random frames.
#![allow(dead_code)]

use std::collections::BTreeSet;

use defframe::corpus::{align_triples, RelationTriple};
use defframe::frames::{DefinitionFrame, EncodedFrame, SCHEMA_ROWS};
use defframe::{BasisStore, BioLabel, Relation, TaggedSentence, Token};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; one draw is enough here
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_vector(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| gaussian(rng)).collect()
}

/// Pronounceable nonce words, distinct and lowercase.
pub fn nonce_words(n: usize, seed: u64) -> Vec<String> {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut rng = rng(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS.choose(&mut rng).unwrap(), VOWELS.choose(&mut rng).unwrap()))
            .collect();
        if seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

/// Basis over `words` with independent Gaussian vectors.
pub fn random_basis<S: AsRef<str>>(words: &[S], d: usize, seed: u64) -> BasisStore {
    let mut rng = rng(seed);
    let entries: Vec<(String, Vec<f64>)> = words
        .iter()
        .map(|w| (w.as_ref().to_string(), random_vector(&mut rng, d)))
        .collect();
    BasisStore::from_entries(d, entries, true).unwrap()
}

const FILLER: [&str; 24] = [
    "a", "an", "the", "is", "of", "part", "used", "for", "made", "has", "that", "which", "and", "it",
    "often", "found", "near", "in", "very", "old", "kind", "seen", "some", "with",
];

/// Everything the templated corpus needs: nouns, function words and a basis
/// covering all of them.
pub struct TemplateWorld {
    pub nouns: Vec<String>,
    pub basis: BasisStore,
}

impl TemplateWorld {
    pub fn new(n_nouns: usize, d: usize, seed: u64) -> Self {
        let nouns = nonce_words(n_nouns, seed);
        let mut vocab: Vec<String> = nouns.clone();
        vocab.extend(FILLER.iter().map(|s| s.to_string()));
        vocab.extend([",", "."].map(String::from));
        let basis = random_basis(&vocab, d, seed ^ 0x5eed);
        TemplateWorld { nouns, basis }
    }

    fn noun(&self, rng: &mut impl Rng) -> String {
        self.nouns.choose(rng).unwrap().clone()
    }

    /// A term of one or two nouns.
    fn term(&self, rng: &mut impl Rng) -> String {
        if rng.gen_bool(0.3) {
            format!("{} {}", self.noun(rng), self.noun(rng))
        } else {
            self.noun(rng)
        }
    }

    /// Relation triples for `n` templated definitions of the form
    /// "X is a Y", "X is part of Y", "X is used for Y", "X is made of Y",
    /// "X has a Y", optionally chained with a second relation and padded
    /// with distractor clauses that mention unrelated nouns.
    pub fn triples(&self, n: usize, seed: u64) -> Vec<RelationTriple> {
        let mut rng = rng(seed);
        let mut out = Vec::new();
        for _ in 0..n {
            let concept = self.noun(&mut rng);
            let mut clauses: Vec<(Relation, String, String)> = Vec::new();
            let first = *[
                Relation::IsA,
                Relation::PartOf,
                Relation::UsedFor,
                Relation::MadeOf,
                Relation::HasA,
            ]
            .choose(&mut rng)
            .unwrap();
            let term = self.term(&mut rng);
            clauses.push((first, term.clone(), lead(first, &term)));
            if rng.gen_bool(0.5) {
                let second = **[Relation::UsedFor, Relation::MadeOf, Relation::HasA, Relation::PartOf]
                    .iter()
                    .filter(|r| **r != first)
                    .collect::<Vec<_>>()
                    .choose(&mut rng)
                    .unwrap();
                let term = self.term(&mut rng);
                clauses.push((second, term.clone(), format!("that {}", tail(second, &term))));
            }
            let mut sentence = format!("{concept} {}", clauses[0].2);
            for c in &clauses[1..] {
                sentence.push(' ');
                sentence.push_str(&c.2);
            }
            match rng.gen_range(0..4) {
                0 => sentence.push_str(&format!(" , often found near the {}", self.noun(&mut rng))),
                1 => sentence.push_str(&format!(" and it is very old in some {}", self.noun(&mut rng))),
                2 => {
                    // a relation-shaped clause about another noun; stays O
                    let other = *[Relation::MadeOf, Relation::HasA, Relation::UsedFor].choose(&mut rng).unwrap();
                    let (near, term) = (self.noun(&mut rng), self.term(&mut rng));
                    sentence.push_str(&format!(" , seen with the {near} which {}", tail(other, &term)));
                }
                _ => {}
            }
            sentence.push_str(" .");
            for (relation, term, _) in clauses {
                out.push(RelationTriple::new(&concept, relation, &term, &sentence));
            }
        }
        out
    }

    /// Aligned, BIO-labelled sentences built from [`triples`](Self::triples).
    pub fn corpus(&self, n: usize, seed: u64) -> Vec<TaggedSentence> {
        align_triples(&self.triples(n, seed), true).sentences
    }
}

fn lead(r: Relation, term: &str) -> String {
    match r {
        Relation::IsA => format!("is a {term}"),
        _ => tail(r, term),
    }
}

fn tail(r: Relation, term: &str) -> String {
    match r {
        Relation::IsA => format!("is a kind of {term}"),
        Relation::PartOf => format!("is part of the {term}"),
        Relation::HasA => format!("has a {term}"),
        Relation::MadeOf => format!("is made of {term}"),
        Relation::UsedFor => format!("is used for {term}"),
        Relation::Cause => unreachable!("templates never generate Cause"),
    }
}

/// A random sentence with a random (valid BIO) labelling, for gradient
/// checks and property tests.
pub fn random_sentence(rng: &mut impl Rng, words: &[String], len: usize) -> TaggedSentence {
    const POS: [&str; 4] = ["NN", "VBZ", "DT", "IN"];
    const CHUNK: [&str; 3] = ["B-NP", "I-NP", "O"];
    let tokens: Vec<Token> = (0..len)
        .map(|_| {
            Token::new(
                words.choose(rng).unwrap().clone(),
                *POS.choose(rng).unwrap(),
                *CHUNK.choose(rng).unwrap(),
                rng.gen_bool(0.2),
            )
        })
        .collect();
    let training = BioLabel::training_set();
    let mut labels: Vec<BioLabel> = (0..len).map(|_| *training.choose(rng).unwrap()).collect();
    defframe::corpus::repair_bio(&mut labels);
    TaggedSentence {
        concept: "x".into(),
        tokens,
        labels,
    }
}

/// A random frame over `vocab`, including terms from `oov` that the basis
/// cannot resolve.
pub fn random_frame(rng: &mut impl Rng, vocab: &[String], oov: &[String]) -> DefinitionFrame {
    let mut frame = DefinitionFrame::new(vocab.choose(rng).unwrap().clone());
    for relation in Relation::ALL {
        let n = rng.gen_range(0..=3);
        for _ in 0..n {
            let term = match rng.gen_range(0..5) {
                0 if !oov.is_empty() => oov.choose(rng).unwrap().clone(),
                1 => format!("{} {}", vocab.choose(rng).unwrap(), vocab.choose(rng).unwrap()),
                _ => vocab.choose(rng).unwrap().clone(),
            };
            frame.add_term(relation, term);
        }
    }
    frame
}

/// Encoded frame with Gaussian entries in the given rows and zeros elsewhere.
pub fn random_encoded(rng: &mut impl Rng, concept: &str, d: usize, rows: &[usize]) -> EncodedFrame {
    let mut m = vec![0.0; SCHEMA_ROWS * d];
    for &r in rows {
        for x in &mut m[r * d..(r + 1) * d] {
            *x = gaussian(rng);
        }
    }
    EncodedFrame::from_matrix(concept, d, m).unwrap()
}
