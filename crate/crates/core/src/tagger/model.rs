//! Bidirectional LSTM tagger with a per-token softmax output layer.
//!
//! Token input is the concatenation of a linear projection of the frozen
//! basis vector (zero when out of vocabulary) and learned POS, chunk and
//! query-flag embeddings. Both directions use the gate order
//! input, forget, output, candidate.

use std::collections::HashMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TaggerConfig;
use crate::basis::BasisStore;
use crate::corpus::{repair_bio, BioLabel, TaggedSentence};
use crate::error::{Error, Result};
use crate::linalg::{gemv_acc, gemv_t_acc, ger_acc, sigmoid};

pub(crate) const UNKNOWN_FEATURE: &str = "<unk>";

/// Names of the parameter blocks, in storage order.
pub const BLOCK_NAMES: [&str; 13] = [
    "pos_embed",
    "chunk_embed",
    "query_embed",
    "word_proj",
    "word_bias",
    "fwd_w",
    "fwd_u",
    "fwd_b",
    "bwd_w",
    "bwd_u",
    "bwd_b",
    "out_w",
    "out_b",
];

/// A named `rows x cols` slice of the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    blocks: Vec<Block>,
    total: usize,
}

impl Layout {
    fn new(shapes: [(usize, usize); 13]) -> Self {
        let mut offset = 0;
        let blocks = BLOCK_NAMES
            .iter()
            .zip(shapes)
            .map(|(&name, (rows, cols))| {
                let b = Block { name, rows, cols, offset };
                offset += rows * cols;
                b
            })
            .collect();
        Layout { blocks, total: offset }
    }

    fn get(&self, i: usize) -> Range<usize> {
        self.blocks[i].range()
    }
}

// block indices
const POS: usize = 0;
const CHUNK: usize = 1;
const QUERY: usize = 2;
const WPROJ: usize = 3;
const WBIAS: usize = 4;
const FWD: usize = 5;
const BWD: usize = 8;
const OUT_W: usize = 11;
const OUT_B: usize = 12;

/// Categorical vocabularies for the POS and chunk columns. Index 0 is the
/// unknown-feature bucket.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureVocab {
    pub pos: Vec<String>,
    pub chunk: Vec<String>,
}

impl FeatureVocab {
    /// Sorted unique tags seen in `corpus`, after the unknown bucket.
    pub fn from_corpus(corpus: &[TaggedSentence]) -> Self {
        let collect = |f: fn(&crate::corpus::Token) -> &str| {
            let mut tags: Vec<String> = corpus
                .iter()
                .flat_map(|s| s.tokens.iter().map(f))
                .filter(|t| *t != UNKNOWN_FEATURE)
                .map(str::to_string)
                .collect();
            tags.sort();
            tags.dedup();
            tags.insert(0, UNKNOWN_FEATURE.to_string());
            tags
        };
        FeatureVocab {
            pos: collect(|t| &t.pos),
            chunk: collect(|t| &t.chunk),
        }
    }
}

/// The trained relation tagger.
#[derive(Clone, Debug)]
pub struct TaggerModel {
    config: TaggerConfig,
    labels: Vec<BioLabel>,
    features: FeatureVocab,
    basis_dim: usize,
    layout: Layout,
    params: Vec<f64>,
    pos_index: HashMap<String, usize>,
    chunk_index: HashMap<String, usize>,
    outside: usize,
}

impl PartialEq for TaggerModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.labels == other.labels
            && self.features == other.features
            && self.basis_dim == other.basis_dim
            && self.params == other.params
    }
}

impl TaggerModel {
    /// Initialize with uniform noise in `[-r, r]`, `r = sqrt(6 / (fan_in +
    /// fan_out))` per weight block, zero biases except forget gates (1.0).
    pub fn init(
        config: &TaggerConfig,
        basis_dim: usize,
        labels: Vec<BioLabel>,
        features: FeatureVocab,
    ) -> Result<Self> {
        let mut model = Self::zeroed(config, basis_dim, labels, features)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let h = config.hidden_size;
        for (i, block) in model.layout.blocks.clone().iter().enumerate() {
            let params = &mut model.params[block.range()];
            match i {
                WBIAS | OUT_B => {}
                _ if i == FWD + 2 || i == BWD + 2 => {
                    // forget gate occupies rows h..2h
                    params[h..2 * h].iter_mut().for_each(|b| *b = 1.0);
                }
                _ => {
                    let r = (6.0 / (block.rows + block.cols) as f64).sqrt();
                    params.iter_mut().for_each(|p| *p = rng.gen_range(-r..=r));
                }
            }
        }
        Ok(model)
    }

    pub(crate) fn zeroed(
        config: &TaggerConfig,
        basis_dim: usize,
        labels: Vec<BioLabel>,
        features: FeatureVocab,
    ) -> Result<Self> {
        config.validate()?;
        if basis_dim == 0 {
            return Err(Error::Config("basis dimension must be positive".into()));
        }
        let outside = labels
            .iter()
            .position(|l| *l == BioLabel::O)
            .ok_or_else(|| Error::Config("label set must contain O".into()))?;
        let mut uniq = labels.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != labels.len() {
            return Err(Error::Config("label set contains duplicates".into()));
        }
        if features.pos.is_empty() || features.chunk.is_empty() {
            return Err(Error::Config("feature vocabularies must be nonempty".into()));
        }

        let h = config.hidden_size;
        let input = config.input_size();
        let shapes = [
            (features.pos.len(), config.pos_embed_dim),
            (features.chunk.len(), config.chunk_embed_dim),
            (2, config.query_embed_dim),
            (config.word_proj_dim, basis_dim),
            (config.word_proj_dim, 1),
            (4 * h, input),
            (4 * h, h),
            (4 * h, 1),
            (4 * h, input),
            (4 * h, h),
            (4 * h, 1),
            (labels.len(), 2 * h),
            (labels.len(), 1),
        ];
        let layout = Layout::new(shapes);
        let index = |v: &[String]| v.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(TaggerModel {
            config: config.clone(),
            pos_index: index(&features.pos),
            chunk_index: index(&features.chunk),
            params: vec![0.0; layout.total],
            labels,
            features,
            basis_dim,
            layout,
            outside,
        })
    }

    pub fn config(&self) -> &TaggerConfig {
        &self.config
    }

    pub fn labels(&self) -> &[BioLabel] {
        &self.labels
    }

    pub fn features(&self) -> &FeatureVocab {
        &self.features
    }

    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.layout.blocks
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        let b = self.layout.blocks.iter().find(|b| b.name == name)?;
        Some(&self.params[b.range()])
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Fail unless `basis` has the dimensionality the model was built for.
    pub fn check_basis(&self, basis: &BasisStore) -> Result<()> {
        if basis.dim() != self.basis_dim {
            return Err(Error::Dimension {
                expected: self.basis_dim,
                found: basis.dim(),
            });
        }
        Ok(())
    }

    /// Copy with the forward and backward cells exchanged (and the output
    /// projection's two halves swapped to match). Running the copy on a
    /// reversed sentence reproduces the reversed output of `self`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for k in 0..3 {
            let (f, b) = (self.layout.get(FWD + k), self.layout.get(BWD + k));
            out.params[f.clone()].copy_from_slice(&self.params[b.clone()]);
            out.params[b].copy_from_slice(&self.params[f]);
        }
        let h = self.config.hidden_size;
        let w = self.layout.get(OUT_W);
        for row in out.params[w].chunks_exact_mut(2 * h) {
            let (left, right) = row.split_at_mut(h);
            left.swap_with_slice(right);
        }
        out
    }

    /// Per-token probability rows over [`labels`](Self::labels).
    pub fn forward(&self, sentence: &TaggedSentence, basis: &BasisStore) -> Vec<Vec<f64>> {
        let pass = self.run(sentence, basis);
        pass.probs
            .chunks_exact(self.labels.len())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Greedy labels with the BIO repair pass applied.
    pub fn predict(&self, sentence: &TaggedSentence, basis: &BasisStore) -> Vec<BioLabel> {
        let probs = self.forward(sentence, basis);
        let mut labels = argmax_labels(&probs, &self.labels);
        repair_bio(&mut labels);
        labels
    }

    /// Mean per-token cross-entropy over `batch` and its exact gradient,
    /// laid out like [`params`](Self::params).
    pub fn loss_and_grads(&self, batch: &[TaggedSentence], basis: &BasisStore) -> (f64, Vec<f64>) {
        let mut grads = vec![0.0; self.params.len()];
        let total: usize = batch.iter().map(TaggedSentence::len).sum();
        if total == 0 {
            return (0.0, grads);
        }
        let scale = 1.0 / total as f64;
        let mut loss = 0.0;
        for sentence in batch {
            loss += self.accumulate(sentence, basis, scale, &mut grads);
        }
        (loss * scale, grads)
    }

    /// Mean per-token cross-entropy without gradients.
    pub fn mean_loss(&self, corpus: &[TaggedSentence], basis: &BasisStore) -> f64 {
        let mut loss = 0.0;
        let mut n = 0usize;
        for sentence in corpus {
            let pass = self.run(sentence, basis);
            loss += self.sentence_loss(sentence, &pass.probs);
            n += sentence.len();
        }
        if n == 0 {
            0.0
        } else {
            loss / n as f64
        }
    }

    fn label_id(&self, label: BioLabel) -> usize {
        self.labels.iter().position(|l| *l == label).unwrap_or(self.outside)
    }

    fn sentence_loss(&self, sentence: &TaggedSentence, probs: &[f64]) -> f64 {
        let l = self.labels.len();
        sentence
            .labels
            .iter()
            .enumerate()
            .map(|(t, &gold)| -probs[t * l + self.label_id(gold)].ln())
            .sum()
    }

    fn inputs(&self, sentence: &TaggedSentence, basis: &BasisStore) -> Inputs {
        assert_eq!(
            basis.dim(),
            self.basis_dim,
            "basis dimension does not match the tagger"
        );
        let c = &self.config;
        let width = c.input_size();
        let n = sentence.len();
        let mut x = vec![0.0; n * width];
        let mut words = vec![0.0; n * self.basis_dim];
        let mut ids = Vec::with_capacity(n);
        let p = &self.params;
        let wproj = &p[self.layout.get(WPROJ)];
        let wbias = &p[self.layout.get(WBIAS)];
        for (t, token) in sentence.tokens.iter().enumerate() {
            let word = &mut words[t * self.basis_dim..(t + 1) * self.basis_dim];
            if let Some(v) = basis.token_vector(&token.surface) {
                word.copy_from_slice(v);
            }
            let xt = &mut x[t * width..(t + 1) * width];
            let (proj, rest) = xt.split_at_mut(c.word_proj_dim);
            proj.copy_from_slice(wbias);
            gemv_acc(proj, wproj, self.basis_dim, word);

            let pos = *self.pos_index.get(&token.pos).unwrap_or(&0);
            let chunk = *self.chunk_index.get(&token.chunk).unwrap_or(&0);
            let query = usize::from(token.is_query);
            let (pos_dst, rest) = rest.split_at_mut(c.pos_embed_dim);
            let (chunk_dst, query_dst) = rest.split_at_mut(c.chunk_embed_dim);
            let row = |blk: usize, i: usize, d: usize| &p[self.layout.get(blk)][i * d..(i + 1) * d];
            pos_dst.copy_from_slice(row(POS, pos, c.pos_embed_dim));
            chunk_dst.copy_from_slice(row(CHUNK, chunk, c.chunk_embed_dim));
            query_dst.copy_from_slice(row(QUERY, query, c.query_embed_dim));
            ids.push((pos, chunk, query));
        }
        Inputs { x, words, ids, width }
    }

    fn run(&self, sentence: &TaggedSentence, basis: &BasisStore) -> Pass {
        let inputs = self.inputs(sentence, basis);
        let fwd = self.lstm_forward(FWD, &inputs, false);
        let bwd = self.lstm_forward(BWD, &inputs, true);

        let h = self.config.hidden_size;
        let l = self.labels.len();
        let n = sentence.len();
        let out_w = &self.params[self.layout.get(OUT_W)];
        let out_b = &self.params[self.layout.get(OUT_B)];
        let mut probs = vec![0.0; n * l];
        let mut hcat = vec![0.0; 2 * h];
        for t in 0..n {
            hcat[..h].copy_from_slice(&fwd.h[t * h..(t + 1) * h]);
            hcat[h..].copy_from_slice(&bwd.h[t * h..(t + 1) * h]);
            let row = &mut probs[t * l..(t + 1) * l];
            row.copy_from_slice(out_b);
            gemv_acc(row, out_w, 2 * h, &hcat);
            softmax_in_place(row);
        }
        Pass { inputs, fwd, bwd, probs }
    }

    fn lstm_forward(&self, base: usize, inputs: &Inputs, reverse: bool) -> LstmCache {
        let h = self.config.hidden_size;
        let width = inputs.width;
        let n = inputs.ids.len();
        let w = &self.params[self.layout.get(base)];
        let u = &self.params[self.layout.get(base + 1)];
        let b = &self.params[self.layout.get(base + 2)];

        let mut cache = LstmCache {
            gates: vec![0.0; n * 4 * h],
            c: vec![0.0; n * h],
            h: vec![0.0; n * h],
            tanh_c: vec![0.0; n * h],
        };
        let zeros = vec![0.0; h];
        let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
        let mut prev: Option<usize> = None;
        for &t in &order {
            let z = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
            z.copy_from_slice(b);
            gemv_acc(z, w, width, &inputs.x[t * width..(t + 1) * width]);
            let h_prev = prev.map_or(&zeros[..], |p| &cache.h[p * h..(p + 1) * h]);
            gemv_acc(z, u, h, h_prev);
            for k in 0..h {
                z[k] = sigmoid(z[k]);
                z[h + k] = sigmoid(z[h + k]);
                z[2 * h + k] = sigmoid(z[2 * h + k]);
                z[3 * h + k] = z[3 * h + k].tanh();
            }
            for k in 0..h {
                let c_prev = prev.map_or(0.0, |p| cache.c[p * h + k]);
                let (i, f, o, g) = (z[k], z[h + k], z[2 * h + k], z[3 * h + k]);
                let c = f * c_prev + i * g;
                let tc = c.tanh();
                cache.c[t * h + k] = c;
                cache.tanh_c[t * h + k] = tc;
                cache.h[t * h + k] = o * tc;
            }
            prev = Some(t);
        }
        cache
    }

    /// Backpropagate one direction. `dh` holds the loss gradient w.r.t. the
    /// hidden state at every position; input gradients are added to `dx`.
    #[allow(clippy::too_many_arguments)]
    fn lstm_backward(
        &self,
        base: usize,
        inputs: &Inputs,
        cache: &LstmCache,
        reverse: bool,
        dh: &[f64],
        dx: &mut [f64],
        grads: &mut [f64],
    ) {
        let h = self.config.hidden_size;
        let width = inputs.width;
        let n = inputs.ids.len();
        let (rw, ru, rb) = (
            self.layout.get(base),
            self.layout.get(base + 1),
            self.layout.get(base + 2),
        );
        let w = &self.params[rw.clone()];
        let u = &self.params[ru.clone()];

        // processing order of the forward pass; walk it backwards
        let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        let zeros = vec![0.0; h];
        for step in (0..n).rev() {
            let t = order[step];
            let prev = step.checked_sub(1).map(|s| order[s]);
            let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
            for k in 0..h {
                let (i, f, o, g) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                let tc = cache.tanh_c[t * h + k];
                let c_prev = prev.map_or(0.0, |p| cache.c[p * h + k]);
                let dht = dh[t * h + k] + dh_next[k];
                let d_o = dht * tc;
                let dc = dc_next[k] + dht * o * (1.0 - tc * tc);
                dz[k] = dc * g * i * (1.0 - i);
                dz[h + k] = dc * c_prev * f * (1.0 - f);
                dz[2 * h + k] = d_o * o * (1.0 - o);
                dz[3 * h + k] = dc * i * (1.0 - g * g);
                dc_next[k] = dc * f;
            }
            let xt = &inputs.x[t * width..(t + 1) * width];
            let h_prev = prev.map_or(&zeros[..], |p| &cache.h[p * h..(p + 1) * h]);
            ger_acc(&mut grads[rw.clone()], width, &dz, xt);
            ger_acc(&mut grads[ru.clone()], h, &dz, h_prev);
            for (gb, d) in grads[rb.clone()].iter_mut().zip(&dz) {
                *gb += d;
            }
            gemv_t_acc(&mut dx[t * width..(t + 1) * width], w, width, &dz);
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            gemv_t_acc(&mut dh_next, u, h, &dz);
        }
    }

    /// Add `scale * d(sentence loss)` to `grads`; returns the summed
    /// (unscaled) sentence loss.
    fn accumulate(&self, sentence: &TaggedSentence, basis: &BasisStore, scale: f64, grads: &mut [f64]) -> f64 {
        let n = sentence.len();
        if n == 0 {
            return 0.0;
        }
        let pass = self.run(sentence, basis);
        let loss = self.sentence_loss(sentence, &pass.probs);

        let h = self.config.hidden_size;
        let l = self.labels.len();
        let (r_ow, r_ob) = (self.layout.get(OUT_W), self.layout.get(OUT_B));
        let out_w = &self.params[r_ow.clone()];
        let mut dh_f = vec![0.0; n * h];
        let mut dh_b = vec![0.0; n * h];
        let mut dlogits = vec![0.0; l];
        let mut hcat = vec![0.0; 2 * h];
        let mut dh = vec![0.0; 2 * h];
        for t in 0..n {
            dlogits.copy_from_slice(&pass.probs[t * l..(t + 1) * l]);
            dlogits[self.label_id(sentence.labels[t])] -= 1.0;
            dlogits.iter_mut().for_each(|d| *d *= scale);

            hcat[..h].copy_from_slice(&pass.fwd.h[t * h..(t + 1) * h]);
            hcat[h..].copy_from_slice(&pass.bwd.h[t * h..(t + 1) * h]);
            ger_acc(&mut grads[r_ow.clone()], 2 * h, &dlogits, &hcat);
            for (g, d) in grads[r_ob.clone()].iter_mut().zip(&dlogits) {
                *g += d;
            }
            dh.iter_mut().for_each(|v| *v = 0.0);
            gemv_t_acc(&mut dh, out_w, 2 * h, &dlogits);
            dh_f[t * h..(t + 1) * h].copy_from_slice(&dh[..h]);
            dh_b[t * h..(t + 1) * h].copy_from_slice(&dh[h..]);
        }

        let width = pass.inputs.width;
        let mut dx = vec![0.0; n * width];
        self.lstm_backward(FWD, &pass.inputs, &pass.fwd, false, &dh_f, &mut dx, grads);
        self.lstm_backward(BWD, &pass.inputs, &pass.bwd, true, &dh_b, &mut dx, grads);

        let c = &self.config;
        let (r_wp, r_wb) = (self.layout.get(WPROJ), self.layout.get(WBIAS));
        let (r_pos, r_chunk, r_query) = (self.layout.get(POS), self.layout.get(CHUNK), self.layout.get(QUERY));
        for t in 0..n {
            let dxt = &dx[t * width..(t + 1) * width];
            let (d_word, rest) = dxt.split_at(c.word_proj_dim);
            let (d_pos, rest) = rest.split_at(c.pos_embed_dim);
            let (d_chunk, d_query) = rest.split_at(c.chunk_embed_dim);
            let word = &pass.inputs.words[t * self.basis_dim..(t + 1) * self.basis_dim];
            ger_acc(&mut grads[r_wp.clone()], self.basis_dim, d_word, word);
            add_into(&mut grads[r_wb.clone()], d_word);
            let (pos, chunk, query) = pass.inputs.ids[t];
            add_into(&mut grads[r_pos.clone()][pos * c.pos_embed_dim..(pos + 1) * c.pos_embed_dim], d_pos);
            add_into(
                &mut grads[r_chunk.clone()][chunk * c.chunk_embed_dim..(chunk + 1) * c.chunk_embed_dim],
                d_chunk,
            );
            add_into(
                &mut grads[r_query.clone()][query * c.query_embed_dim..(query + 1) * c.query_embed_dim],
                d_query,
            );
        }
        loss
    }

    pub(crate) fn from_parts(
        config: &TaggerConfig,
        basis_dim: usize,
        labels: Vec<BioLabel>,
        features: FeatureVocab,
        blocks: Vec<(String, usize, usize, Vec<f64>)>,
    ) -> Result<Self> {
        let mut model = Self::zeroed(config, basis_dim, labels, features)?;
        if blocks.len() != model.layout.blocks.len() {
            return Err(Error::Config(format!(
                "expected {} parameter blocks, found {}",
                model.layout.blocks.len(),
                blocks.len()
            )));
        }
        for (expected, (name, rows, cols, values)) in model.layout.blocks.clone().iter().zip(blocks) {
            if expected.name != name || expected.rows != rows || expected.cols != cols {
                return Err(Error::Config(format!(
                    "block `{name}` {rows}x{cols} does not match expected `{}` {}x{}",
                    expected.name, expected.rows, expected.cols
                )));
            }
            model.params[expected.range()].copy_from_slice(&values);
        }
        Ok(model)
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

/// Highest-probability label per row (first on ties).
pub fn argmax_labels(probs: &[Vec<f64>], labels: &[BioLabel]) -> Vec<BioLabel> {
    probs
        .iter()
        .map(|row| {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |best, (i, &p)| if p > row[best] { i } else { best });
            labels[best]
        })
        .collect()
}

struct Inputs {
    // n x width concatenated cell inputs
    x: Vec<f64>,
    // n x basis_dim frozen word vectors
    words: Vec<f64>,
    ids: Vec<(usize, usize, usize)>,
    width: usize,
}

struct LstmCache {
    // activated gates i, f, o, g per position
    gates: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
    tanh_c: Vec<f64>,
}

struct Pass {
    inputs: Inputs,
    fwd: LstmCache,
    bwd: LstmCache,
    probs: Vec<f64>,
}
