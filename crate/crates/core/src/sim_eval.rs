//! Word-similarity benchmark harness: Spearman's ρ with average ranks,
//! permutation p-values, pair filtering and k-fold splits.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisStore;
use crate::corpus::SimPair;
use crate::error::{Error, Result};
use crate::frames::{frame_similarity, flat_similarity, EncodedFrame, RowMask};
use crate::transform::LinearTransform;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
pub const MIN_PERMUTATIONS: usize = 1_000;
pub const DEFAULT_MIN_PAIRS: usize = 100;

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

fn centered(v: &[f64]) -> (Vec<f64>, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let ss = c.iter().map(|x| x * x).sum();
    (c, ss)
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooFew(format!("spearman needs at least 3 pairs, got {}", x.len())));
    }
    Ok(())
}

/// Spearman's ρ. Zero rank variance in either list is an
/// [`Error::Degenerate`].
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let (cx, sx) = centered(&average_ranks(x));
    let (cy, sy) = centered(&average_ranks(y));
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::Degenerate("constant ranks".into()));
    }
    let cov: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    Ok((cov / (sx * sy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided permutation test on ρ:
/// `(1 + #{|ρ_perm| >= |ρ_obs|}) / (n_perm + 1)`. Degenerate inputs give 1.
pub fn permutation_pvalue(x: &[f64], y: &[f64], n_perm: usize, seed: u64) -> Result<f64> {
    check_lengths(x, y)?;
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_PERMUTATIONS} permutations required, got {n_perm}"
        )));
    }
    let (cx, sx) = centered(&average_ranks(x));
    let (mut cy, sy) = centered(&average_ranks(y));
    if sx == 0.0 || sy == 0.0 {
        return Ok(1.0);
    }
    let denom = (sx * sy).sqrt();
    let stat = |cy: &[f64]| (cx.iter().zip(cy).map(|(a, b)| a * b).sum::<f64>() / denom).abs();
    // guards against counting exact ties as misses through rounding
    let observed = stat(&cy) - 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        cy.shuffle(&mut rng);
        if stat(&cy) >= observed {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (n_perm + 1) as f64)
}

/// A scorer of word pairs over a declared vocabulary.
pub trait Representer {
    fn name(&self) -> String;

    fn contains(&self, word: &str) -> bool;

    /// Similarity of two in-vocabulary words; `degenerate` marks pairs whose
    /// cosine is undefined and was clamped to 0.
    fn score(&self, a: &str, b: &str) -> Option<Scored>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub degenerate: bool,
}

/// Cosine of basis vectors, optionally through a basis-mode transform.
pub struct BasisCosine<'a> {
    basis: &'a BasisStore,
    transform: Option<&'a LinearTransform>,
}

impl<'a> BasisCosine<'a> {
    pub fn new(basis: &'a BasisStore) -> Self {
        BasisCosine { basis, transform: None }
    }

    pub fn with_transform(basis: &'a BasisStore, transform: &'a LinearTransform) -> Result<Self> {
        transform.check_basis_shape(basis.dim())?;
        Ok(BasisCosine {
            basis,
            transform: Some(transform),
        })
    }

    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        let v = self.basis.lookup_term(word)?;
        Some(match self.transform {
            Some(t) => t.apply(&v).expect("shape checked at construction"),
            None => v,
        })
    }
}

impl Representer for BasisCosine<'_> {
    fn name(&self) -> String {
        if self.transform.is_some() { "basis*" } else { "basis" }.to_string()
    }

    fn contains(&self, word: &str) -> bool {
        self.basis.lookup_term(word).is_some()
    }

    fn score(&self, a: &str, b: &str) -> Option<Scored> {
        let s = flat_similarity(&self.vector(a)?, &self.vector(b)?);
        Some(Scored {
            value: s.score,
            degenerate: s.degenerate,
        })
    }
}

/// Masked cosine of encoded frames keyed by lowercased concept, optionally
/// through a frame-mode transform.
pub struct FrameCosine<'a> {
    frames: HashMap<String, &'a EncodedFrame>,
    mask: RowMask,
    transform: Option<&'a LinearTransform>,
}

impl<'a> FrameCosine<'a> {
    /// Later frames for an already seen concept are ignored.
    pub fn new(frames: &'a [EncodedFrame], mask: RowMask) -> Self {
        let mut map = HashMap::new();
        for f in frames {
            map.entry(f.concept.to_lowercase()).or_insert(f);
        }
        FrameCosine {
            frames: map,
            mask,
            transform: None,
        }
    }

    pub fn with_transform(mut self, transform: &'a LinearTransform) -> Result<Self> {
        if let Some(f) = self.frames.values().next() {
            transform.check_frame_shape(f.dim())?;
        }
        self.transform = Some(transform);
        Ok(self)
    }

    pub fn mask(&self) -> RowMask {
        self.mask
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.frames.keys().map(String::as_str)
    }

    pub fn frame(&self, word: &str) -> Option<&'a EncodedFrame> {
        self.frames.get(&word.to_lowercase()).copied()
    }
}

impl Representer for FrameCosine<'_> {
    fn name(&self) -> String {
        if self.transform.is_some() { "DF*" } else { "DF" }.to_string()
    }

    fn contains(&self, word: &str) -> bool {
        self.frames.contains_key(&word.to_lowercase())
    }

    fn score(&self, a: &str, b: &str) -> Option<Scored> {
        let (fa, fb) = (self.frame(a)?, self.frame(b)?);
        let s = match self.transform {
            Some(t) => {
                let ta = t.apply_frame(&fa.restricted(self.mask)).ok()?;
                let tb = t.apply_frame(&fb.restricted(self.mask)).ok()?;
                frame_similarity(&ta, &tb, self.mask).ok()?
            }
            None => frame_similarity(fa, fb, self.mask).ok()?,
        };
        Some(Scored {
            value: s.score,
            degenerate: s.degenerate,
        })
    }
}

/// Scores every pair with its own gold value; the ceiling of any evaluation.
pub struct GoldOracle {
    scores: HashMap<(String, String), f64>,
    vocab: HashSet<String>,
}

impl GoldOracle {
    pub fn new(pairs: &[SimPair]) -> Self {
        let mut scores = HashMap::new();
        let mut vocab = HashSet::new();
        for p in pairs {
            let (a, b) = (p.word1.to_lowercase(), p.word2.to_lowercase());
            scores.insert((a.clone(), b.clone()), p.gold_norm);
            scores.insert((b.clone(), a.clone()), p.gold_norm);
            vocab.insert(a);
            vocab.insert(b);
        }
        GoldOracle { scores, vocab }
    }
}

impl Representer for GoldOracle {
    fn name(&self) -> String {
        "gold".to_string()
    }

    fn contains(&self, word: &str) -> bool {
        self.vocab.contains(&word.to_lowercase())
    }

    fn score(&self, a: &str, b: &str) -> Option<Scored> {
        let value = *self.scores.get(&(a.to_lowercase(), b.to_lowercase()))?;
        Some(Scored {
            value,
            degenerate: false,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub rho: f64,
    pub p_value: f64,
    pub n_pairs: usize,
    pub n_skipped: usize,
    /// Scored pairs whose cosine was undefined and counted as 0.
    pub n_degenerate: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub n_perm: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 0,
        }
    }
}

/// Lowercased vocabulary shared by all representers over the given words.
pub fn common_vocabulary<'w>(
    words: impl IntoIterator<Item = &'w str>,
    reps: &[&dyn Representer],
) -> HashSet<String> {
    words
        .into_iter()
        .filter(|w| reps.iter().all(|r| r.contains(w)))
        .map(str::to_lowercase)
        .collect()
}

/// Score the pairs both words of which are known to `rep` (and in
/// `vocab_filter`, compared lowercased), then correlate with `gold_norm`.
pub fn evaluate(
    pairs: &[SimPair],
    rep: &dyn Representer,
    vocab_filter: Option<&HashSet<String>>,
    options: EvalOptions,
) -> Result<EvalResult> {
    if pairs.is_empty() {
        return Err(Error::TooFew("no pairs to evaluate".into()));
    }
    let known = |w: &str| rep.contains(w) && vocab_filter.is_none_or(|f| f.contains(&w.to_lowercase()));
    let mut predicted = Vec::new();
    let mut gold = Vec::new();
    let mut n_degenerate = 0;
    for p in pairs {
        if !(known(&p.word1) && known(&p.word2)) {
            continue;
        }
        let Some(s) = rep.score(&p.word1, &p.word2) else { continue };
        n_degenerate += usize::from(s.degenerate);
        predicted.push(s.value);
        gold.push(p.gold_norm);
    }
    if predicted.len() < 3 {
        return Err(Error::TooFew(format!(
            "{} of {} pairs survive filtering, at least 3 needed",
            predicted.len(),
            pairs.len()
        )));
    }
    let rho = spearman(&predicted, &gold)?;
    let p_value = permutation_pvalue(&predicted, &gold, options.n_perm, options.seed)?;
    Ok(EvalResult {
        rho,
        p_value,
        n_pairs: predicted.len(),
        n_skipped: pairs.len() - predicted.len(),
        n_degenerate,
    })
}

/// TSV row: dataset, representer, mask, n_pairs, rho, p_value.
pub fn tsv_row(dataset: &str, representer: &str, mask: &str, result: &EvalResult) -> String {
    format!(
        "{dataset}\t{representer}\t{mask}\t{}\t{:.4}\t{:.4}",
        result.n_pairs, result.rho, result.p_value
    )
}

pub const TSV_HEADER: &str = "dataset\trepresenter\tmask\tn_pairs\trho\tp_value";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffle `0..n` with `seed` and cut it into `k` contiguous test folds; the
/// first `n % k` folds get one extra item.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::TooFew(format!("{n} items cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let test = order[start..start + size].to_vec();
        let train = order[..start].iter().chain(&order[start + size..]).copied().collect();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

/// Whether a dataset is large enough for transform experiments.
pub fn min_size_gate(n_pairs: usize, threshold: usize) -> bool {
    n_pairs >= threshold
}
