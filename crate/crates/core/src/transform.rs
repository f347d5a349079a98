//! Learning `T(x) = W x + b` so that cosine similarity of transformed
//! representations tracks normalized gold similarity.
//!
//! A representation is a `rows x cols` matrix. Frames are `k x d` and `W`
//! mixes their rows; basis vectors are treated as `d x 1`, so `W` is `d x d`
//! and `b` a `d`-vector. Only the active rows (the row mask) take part in
//! the cosine; inputs carry zeros outside them.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisStore;
use crate::corpus::SimPair;
use crate::error::{Error, Result};
use crate::frames::{EncodedFrame, RowMask, SCHEMA_ROWS};
use crate::linalg::fmt_f64;
use crate::sim_eval::{kfold, permutation_pvalue, spearman, Fold, FrameCosine};

pub const TRANSFORM_VERSION: &str = "defframe-lt/1";

/// Halvings of the step size tried before an epoch gives up.
pub const MAX_HALVINGS: usize = 20;

/// Largest condition number for which [`LinearTransform::inverse`] succeeds.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Frame,
    Basis,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Frame => "frame",
            Mode::Basis => "basis",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame" => Ok(Mode::Frame),
            "basis" => Ok(Mode::Basis),
            _ => Err(Error::InvalidArgument(format!("unknown transform mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearTransform {
    mode: Mode,
    rows: usize,
    cols: usize,
    /// `rows x rows`, row-major.
    w: Vec<f64>,
    /// `rows x cols`, row-major.
    b: Vec<f64>,
}

impl LinearTransform {
    pub fn identity(mode: Mode, rows: usize, cols: usize) -> Self {
        let mut w = vec![0.0; rows * rows];
        for i in 0..rows {
            w[i * rows + i] = 1.0;
        }
        LinearTransform {
            mode,
            rows,
            cols,
            w,
            b: vec![0.0; rows * cols],
        }
    }

    pub fn for_frames(d: usize) -> Self {
        Self::identity(Mode::Frame, SCHEMA_ROWS, d)
    }

    pub fn for_basis(d: usize) -> Self {
        Self::identity(Mode::Basis, d, 1)
    }

    pub fn from_parts(mode: Mode, rows: usize, cols: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if w.len() != rows * rows {
            return Err(Error::Dimension {
                expected: rows * rows,
                found: w.len(),
            });
        }
        if b.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                found: b.len(),
            });
        }
        if mode == Mode::Basis && cols != 1 {
            return Err(Error::InvalidArgument("basis transforms act on d x 1 vectors".into()));
        }
        Ok(LinearTransform { mode, rows, cols, w, b })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    /// Representation size, `rows * cols`.
    pub fn input_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn check_frame_shape(&self, d: usize) -> Result<()> {
        if self.mode != Mode::Frame || self.rows != SCHEMA_ROWS || self.cols != d {
            return Err(Error::InvalidArgument(format!(
                "transform is {} {}x{}, frames need frame {SCHEMA_ROWS}x{d}",
                self.mode, self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn check_basis_shape(&self, d: usize) -> Result<()> {
        if self.mode != Mode::Basis || self.rows != d {
            return Err(Error::InvalidArgument(format!(
                "transform is {} {}x{}, basis vectors need basis {d}x1",
                self.mode, self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_len() {
            return Err(Error::Dimension {
                expected: self.input_len(),
                found: x.len(),
            });
        }
        let mut y = self.b.clone();
        for i in 0..self.rows {
            self.mix_row(i, x, &mut y[i * self.cols..(i + 1) * self.cols]);
        }
        Ok(y)
    }

    pub fn apply_frame(&self, frame: &EncodedFrame) -> Result<EncodedFrame> {
        self.check_frame_shape(frame.dim())?;
        EncodedFrame::from_matrix(frame.concept.clone(), frame.dim(), self.apply(frame.matrix())?)
    }

    /// `out += sum_j W[i, j] * x[j, :]`
    fn mix_row(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let c = self.cols;
        for (j, &wij) in self.w[i * self.rows..(i + 1) * self.rows].iter().enumerate() {
            if wij == 0.0 {
                continue;
            }
            for (o, xv) in out.iter_mut().zip(&x[j * c..(j + 1) * c]) {
                *o += wij * xv;
            }
        }
    }

    /// Active rows of `W x + b`, concatenated.
    fn apply_active(&self, x: &[f64], active: &[usize]) -> Vec<f64> {
        let c = self.cols;
        let mut y = Vec::with_capacity(active.len() * c);
        for &i in active {
            y.extend_from_slice(&self.b[i * c..(i + 1) * c]);
            let start = y.len() - c;
            self.mix_row(i, x, &mut y[start..]);
        }
        y
    }

    /// The map `y -> W^-1 (y - b)`, provided `W` is well conditioned.
    pub fn inverse(&self) -> Result<LinearTransform> {
        let w = DMatrix::from_row_slice(self.rows, self.rows, &self.w);
        let sv = w.clone().singular_values();
        let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        if !(min > 0.0) || max / min > MAX_CONDITION {
            return Err(Error::Degenerate(format!(
                "W is singular or ill-conditioned (condition {:.3e})",
                max / min
            )));
        }
        let inv = w
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("W is not invertible".into()))?;
        let b = DMatrix::from_row_slice(self.rows, self.cols, &self.b);
        let nb = -(&inv * b);
        let row_major = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect()
        };
        LinearTransform::from_parts(self.mode, self.rows, self.cols, row_major(&inv), row_major(&nb))
    }

    fn step(&mut self, grads: &Objective, lr: f64) {
        for (p, g) in self.w.iter_mut().zip(&grads.grad_w) {
            *p -= lr * g;
        }
        for (p, g) in self.b.iter_mut().zip(&grads.grad_b) {
            *p -= lr * g;
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let (k, d) = match self.mode {
            Mode::Frame => (self.rows, self.cols),
            Mode::Basis => (1, self.rows),
        };
        writeln!(out, "{TRANSFORM_VERSION} {} {k} {d}", self.mode)?;
        let line = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
        for row in self.w.chunks(self.rows) {
            writeln!(out, "{}", line(row))?;
        }
        for row in self.b.chunks(d) {
            writeln!(out, "{}", line(row))?;
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::EmptyFile(source.to_path_buf()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.first() != Some(&TRANSFORM_VERSION) {
            return Err(Error::Version {
                expected: TRANSFORM_VERSION.to_string(),
                found: fields.first().unwrap_or(&"").to_string(),
            });
        }
        let bad_header = || Error::format(source, 1, "header must be `defframe-lt/1 mode k d`");
        if fields.len() != 4 {
            return Err(bad_header());
        }
        let mode: Mode = fields[1].parse().map_err(|_| bad_header())?;
        let k: usize = fields[2].parse().map_err(|_| bad_header())?;
        let d: usize = fields[3].parse().map_err(|_| bad_header())?;
        let (rows, cols) = match mode {
            Mode::Frame => (k, d),
            Mode::Basis if k == 1 => (d, 1),
            Mode::Basis => return Err(Error::format(source, 1, "basis transforms have k = 1")),
        };
        let mut read_rows = |n: usize, width: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n * width);
            for _ in 0..n {
                let (i, line) = lines
                    .next()
                    .ok_or_else(|| Error::format(source, text.lines().count(), "unexpected end of file"))?;
                let before = out.len();
                for tok in line.split_whitespace() {
                    out.push(
                        tok.parse()
                            .map_err(|_| Error::format(source, i + 1, format!("invalid number `{tok}`")))?,
                    );
                }
                if out.len() - before != width {
                    return Err(Error::format(
                        source,
                        i + 1,
                        format!("expected {width} values, found {}", out.len() - before),
                    ));
                }
            }
            Ok(out)
        };
        let w = read_rows(rows, rows)?;
        let b = read_rows(k, d)?;
        Self::from_parts(mode, rows, cols, w, b)
    }
}

/// One scored pair of representations, each `rows * cols` long.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub gold: f64,
}

/// Objective value and gradients over a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub mse: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: Vec<f64>,
    /// Pairs where a transformed representation was all-zero; their cosine
    /// is clamped to 0 and they contribute no gradient.
    pub degenerate: usize,
}

/// Cosine of `T(a)` and `T(b)` over the active rows, `None` if either is zero.
fn transformed_cosine(t: &LinearTransform, s: &Sample, active: &[usize]) -> (Option<f64>, Vec<f64>, Vec<f64>) {
    let ya = t.apply_active(&s.a, active);
    let yb = t.apply_active(&s.b, active);
    (crate::linalg::cosine(&ya, &yb), ya, yb)
}

fn check_batch(t: &LinearTransform, batch: &[Sample], active: &[usize]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::TooFew("empty batch".into()));
    }
    if active.is_empty() || active.iter().any(|&i| i >= t.rows) {
        return Err(Error::InvalidArgument("active rows out of range".into()));
    }
    for s in batch {
        for v in [&s.a, &s.b] {
            if v.len() != t.input_len() {
                return Err(Error::Dimension {
                    expected: t.input_len(),
                    found: v.len(),
                });
            }
        }
    }
    Ok(())
}

/// Mean squared error of transformed cosine against gold, without gradients.
pub fn objective(t: &LinearTransform, batch: &[Sample], active: &[usize]) -> Result<(f64, usize)> {
    check_batch(t, batch, active)?;
    let mut sum = 0.0;
    let mut degenerate = 0;
    for s in batch {
        let (cos, _, _) = transformed_cosine(t, s, active);
        degenerate += usize::from(cos.is_none());
        let r = cos.unwrap_or(0.0) - s.gold;
        sum += r * r;
    }
    Ok((sum / batch.len() as f64, degenerate))
}

/// MSE of transformed cosine against gold with analytic gradients for `W`
/// and `b`. Gradients are zero outside the active rows of `W` and `b`.
pub fn objective_and_grads(t: &LinearTransform, batch: &[Sample], active: &[usize]) -> Result<Objective> {
    check_batch(t, batch, active)?;
    let (r, c) = (t.rows, t.cols);
    let mut out = Objective {
        mse: 0.0,
        grad_w: vec![0.0; r * r],
        grad_b: vec![0.0; r * c],
        degenerate: 0,
    };
    let n = batch.len() as f64;
    for s in batch {
        let (cos, ya, yb) = transformed_cosine(t, s, active);
        let Some(cos) = cos else {
            out.degenerate += 1;
            out.mse += s.gold * s.gold;
            continue;
        };
        let resid = cos - s.gold;
        out.mse += resid * resid;
        let dcos = 2.0 * resid / n;
        let (na2, nb2) = (crate::linalg::sq_norm(&ya), crate::linalg::sq_norm(&yb));
        let inv_ab = 1.0 / (na2 * nb2).sqrt();
        for (slot, &i) in active.iter().enumerate() {
            let rows = slot * c..(slot + 1) * c;
            for (cc, (a_ic, b_ic)) in ya[rows.clone()].iter().zip(&yb[rows]).enumerate() {
                let ga = dcos * (b_ic * inv_ab - cos * a_ic / na2);
                let gb = dcos * (a_ic * inv_ab - cos * b_ic / nb2);
                out.grad_b[i * c + cc] += ga + gb;
                let gw = &mut out.grad_w[i * r..(i + 1) * r];
                for (j, g) in gw.iter_mut().enumerate() {
                    *g += ga * s.a[j * c + cc] + gb * s.b[j * c + cc];
                }
            }
        }
    }
    out.mse /= n;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Half-width of the uniform noise added to the identity `W`.
    pub init_noise: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    /// Permutations for the pooled out-of-fold p-value.
    pub n_perm: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            learning_rate: 0.01,
            epochs: 500,
            seed: 0,
            init_noise: 0.0,
            early_stop_patience: 25,
            n_perm: crate::sim_eval::DEFAULT_PERMUTATIONS,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.init_noise >= 0.0) {
            return Err(Error::Config("init_noise must be non-negative".into()));
        }
        if self.n_perm < crate::sim_eval::MIN_PERMUTATIONS {
            return Err(Error::Config(format!(
                "n_perm must be at least {}",
                crate::sim_eval::MIN_PERMUTATIONS
            )));
        }
        Ok(())
    }

    /// Parse flat `key=value` text on top of the defaults. Blank lines and
    /// `#` comments are ignored; unknown keys are errors.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut config = FitConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value `{value}` for {key}")))
        }
        match key {
            "learning_rate" => self.learning_rate = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "init_noise" => self.init_noise = num(key, value)?,
            "early_stop_patience" => self.early_stop_patience = num(key, value)?,
            "n_perm" => self.n_perm = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("learning_rate", fmt_f64(self.learning_rate)),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("init_noise", fmt_f64(self.init_noise)),
            ("early_stop_patience", self.early_stop_patience.to_string()),
            ("n_perm", self.n_perm.to_string()),
        ]
    }
}

/// Training trace of a single descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct Descent {
    pub initial_mse: f64,
    pub final_mse: f64,
    pub epochs_run: usize,
    /// Set when a step failed to decrease the objective after
    /// [`MAX_HALVINGS`] halvings.
    pub stalled: bool,
}

/// Full-batch steepest descent with a halving line search. With `val`
/// given, the parameters with the lowest validation MSE are kept.
pub fn descend(
    t: &mut LinearTransform,
    train: &[Sample],
    val: Option<&[Sample]>,
    active: &[usize],
    config: &FitConfig,
) -> Result<Descent> {
    let mut current = objective_and_grads(t, train, active)?;
    let initial_mse = current.mse;
    let mut lr = config.learning_rate;
    let mut best = match val {
        Some(v) => Some((objective(t, v, active)?.0, t.clone())),
        None => None,
    };
    let mut since_best = 0usize;
    let mut trace = Descent {
        initial_mse,
        final_mse: initial_mse,
        epochs_run: 0,
        stalled: false,
    };

    for _ in 0..config.epochs {
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut candidate = t.clone();
            candidate.step(&current, lr);
            let (mse, _) = objective(&candidate, train, active)?;
            if mse <= current.mse {
                accepted = Some(candidate);
                break;
            }
            lr *= 0.5;
        }
        let Some(next) = accepted else {
            trace.stalled = true;
            break;
        };
        *t = next;
        current = objective_and_grads(t, train, active)?;
        trace.epochs_run += 1;

        if let (Some(v), Some((best_mse, best_t))) = (val, best.as_mut()) {
            let (mse, _) = objective(t, v, active)?;
            if mse < *best_mse {
                *best_mse = mse;
                *best_t = t.clone();
                since_best = 0;
            } else {
                since_best += 1;
                if config.early_stop_patience > 0 && since_best >= config.early_stop_patience {
                    break;
                }
            }
        }
    }
    if let Some((_, best_t)) = best {
        *t = best_t;
    }
    trace.final_mse = objective(t, train, active)?.0;
    Ok(trace)
}

/// A transform-learning dataset: representation pairs with normalized gold.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub mode: Mode,
    pub rows: usize,
    pub cols: usize,
    /// Rows compared by the cosine, ascending.
    pub active: Vec<usize>,
    pub samples: Vec<Sample>,
    /// Input pairs dropped because a word had no representation.
    pub skipped: usize,
}

impl Problem {
    /// Pairs whose words both have frames; inputs keep only masked rows.
    pub fn from_frames(pairs: &[SimPair], frames: &FrameCosine<'_>) -> Result<Self> {
        let mask = frames.mask();
        let mut dim = None;
        let mut samples = Vec::new();
        for p in pairs {
            let (Some(a), Some(b)) = (frames.frame(&p.word1), frames.frame(&p.word2)) else {
                continue;
            };
            dim = Some(a.dim());
            samples.push(Sample {
                a: a.restricted(mask).matrix().to_vec(),
                b: b.restricted(mask).matrix().to_vec(),
                gold: p.gold_norm,
            });
        }
        Ok(Problem {
            mode: Mode::Frame,
            rows: SCHEMA_ROWS,
            cols: dim.unwrap_or(0),
            active: mask.rows().map(|r| r.index()).collect(),
            skipped: pairs.len() - samples.len(),
            samples,
        })
    }

    /// Pairs whose words both resolve in the basis.
    pub fn from_basis(pairs: &[SimPair], basis: &BasisStore) -> Self {
        let mut samples = Vec::new();
        for p in pairs {
            let (Some(a), Some(b)) = (basis.lookup_term(&p.word1), basis.lookup_term(&p.word2)) else {
                continue;
            };
            samples.push(Sample { a, b, gold: p.gold_norm });
        }
        Problem {
            mode: Mode::Basis,
            rows: basis.dim(),
            cols: 1,
            active: (0..basis.dim()).collect(),
            skipped: pairs.len() - samples.len(),
            samples,
        }
    }

    pub fn frame_mask(mask: RowMask) -> Vec<usize> {
        mask.rows().map(|r| r.index()).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Concatenate problems of identical shape, in the given order.
    pub fn concat(parts: &[Problem]) -> Result<Problem> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("no datasets to join".into()))?;
        let mut out = Problem {
            samples: Vec::new(),
            skipped: 0,
            ..first.clone()
        };
        for p in parts {
            if (p.mode, p.rows, p.active.as_slice()) != (first.mode, first.rows, first.active.as_slice())
                || (p.cols != first.cols && !p.is_empty() && !first.is_empty())
            {
                return Err(Error::InvalidArgument("joined datasets differ in shape or mask".into()));
            }
            out.cols = out.cols.max(p.cols);
            out.samples.extend(p.samples.iter().cloned());
            out.skipped += p.skipped;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    /// Untransformed test-fold ρ; `None` if degenerate.
    pub rho_before: Option<f64>,
    /// Transformed test-fold ρ; `None` if degenerate.
    pub rho_after: Option<f64>,
    pub descent: Descent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub folds: Vec<FoldResult>,
    /// Mean transformed test ρ over non-degenerate folds.
    pub mean_rho: f64,
    /// Mean untransformed test ρ over non-degenerate folds.
    pub baseline_rho: f64,
    pub gain: f64,
    /// Permutation p-value of the pooled out-of-fold transformed scores.
    pub p_value: f64,
    pub degenerate_folds: usize,
    pub baseline_degenerate_folds: usize,
    pub n_pairs: usize,
}

impl FitReport {
    pub fn fold_rhos(&self) -> Vec<Option<f64>> {
        self.folds.iter().map(|f| f.rho_after).collect()
    }

    /// TSV row: dataset, basis_name, rep, rho_before, rho_after, gain, p_value.
    pub fn tsv_row(&self, dataset: &str, basis_name: &str, rep: &str) -> String {
        format!(
            "{dataset}\t{basis_name}\t{rep}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            self.baseline_rho, self.mean_rho, self.gain, self.p_value
        )
    }
}

pub const FIT_TSV_HEADER: &str = "dataset\tbasis_name\trep\trho_before\trho_after\tgain\tp_value";

fn fold_rho(scores: &[f64], gold: &[f64]) -> Result<Option<f64>> {
    match spearman(scores, gold) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> (f64, usize, usize) {
    let (mut sum, mut n, mut bad) = (0.0, 0, 0);
    for v in values {
        match v {
            Some(x) => {
                sum += x;
                n += 1;
            }
            None => bad += 1,
        }
    }
    (if n > 0 { sum / n as f64 } else { f64::NAN }, n, bad)
}

fn cosine_or_zero(t: &LinearTransform, s: &Sample, active: &[usize]) -> f64 {
    transformed_cosine(t, s, active).0.unwrap_or(0.0)
}

/// Split a training fold into fitting and validation parts for early
/// stopping: a seeded shuffle, with the last tenth held out.
fn validation_split(train: &[usize], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_val = train.len() / 10;
    if n_val == 0 {
        return (train.to_vec(), Vec::new());
    }
    let mut order = train.to_vec();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
    let fit = order[..order.len() - n_val].to_vec();
    let val = order[order.len() - n_val..].to_vec();
    (fit, val)
}

/// Cross-validated fit: per fold, start from the identity (plus optional
/// noise), descend on the training part, and score test-fold ρ before and
/// after. Baseline and transformed ρ use identical folds.
pub fn fit(problem: &Problem, folds: &[Fold], config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    if folds.is_empty() {
        return Err(Error::InvalidArgument("no folds".into()));
    }
    let active = &problem.active;
    let pick = |idx: &[usize]| -> Vec<Sample> { idx.iter().map(|&i| problem.samples[i].clone()).collect() };

    let mut results = Vec::with_capacity(folds.len());
    let mut pooled_scores = vec![0.0; problem.len()];
    for (f, fold) in folds.iter().enumerate() {
        let fold_seed = config.seed.wrapping_add(f as u64);
        let mut t = LinearTransform::identity(problem.mode, problem.rows, problem.cols);
        if config.init_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(fold_seed);
            for w in t.w_mut() {
                *w += rng.gen_range(-config.init_noise..=config.init_noise);
            }
        }
        let (fit_idx, val_idx) = if config.early_stop_patience > 0 {
            validation_split(&fold.train, fold_seed)
        } else {
            (fold.train.clone(), Vec::new())
        };
        let train = pick(&fit_idx);
        let val = pick(&val_idx);
        let descent = if train.is_empty() || config.epochs == 0 {
            let mse = if train.is_empty() { 0.0 } else { objective(&t, &train, active)?.0 };
            Descent {
                initial_mse: mse,
                final_mse: mse,
                epochs_run: 0,
                stalled: false,
            }
        } else {
            descend(&mut t, &train, (!val.is_empty()).then_some(val.as_slice()), active, config)?
        };

        let test = pick(&fold.test);
        let identity = LinearTransform::identity(problem.mode, problem.rows, problem.cols);
        let gold: Vec<f64> = test.iter().map(|s| s.gold).collect();
        let before: Vec<f64> = test.iter().map(|s| cosine_or_zero(&identity, s, active)).collect();
        let after: Vec<f64> = test.iter().map(|s| cosine_or_zero(&t, s, active)).collect();
        for (&i, &s) in fold.test.iter().zip(&after) {
            pooled_scores[i] = s;
        }
        results.push(FoldResult {
            rho_before: fold_rho(&before, &gold)?,
            rho_after: fold_rho(&after, &gold)?,
            descent,
        });
    }

    let (mean_rho, n_ok, degenerate_folds) = mean_of(results.iter().map(|r| r.rho_after));
    let (baseline_rho, n_base, baseline_degenerate_folds) = mean_of(results.iter().map(|r| r.rho_before));
    if n_ok == 0 || n_base == 0 {
        return Err(Error::Degenerate("every test fold has degenerate ρ".into()));
    }
    let gold: Vec<f64> = problem.samples.iter().map(|s| s.gold).collect();
    let p_value = permutation_pvalue(&pooled_scores, &gold, config.n_perm, config.seed)?;
    Ok(FitReport {
        folds: results,
        mean_rho,
        baseline_rho,
        gain: mean_rho - baseline_rho,
        p_value,
        degenerate_folds,
        baseline_degenerate_folds,
        n_pairs: problem.len(),
    })
}

/// [`fit`] over `k` folds drawn with `config.seed`.
pub fn fit_kfold(problem: &Problem, k: usize, config: &FitConfig) -> Result<FitReport> {
    let folds = kfold(problem.len(), k, config.seed)?;
    fit(problem, &folds, config)
}

/// Fit each group of datasets jointly over their concatenated pairs.
pub fn joint_fit(groups: &[(String, Vec<Problem>)], k: usize, config: &FitConfig) -> Result<Vec<(String, FitReport)>> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("no dataset groups".into()));
    }
    groups
        .iter()
        .map(|(name, parts)| Ok((name.clone(), fit_kfold(&Problem::concat(parts)?, k, config)?)))
        .collect()
}

/// Fit a single transform on every pair, for export after cross-validation.
pub fn fit_all(problem: &Problem, config: &FitConfig) -> Result<(LinearTransform, Descent)> {
    config.validate()?;
    let mut t = LinearTransform::identity(problem.mode, problem.rows, problem.cols);
    if problem.is_empty() || config.epochs == 0 {
        return Ok((
            t,
            Descent {
                initial_mse: f64::NAN,
                final_mse: f64::NAN,
                epochs_run: 0,
                stalled: false,
            },
        ));
    }
    let all: Vec<usize> = (0..problem.len()).collect();
    let (fit_idx, val_idx) = if config.early_stop_patience > 0 {
        validation_split(&all, config.seed)
    } else {
        (all, Vec::new())
    };
    let train: Vec<Sample> = fit_idx.iter().map(|&i| problem.samples[i].clone()).collect();
    let val: Vec<Sample> = val_idx.iter().map(|&i| problem.samples[i].clone()).collect();
    let descent = descend(&mut t, &train, (!val.is_empty()).then_some(val.as_slice()), &problem.active, config)?;
    Ok((t, descent))
}
