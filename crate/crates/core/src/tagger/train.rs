use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{evaluate_spans, FeatureVocab, TaggerConfig, TaggerModel};
use crate::basis::BasisStore;
use crate::corpus::{BioLabel, TaggedSentence};
use crate::error::{Error, Result};

/// Per-epoch training trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Dev span F1 after each epoch.
    pub dev_f1: Vec<f64>,
    /// Mean per-token training loss after each epoch.
    pub train_loss: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept; `None` for zero epochs.
    pub best_epoch: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            lr,
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        let step = self.lr * c2.sqrt() / c1;
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            if g == 0.0 && *m == 0.0 && *v == 0.0 {
                continue;
            }
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= step * *m / (v.sqrt() + Self::EPS);
        }
    }
}

fn clip_global_norm(grads: &mut [f64], max_norm: f64) {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
}

/// Train on `train`, keeping the parameters with the best dev span F1.
pub fn train(
    config: &TaggerConfig,
    train: &[TaggedSentence],
    dev: &[TaggedSentence],
    basis: &BasisStore,
) -> Result<(TaggerModel, TrainReport)> {
    train_with_progress(config, train, dev, basis, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with_progress(
    config: &TaggerConfig,
    train: &[TaggedSentence],
    dev: &[TaggedSentence],
    basis: &BasisStore,
    mut on_epoch: impl FnMut(EpochStats),
) -> Result<(TaggerModel, TrainReport)> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::TooFew("training and dev corpora must be nonempty".into()));
    }
    let features = FeatureVocab::from_corpus(train);
    let mut model = TaggerModel::init(config, basis.dim(), BioLabel::training_set(), features)?;
    let mut report = TrainReport::default();
    if config.epochs == 0 {
        return Ok((model, report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut adam = Adam::new(model.num_params(), config.learning_rate);
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (_, mut grads) = model.loss_and_grads(std::slice::from_ref(&train[i]), basis);
            clip_global_norm(&mut grads, config.clip_norm);
            adam.update(model.params_mut(), &grads);
        }

        let train_loss = model.mean_loss(train, basis);
        let dev_f1 = evaluate_spans(&model, dev, basis).micro.f1;
        report.train_loss.push(train_loss);
        report.dev_f1.push(dev_f1);
        if best.as_ref().is_none_or(|(f1, _)| dev_f1 > *f1) {
            best = Some((dev_f1, model.params().to_vec()));
            report.best_epoch = Some(epoch);
        }
        on_epoch(EpochStats { epoch, train_loss, dev_f1 });
    }

    if let Some((_, params)) = best {
        model.params_mut().copy_from_slice(&params);
    }
    Ok((model, report))
}
