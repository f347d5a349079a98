mod common;

use common::{random_sentence, rng, TemplateWorld};
use defframe::tagger::{evaluate_spans, train, FeatureVocab, TaggerConfig, TaggerModel};
use defframe::{BioLabel, TaggedSentence};
use rand::Rng;

fn tiny_config(rng: &mut impl Rng) -> TaggerConfig {
    TaggerConfig {
        hidden_size: rng.gen_range(1..=4),
        word_proj_dim: rng.gen_range(1..=3),
        pos_embed_dim: rng.gen_range(1..=3),
        chunk_embed_dim: rng.gen_range(1..=2),
        query_embed_dim: rng.gen_range(1..=2),
        seed: rng.gen(),
        ..TaggerConfig::default()
    }
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter.
pub fn max_gradient_error(model: &TaggerModel, batch: &[TaggedSentence], basis: &defframe::BasisStore) -> f64 {
    let (_, analytic) = model.loss_and_grads(batch, basis);
    let eps = 1e-5;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..model.num_params() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + eps;
        let up = probe.mean_loss(batch, basis);
        probe.params_mut()[i] = orig - eps;
        let down = probe.mean_loss(batch, basis);
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(11);
    let words = common::nonce_words(6, 3);
    let basis = common::random_basis(&words[..5], 3, 4);
    for _ in 0..10 {
        let config = tiny_config(&mut r);
        let batch: Vec<TaggedSentence> =
            (0..2).map(|_| { let n = r.gen_range(1..=5); random_sentence(&mut r, &words, n) }).collect();
        let features = FeatureVocab::from_corpus(&batch);
        let model = TaggerModel::init(&config, 3, BioLabel::training_set(), features).unwrap();
        let err = max_gradient_error(&model, &batch, &basis);
        assert!(err < 1e-4, "relative gradient error {err:e}");
    }
}

#[test]
fn zero_model_gives_uniform_loss() {
    let words = common::nonce_words(4, 1);
    let basis = common::random_basis(&words, 3, 2);
    let s = random_sentence(&mut rng(5), &words, 6);
    let mut model = TaggerModel::init(
        &TaggerConfig { hidden_size: 3, ..TaggerConfig::default() },
        3,
        BioLabel::training_set(),
        FeatureVocab::from_corpus(std::slice::from_ref(&s)),
    )
    .unwrap();
    model.params_mut().iter_mut().for_each(|p| *p = 0.0);
    let loss = model.mean_loss(std::slice::from_ref(&s), &basis);
    assert!((loss - 11f64.ln()).abs() < 1e-12, "{loss}");
}

#[test]
fn mirrored_model_on_reversed_sentence_mirrors_output() {
    let mut r = rng(21);
    let words = common::nonce_words(5, 9);
    let basis = common::random_basis(&words, 4, 2);
    let s = random_sentence(&mut r, &words, 7);
    let config = TaggerConfig { hidden_size: 5, word_proj_dim: 3, ..TaggerConfig::default() };
    let model = TaggerModel::init(&config, 4, BioLabel::training_set(), FeatureVocab::from_corpus(std::slice::from_ref(&s))).unwrap();
    let mut reversed = s.clone();
    reversed.tokens.reverse();
    reversed.labels.reverse();
    let a = model.forward(&s, &basis);
    let mut b = model.mirrored().forward(&reversed, &basis);
    b.reverse();
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let world = TemplateWorld::new(30, 8, 1);
    let corpus = world.corpus(40, 2);
    let config = TaggerConfig { hidden_size: 6, word_proj_dim: 4, epochs: 1, ..TaggerConfig::default() };
    let (model, _) = train(&config, &corpus[..30], &corpus[30..], &world.basis).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tagger.txt");
    model.save(&path).unwrap();
    let back = TaggerModel::load(&path).unwrap();
    assert_eq!(back, model);
    for s in &corpus {
        assert_eq!(back.forward(s, &world.basis), model.forward(s, &world.basis));
    }
}

#[test]
fn training_is_deterministic_and_learns() {
    let world = TemplateWorld::new(40, 8, 7);
    let corpus = world.corpus(200, 8);
    let (train_set, dev) = corpus.split_at(160);
    let config = TaggerConfig {
        hidden_size: 12,
        word_proj_dim: 8,
        epochs: 4,
        learning_rate: 0.01,
        seed: 3,
        ..TaggerConfig::default()
    };
    let (a, report) = train(&config, train_set, dev, &world.basis).unwrap();
    let (b, _) = train(&config, train_set, dev, &world.basis).unwrap();
    assert_eq!(a, b);
    assert!(report.train_loss.last().unwrap() < &report.train_loss[0]);
    let f1 = evaluate_spans(&a, dev, &world.basis).micro.f1;
    assert_eq!(Some(f1), report.best_epoch.map(|e| report.dev_f1[e]));
    assert!(f1 > 0.5, "dev F1 {f1}");
}

#[test]
fn basis_dimension_mismatch_is_reported() {
    let world = TemplateWorld::new(10, 8, 1);
    let corpus = world.corpus(10, 2);
    let model = TaggerModel::init(&TaggerConfig::default(), 8, BioLabel::training_set(), FeatureVocab::from_corpus(&corpus)).unwrap();
    let other = common::random_basis(&["x"], 5, 1);
    assert!(model.check_basis(&other).is_err());
    assert!(model.check_basis(&world.basis).is_ok());
}
