use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Train/dev/test ratios approximating a 68,700 / 8,500 / 8,500 split.
pub const DEFAULT_SPLIT: (f64, f64, f64) = (0.80, 0.10, 0.10);

/// Shuffle deterministically by `seed`, then cut into contiguous train, dev
/// and test parts. Dev and test sizes are `floor(n * ratio)`; the remainder
/// goes to train.
pub fn split_corpus<T>(
    items: Vec<T>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let (r_train, r_dev, r_test) = ratios;
    if [r_train, r_dev, r_test].iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("split ratios must be positive".into()));
    }
    if (r_train + r_dev + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("split ratios must sum to 1".into()));
    }
    let n = items.len();
    if n < 3 {
        return Err(Error::TooFew(format!("cannot split {n} sentences three ways")));
    }

    // the epsilon absorbs representation error such as 85700 * 0.1
    let part = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
    let n_dev = part(r_dev);
    let n_test = part(r_test);

    let mut items = items;
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = items.split_off(n - n_test);
    let dev = items.split_off(n - n_test - n_dev);
    Ok((items, dev, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_floor_rule() {
        let (a, b, c) = split_corpus((0..10).collect(), DEFAULT_SPLIT, 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));

        let (a, b, c) = split_corpus(vec![(); 85_700], DEFAULT_SPLIT, 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (68_560, 8_570, 8_570));
    }

    #[test]
    fn deterministic_by_seed() {
        let first = split_corpus((0..50).collect::<Vec<_>>(), DEFAULT_SPLIT, 7).unwrap();
        let second = split_corpus((0..50).collect::<Vec<_>>(), DEFAULT_SPLIT, 7).unwrap();
        assert_eq!(first, second);
        let other = split_corpus((0..50).collect::<Vec<_>>(), DEFAULT_SPLIT, 8).unwrap();
        assert_ne!(first, other);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(split_corpus(vec![1, 2], DEFAULT_SPLIT, 0).is_err());
        assert!(split_corpus(vec![1, 2, 3], (0.5, 0.5, 0.0), 0).is_err());
        assert!(split_corpus(vec![1, 2, 3], (0.5, 0.3, 0.3), 0).is_err());
    }
}
