//! Splits, sweeps and small metrics shared by the trainers.

use goalcoach_corpus::{Corpus, Week};
use goalcoach_eval::slots::Prf;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::recipe::TrainRecipe;

/// Training weeks shuffled by `seed`; the first `floor(n * dev_fraction)`
/// become dev. Test weeks are those of the held-out dataset.
pub struct WeekSplit<'a> {
    pub train: Vec<&'a Week>,
    pub dev: Vec<&'a Week>,
    pub test: Vec<&'a Week>,
}

pub fn split_weeks(corpus: &Corpus, dev_fraction: f64, seed: u64) -> WeekSplit<'_> {
    let mut pool = corpus.train_weeks();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_dev = (pool.len() as f64 * dev_fraction).floor() as usize;
    let train = pool.split_off(n_dev);
    WeekSplit {
        train,
        dev: pool,
        test: corpus.weeks_in(goalcoach_corpus::record::TEST_DATASET),
    }
}

/// Generic example split for non-dialogue data.
pub fn split_examples<T: Clone>(items: &[T], dev_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut pool = items.to_vec();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_dev = (pool.len() as f64 * dev_fraction).floor() as usize;
    let train = pool.split_off(n_dev);
    (train, pool)
}

/// Precision/recall/F1 of the positive class.
pub fn binary_prf(pred: &[bool], gold: &[bool]) -> Prf {
    let tp = pred.iter().zip(gold).filter(|(p, g)| **p && **g).count();
    let np = pred.iter().filter(|p| **p).count();
    let ng = gold.iter().filter(|g| **g).count();
    Prf::from_counts(tp, np, ng)
}

pub fn accuracy(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Train one model per sweep point and keep the one with the highest dev
/// score (the first on ties). Without a sweep, trains once.
pub fn best_of_sweep<M>(recipe: &TrainRecipe, mut train: impl FnMut(&TrainRecipe) -> Result<(M, Option<f64>)>) -> Result<(M, TrainRecipe)> {
    let mut best: Option<(M, TrainRecipe, f64)> = None;
    for r in recipe.expand_sweep() {
        let (model, score) = train(&r)?;
        let score = score.unwrap_or(f64::NEG_INFINITY);
        log::info!(
            "{}: epochs {} lr {} batch {} -> dev {score}",
            r.kind,
            r.epochs,
            r.learning_rate,
            r.batch_size
        );
        if best.as_ref().is_none_or(|(_, _, s)| score > *s) {
            best = Some((model, r, score));
        }
    }
    let (m, r, _) = best.expect("a sweep has at least one point");
    Ok((m, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_metrics() {
        let p = binary_prf(&[true, true, false, false], &[true, false, true, false]);
        assert_eq!((p.precision, p.recall), (0.5, 0.5));
        assert_eq!(binary_prf(&[false], &[false]).f1, 1.0);
    }

    #[test]
    fn example_split_is_seeded() {
        let xs: Vec<u32> = (0..20).collect();
        let (a, b) = split_examples(&xs, 0.25, 3);
        assert_eq!((a.len(), b.len()), (15, 5));
        assert_eq!(split_examples(&xs, 0.25, 3), (a, b));
    }
}
