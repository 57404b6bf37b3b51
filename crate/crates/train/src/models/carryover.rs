//! Keep-or-replace classifier over dialogue-context features.

use std::collections::BTreeMap;

use goalcoach_core::backend::{Backend, BackendConfig, BackendKind, BackendResult, BackendSpec, CarryoverClassifier};
use goalcoach_core::nlu::{CarryoverDecision, CarryoverQuery};
use goalcoach_core::text::{normalize_value, normalized_tokens};
use goalcoach_core::Speaker;
use goalcoach_corpus::{CarryoverExample, Corpus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{hash_records, Model, Trained};
use crate::data::{best_of_sweep, binary_prf, split_weeks};
use crate::error::{Result, TrainError};
use crate::features::{bag_of_ngrams, FeatureIndex};
use crate::linear::{fit, softmax, Linear, Target};
use crate::recipe::TrainRecipe;

const REPLACE: usize = 0;
const KEEP: usize = 1;

/// Lowercased text with the previous and proposed values masked, so the
/// classifier learns from how values are talked about rather than which.
fn masked_words(text: &str, previous: &[String], proposed: &str, max_len: usize) -> Vec<String> {
    let mut s = format!(" {} ", normalized_tokens(text).join(" "));
    let mut masks: Vec<(String, &str)> = previous.iter().map(|v| (normalize_value(v), "<prev>")).collect();
    masks.push((normalize_value(proposed), "<new>"));
    masks.sort_by_key(|(v, _)| std::cmp::Reverse(v.len()));
    for (v, tok) in masks {
        let v = normalized_tokens(&v).join(" ");
        if !v.is_empty() {
            s = s.replace(&format!(" {v} "), &format!(" {tok} "));
        }
    }
    let mut words: Vec<String> = s.split_whitespace().map(String::from).collect();
    words.truncate(max_len);
    words
}

pub fn query_features(q: &CarryoverQuery, max_len: usize) -> Vec<String> {
    let slot = q.slot.as_str();
    let mut f = vec!["bias".to_string(), format!("slot={slot}")];
    if q.slot.is_multi_valued() {
        f.push("multi".into());
    }
    let last = |sp: Speaker| q.window.iter().rev().find(|t| t.speaker == sp).map(|t| t.text.as_str()).unwrap_or("");
    for (ns, sp) in [("p", Speaker::Patient), ("c", Speaker::Coach)] {
        let words = masked_words(last(sp), &q.previous, &q.proposed, max_len);
        let mut flags = Vec::new();
        if words.iter().any(|w| w == "<prev>") {
            flags.push(format!("{ns}:has_prev"));
        }
        if words.iter().any(|w| w == "<new>") {
            flags.push(format!("{ns}:has_new"));
        }
        if let (Some(a), Some(b)) = (words.iter().position(|w| w == "<prev>"), words.iter().position(|w| w == "<new>")) {
            flags.push(format!("{ns}:prev_first={}", a < b));
        }
        for fl in &flags {
            f.push(format!("{fl}|slot={slot}"));
        }
        f.extend(flags);
        bag_of_ngrams(ns, &words, &mut f);
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticCarryover {
    pub config: BackendConfig,
    pub features: FeatureIndex,
    pub model: Linear,
}

#[derive(Serialize, Deserialize)]
pub struct CarryoverMeta {
    config: BackendConfig,
    features: FeatureIndex,
}

impl LogisticCarryover {
    pub fn keep_probability(&self, q: &CarryoverQuery) -> f64 {
        let x = self.features.encode(&query_features(q, self.config.max_length.unwrap_or(usize::MAX)));
        softmax(&self.model.scores(&x))[KEEP] as f64
    }
}

impl Backend for LogisticCarryover {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::Carryover,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl CarryoverClassifier for LogisticCarryover {
    fn decide(&self, q: &CarryoverQuery) -> BackendResult<CarryoverDecision> {
        let p = self.keep_probability(q);
        let keep = p > 0.5;
        Ok(CarryoverDecision {
            slot: q.slot,
            keep_previous: keep,
            confidence: if keep { p } else { 1.0 - p },
        })
    }
}

impl Model for LogisticCarryover {
    const KIND: BackendKind = BackendKind::Carryover;
    const IDENTITY: &'static str = "logistic-carryover";
    type Meta = CarryoverMeta;

    fn to_parts(&self) -> (CarryoverMeta, Vec<f32>) {
        (
            CarryoverMeta {
                config: self.config.clone(),
                features: self.features.clone(),
            },
            self.model.weights.clone(),
        )
    }

    fn from_parts(meta: CarryoverMeta, weights: Vec<f32>) -> std::result::Result<Self, String> {
        let model = Linear::from_weights(meta.features.len(), 2, weights).ok_or("weight count does not match features")?;
        Ok(LogisticCarryover {
            config: meta.config,
            features: meta.features,
            model,
        })
    }
}

/// F1 of the keep class.
pub fn carryover_f1(c: &LogisticCarryover, examples: &[CarryoverExample]) -> f64 {
    let pred: Vec<bool> = examples.iter().map(|e| c.keep_probability(&e.query) > 0.5).collect();
    let gold: Vec<bool> = examples.iter().map(|e| e.keep_previous).collect();
    binary_prf(&pred, &gold).f1
}

pub fn fit_carryover(train: &[CarryoverExample], recipe: &TrainRecipe) -> LogisticCarryover {
    let feats: Vec<Vec<String>> = train.iter().map(|e| query_features(&e.query, recipe.max_length)).collect();
    let features = FeatureIndex::build(&feats, recipe.min_count);
    let data: Vec<(Vec<u32>, Target)> = feats
        .iter()
        .zip(train)
        .map(|(f, e)| (features.encode(f), Target::Class(if e.keep_previous { KEEP } else { REPLACE })))
        .collect();
    let mut model = Linear::zeros(features.len(), 2);
    fit(&mut model, &data, recipe, &mut ChaCha8Rng::seed_from_u64(recipe.seed));
    LogisticCarryover {
        config: BackendConfig {
            max_length: Some(recipe.max_length),
            decode: None,
            seed: Some(recipe.seed),
        },
        features,
        model,
    }
}

/// Train on collision examples mined from the training weeks.
pub fn train_carryover(corpus: &Corpus, recipe: &TrainRecipe) -> Result<Trained<LogisticCarryover>> {
    recipe.validate()?;
    let split = split_weeks(corpus, recipe.dev_fraction, recipe.seed);
    let mut train: Vec<CarryoverExample> = split.train.iter().flat_map(|w| goalcoach_corpus::examples::carryover_examples(w)).collect();
    let mut dev: Vec<CarryoverExample> = split.dev.iter().flat_map(|w| goalcoach_corpus::examples::carryover_examples(w)).collect();
    let test: Vec<CarryoverExample> = split.test.iter().flat_map(|w| goalcoach_corpus::examples::carryover_examples(w)).collect();
    let total = train.len() + dev.len();
    if total < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::Carryover, total, recipe.min_examples.max(1)));
    }
    if train.is_empty() {
        train = std::mem::take(&mut dev);
    }
    let (model, chosen) = best_of_sweep(recipe, |r| {
        let m = fit_carryover(&train, r);
        let score = (!dev.is_empty()).then(|| carryover_f1(&m, &dev));
        Ok((m, score))
    })?;
    let mut metrics = BTreeMap::new();
    metrics.insert("train_examples".into(), train.len() as f64);
    metrics.insert("train_keep".into(), train.iter().filter(|e| e.keep_previous).count() as f64);
    if !dev.is_empty() {
        metrics.insert("dev_f1".into(), carryover_f1(&model, &dev));
    }
    if !test.is_empty() {
        metrics.insert("test_examples".into(), test.len() as f64);
        metrics.insert("test_f1".into(), carryover_f1(&model, &test));
    }
    let records: Vec<_> = corpus.utterances().map(|u| u.to_record()).collect();
    let spec = model.spec();
    Ok(Trained::new(model, spec, &chosen, hash_records(&records), metrics))
}
