//! Bag-of-n-gram emotion classifier, mechanism labeler and empathy
//! regressor.

use std::collections::BTreeMap;

use goalcoach_core::backend::{
    Backend, BackendConfig, BackendError, BackendKind, BackendResult, BackendSpec, EmotionClassifier, EmpathyRegressor,
    MechanismLabeler,
};
use goalcoach_core::text::normalized_tokens;
use goalcoach_core::{EmotionPrediction, EmotionVocab, Mechanism, MechanismSet};
use goalcoach_corpus::empathy::{EmotionExample, MechanismRating};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{hash_records, Model, Trained};
use crate::data::{accuracy, split_examples};
use crate::error::{Result, TrainError};
use crate::features::{bag_of_ngrams, FeatureIndex};
use crate::linear::{argmax, fit, sigmoid, softmax, Linear, Target};
use crate::recipe::TrainRecipe;

/// Maximum empathy level in the rating scheme.
pub const MAX_LEVEL: f64 = 2.0;

pub fn text_features(text: &str, max_len: usize) -> Vec<String> {
    let mut words = normalized_tokens(text);
    words.truncate(max_len);
    let mut f = vec!["bias".to_string()];
    bag_of_ngrams("w", &words, &mut f);
    f
}

fn config(recipe: &TrainRecipe) -> BackendConfig {
    BackendConfig {
        max_length: Some(recipe.max_length),
        decode: None,
        seed: Some(recipe.seed),
    }
}

fn max_len(c: &BackendConfig) -> usize {
    c.max_length.unwrap_or(usize::MAX)
}

fn fit_linear(texts: &[&str], targets: Vec<Target>, outputs: usize, recipe: &TrainRecipe) -> (FeatureIndex, Linear) {
    let feats: Vec<Vec<String>> = texts.iter().map(|t| text_features(t, recipe.max_length)).collect();
    let features = FeatureIndex::build(&feats, recipe.min_count);
    let data: Vec<(Vec<u32>, Target)> = feats.iter().map(|f| features.encode(f)).zip(targets).collect();
    let mut model = Linear::zeros(features.len(), outputs);
    fit(&mut model, &data, recipe, &mut ChaCha8Rng::seed_from_u64(recipe.seed));
    (features, model)
}

#[derive(Serialize, Deserialize)]
pub struct TextMeta {
    config: BackendConfig,
    features: FeatureIndex,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
}

// ---------------------------------------------------------------- emotion

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxEmotion {
    pub config: BackendConfig,
    pub vocab: EmotionVocab,
    pub features: FeatureIndex,
    pub model: Linear,
}

impl Backend for SoftmaxEmotion {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::EmotionClassifier,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl EmotionClassifier for SoftmaxEmotion {
    fn vocab(&self) -> &EmotionVocab {
        &self.vocab
    }

    fn predict(&self, utterance: &str) -> BackendResult<EmotionPrediction> {
        let x = self.features.encode(&text_features(utterance, max_len(&self.config)));
        let probs: Vec<f64> = softmax(&self.model.scores(&x)).into_iter().map(f64::from).collect();
        EmotionPrediction::from_scores(&self.vocab, &probs).map_err(|e| BackendError::invalid(Self::IDENTITY, e.to_string()))
    }
}

impl Model for SoftmaxEmotion {
    const KIND: BackendKind = BackendKind::EmotionClassifier;
    const IDENTITY: &'static str = "softmax-emotion";
    type Meta = TextMeta;

    fn to_parts(&self) -> (TextMeta, Vec<f32>) {
        (
            TextMeta {
                config: self.config.clone(),
                features: self.features.clone(),
                labels: self.vocab.labels().to_vec(),
            },
            self.model.weights.clone(),
        )
    }

    fn from_parts(meta: TextMeta, weights: Vec<f32>) -> std::result::Result<Self, String> {
        let vocab = EmotionVocab::parse(&meta.labels.join("\n")).map_err(|e| e.to_string())?;
        let model = Linear::from_weights(meta.features.len(), vocab.len(), weights).ok_or("weight count mismatch")?;
        Ok(SoftmaxEmotion {
            config: meta.config,
            vocab,
            features: meta.features,
            model,
        })
    }
}

pub fn emotion_accuracy(m: &SoftmaxEmotion, examples: &[EmotionExample]) -> f64 {
    let hits = examples
        .iter()
        .filter(|e| {
            let x = m.features.encode(&text_features(&e.text, max_len(&m.config)));
            m.vocab.labels()[argmax(&m.model.scores(&x))] == e.label
        })
        .count();
    accuracy(hits, examples.len())
}

/// Train on `train`; `dev` (if empty, a `dev_fraction` hold-out of `train`)
/// is used for the reported accuracy.
pub fn train_emotion(
    train: &[EmotionExample],
    dev: &[EmotionExample],
    vocab: &EmotionVocab,
    recipe: &TrainRecipe,
) -> Result<Trained<SoftmaxEmotion>> {
    recipe.validate()?;
    let (train, dev) = if dev.is_empty() {
        split_examples(train, recipe.dev_fraction, recipe.seed)
    } else {
        (train.to_vec(), dev.to_vec())
    };
    if train.len() < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::EmotionClassifier, train.len(), recipe.min_examples.max(1)));
    }
    let mut targets = Vec::with_capacity(train.len());
    for e in train.iter().chain(&dev) {
        let i = vocab
            .index_of(&e.label)
            .ok_or_else(|| TrainError::Schema(format!("emotion label `{}` is not in the vocabulary", e.label)))?;
        targets.push(Target::Class(i));
    }
    targets.truncate(train.len());
    let texts: Vec<&str> = train.iter().map(|e| e.text.as_str()).collect();
    let (features, model) = fit_linear(&texts, targets, vocab.len(), recipe);
    let m = SoftmaxEmotion {
        config: config(recipe),
        vocab: vocab.clone(),
        features,
        model,
    };
    let mut metrics = BTreeMap::new();
    metrics.insert("train_examples".into(), train.len() as f64);
    if !dev.is_empty() {
        metrics.insert("dev_accuracy".into(), emotion_accuracy(&m, &dev));
    }
    let spec = m.spec();
    Ok(Trained::new(m, spec, recipe, hash_records(&train), metrics))
}

// ------------------------------------------------------------- mechanisms

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticMechanisms {
    pub config: BackendConfig,
    pub features: FeatureIndex,
    /// One sigmoid output per mechanism, in canonical order.
    pub model: Linear,
}

impl LogisticMechanisms {
    pub fn probabilities(&self, text: &str) -> [f64; 3] {
        let x = self.features.encode(&text_features(text, max_len(&self.config)));
        let s = self.model.scores(&x);
        [sigmoid(s[0]) as f64, sigmoid(s[1]) as f64, sigmoid(s[2]) as f64]
    }
}

impl Backend for LogisticMechanisms {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::MechanismLabeler,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl MechanismLabeler for LogisticMechanisms {
    fn label(&self, response: &str) -> BackendResult<MechanismSet> {
        let p = self.probabilities(response);
        Ok(Mechanism::ALL.into_iter().zip(p).filter(|(_, p)| *p > 0.5).map(|(m, _)| m).collect())
    }
}

impl Model for LogisticMechanisms {
    const KIND: BackendKind = BackendKind::MechanismLabeler;
    const IDENTITY: &'static str = "logistic-mechanisms";
    type Meta = TextMeta;

    fn to_parts(&self) -> (TextMeta, Vec<f32>) {
        (
            TextMeta {
                config: self.config.clone(),
                features: self.features.clone(),
                labels: Vec::new(),
            },
            self.model.weights.clone(),
        )
    }

    fn from_parts(meta: TextMeta, weights: Vec<f32>) -> std::result::Result<Self, String> {
        let model = Linear::from_weights(meta.features.len(), 3, weights).ok_or("weight count mismatch")?;
        Ok(LogisticMechanisms {
            config: meta.config,
            features: meta.features,
            model,
        })
    }
}

fn gold_mechanisms(r: &MechanismRating) -> Vec<bool> {
    Mechanism::ALL
        .iter()
        .map(|m| r.levels.get(m).copied().unwrap_or(0) > 0)
        .collect()
}

/// Fraction of (response, mechanism) decisions that are wrong.
pub fn hamming_loss(m: &LogisticMechanisms, ratings: &[MechanismRating]) -> f64 {
    if ratings.is_empty() {
        return 0.0;
    }
    let mut wrong = 0;
    for r in ratings {
        let got = m.label(&r.response_post).unwrap_or_default();
        for (mech, g) in Mechanism::ALL.into_iter().zip(gold_mechanisms(r)) {
            wrong += usize::from(got.contains(mech) != g);
        }
    }
    wrong as f64 / (3 * ratings.len()) as f64
}

pub fn train_mechanisms(ratings: &[MechanismRating], recipe: &TrainRecipe) -> Result<Trained<LogisticMechanisms>> {
    recipe.validate()?;
    let (train, dev) = split_examples(ratings, recipe.dev_fraction, recipe.seed);
    if train.len() < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::MechanismLabeler, train.len(), recipe.min_examples.max(1)));
    }
    let texts: Vec<&str> = train.iter().map(|r| r.response_post.as_str()).collect();
    let targets = train.iter().map(|r| Target::Labels(gold_mechanisms(r))).collect();
    let (features, model) = fit_linear(&texts, targets, 3, recipe);
    let m = LogisticMechanisms {
        config: config(recipe),
        features,
        model,
    };
    let mut metrics = BTreeMap::new();
    metrics.insert("train_examples".into(), train.len() as f64);
    if !dev.is_empty() {
        metrics.insert("dev_hamming_loss".into(), hamming_loss(&m, &dev));
    }
    let spec = m.spec();
    Ok(Trained::new(m, spec, recipe, hash_records(ratings), metrics))
}

// -------------------------------------------------------------- regressor

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEmpathyRegressor {
    pub config: BackendConfig,
    pub features: FeatureIndex,
    pub model: Linear,
}

impl Backend for LinearEmpathyRegressor {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::EmpathyRegressor,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl EmpathyRegressor for LinearEmpathyRegressor {
    /// Clamped to the rating scale.
    fn score(&self, text: &str) -> BackendResult<f64> {
        let x = self.features.encode(&text_features(text, max_len(&self.config)));
        Ok((self.model.scores(&x)[0] as f64).clamp(0.0, MAX_LEVEL))
    }
}

impl Model for LinearEmpathyRegressor {
    const KIND: BackendKind = BackendKind::EmpathyRegressor;
    const IDENTITY: &'static str = "linear-empathy-regressor";
    type Meta = TextMeta;

    fn to_parts(&self) -> (TextMeta, Vec<f32>) {
        (
            TextMeta {
                config: self.config.clone(),
                features: self.features.clone(),
                labels: Vec::new(),
            },
            self.model.weights.clone(),
        )
    }

    fn from_parts(meta: TextMeta, weights: Vec<f32>) -> std::result::Result<Self, String> {
        let model = Linear::from_weights(meta.features.len(), 1, weights).ok_or("weight count mismatch")?;
        Ok(LinearEmpathyRegressor {
            config: meta.config,
            features: meta.features,
            model,
        })
    }
}

pub fn rmse(m: &LinearEmpathyRegressor, ratings: &[MechanismRating]) -> f64 {
    if ratings.is_empty() {
        return 0.0;
    }
    let se: f64 = ratings
        .iter()
        .map(|r| (m.score(&r.response_post).unwrap_or(0.0) - r.empathy_target()).powi(2))
        .sum();
    (se / ratings.len() as f64).sqrt()
}

pub fn train_regressor(ratings: &[MechanismRating], recipe: &TrainRecipe) -> Result<Trained<LinearEmpathyRegressor>> {
    recipe.validate()?;
    let (train, dev) = split_examples(ratings, recipe.dev_fraction, recipe.seed);
    if train.len() < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::EmpathyRegressor, train.len(), recipe.min_examples.max(1)));
    }
    let texts: Vec<&str> = train.iter().map(|r| r.response_post.as_str()).collect();
    let targets = train.iter().map(|r| Target::Values(vec![r.empathy_target() as f32])).collect();
    let (features, model) = fit_linear(&texts, targets, 1, recipe);
    let m = LinearEmpathyRegressor {
        config: config(recipe),
        features,
        model,
    };
    let mut metrics = BTreeMap::new();
    metrics.insert("train_examples".into(), train.len() as f64);
    if !dev.is_empty() {
        metrics.insert("dev_rmse".into(), rmse(&m, &dev));
    }
    let spec = m.spec();
    Ok(Trained::new(m, spec, recipe, hash_records(ratings), metrics))
}
