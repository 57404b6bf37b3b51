//! Interfaces for every learned component.
//!
//! Each trait is object-safe and takes `&self`, so implementations must be
//! reentrant (or guard their own state). Randomness is always supplied by
//! the caller, which keeps sessions replayable.

pub mod rule;
pub mod testing;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bio::BioLabel;
use crate::emotion::{EmotionPrediction, EmotionVocab};
use crate::mechanism::MechanismSet;
use crate::nlu::{CarryoverDecision, CarryoverQuery};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("{identity}: {message}")]
    Failed { identity: String, message: String },
    #[error("{identity}: invalid output: {message}")]
    InvalidOutput { identity: String, message: String },
}

impl BackendError {
    pub fn failed(identity: impl Into<String>, message: impl Into<String>) -> Self {
        BackendError::Failed {
            identity: identity.into(),
            message: message.into(),
        }
    }

    pub fn invalid(identity: impl Into<String>, message: impl Into<String>) -> Self {
        BackendError::InvalidOutput {
            identity: identity.into(),
            message: message.into(),
        }
    }

    /// Attach caller context (e.g. the utterance being processed).
    pub fn context(self, ctx: impl fmt::Display) -> Self {
        match self {
            BackendError::Failed { identity, message } => BackendError::Failed {
                identity,
                message: format!("{message} (while processing {ctx})"),
            },
            BackendError::InvalidOutput { identity, message } => BackendError::InvalidOutput {
                identity,
                message: format!("{message} (while processing {ctx})"),
            },
        }
    }
}

pub type BackendResult<T> = std::result::Result<T, BackendError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    SlotTagger,
    Carryover,
    SeqMultitask,
    EmotionClassifier,
    MechanismLabeler,
    CausalLm,
    EmpathyRegressor,
    LmScorer,
    Paraphraser,
}

impl BackendKind {
    pub const ALL: [BackendKind; 9] = [
        BackendKind::SlotTagger,
        BackendKind::Carryover,
        BackendKind::SeqMultitask,
        BackendKind::EmotionClassifier,
        BackendKind::MechanismLabeler,
        BackendKind::CausalLm,
        BackendKind::EmpathyRegressor,
        BackendKind::LmScorer,
        BackendKind::Paraphraser,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::SlotTagger => "slot_tagger",
            BackendKind::Carryover => "carryover",
            BackendKind::SeqMultitask => "seq_multitask",
            BackendKind::EmotionClassifier => "emotion_classifier",
            BackendKind::MechanismLabeler => "mechanism_labeler",
            BackendKind::CausalLm => "causal_lm",
            BackendKind::EmpathyRegressor => "empathy_regressor",
            BackendKind::LmScorer => "lm_scorer",
            BackendKind::Paraphraser => "paraphraser",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.replace('-', "_");
        BackendKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown backend kind `{s}`"))
    }
}

/// Sampling contract for stochastic generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub sample: bool,
    pub top_k: usize,
    pub top_p: f64,
    pub max_tokens: usize,
}

impl DecodeParams {
    /// Response generation: top-k 50, top-p 0.95, 128-token inputs.
    pub const RESPONSE: DecodeParams = DecodeParams {
        sample: true,
        top_k: 50,
        top_p: 0.95,
        max_tokens: 128,
    };

    /// Empathetic generation: same sampling, 96-token cap.
    pub const EMPATHY: DecodeParams = DecodeParams {
        sample: true,
        top_k: 50,
        top_p: 0.95,
        max_tokens: 96,
    };

    pub fn greedy(max_tokens: usize) -> Self {
        DecodeParams {
            sample: false,
            top_k: 1,
            top_p: 1.0,
            max_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BackendConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode: Option<DecodeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub kind: BackendKind,
    pub identity: String,
    #[serde(default)]
    pub config: BackendConfig,
}

/// Common surface of every backend.
pub trait Backend: Send + Sync {
    fn spec(&self) -> BackendSpec;

    fn identity(&self) -> String {
        self.spec().identity
    }
}

/// Token-level BIO tagging over pipeline tokens.
pub trait SlotTagger: Backend {
    fn tag(&self, tokens: &[String]) -> BackendResult<Vec<BioLabel>>;
}

/// Keep-or-replace decision at a slot value collision.
pub trait CarryoverClassifier: Backend {
    fn decide(&self, query: &CarryoverQuery) -> BackendResult<CarryoverDecision>;
}

/// Multi-task text-to-text model; the task is selected by the input prefix.
pub trait SeqBackend: Backend {
    fn generate(&self, input: &str, decode: &DecodeParams, rng: &mut dyn RngCore) -> BackendResult<String>;
}

pub trait EmotionClassifier: Backend {
    fn vocab(&self) -> &EmotionVocab;
    fn predict(&self, utterance: &str) -> BackendResult<EmotionPrediction>;
}

/// Multi-label mechanism classifier used for silver labeling.
pub trait MechanismLabeler: Backend {
    fn label(&self, response: &str) -> BackendResult<MechanismSet>;
}

/// Left-to-right generator: returns the continuation of `prompt`.
pub trait CausalLm: Backend {
    fn complete(&self, prompt: &str, decode: &DecodeParams, rng: &mut dyn RngCore) -> BackendResult<String>;
}

/// Scalar empathy level estimate (0 = none, higher = stronger).
pub trait EmpathyRegressor: Backend {
    fn score(&self, text: &str) -> BackendResult<f64>;
}

/// Frozen language model used for fluency scoring. Returns the natural-log
/// probability of every scored token (the model's own tokenization).
pub trait LmScorer: Backend {
    fn token_log_probs(&self, text: &str) -> BackendResult<Vec<f64>>;
}

pub trait Paraphraser: Backend {
    fn paraphrase(&self, text: &str, rng: &mut dyn RngCore) -> BackendResult<String>;
}

/// One backend of every kind, as consumed by the pipeline and harness.
#[derive(Clone)]
pub struct Backends {
    pub tagger: Arc<dyn SlotTagger>,
    pub carryover: Arc<dyn CarryoverClassifier>,
    pub seq: Arc<dyn SeqBackend>,
    pub emotion: Arc<dyn EmotionClassifier>,
    pub mechanisms: Arc<dyn MechanismLabeler>,
    pub empathy_lm: Arc<dyn CausalLm>,
    pub regressor: Arc<dyn EmpathyRegressor>,
    pub lm_scorer: Arc<dyn LmScorer>,
    pub paraphraser: Arc<dyn Paraphraser>,
}

impl Backends {
    /// Deterministic rule implementations for every kind.
    pub fn rule() -> Self {
        Backends {
            tagger: Arc::new(rule::RegexSlotTagger::new()),
            carryover: Arc::new(rule::ConfirmationCarryover),
            seq: Arc::new(rule::TemplateSeqBackend),
            emotion: Arc::new(rule::LexiconEmotionClassifier::new(EmotionVocab::builtin())),
            mechanisms: Arc::new(rule::KeywordMechanismLabeler),
            empathy_lm: Arc::new(rule::TemplateEmpathyLm::new()),
            regressor: Arc::new(rule::ConstantRegressor::default()),
            lm_scorer: Arc::new(rule::UniformLm::default()),
            paraphraser: Arc::new(rule::IdentityParaphraser),
        }
    }

    pub fn specs(&self) -> Vec<BackendSpec> {
        vec![
            self.tagger.spec(),
            self.carryover.spec(),
            self.seq.spec(),
            self.emotion.spec(),
            self.mechanisms.spec(),
            self.empathy_lm.spec(),
            self.regressor.spec(),
            self.lm_scorer.spec(),
            self.paraphraser.spec(),
        ]
    }
}

impl fmt::Debug for Backends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.specs().iter().map(|s| format!("{}:{}", s.kind, s.identity)))
            .finish()
    }
}

/// Registered implementation names per kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistryEntry {
    pub kind: BackendKind,
    pub rule: &'static str,
    pub trainable: &'static str,
}

/// Rule and trainable implementation names for every kind. Trainable ones
/// live in the training crate and are loaded from artifacts.
pub fn registry() -> Vec<RegistryEntry> {
    use BackendKind::*;
    let entry = |kind, rule, trainable| RegistryEntry { kind, rule, trainable };
    vec![
        entry(SlotTagger, rule::RegexSlotTagger::IDENTITY, "linear-crf-tagger"),
        entry(Carryover, rule::ConfirmationCarryover::IDENTITY, "logistic-carryover"),
        entry(SeqMultitask, rule::TemplateSeqBackend::IDENTITY, "multitask-linear-seq"),
        entry(EmotionClassifier, rule::LexiconEmotionClassifier::IDENTITY, "softmax-emotion"),
        entry(MechanismLabeler, rule::KeywordMechanismLabeler::IDENTITY, "logistic-mechanisms"),
        entry(CausalLm, rule::TemplateEmpathyLm::IDENTITY, "conditional-ngram-lm"),
        entry(EmpathyRegressor, rule::ConstantRegressor::IDENTITY, "linear-empathy-regressor"),
        entry(LmScorer, rule::UniformLm::IDENTITY, "bigram-lm"),
        entry(Paraphraser, rule::IdentityParaphraser::IDENTITY, "substitution-paraphraser"),
    ]
}
