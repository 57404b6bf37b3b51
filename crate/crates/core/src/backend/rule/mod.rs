//! Deterministic, seed-free implementations of every backend kind.

mod affect;
mod seq;
mod tagger;

pub use affect::{EmotionGroup, KeywordMechanismLabeler, LexiconEmotionClassifier, TemplateEmpathyLm};
pub use seq::{
    goal_complete, has_revision_cue, is_summary, template_response, template_stage, ConfirmationCarryover,
    TemplateSeqBackend,
};
pub use tagger::{RegexSlotTagger, ACTIVITIES};

use rand::RngCore;

use crate::backend::{
    Backend, BackendKind, BackendResult, BackendSpec, EmpathyRegressor, LmScorer, Paraphraser,
};
use crate::text::tokenize_words;

fn spec(kind: BackendKind, identity: &str) -> BackendSpec {
    BackendSpec {
        kind,
        identity: identity.into(),
        config: Default::default(),
    }
}

/// Scores every text the same.
#[derive(Debug, Clone, Copy)]
pub struct ConstantRegressor {
    pub value: f64,
}

impl ConstantRegressor {
    pub const IDENTITY: &'static str = "constant-regressor";
}

impl Default for ConstantRegressor {
    fn default() -> Self {
        Self { value: 1.0 }
    }
}

impl Backend for ConstantRegressor {
    fn spec(&self) -> BackendSpec {
        spec(BackendKind::EmpathyRegressor, Self::IDENTITY)
    }
}

impl EmpathyRegressor for ConstantRegressor {
    fn score(&self, _text: &str) -> BackendResult<f64> {
        Ok(self.value)
    }
}

/// Every pipeline token gets probability 1/V.
#[derive(Debug, Clone, Copy)]
pub struct UniformLm {
    pub vocab_size: usize,
}

impl UniformLm {
    pub const IDENTITY: &'static str = "uniform-lm";
}

impl Default for UniformLm {
    fn default() -> Self {
        Self { vocab_size: 50_000 }
    }
}

impl Backend for UniformLm {
    fn spec(&self) -> BackendSpec {
        spec(BackendKind::LmScorer, Self::IDENTITY)
    }
}

impl LmScorer for UniformLm {
    fn token_log_probs(&self, text: &str) -> BackendResult<Vec<f64>> {
        let lp = -(self.vocab_size.max(1) as f64).ln();
        Ok(vec![lp; tokenize_words(text).len()])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityParaphraser;

impl IdentityParaphraser {
    pub const IDENTITY: &'static str = "identity-paraphraser";
}

impl Backend for IdentityParaphraser {
    fn spec(&self) -> BackendSpec {
        spec(BackendKind::Paraphraser, Self::IDENTITY)
    }
}

impl Paraphraser for IdentityParaphraser {
    fn paraphrase(&self, text: &str, _rng: &mut dyn RngCore) -> BackendResult<String> {
        Ok(text.to_string())
    }
}
