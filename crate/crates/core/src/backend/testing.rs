//! Test doubles: scripted, failing, and table-driven backends.

use std::sync::OnceLock;

use rand::RngCore;

use crate::backend::{
    Backend, BackendError, BackendKind, BackendResult, BackendSpec, CarryoverClassifier, CausalLm, DecodeParams,
    EmotionClassifier, EmpathyRegressor, LmScorer, MechanismLabeler, Paraphraser, SeqBackend, SlotTagger,
};
use crate::bio::BioLabel;
use crate::emotion::{EmotionPrediction, EmotionVocab};
use crate::mechanism::MechanismSet;
use crate::nlu::{CarryoverDecision, CarryoverQuery};
use crate::text::{normalized_tokens, tokenize_words};

fn builtin_vocab() -> &'static EmotionVocab {
    static V: OnceLock<EmotionVocab> = OnceLock::new();
    V.get_or_init(EmotionVocab::builtin)
}

fn spec(kind: BackendKind, identity: &str) -> BackendSpec {
    BackendSpec {
        kind,
        identity: identity.into(),
        config: Default::default(),
    }
}

macro_rules! backend_spec {
    ($ty:ty, $kind:expr, $id:expr) => {
        impl Backend for $ty {
            fn spec(&self) -> BackendSpec {
                spec($kind, $id)
            }
        }
    };
}

pub struct AlwaysKeep;
pub struct AlwaysReplace;
backend_spec!(AlwaysKeep, BackendKind::Carryover, "always-keep");
backend_spec!(AlwaysReplace, BackendKind::Carryover, "always-replace");

impl CarryoverClassifier for AlwaysKeep {
    fn decide(&self, q: &CarryoverQuery) -> BackendResult<CarryoverDecision> {
        Ok(CarryoverDecision {
            slot: q.slot,
            keep_previous: true,
            confidence: 1.0,
        })
    }
}

impl CarryoverClassifier for AlwaysReplace {
    fn decide(&self, q: &CarryoverQuery) -> BackendResult<CarryoverDecision> {
        Ok(CarryoverDecision {
            slot: q.slot,
            keep_previous: false,
            confidence: 1.0,
        })
    }
}

/// Fails every call, for every kind.
pub struct FailingBackend;

impl Backend for FailingBackend {
    fn spec(&self) -> BackendSpec {
        spec(BackendKind::SlotTagger, "failing")
    }
}

fn fail<T>() -> BackendResult<T> {
    Err(BackendError::failed("failing", "injected failure"))
}

impl SlotTagger for FailingBackend {
    fn tag(&self, _: &[String]) -> BackendResult<Vec<BioLabel>> {
        fail()
    }
}
impl CarryoverClassifier for FailingBackend {
    fn decide(&self, _: &CarryoverQuery) -> BackendResult<CarryoverDecision> {
        fail()
    }
}
impl SeqBackend for FailingBackend {
    fn generate(&self, _: &str, _: &DecodeParams, _: &mut dyn RngCore) -> BackendResult<String> {
        fail()
    }
}
impl EmotionClassifier for FailingBackend {
    fn vocab(&self) -> &EmotionVocab {
        builtin_vocab()
    }
    fn predict(&self, _: &str) -> BackendResult<EmotionPrediction> {
        fail()
    }
}
impl MechanismLabeler for FailingBackend {
    fn label(&self, _: &str) -> BackendResult<MechanismSet> {
        fail()
    }
}
impl CausalLm for FailingBackend {
    fn complete(&self, _: &str, _: &DecodeParams, _: &mut dyn RngCore) -> BackendResult<String> {
        fail()
    }
}
impl EmpathyRegressor for FailingBackend {
    fn score(&self, _: &str) -> BackendResult<f64> {
        fail()
    }
}
impl LmScorer for FailingBackend {
    fn token_log_probs(&self, _: &str) -> BackendResult<Vec<f64>> {
        fail()
    }
}
impl Paraphraser for FailingBackend {
    fn paraphrase(&self, _: &str, _: &mut dyn RngCore) -> BackendResult<String> {
        fail()
    }
}

/// Returns a fixed label sequence, padded with `O` or truncated to fit.
pub struct ScriptedTagger {
    labels: Vec<BioLabel>,
}

impl ScriptedTagger {
    pub fn new(labels: Vec<BioLabel>) -> Self {
        Self { labels }
    }
}
backend_spec!(ScriptedTagger, BackendKind::SlotTagger, "scripted-tagger");

impl SlotTagger for ScriptedTagger {
    fn tag(&self, tokens: &[String]) -> BackendResult<Vec<BioLabel>> {
        let mut out = self.labels.clone();
        out.resize(tokens.len(), BioLabel::O);
        Ok(out)
    }
}

/// Always answers with the same text.
pub struct FixedSeq(String);

impl FixedSeq {
    pub fn new(text: &str) -> Self {
        Self(text.to_string())
    }
}
backend_spec!(FixedSeq, BackendKind::SeqMultitask, "fixed-seq");

impl SeqBackend for FixedSeq {
    fn generate(&self, _: &str, _: &DecodeParams, _: &mut dyn RngCore) -> BackendResult<String> {
        Ok(self.0.clone())
    }
}

pub struct FixedLm(String);

impl FixedLm {
    pub fn new(text: &str) -> Self {
        Self(text.to_string())
    }
}
backend_spec!(FixedLm, BackendKind::CausalLm, "fixed-lm");

impl CausalLm for FixedLm {
    fn complete(&self, _: &str, _: &DecodeParams, _: &mut dyn RngCore) -> BackendResult<String> {
        Ok(self.0.clone())
    }
}

/// Assigns probability 1 to every token.
pub struct DegenerateLm;
backend_spec!(DegenerateLm, BackendKind::LmScorer, "degenerate-lm");

impl LmScorer for DegenerateLm {
    fn token_log_probs(&self, text: &str) -> BackendResult<Vec<f64>> {
        Ok(vec![0.0; tokenize_words(text).len()])
    }
}

/// Reference top-2 rows from the emotion detector's published examples;
/// the remaining mass is spread evenly over the other 30 labels. Unknown
/// utterances get the uniform distribution.
pub struct TableEmotionClassifier {
    vocab: EmotionVocab,
}

pub const TABLE_ROWS: [(&str, (&str, f64), (&str, f64)); 5] = [
    ("Sorry I left my fitbit in the emergency room yesterday.", ("Guilty", 0.506), ("Ashamed", 0.323)),
    (
        "I'm not feeling very well yesterday so I did not go out for a walk.",
        ("Disappointed", 0.305),
        ("Ashamed", 0.174),
    ),
    ("I reached 10k steps last week can you believe that?", ("Surprised", 0.548), ("Proud", 0.229)),
    ("Ok.", ("Angry", 0.127), ("Furious", 0.059)),
    ("I want to walk 3000 steps today.", ("Hopeful", 0.484), ("Confident", 0.132)),
];

impl TableEmotionClassifier {
    pub fn new() -> Self {
        Self {
            vocab: EmotionVocab::builtin(),
        }
    }

    pub fn two_point(vocab: &EmotionVocab, a: (&str, f64), b: (&str, f64)) -> EmotionPrediction {
        let rest = (1.0 - a.1 - b.1) / (vocab.len() - 2) as f64;
        let probs: Vec<f64> = vocab
            .labels()
            .iter()
            .map(|l| {
                if l == a.0 {
                    a.1
                } else if l == b.0 {
                    b.1
                } else {
                    rest
                }
            })
            .collect();
        EmotionPrediction::new(vocab, &probs).expect("table rows are valid distributions")
    }
}

impl Default for TableEmotionClassifier {
    fn default() -> Self {
        Self::new()
    }
}
backend_spec!(TableEmotionClassifier, BackendKind::EmotionClassifier, "table-emotion");

impl EmotionClassifier for TableEmotionClassifier {
    fn vocab(&self) -> &EmotionVocab {
        &self.vocab
    }

    fn predict(&self, utterance: &str) -> BackendResult<EmotionPrediction> {
        let key = utterance.trim();
        Ok(TABLE_ROWS
            .iter()
            .find(|(u, _, _)| *u == key)
            .map(|(_, a, b)| Self::two_point(&self.vocab, *a, *b))
            .unwrap_or_else(|| EmotionPrediction::uniform(&self.vocab)))
    }
}

/// Returns the same distribution for every input.
pub struct ConstantEmotion {
    vocab: EmotionVocab,
    prediction: EmotionPrediction,
}

impl ConstantEmotion {
    pub fn new(vocab: EmotionVocab, prediction: EmotionPrediction) -> Self {
        Self { vocab, prediction }
    }
}
backend_spec!(ConstantEmotion, BackendKind::EmotionClassifier, "constant-emotion");

impl EmotionClassifier for ConstantEmotion {
    fn vocab(&self) -> &EmotionVocab {
        &self.vocab
    }
    fn predict(&self, _: &str) -> BackendResult<EmotionPrediction> {
        Ok(self.prediction.clone())
    }
}

/// Retrieval double: answers with the target of the stored input that
/// shares the most tokens with the query (first wins on ties).
pub struct NearestNeighborSeq {
    pairs: Vec<(Vec<String>, String)>,
}

impl NearestNeighborSeq {
    pub fn new<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: Into<String>,
    {
        Self {
            pairs: pairs
                .into_iter()
                .map(|(i, t)| (normalized_tokens(i.as_ref()), t.into()))
                .collect(),
        }
    }
}
backend_spec!(NearestNeighborSeq, BackendKind::SeqMultitask, "nearest-neighbor-seq");

impl SeqBackend for NearestNeighborSeq {
    fn generate(&self, input: &str, _: &DecodeParams, _: &mut dyn RngCore) -> BackendResult<String> {
        let query: std::collections::HashSet<String> = normalized_tokens(input).into_iter().collect();
        let mut best: Option<(usize, &String)> = None;
        for (tokens, target) in &self.pairs {
            let overlap = tokens.iter().filter(|t| query.contains(*t)).count();
            if best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, target));
            }
        }
        best.map(|(_, t)| t.clone())
            .ok_or_else(|| BackendError::failed("nearest-neighbor-seq", "no stored pairs"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_are_valid() {
        let clf = TableEmotionClassifier::new();
        for (u, a, b) in TABLE_ROWS {
            let p = clf.predict(u).unwrap();
            let top = p.top_k(2);
            assert_eq!(top[0], (a.0.to_string(), a.1));
            assert_eq!(top[1], (b.0.to_string(), b.1));
        }
    }

    #[test]
    fn nearest_neighbor_picks_overlap() {
        let nn = NearestNeighborSeq::new([("walk every day", "A"), ("swim on monday", "B")]);
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        assert_eq!(nn.generate("monday swim", &DecodeParams::RESPONSE, &mut rng).unwrap(), "B");
    }
}
