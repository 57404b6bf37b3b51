//! 32-way emotion vocabulary and predicted distributions.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const EMOTION_COUNT: usize = 32;
const PROBABILITY_TOLERANCE: f64 = 1e-6;

static DEFAULT_VOCAB: &str = include_str!("../data/emotions.txt");

/// Emotion label vocabulary; one label per line, exactly 32 lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionVocab {
    labels: Arc<[String]>,
}

impl EmotionVocab {
    pub fn parse(content: &str) -> Result<Self> {
        let labels: Vec<String> = content
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        if labels.len() != EMOTION_COUNT {
            return Err(CoreError::Vocabulary(format!(
                "expected {EMOTION_COUNT} labels, found {}",
                labels.len()
            )));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(CoreError::Vocabulary("duplicate labels".into()));
        }
        Ok(Self {
            labels: labels.into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let content = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CoreError::Vocabulary(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&content)
    }

    /// The shipped vocabulary (the EmpatheticDialogues emotion contexts).
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_VOCAB).expect("bundled emotion vocabulary is valid")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Case-insensitive lookup.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l.eq_ignore_ascii_case(label.trim()))
    }
}

impl Default for EmotionVocab {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Full distribution over the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct EmotionPrediction {
    // sorted by label
    entries: Vec<(String, f64)>,
}

impl EmotionPrediction {
    /// Build from probabilities aligned with `vocab`.
    pub fn new(vocab: &EmotionVocab, probs: &[f64]) -> Result<Self> {
        if probs.len() != vocab.len() {
            return Err(CoreError::InvalidEmotion(format!(
                "{} probabilities for {} labels",
                probs.len(),
                vocab.len()
            )));
        }
        let mut entries: Vec<(String, f64)> = vocab
            .labels()
            .iter()
            .cloned()
            .zip(probs.iter().copied())
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let pred = Self { entries };
        pred.validate()?;
        Ok(pred)
    }

    pub fn uniform(vocab: &EmotionVocab) -> Self {
        let p = 1.0 / vocab.len() as f64;
        let mut entries: Vec<(String, f64)> =
            vocab.labels().iter().map(|l| (l.clone(), p)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Self { entries }
    }

    /// Normalize non-negative scores into a distribution.
    pub fn from_scores(vocab: &EmotionVocab, scores: &[f64]) -> Result<Self> {
        let total: f64 = scores.iter().sum();
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) || total <= 0.0 {
            return Err(CoreError::InvalidEmotion("scores must be finite, non-negative, and not all zero".into()));
        }
        let probs: Vec<f64> = scores.iter().map(|s| s / total).collect();
        Self::new(vocab, &probs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != EMOTION_COUNT {
            return Err(CoreError::InvalidEmotion(format!(
                "distribution has {} labels, expected {EMOTION_COUNT}",
                self.entries.len()
            )));
        }
        if let Some((label, p)) = self.entries.iter().find(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(CoreError::InvalidEmotion(format!("p({label}) = {p}")));
        }
        let total: f64 = self.entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(CoreError::InvalidEmotion(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(l, _)| l.eq_ignore_ascii_case(label))
            .map(|(_, p)| *p)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// The `n` most probable labels, ties broken by label name.
    pub fn top_k(&self, n: usize) -> Vec<(String, f64)> {
        let mut sorted = self.entries.clone();
        sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        sorted.truncate(n);
        sorted
    }

    pub fn top(&self) -> (String, f64) {
        self.top_k(1).remove(0)
    }
}

impl TryFrom<BTreeMap<String, f64>> for EmotionPrediction {
    type Error = CoreError;
    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        let pred = Self {
            entries: map.into_iter().collect(),
        };
        pred.validate()?;
        Ok(pred)
    }
}

impl From<EmotionPrediction> for BTreeMap<String, f64> {
    fn from(p: EmotionPrediction) -> Self {
        p.entries.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_vocab_has_32_labels() {
        let v = EmotionVocab::builtin();
        assert_eq!(v.len(), 32);
        for label in ["Guilty", "Ashamed", "Angry", "Furious", "Hopeful", "Confident", "Proud", "Apprehensive"] {
            assert!(v.index_of(label).is_some(), "{label}");
        }
    }

    #[test]
    fn vocab_line_count_enforced() {
        assert!(EmotionVocab::parse("A\nB\n").is_err());
        let dup = std::iter::repeat_n("Same", 32).collect::<Vec<_>>().join("\n");
        assert!(EmotionVocab::parse(&dup).is_err());
    }

    #[test]
    fn uniform_is_valid() {
        let v = EmotionVocab::builtin();
        let u = EmotionPrediction::uniform(&v);
        u.validate().unwrap();
        assert!(u.entries().iter().all(|(_, p)| (*p - 1.0 / 32.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_mass() {
        let v = EmotionVocab::builtin();
        assert!(EmotionPrediction::new(&v, &[0.5; 32]).is_err());
        let mut probs = vec![0.0; 32];
        probs[0] = 1.5;
        probs[1] = -0.5;
        assert!(EmotionPrediction::new(&v, &probs).is_err());
    }

    #[test]
    fn top_k_orders_by_probability() {
        let v = EmotionVocab::builtin();
        let mut scores = vec![1.0; 32];
        scores[v.index_of("Guilty").unwrap()] = 10.0;
        scores[v.index_of("Ashamed").unwrap()] = 5.0;
        let p = EmotionPrediction::from_scores(&v, &scores).unwrap();
        let top = p.top_k(2);
        assert_eq!(top[0].0, "Guilty");
        assert_eq!(top[1].0, "Ashamed");
    }

    #[test]
    fn serde_round_trip_as_map() {
        let v = EmotionVocab::builtin();
        let u = EmotionPrediction::uniform(&v);
        let json = serde_json::to_string(&u).unwrap();
        assert!(json.starts_with("{\"Afraid\":"));
        let back: EmotionPrediction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, u);
        assert!(serde_json::from_str::<EmotionPrediction>("{\"Sad\":1.0}").is_err());
    }
}
