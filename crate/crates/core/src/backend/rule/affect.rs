//! Keyword emotion lexicon, keyword mechanism labeler, and the template
//! empathetic generator.

use rand::RngCore;

use crate::backend::{
    Backend, BackendError, BackendKind, BackendResult, BackendSpec, CausalLm, DecodeParams, EmotionClassifier,
    MechanismLabeler,
};
use crate::emotion::{EmotionPrediction, EmotionVocab};
use crate::empathy::{BOS, EOS, SEP};
use crate::mechanism::{Mechanism, MechanismSet};
use crate::text::normalized_tokens;

/// (keyword, emotion, weight). Weights are added to that emotion's logit.
const LEXICON: &[(&str, &str, f64)] = &[
    ("sorry", "Guilty", 2.0),
    ("guilty", "Guilty", 3.0),
    ("forgot", "Guilty", 2.0),
    ("ashamed", "Ashamed", 3.0),
    ("embarrassed", "Embarrassed", 3.0),
    ("sick", "Sad", 3.0),
    ("ill", "Sad", 3.0),
    ("flu", "Sad", 3.0),
    ("migraine", "Sad", 3.0),
    ("headache", "Sad", 3.0),
    ("pain", "Sad", 3.0),
    ("hurt", "Sad", 3.0),
    ("injured", "Sad", 3.0),
    ("sad", "Sad", 3.0),
    ("exhausted", "Sad", 2.0),
    ("tired", "Sad", 2.0),
    ("lonely", "Lonely", 3.0),
    ("worried", "Anxious", 3.0),
    ("anxious", "Anxious", 3.0),
    ("stressed", "Anxious", 3.0),
    ("nervous", "Apprehensive", 3.0),
    ("scared", "Afraid", 3.0),
    ("afraid", "Afraid", 3.0),
    ("disappointed", "Disappointed", 3.0),
    ("failed", "Disappointed", 2.0),
    ("angry", "Angry", 3.0),
    ("mad", "Angry", 3.0),
    ("furious", "Furious", 3.0),
    ("annoyed", "Annoyed", 3.0),
    ("frustrated", "Annoyed", 3.0),
    ("happy", "Joyful", 3.0),
    ("glad", "Joyful", 2.0),
    ("excited", "Excited", 3.0),
    ("proud", "Proud", 3.0),
    ("great", "Content", 2.0),
    ("hopeful", "Hopeful", 3.0),
    ("hope", "Hopeful", 2.0),
    ("confident", "Confident", 3.0),
    ("grateful", "Grateful", 3.0),
    ("thanks", "Grateful", 2.0),
    ("surprised", "Surprised", 3.0),
];

/// Softmax over summed keyword weights; no keyword gives the uniform distribution.
pub struct LexiconEmotionClassifier {
    vocab: EmotionVocab,
}

impl LexiconEmotionClassifier {
    pub const IDENTITY: &'static str = "lexicon-emotion";

    pub fn new(vocab: EmotionVocab) -> Self {
        Self { vocab }
    }

    pub fn logits(&self, utterance: &str) -> Vec<f64> {
        let mut logits = vec![0.0; self.vocab.len()];
        for token in normalized_tokens(utterance) {
            for (kw, emotion, w) in LEXICON {
                if token == *kw {
                    if let Some(i) = self.vocab.index_of(emotion) {
                        logits[i] += w;
                    }
                }
            }
        }
        logits
    }
}

impl Backend for LexiconEmotionClassifier {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::EmotionClassifier,
            identity: Self::IDENTITY.into(),
            config: Default::default(),
        }
    }
}

impl EmotionClassifier for LexiconEmotionClassifier {
    fn vocab(&self) -> &EmotionVocab {
        &self.vocab
    }

    fn predict(&self, utterance: &str) -> BackendResult<EmotionPrediction> {
        let logits = self.logits(utterance);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scores: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        EmotionPrediction::from_scores(&self.vocab, &scores).map_err(|e| BackendError::invalid(Self::IDENTITY, e.to_string()))
    }
}

const EMOR_CUES: &[&str] = &[
    "sorry", "oh no", "i hope", "glad", "happy for you", "understandable", "that's great", "wonderful", "awesome",
    "congrat", "yikes", "thanks for sharing", "frustrating", "that's okay", "oh geez", "that sucks", "awful", "terrible", "how sad", "so proud",
];
const INTERP_CUES: &[&str] = &[
    "i know", "i understand", "i've had", "i have had", "that must", "i feel the same", "i've been", "happened to me",
    "i remember", "sometimes it", "i can imagine", "i get it",
];
const EXPLOR_CUES: &[&str] = &["tell me more", "what happened", "how come"];

/// Phrase-cue multi-label tagger; a question mark also signals exploration.
pub struct KeywordMechanismLabeler;

impl KeywordMechanismLabeler {
    pub const IDENTITY: &'static str = "keyword-mechanisms";
}

impl Backend for KeywordMechanismLabeler {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::MechanismLabeler,
            identity: Self::IDENTITY.into(),
            config: Default::default(),
        }
    }
}

impl MechanismLabeler for KeywordMechanismLabeler {
    fn label(&self, response: &str) -> BackendResult<MechanismSet> {
        let text = format!(" {} ", response.to_lowercase().replace('’', "'"));
        let mut set = MechanismSet::new();
        let hit = |cues: &[&str]| cues.iter().any(|c| text.contains(&format!(" {c}")));
        if hit(EMOR_CUES) {
            set.insert(Mechanism::EmotionalReaction);
        }
        if hit(INTERP_CUES) {
            set.insert(Mechanism::Interpretation);
        }
        if text.contains('?') || hit(EXPLOR_CUES) {
            set.insert(Mechanism::Exploration);
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmotionGroup {
    Distress,
    Guilt,
    Anger,
    Positive,
    Neutral,
}

impl EmotionGroup {
    pub fn of(label: &str) -> EmotionGroup {
        match label.to_ascii_lowercase().as_str() {
            "sad" | "afraid" | "anxious" | "apprehensive" | "devastated" | "disappointed" | "lonely" | "terrified"
            | "embarrassed" => EmotionGroup::Distress,
            "guilty" | "ashamed" => EmotionGroup::Guilt,
            "angry" | "furious" | "annoyed" | "disgusted" | "jealous" => EmotionGroup::Anger,
            "joyful" | "proud" | "excited" | "grateful" | "content" | "hopeful" | "confident" | "impressed"
            | "caring" | "faithful" | "trusting" | "prepared" | "anticipating" | "surprised" => EmotionGroup::Positive,
            _ => EmotionGroup::Neutral,
        }
    }

    pub fn template(self, m: Mechanism) -> &'static str {
        use EmotionGroup::*;
        use Mechanism::*;
        match (self, m) {
            (Distress, EmotionalReaction) => "Oh no, I hope you are okay.",
            (Distress, Interpretation) => "I've had this experience before. Sometimes it really hits you.",
            (Distress, Exploration) => "Oh geez, sorry to hear that. Are you feeling better?",
            (Guilt, EmotionalReaction) => "That's okay, it happens to everyone.",
            (Guilt, Interpretation) => "I know how it feels when plans fall through.",
            (Guilt, Exploration) => "Don't be too hard on yourself. What got in the way?",
            (Anger, EmotionalReaction) => "That sounds really frustrating.",
            (Anger, Interpretation) => "I understand, that would bother me too.",
            (Anger, Exploration) => "That sounds frustrating. What happened?",
            (Positive, EmotionalReaction) => "That's wonderful, I'm so glad to hear that!",
            (Positive, Interpretation) => "I know how good that feels.",
            (Positive, Exploration) => "That's great! How did it feel?",
            (Neutral, EmotionalReaction) => "Thanks for sharing that with me.",
            (Neutral, Interpretation) => "I understand how that can feel.",
            (Neutral, Exploration) => "How are you feeling about it?",
        }
    }
}

/// Deterministic generator keyed on the lexicon's top emotion.
pub struct TemplateEmpathyLm {
    emotion: LexiconEmotionClassifier,
}

impl TemplateEmpathyLm {
    pub const IDENTITY: &'static str = "template-empathy";

    pub fn new() -> Self {
        Self {
            emotion: LexiconEmotionClassifier::new(EmotionVocab::builtin()),
        }
    }

    /// Parse `<|bos|> TOKENS utterance <|sep|>` into its parts.
    pub fn parse_prompt(prompt: &str) -> Option<(MechanismSet, String)> {
        let body = prompt.trim().strip_prefix(BOS)?.strip_suffix(SEP)?.trim();
        let mut set = MechanismSet::new();
        let mut rest = body;
        while let Some(m) = Mechanism::ALL.into_iter().find(|m| rest.starts_with(m.token())) {
            set.insert(m);
            rest = rest[m.token().len()..].trim_start();
        }
        Some((set, rest.to_string()))
    }
}

impl Default for TemplateEmpathyLm {
    fn default() -> Self {
        Self::new()
    }
}

impl Backend for TemplateEmpathyLm {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::CausalLm,
            identity: Self::IDENTITY.into(),
            config: Default::default(),
        }
    }
}

impl CausalLm for TemplateEmpathyLm {
    fn complete(&self, prompt: &str, _decode: &DecodeParams, _rng: &mut dyn RngCore) -> BackendResult<String> {
        let (mechanisms, utterance) = Self::parse_prompt(prompt)
            .ok_or_else(|| BackendError::invalid(Self::IDENTITY, "prompt is not `<|bos|> ... <|sep|>`"))?;
        if mechanisms.is_empty() {
            return Err(BackendError::invalid(Self::IDENTITY, "prompt has no mechanism tokens"));
        }
        let prediction = self.emotion.predict(&utterance)?;
        let group = if prediction.entries().iter().all(|(_, p)| (p - 1.0 / 32.0).abs() < 1e-12) {
            EmotionGroup::Neutral
        } else {
            EmotionGroup::of(&prediction.top().0)
        };
        let text: Vec<&str> = mechanisms.iter().map(|m| group.template(m)).collect();
        Ok(format!(" {} {EOS}", text.join(" ")))
    }
}
