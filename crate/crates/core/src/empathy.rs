//! Emotion-cue gating and mechanism-conditioned empathetic generation,
//! including the training-sequence codec.

use log::warn;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::backend::{CausalLm, DecodeParams, EmotionClassifier, MechanismLabeler};
use crate::emotion::EmotionPrediction;
use crate::error::{CoreError, Result};
use crate::mechanism::{Mechanism, MechanismSet};
use crate::text::collapse_whitespace;

pub const BOS: &str = "<|bos|>";
pub const SEP: &str = "<|sep|>";
pub const EOS: &str = "<|eos|>";
pub const EMPATHY_FALLBACK: &str = "I'm sorry to hear that.";

/// Float slack for the strict gate comparison, so that a top-n mass that
/// is 0.7 up to rounding (e.g. 0.4 + 0.3) does not fire at tau = 0.7.
const GATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub tau: f64,
    pub top_n: usize,
    /// Optional emotion allow-list; `None` gates on confidence alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_emotions: Option<Vec<String>>,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            tau: 0.7,
            top_n: 2,
            allowed_emotions: None,
        }
    }
}

impl GateConfig {
    pub fn new(tau: f64, top_n: usize) -> Result<Self> {
        let g = Self {
            tau,
            top_n,
            allowed_emotions: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(CoreError::InvalidGate(format!("tau {} not in (0,1)", self.tau)));
        }
        if self.top_n == 0 {
            return Err(CoreError::InvalidGate("top_n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Probability mass of the `top_n` most likely emotions.
pub fn top_mass(e: &EmotionPrediction, top_n: usize) -> f64 {
    e.top_k(top_n).iter().map(|(_, p)| p).sum()
}

/// True iff the top-n mass strictly exceeds tau (and, when an allow-list is
/// configured, the top emotion is on it).
pub fn should_empathize(e: &EmotionPrediction, g: &GateConfig) -> bool {
    if top_mass(e, g.top_n) - g.tau <= GATE_EPS {
        return false;
    }
    match &g.allowed_emotions {
        None => true,
        Some(allowed) => {
            let (top, _) = e.top();
            allowed.iter().any(|a| a.eq_ignore_ascii_case(&top))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpathySample {
    pub user_utterance: String,
    pub response: String,
    pub mechanisms: MechanismSet,
}

impl EmpathySample {
    pub fn new(user_utterance: impl Into<String>, response: impl Into<String>, mechanisms: MechanismSet) -> Result<Self> {
        let s = Self {
            user_utterance: user_utterance.into(),
            response: response.into(),
            mechanisms,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty() {
            return Err(CoreError::Validation("sample has no mechanisms".into()));
        }
        check_payload(&self.user_utterance, true)?;
        check_payload(&self.response, false)?;
        Ok(())
    }
}

fn check_payload(text: &str, is_utterance: bool) -> Result<()> {
    let what = if is_utterance { "utterance" } else { "response" };
    if text.trim().is_empty() {
        return Err(CoreError::Codec {
            offset: 0,
            reason: format!("{what} is empty"),
        });
    }
    for delim in [BOS, SEP, EOS, "\n", "\r"] {
        if let Some(offset) = text.find(delim) {
            return Err(CoreError::Codec {
                offset,
                reason: format!("{what} contains {delim:?}"),
            });
        }
    }
    if is_utterance && Mechanism::ALL.iter().any(|m| text.starts_with(m.token())) {
        return Err(CoreError::Codec {
            offset: 0,
            reason: "utterance starts with a mechanism token".into(),
        });
    }
    Ok(())
}

/// `<|bos|> TOKENS utterance <|sep|> response <|eos|>`
pub fn encode_training_sequence(s: &EmpathySample) -> Result<String> {
    s.validate()?;
    Ok(format!(
        "{BOS} {} {} {SEP} {} {EOS}",
        s.mechanisms.render_tokens(),
        s.user_utterance,
        s.response
    ))
}

/// Generation prompt: the training layout cut after the separator.
pub fn encode_prompt(utterance: &str, mechanisms: &MechanismSet) -> Result<String> {
    if mechanisms.is_empty() {
        return Err(CoreError::Validation("mechanism set is empty".into()));
    }
    check_payload(utterance, true)?;
    Ok(format!("{BOS} {} {utterance} {SEP}", mechanisms.render_tokens()))
}

/// Inverse of [`encode_training_sequence`].
pub fn decode_training_sequence(line: &str) -> Result<EmpathySample> {
    let err = |offset: usize, reason: &str| CoreError::Codec {
        offset,
        reason: reason.to_string(),
    };
    let head = format!("{BOS} ");
    if !line.starts_with(&head) {
        return Err(err(0, "expected `<|bos|> `"));
    }
    let mut pos = head.len();
    let mut mechanisms = MechanismSet::new();
    let mut last: Option<Mechanism> = None;
    loop {
        let rest = &line[pos..];
        let Some(m) = Mechanism::ALL
            .into_iter()
            .find(|m| rest.starts_with(m.token()) && rest[m.token().len()..].starts_with(' '))
        else {
            break;
        };
        if last.is_some_and(|l| l >= m) {
            return Err(err(pos, "mechanism tokens out of canonical order"));
        }
        mechanisms.insert(m);
        last = Some(m);
        pos += m.token().len() + 1;
    }
    if mechanisms.is_empty() {
        return Err(err(pos, "expected at least one mechanism token"));
    }
    let body = &line[pos..];
    let sep = format!(" {SEP} ");
    let Some(s) = body.find(&sep) else {
        return Err(err(pos, "missing ` <|sep|> `"));
    };
    let utterance = &body[..s];
    let after = pos + s + sep.len();
    let tail = format!(" {EOS}");
    let Some(response) = line[after..].strip_suffix(&tail) else {
        return Err(err(line.len(), "expected trailing ` <|eos|>`"));
    };
    let sample = EmpathySample {
        user_utterance: utterance.to_string(),
        response: response.to_string(),
        mechanisms,
    };
    sample.validate().map_err(|e| match e {
        CoreError::Codec { offset, reason } => {
            let base = if reason.starts_with("utterance") { pos } else { after };
            CoreError::Codec {
                offset: base + offset,
                reason,
            }
        }
        other => other,
    })?;
    Ok(sample)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionOutcome {
    pub prediction: EmotionPrediction,
    pub fallback: Option<String>,
}

/// Full emotion distribution for `utterance`; failures degrade to uniform.
pub fn detect_emotion(utterance: &str, backend: &dyn EmotionClassifier) -> Result<EmotionOutcome> {
    if utterance.trim().is_empty() {
        return Err(CoreError::Validation("utterance is empty".into()));
    }
    let outcome = backend
        .predict(utterance)
        .map_err(CoreError::from)
        .and_then(|p| p.validate().map(|_| p));
    Ok(match outcome {
        Ok(prediction) => EmotionOutcome {
            prediction,
            fallback: None,
        },
        Err(e) => {
            warn!("emotion detection failed, using uniform: {e}");
            EmotionOutcome {
                prediction: EmotionPrediction::uniform(backend.vocab()),
                fallback: Some(format!("emotion backend failed: {e}")),
            }
        }
    })
}

/// Strip every special token and control token from generated text.
pub fn strip_special_tokens(text: &str) -> String {
    let mut out = text.to_string();
    for tok in [BOS, SEP, EOS] {
        out = out.replace(tok, " ");
    }
    for m in Mechanism::ALL {
        out = out.replace(m.token(), " ");
    }
    collapse_whitespace(&out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub text: String,
    pub fallback: Option<String>,
}

/// Continuation of `<|bos|> TOKENS u <|sep|>`, cut at `<|eos|>` and capped
/// at `decode.max_tokens` whitespace tokens.
pub fn generate_empathetic(
    u: &str,
    m: &MechanismSet,
    backend: &dyn CausalLm,
    decode: &DecodeParams,
    rng: &mut dyn RngCore,
) -> Result<GenerationOutcome> {
    let prompt = encode_prompt(&collapse_whitespace(u), m)?;
    let fallback = |why: String| {
        warn!("empathetic generation fell back: {why}");
        GenerationOutcome {
            text: EMPATHY_FALLBACK.to_string(),
            fallback: Some(why),
        }
    };
    Ok(match backend.complete(&prompt, decode, rng) {
        Ok(raw) => {
            let cut = raw.split(EOS).next().unwrap_or("");
            let stripped = strip_special_tokens(cut);
            let words: Vec<&str> = stripped
                .split(' ')
                .filter(|w| !w.is_empty())
                .take(decode.max_tokens)
                .collect();
            if words.is_empty() {
                fallback("empty generation".into())
            } else {
                GenerationOutcome {
                    text: words.join(" "),
                    fallback: None,
                }
            }
        }
        Err(e) => fallback(format!("generator failed: {e}")),
    })
}

/// Silver mechanism labels for a response; may be empty.
pub fn label_mechanisms(response: &str, backend: &dyn MechanismLabeler) -> Result<MechanismSet> {
    if response.trim().is_empty() {
        return Err(CoreError::Validation("response is empty".into()));
    }
    Ok(backend.label(response)?)
}
