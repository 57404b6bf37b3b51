//! BIO label sequences and slot spans.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::slot::SlotName;
use crate::text::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BioLabel {
    O,
    B(SlotName),
    I(SlotName),
}

impl BioLabel {
    /// All 21 labels: `O`, then `B-x`/`I-x` per slot in canonical order.
    pub fn all() -> Vec<BioLabel> {
        let mut labels = vec![BioLabel::O];
        for slot in SlotName::ALL {
            labels.push(BioLabel::B(slot));
            labels.push(BioLabel::I(slot));
        }
        labels
    }

    pub fn index(self) -> usize {
        match self {
            BioLabel::O => 0,
            BioLabel::B(s) => 1 + 2 * s.index(),
            BioLabel::I(s) => 2 + 2 * s.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<BioLabel> {
        Self::all().get(i).copied()
    }

    pub fn slot(self) -> Option<SlotName> {
        match self {
            BioLabel::O => None,
            BioLabel::B(s) | BioLabel::I(s) => Some(s),
        }
    }

    /// Whether `next` may follow `self` in a well-formed sequence.
    pub fn allows_next(self, next: BioLabel) -> bool {
        match next {
            BioLabel::I(x) => matches!(self, BioLabel::B(y) | BioLabel::I(y) if y == x),
            _ => true,
        }
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::O => f.write_str("O"),
            BioLabel::B(s) => write!(f, "B-{s}"),
            BioLabel::I(s) => write!(f, "I-{s}"),
        }
    }
}

impl FromStr for BioLabel {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(BioLabel::O);
        }
        let (prefix, slot) = s
            .split_once('-')
            .ok_or_else(|| CoreError::InvalidBio(format!("bad label `{s}`")))?;
        let slot: SlotName = slot.parse()?;
        match prefix {
            "B" => Ok(BioLabel::B(slot)),
            "I" => Ok(BioLabel::I(slot)),
            _ => Err(CoreError::InvalidBio(format!("bad label `{s}`"))),
        }
    }
}

impl Serialize for BioLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A slot filler found in an utterance. Token range is half-open.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotSpan {
    pub slot: SlotName,
    pub value: String,
    pub token_start: usize,
    pub token_end: usize,
}

impl SlotSpan {
    pub fn overlaps(&self, other: &SlotSpan) -> bool {
        self.token_start < other.token_end && other.token_start < self.token_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BioSequence {
    pub tokens: Vec<String>,
    pub labels: Vec<BioLabel>,
}

impl BioSequence {
    pub fn new(tokens: Vec<String>, labels: Vec<BioLabel>) -> Result<Self> {
        let seq = Self { tokens, labels };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.len() != self.labels.len() {
            return Err(CoreError::InvalidBio(format!(
                "{} tokens but {} labels",
                self.tokens.len(),
                self.labels.len()
            )));
        }
        validate_labels(&self.labels)
    }
}

pub fn validate_labels(labels: &[BioLabel]) -> Result<()> {
    let mut prev = BioLabel::O;
    for (i, &label) in labels.iter().enumerate() {
        if !prev.allows_next(label) {
            return Err(CoreError::InvalidBio(format!("{label} at {i} follows {prev}")));
        }
        prev = label;
    }
    Ok(())
}

/// Promote orphan `I-x` labels (after `O` or another slot) to `B-x`.
pub fn repair_labels(labels: &[BioLabel]) -> (Vec<BioLabel>, usize) {
    let mut repaired = Vec::with_capacity(labels.len());
    let mut fixes = 0;
    let mut prev = BioLabel::O;
    for &label in labels {
        let fixed = match label {
            BioLabel::I(x) if !prev.allows_next(label) => {
                fixes += 1;
                BioLabel::B(x)
            }
            other => other,
        };
        repaired.push(fixed);
        prev = fixed;
    }
    (repaired, fixes)
}

/// Decode spans from (possibly malformed) labels. Values are sliced from
/// `text` through the token offsets, so internal spacing is preserved.
pub fn decode_spans(text: &str, tokens: &[Token], labels: &[BioLabel]) -> Result<Vec<SlotSpan>> {
    if tokens.len() != labels.len() {
        return Err(CoreError::InvalidBio(format!(
            "{} tokens but {} labels",
            tokens.len(),
            labels.len()
        )));
    }
    let (labels, _) = repair_labels(labels);
    let mut spans = Vec::new();
    let mut open: Option<(SlotName, usize)> = None;
    let close = |spans: &mut Vec<SlotSpan>, slot: SlotName, start: usize, end: usize| {
        spans.push(SlotSpan {
            slot,
            value: text[tokens[start].start..tokens[end - 1].end].to_string(),
            token_start: start,
            token_end: end,
        });
    };
    for (i, label) in labels.iter().enumerate() {
        match *label {
            BioLabel::O => {
                if let Some((slot, start)) = open.take() {
                    close(&mut spans, slot, start, i);
                }
            }
            BioLabel::B(slot) => {
                if let Some((s, start)) = open.take() {
                    close(&mut spans, s, start, i);
                }
                open = Some((slot, i));
            }
            BioLabel::I(_) => {}
        }
    }
    if let Some((slot, start)) = open {
        close(&mut spans, slot, start, labels.len());
    }
    Ok(spans)
}

/// Decode spans from bare token strings (values joined with single spaces).
pub fn decode_word_spans(words: &[String], labels: &[BioLabel]) -> Result<Vec<SlotSpan>> {
    let mut text = String::new();
    let mut tokens = Vec::with_capacity(words.len());
    for w in words {
        if !text.is_empty() {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(w);
        tokens.push(Token {
            text: w.clone(),
            start,
            end: text.len(),
        });
    }
    decode_spans(&text, &tokens, labels)
}

/// Render spans back into BIO labels over `len` tokens.
pub fn encode_spans(len: usize, spans: &[SlotSpan]) -> Result<Vec<BioLabel>> {
    let mut labels = vec![BioLabel::O; len];
    let mut sorted: Vec<&SlotSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| s.token_start);
    for pair in sorted.windows(2) {
        if pair[0].overlaps(pair[1]) {
            return Err(CoreError::InvalidBio(format!(
                "spans {}..{} and {}..{} overlap",
                pair[0].token_start, pair[0].token_end, pair[1].token_start, pair[1].token_end
            )));
        }
    }
    for span in sorted {
        if span.token_start >= span.token_end || span.token_end > len {
            return Err(CoreError::InvalidBio(format!(
                "span {}..{} out of range for {len} tokens",
                span.token_start, span.token_end
            )));
        }
        labels[span.token_start] = BioLabel::B(span.slot);
        for label in &mut labels[span.token_start + 1..span.token_end] {
            *label = BioLabel::I(span.slot);
        }
    }
    Ok(labels)
}
