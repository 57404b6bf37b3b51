//! Slot-value substitution and paraphrase augmentation for tagger data.
//!
//! Every variant is relabelled and checked: its decoded spans must carry
//! exactly the substituted values, in order, or it is dropped.

use std::collections::BTreeMap;

use goalcoach_core::backend::Paraphraser;
use goalcoach_core::text::{normalize_value, tokenize, Token};
use goalcoach_core::{SlotName, SlotSpan};
use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};
use crate::record::{AnnotatedUtterance, SpanRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationRecipe {
    pub value_alternatives: BTreeMap<SlotName, Vec<String>>,
    pub max_variants: usize,
    /// Run the paraphraser over each substituted utterance.
    pub paraphrase: bool,
}

impl Default for AugmentationRecipe {
    fn default() -> Self {
        Self {
            value_alternatives: BTreeMap::new(),
            max_variants: 2,
            paraphrase: true,
        }
    }
}

impl AugmentationRecipe {
    pub fn with_alternatives(value_alternatives: BTreeMap<SlotName, Vec<String>>) -> Self {
        Self {
            value_alternatives,
            ..Self::default()
        }
    }
}

fn variant_rng(seed: u64, variant: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(variant as u64))
}

fn norm_tokens(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| normalize_value(&t.text)).collect()
}

/// Replace each span's value with a sampled alternative. Returns the new
/// text and the byte range of each inserted value.
fn substitute(
    text: &str,
    tokens: &[Token],
    spans: &[SlotSpan],
    recipe: &AugmentationRecipe,
    rng: &mut ChaCha8Rng,
) -> (String, Vec<(SlotName, String, usize, usize)>) {
    let mut out = String::with_capacity(text.len() + 16);
    let mut placed = Vec::with_capacity(spans.len());
    let mut cursor = 0;
    for s in spans {
        let start = tokens[s.token_start].start;
        let end = tokens[s.token_end - 1].end;
        out.push_str(&text[cursor..start]);
        let current = normalize_value(&s.value);
        let choices: Vec<&String> = recipe
            .value_alternatives
            .get(&s.slot)
            .map(|alts| alts.iter().filter(|a| normalize_value(a) != current).collect())
            .unwrap_or_default();
        let value = choices.choose(rng).map(|v| v.to_string()).unwrap_or_else(|| s.value.clone());
        let at = out.len();
        out.push_str(&value);
        placed.push((s.slot, value, at, out.len()));
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    (out, placed)
}

/// Token spans covering the inserted byte ranges exactly, if they align.
fn spans_from_bytes(tokens: &[Token], placed: &[(SlotName, String, usize, usize)]) -> Option<Vec<SpanRecord>> {
    placed
        .iter()
        .map(|(slot, _, a, b)| {
            let start = tokens.iter().position(|t| t.start == *a)?;
            let end = tokens.iter().position(|t| t.end == *b)? + 1;
            (start < end).then_some(SpanRecord { slot: *slot, start, end })
        })
        .collect()
}

/// Locate each value, in order, as a normalized token subsequence of `text`.
pub fn relocate(text: &str, values: &[(SlotName, String)]) -> Option<Vec<SpanRecord>> {
    let hay = norm_tokens(text);
    let mut from = 0;
    let mut out = Vec::with_capacity(values.len());
    for (slot, value) in values {
        let needle = norm_tokens(value);
        if needle.is_empty() || needle.len() > hay.len() {
            return None;
        }
        let start = (from..=hay.len() - needle.len()).find(|&i| hay[i..i + needle.len()] == needle[..])?;
        out.push(SpanRecord {
            slot: *slot,
            start,
            end: start + needle.len(),
        });
        from = start + needle.len();
    }
    Some(out)
}

fn build(base: &AnnotatedUtterance, text: &str, spans: &[SpanRecord], values: &[(SlotName, String)]) -> Option<AnnotatedUtterance> {
    let mut u = AnnotatedUtterance::from_spans(&base.week_id, base.turn_index, base.speaker, text, base.stage, spans).ok()?;
    u.dataset = base.dataset.clone();
    u.phase = base.phase.clone();
    u.acts = base.acts.clone();
    let decoded: Vec<(SlotName, String)> = u.spans().into_iter().map(|s| (s.slot, normalize_value(&s.value))).collect();
    let expected: Vec<(SlotName, String)> = values.iter().map(|(s, v)| (*s, normalize_value(v))).collect();
    (decoded == expected).then_some(u)
}

/// Up to `recipe.max_variants` distinct variants of `u`, none equal to `u`.
/// Variant `v` draws from its own generator seeded by `(seed, v)`.
pub fn augment(
    u: &AnnotatedUtterance,
    recipe: &AugmentationRecipe,
    paraphraser: &dyn Paraphraser,
    seed: u64,
) -> Result<Vec<AnnotatedUtterance>> {
    let spans = u.spans();
    if spans.is_empty() {
        return Err(CorpusError::Precondition(format!(
            "utterance {}#{} has no slot spans to augment",
            u.week_id, u.turn_index
        )));
    }
    let tokens = tokenize(&u.text);
    let mut out: Vec<AnnotatedUtterance> = Vec::new();
    for v in 0..recipe.max_variants {
        let mut rng = variant_rng(seed, v);
        let (text, placed) = substitute(&u.text, &tokens, &spans, recipe, &mut rng);
        let values: Vec<(SlotName, String)> = placed.iter().map(|(s, v, _, _)| (*s, v.clone())).collect();
        let substituted = spans_from_bytes(&tokenize(&text), &placed).and_then(|sp| build(u, &text, &sp, &values));

        let paraphrased = if recipe.paraphrase {
            match paraphraser.paraphrase(&text, &mut rng) {
                Ok(p) if p != text => relocate(&p, &values).and_then(|sp| build(u, &p, &sp, &values)),
                Ok(_) => None,
                Err(e) => {
                    debug!("paraphrase failed, keeping substitution: {e}");
                    None
                }
            }
        } else {
            None
        };
        let Some(variant) = paraphrased.or(substituted) else {
            debug!("variant {v} of {}#{} failed verification", u.week_id, u.turn_index);
            continue;
        };
        if variant.text != u.text && !out.iter().any(|o| o.text == variant.text) {
            out.push(variant);
        }
    }
    Ok(out)
}

/// Originals followed by their variants. Utterances without spans are kept
/// as-is. Utterance `i` uses seed `seed + i`.
pub fn augment_all(
    utterances: &[AnnotatedUtterance],
    recipe: &AugmentationRecipe,
    paraphraser: &dyn Paraphraser,
    seed: u64,
) -> Result<Vec<AnnotatedUtterance>> {
    let mut out = utterances.to_vec();
    for (i, u) in utterances.iter().enumerate() {
        if u.has_slots() {
            out.extend(augment(u, recipe, paraphraser, seed.wrapping_add(i as u64))?);
        }
    }
    Ok(out)
}
