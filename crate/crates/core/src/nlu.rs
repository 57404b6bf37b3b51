//! Per-turn belief update: slot extraction, collision detection, and the
//! carryover decision, plus the last-mention-wins baseline.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::backend::{CarryoverClassifier, SlotTagger};
use crate::belief::{clean_value, BeliefState};
use crate::bio::{decode_spans, repair_labels, SlotSpan};
use crate::dialogue::{DialogueTurn, SessionContext, Speaker, Stage};
use crate::error::{CoreError, Result};
use crate::slot::{score_in_range, SlotName};
use crate::text::{normalize_value, tokenize};

/// Input to the carryover classifier: the local context window plus the
/// colliding values. No phase or act labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarryoverQuery {
    pub slot: SlotName,
    pub previous: Vec<String>,
    pub proposed: String,
    pub window: Vec<DialogueTurn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarryoverDecision {
    pub slot: SlotName,
    pub keep_previous: bool,
    pub confidence: f64,
}

impl CarryoverDecision {
    pub fn new(slot: SlotName, keep_previous: bool, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) || confidence.is_nan() {
            return Err(CoreError::Validation(format!(
                "carryover confidence {confidence} outside [0,1]"
            )));
        }
        Ok(Self {
            slot,
            keep_previous,
            confidence,
        })
    }
}

/// Result of one belief update with its audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefUpdate {
    pub belief: BeliefState,
    pub collisions: Vec<SlotName>,
    pub decisions: Vec<CarryoverDecision>,
    pub fallbacks: Vec<String>,
    pub dropped: Vec<SlotSpan>,
}

/// Tag `utterance` and decode its slot spans. Orphan `I-` labels are
/// promoted to `B-`.
pub fn extract_slots(utterance: &str, tagger: &dyn SlotTagger) -> Result<Vec<SlotSpan>> {
    if utterance.trim().is_empty() {
        return Err(CoreError::Validation("utterance is empty".into()));
    }
    let tokens = tokenize(utterance);
    let words: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
    let labels = tagger
        .tag(&words)
        .map_err(|e| CoreError::Backend(e.context(format!("utterance {utterance:?}"))))?;
    if labels.len() != words.len() {
        return Err(CoreError::Backend(crate::backend::BackendError::invalid(
            tagger.identity(),
            format!(
                "{} labels for {} tokens in {utterance:?}",
                labels.len(),
                words.len()
            ),
        )));
    }
    let (_, repairs) = repair_labels(&labels);
    if repairs > 0 {
        log::debug!("repaired {repairs} orphan I- labels in {utterance:?}");
    }
    decode_spans(utterance, &tokens, &labels)
}

/// Slots whose recorded values would be challenged by `new_spans`.
pub fn detect_collisions(prev: &BeliefState, new_spans: &[SlotSpan]) -> Vec<SlotName> {
    let mut slots: Vec<SlotName> = new_spans
        .iter()
        .filter(|s| prev.is_filled(s.slot) && !prev.contains_value(s.slot, &s.value))
        .map(|s| s.slot)
        .collect();
    slots.sort();
    slots.dedup();
    slots
}

/// Values mentioned per slot in order of last mention, canonical slot order,
/// deduplicated, invalid score values removed.
fn mentioned_values(spans: &[SlotSpan]) -> (Vec<(SlotName, Vec<String>)>, Vec<SlotSpan>) {
    let mut grouped: Vec<(SlotName, Vec<String>)> = Vec::new();
    let mut dropped = Vec::new();
    for span in spans {
        let Some(value) = clean_value(&span.value) else {
            dropped.push(span.clone());
            continue;
        };
        if span.slot == SlotName::Score && !score_in_range(&value) {
            dropped.push(span.clone());
            continue;
        }
        match grouped.iter_mut().find(|(s, _)| *s == span.slot) {
            Some((_, values)) => {
                // a repeated value moves to its latest mention
                let key = normalize_value(&value);
                values.retain(|v| normalize_value(v) != key);
                values.push(value);
            }
            None => grouped.push((span.slot, vec![value])),
        }
    }
    grouped.sort_by_key(|(s, _)| *s);
    (grouped, dropped)
}

/// Belief update for one turn.
///
/// Non-colliding values are added. Each collision is put to the carryover
/// classifier once: `keep_previous` leaves the recorded value(s) (for
/// multi-valued slots the new values are accumulated alongside them),
/// otherwise the new value replaces them. Classifier failures fall back to
/// replacement. When one utterance names several values for a single-valued
/// slot they are applied in order.
pub fn update_belief(
    prev: &BeliefState,
    spans: &[SlotSpan],
    carry: &dyn CarryoverClassifier,
    ctx: &SessionContext,
) -> BeliefUpdate {
    let mut next = prev.clone();
    next.turn_index = prev.turn_index + 1;
    let mut collisions = Vec::new();
    let mut decisions = Vec::new();
    let mut fallbacks = Vec::new();
    let (grouped, dropped) = mentioned_values(spans);

    let mut consult = |slot: SlotName, previous: &[String], proposed: String| -> bool {
        if !collisions.contains(&slot) {
            collisions.push(slot);
        }
        let query = CarryoverQuery {
            slot,
            previous: previous.to_vec(),
            proposed,
            window: ctx.window().to_vec(),
        };
        let outcome = carry
            .decide(&query)
            .map_err(CoreError::from)
            .and_then(|d| {
                if d.slot != slot {
                    return Err(CoreError::Validation(format!(
                        "decision for {} returned for {slot}",
                        d.slot
                    )));
                }
                CarryoverDecision::new(d.slot, d.keep_previous, d.confidence)
            });
        match outcome {
            Ok(decision) => {
                let keep = decision.keep_previous;
                decisions.push(decision);
                keep
            }
            Err(e) => {
                warn!("carryover failed for {slot}, replacing: {e}");
                fallbacks.push(format!("carryover:{slot}: {e}"));
                false
            }
        }
    };

    for (slot, values) in grouped {
        let current = prev.get(slot).to_vec();
        let updated = if slot.is_multi_valued() {
            let absent: Vec<String> = values
                .iter()
                .filter(|v| !prev.contains_value(slot, v))
                .cloned()
                .collect();
            if current.is_empty() {
                values
            } else if absent.is_empty() {
                current
            } else if consult(slot, &current, absent.join(", ")) {
                current.into_iter().chain(absent).collect()
            } else {
                values
            }
        } else {
            let mut current = current;
            for value in values {
                let key = normalize_value(&value);
                if current.is_empty() {
                    current = vec![value];
                } else if current.iter().any(|v| normalize_value(v) == key) {
                    continue;
                } else if !consult(slot, &current, value.clone()) {
                    current = vec![value];
                }
            }
            current
        };
        // values were cleaned and range-checked above
        next.set(slot, updated).expect("cleaned values are valid");
    }

    BeliefUpdate {
        belief: next,
        collisions,
        decisions,
        fallbacks,
        dropped,
    }
}

/// Last-mention-wins baseline: every mentioned slot takes the values of its
/// latest mention; no backend calls.
pub fn rule_update(prev: &BeliefState, spans: &[SlotSpan]) -> BeliefState {
    let mut next = prev.clone();
    next.turn_index = prev.turn_index + 1;
    let (grouped, _) = mentioned_values(spans);
    for (slot, values) in grouped {
        let values = if slot.is_multi_valued() {
            values
        } else {
            values.into_iter().last().into_iter().collect()
        };
        next.set(slot, values).expect("cleaned values are valid");
    }
    next
}

/// Which speakers' utterances feed the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TrackingScope {
    /// Only patient turns (the online pipeline).
    #[default]
    PatientOnly,
    /// Both speakers (offline tracking over gold transcripts).
    AllTurns,
}

impl TrackingScope {
    pub fn includes(self, speaker: Speaker) -> bool {
        match self {
            TrackingScope::PatientOnly => speaker == Speaker::Patient,
            TrackingScope::AllTurns => true,
        }
    }
}

/// Context window for `turn` given the log preceding it: the latest turn by
/// the other speaker, then `turn`.
pub fn window_for(log: &[DialogueTurn], turn: &DialogueTurn) -> Vec<DialogueTurn> {
    let mut window = Vec::with_capacity(2);
    if let Some(other) = log.iter().rev().find(|t| t.speaker != turn.speaker) {
        window.push(other.clone());
    }
    window.push(turn.clone());
    window
}

/// Fold [`update_belief`] over a whole transcript. A tagger failure skips
/// that turn's extraction (the belief only advances its turn index).
pub fn track_transcript(
    turns: &[DialogueTurn],
    tagger: &dyn SlotTagger,
    carry: &dyn CarryoverClassifier,
    scope: TrackingScope,
) -> BeliefState {
    let mut belief = BeliefState::new();
    for (i, turn) in turns.iter().enumerate() {
        if !scope.includes(turn.speaker) {
            continue;
        }
        let spans = extract_slots(&turn.text, tagger).unwrap_or_default();
        let window = window_for(&turns[..i], turn);
        let ctx = SessionContext::new(window, turn.stage.unwrap_or(Stage::GoalSetting), belief.clone())
            .expect("window_for yields at most two alternating turns");
        belief = update_belief(&belief, &spans, carry, &ctx).belief;
    }
    belief
}

/// Same fold with the last-mention baseline.
pub fn track_transcript_rule(
    turns: &[DialogueTurn],
    tagger: &dyn SlotTagger,
    scope: TrackingScope,
) -> BeliefState {
    let mut belief = BeliefState::new();
    for turn in turns.iter().filter(|t| scope.includes(t.speaker)) {
        let spans = extract_slots(&turn.text, tagger).unwrap_or_default();
        belief = rule_update(&belief, &spans);
    }
    belief
}
