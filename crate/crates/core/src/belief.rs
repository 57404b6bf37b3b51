//! Belief state: the goal attributes recorded so far in a week.
//!
//! Textual form: `slot=v1|v2; slot=v3`, slots in canonical order, the empty
//! state renders as the empty string. Values never contain `;` or `|`
//! (they are replaced by `,` on insertion) and are whitespace-collapsed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::slot::{score_in_range, SlotName};
use crate::text::{collapse_whitespace, normalize_value};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefState {
    #[serde(default)]
    pub turn_index: u32,
    #[serde(default)]
    slots: BTreeMap<SlotName, Vec<String>>,
}

/// Canonical surface form for a value. Returns `None` for values that are
/// empty after cleaning.
pub fn clean_value(raw: &str) -> Option<String> {
    let replaced: String = raw
        .chars()
        .map(|c| if c == ';' || c == '|' { ',' } else { c })
        .collect();
    let cleaned = collapse_whitespace(&replaced);
    if cleaned.is_empty() {
        None
    } else {
        Some(cleaned)
    }
}

impl BeliefState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_turn(turn_index: u32) -> Self {
        Self {
            turn_index,
            slots: BTreeMap::new(),
        }
    }

    /// Builder used heavily in tests: `BeliefState::from_pairs([(Activity, &["walk"])])`.
    pub fn from_pairs<'a, I, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SlotName, V)>,
        V: IntoIterator<Item = &'a str>,
    {
        let mut state = Self::new();
        for (slot, values) in pairs {
            state.set(slot, values.into_iter().map(str::to_string))?;
        }
        Ok(state)
    }

    pub fn get(&self, slot: SlotName) -> &[String] {
        self.slots.get(&slot).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_filled(&self, slot: SlotName) -> bool {
        !self.get(slot).is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn filled_slots(&self) -> impl Iterator<Item = SlotName> + '_ {
        self.slots.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SlotName, &[String])> {
        self.slots.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Whether `value` is already recorded for `slot` (normalized comparison).
    pub fn contains_value(&self, slot: SlotName, value: &str) -> bool {
        let key = normalize_value(value);
        self.get(slot).iter().any(|v| normalize_value(v) == key)
    }

    /// Normalized value set of a slot.
    pub fn normalized(&self, slot: SlotName) -> std::collections::BTreeSet<String> {
        self.get(slot).iter().map(|v| normalize_value(v)).collect()
    }

    /// Replace a slot's values. Duplicates (after normalization) and empty
    /// values are dropped; an empty result clears the slot.
    pub fn set<I>(&mut self, slot: SlotName, values: I) -> Result<()>
    where
        I: IntoIterator<Item = String>,
    {
        let mut cleaned: Vec<String> = Vec::new();
        for raw in values {
            let Some(value) = clean_value(&raw) else {
                continue;
            };
            if slot == SlotName::Score && !score_in_range(&value) {
                return Err(CoreError::InvalidBelief(format!(
                    "score value `{value}` outside [1,10]"
                )));
            }
            let key = normalize_value(&value);
            if !cleaned.iter().any(|v| normalize_value(v) == key) {
                cleaned.push(value);
            }
        }
        if cleaned.is_empty() {
            self.slots.remove(&slot);
        } else {
            self.slots.insert(slot, cleaned);
        }
        Ok(())
    }

    /// Append a value unless it is already present.
    pub fn push(&mut self, slot: SlotName, value: &str) -> Result<()> {
        let mut values = self.get(slot).to_vec();
        values.push(value.to_string());
        self.set(slot, values)
    }

    pub fn clear(&mut self, slot: SlotName) {
        self.slots.remove(&slot);
    }

    /// Same slots and normalized values, ignoring surface form and turn index.
    pub fn same_goal(&self, other: &BeliefState) -> bool {
        SlotName::ALL
            .iter()
            .all(|&s| self.normalized(s) == other.normalized(s))
    }

    /// Slot content equality, ignoring the turn index.
    pub fn same_slots(&self, other: &BeliefState) -> bool {
        self.slots == other.slots
    }

    /// Re-check invariants (after deserialization from untrusted input).
    pub fn validate(&self) -> Result<()> {
        for (slot, values) in &self.slots {
            if values.is_empty() {
                return Err(CoreError::InvalidBelief(format!("slot {slot} has no values")));
            }
            let mut seen = std::collections::BTreeSet::new();
            for v in values {
                if clean_value(v).as_deref() != Some(v.as_str()) {
                    return Err(CoreError::InvalidBelief(format!(
                        "value `{v}` of {slot} is not in canonical form"
                    )));
                }
                if !seen.insert(normalize_value(v)) {
                    return Err(CoreError::InvalidBelief(format!(
                        "duplicate value `{v}` in {slot}"
                    )));
                }
                if *slot == SlotName::Score && !score_in_range(v) {
                    return Err(CoreError::InvalidBelief(format!(
                        "score value `{v}` outside [1,10]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical textual rendering.
    pub fn serialize(&self) -> String {
        serialize_belief(self)
    }
}

pub fn serialize_belief(b: &BeliefState) -> String {
    b.slots
        .iter()
        .map(|(slot, values)| format!("{}={}", slot, values.join("|")))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Inverse of [`serialize_belief`]. The turn index is not part of the
/// textual form and comes back as 0.
pub fn parse_belief(s: &str) -> Result<BeliefState> {
    let mut state = BeliefState::new();
    if s.trim().is_empty() {
        return Ok(state);
    }
    let mut offset = 0usize;
    for entry in s.split(';') {
        let entry_offset = offset;
        offset += entry.len() + 1;
        let trimmed = entry.trim();
        let lead = entry.len() - entry.trim_start().len();
        let Some((name, values)) = trimmed.split_once('=') else {
            return Err(CoreError::MalformedBelief {
                offset: entry_offset + lead,
                reason: format!("expected `slot=value`, found `{trimmed}`"),
            });
        };
        let slot: SlotName = name.trim().parse().map_err(|_| CoreError::MalformedBelief {
            offset: entry_offset + lead,
            reason: format!("unknown slot `{}`", name.trim()),
        })?;
        if state.is_filled(slot) {
            return Err(CoreError::MalformedBelief {
                offset: entry_offset + lead,
                reason: format!("slot `{slot}` appears twice"),
            });
        }
        let parts: Vec<String> = values.split('|').map(|v| v.trim().to_string()).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CoreError::MalformedBelief {
                offset: entry_offset + lead + name.len() + 1,
                reason: format!("empty value for `{slot}`"),
            });
        }
        state.set(slot, parts).map_err(|e| CoreError::MalformedBelief {
            offset: entry_offset + lead,
            reason: e.to_string(),
        })?;
    }
    Ok(state)
}
