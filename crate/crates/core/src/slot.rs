//! The ten goal attributes tracked for a weekly S.M.A.R.T. goal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Goal attribute identifiers.
///
/// Declaration order is the canonical enumeration order used everywhere a
/// belief state is rendered. `Repeatation` keeps the schema's spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotName {
    Activity,
    Amount,
    Duration,
    Distance,
    Time,
    Location,
    Dayname,
    Daynumber,
    Repeatation,
    Score,
}

impl SlotName {
    pub const ALL: [SlotName; 10] = [
        SlotName::Activity,
        SlotName::Amount,
        SlotName::Duration,
        SlotName::Distance,
        SlotName::Time,
        SlotName::Location,
        SlotName::Dayname,
        SlotName::Daynumber,
        SlotName::Repeatation,
        SlotName::Score,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotName::Activity => "activity",
            SlotName::Amount => "amount",
            SlotName::Duration => "duration",
            SlotName::Distance => "distance",
            SlotName::Time => "time",
            SlotName::Location => "location",
            SlotName::Dayname => "dayname",
            SlotName::Daynumber => "daynumber",
            SlotName::Repeatation => "repeatation",
            SlotName::Score => "score",
        }
    }

    /// Position in the canonical enumeration.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Slots that legitimately accumulate several values (e.g. "Monday and Tuesday").
    pub fn is_multi_valued(self) -> bool {
        matches!(self, SlotName::Dayname)
    }

    /// The `[slot]` placeholder used in delexicalized text.
    pub fn placeholder(self) -> String {
        format!("[{}]", self.as_str())
    }
}

impl fmt::Display for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlotName {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SlotName::ALL
            .into_iter()
            .find(|slot| slot.as_str() == s)
            .ok_or_else(|| CoreError::UnknownSlot(s.to_string()))
    }
}

/// Checks the `score` range constraint. Non-numeric values are accepted.
pub fn score_in_range(value: &str) -> bool {
    let trimmed = value.trim();
    let numeric = trimmed
        .strip_suffix("/10")
        .or_else(|| trimmed.strip_suffix("out of 10").map(str::trim))
        .unwrap_or(trimmed);
    match numeric.parse::<f64>() {
        Ok(n) => (1.0..=10.0).contains(&n),
        Err(_) => true,
    }
}
