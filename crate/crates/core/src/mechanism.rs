//! Empathy communication mechanisms and their control tokens.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Declaration order is the canonical token order: EMOR, INTERP, EXPLOR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    EmotionalReaction,
    Interpretation,
    Exploration,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::EmotionalReaction,
        Mechanism::Interpretation,
        Mechanism::Exploration,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Mechanism::EmotionalReaction => "[EMOR]",
            Mechanism::Interpretation => "[INTERP]",
            Mechanism::Exploration => "[EXPLOR]",
        }
    }

    pub fn from_token(token: &str) -> Option<Mechanism> {
        Mechanism::ALL.into_iter().find(|m| m.token() == token)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::EmotionalReaction => "emotional_reaction",
            Mechanism::Interpretation => "interpretation",
            Mechanism::Exploration => "exploration",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Mechanism {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, CoreError> {
        let s = s.trim();
        Mechanism::from_token(s)
            .or_else(|| Mechanism::ALL.into_iter().find(|m| m.name() == s))
            .or_else(|| match s.to_ascii_lowercase().as_str() {
                "emor" | "emotional_reactions" | "emotional-reactions" => {
                    Some(Mechanism::EmotionalReaction)
                }
                "interp" | "interpretations" => Some(Mechanism::Interpretation),
                "explor" | "explorations" => Some(Mechanism::Exploration),
                _ => None,
            })
            .ok_or_else(|| CoreError::Validation(format!("unknown mechanism `{s}`")))
    }
}

/// A set of mechanisms, always iterated in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MechanismSet(BTreeSet<Mechanism>);

impl MechanismSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(m: Mechanism) -> Self {
        Self(BTreeSet::from([m]))
    }

    pub fn all() -> Self {
        Self(Mechanism::ALL.into_iter().collect())
    }

    pub fn insert(&mut self, m: Mechanism) -> bool {
        self.0.insert(m)
    }

    pub fn contains(&self, m: Mechanism) -> bool {
        self.0.contains(&m)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Mechanism> + '_ {
        self.0.iter().copied()
    }

    /// Space-separated control tokens, e.g. `[INTERP] [EXPLOR]`.
    pub fn render_tokens(&self) -> String {
        self.iter().map(Mechanism::token).collect::<Vec<_>>().join(" ")
    }

    /// Bit mask (EMOR=1, INTERP=2, EXPLOR=4); handy as a conditioning key.
    pub fn mask(&self) -> u8 {
        self.iter().fold(0, |acc, m| acc | (1 << (m as u8)))
    }
}

impl FromIterator<Mechanism> for MechanismSet {
    fn from_iter<T: IntoIterator<Item = Mechanism>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_are_bit_exact() {
        assert_eq!(Mechanism::EmotionalReaction.token(), "[EMOR]");
        assert_eq!(Mechanism::Interpretation.token(), "[INTERP]");
        assert_eq!(Mechanism::Exploration.token(), "[EXPLOR]");
    }

    #[test]
    fn render_in_canonical_order() {
        let set: MechanismSet = [Mechanism::Exploration, Mechanism::Interpretation]
            .into_iter()
            .collect();
        assert_eq!(set.render_tokens(), "[INTERP] [EXPLOR]");
        assert_eq!(MechanismSet::all().render_tokens(), "[EMOR] [INTERP] [EXPLOR]");
    }

    #[test]
    fn parse_variants() {
        assert_eq!("[EMOR]".parse::<Mechanism>().unwrap(), Mechanism::EmotionalReaction);
        assert_eq!("exploration".parse::<Mechanism>().unwrap(), Mechanism::Exploration);
        assert_eq!("interpretations".parse::<Mechanism>().unwrap(), Mechanism::Interpretation);
        assert!("[EMPATHY]".parse::<Mechanism>().is_err());
    }

    #[test]
    fn masks_distinct() {
        let masks: BTreeSet<u8> = (0u8..8)
            .map(|bits| {
                Mechanism::ALL
                    .into_iter()
                    .filter(|m| bits & (1 << (*m as u8)) != 0)
                    .collect::<MechanismSet>()
                    .mask()
            })
            .collect();
        assert_eq!(masks.len(), 8);
    }
}
