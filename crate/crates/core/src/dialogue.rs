//! Turns, stages, and the local context window fed to the models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefState;
use crate::error::{CoreError, Result};

/// Coarse coaching stage, used as a stand-in for dialogue acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum Stage {
    #[default]
    GoalSetting,
    GoalImplementation,
}

impl Stage {
    pub const ALL: [Stage; 2] = [Stage::GoalSetting, Stage::GoalImplementation];

    /// Token rendered into model inputs.
    pub fn token(self) -> &'static str {
        match self {
            Stage::GoalSetting => "goal_setting",
            Stage::GoalImplementation => "goal_implementation",
        }
    }

    pub fn from_token(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.token() == s.trim())
    }
}


impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Stage {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        Stage::from_token(s).ok_or_else(|| CoreError::Validation(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Patient,
    Coach,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Patient => "patient",
            Speaker::Coach => "coach",
        }
    }
}

impl FromStr for Speaker {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "patient" | "p" | "user" => Ok(Speaker::Patient),
            "coach" | "c" | "system" => Ok(Speaker::Coach),
            other => Err(CoreError::Validation(format!("unknown speaker `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub speaker: Speaker,
    pub text: String,
    pub turn_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
}

impl DialogueTurn {
    pub fn new(speaker: Speaker, text: impl Into<String>, turn_index: u32) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(CoreError::Validation("turn text is empty".into()));
        }
        Ok(Self {
            speaker,
            text,
            turn_index,
            stage: None,
        })
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = Some(stage);
        self
    }
}

/// Checks strictly increasing turn indices and non-empty texts.
pub fn validate_turn_log(turns: &[DialogueTurn]) -> Result<()> {
    for pair in turns.windows(2) {
        if pair[1].turn_index <= pair[0].turn_index {
            return Err(CoreError::Validation(format!(
                "turn index {} does not follow {}",
                pair[1].turn_index, pair[0].turn_index
            )));
        }
    }
    if let Some(t) = turns.iter().find(|t| t.text.trim().is_empty()) {
        return Err(CoreError::Validation(format!("turn {} is empty", t.turn_index)));
    }
    Ok(())
}

/// Local context `C_t`: at most the two most recent turns (coach then
/// patient), the previous stage, and the current belief.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionContext {
    window: Vec<DialogueTurn>,
    pub previous_stage: Stage,
    pub belief: BeliefState,
}

impl SessionContext {
    pub fn new(window: Vec<DialogueTurn>, previous_stage: Stage, belief: BeliefState) -> Result<Self> {
        if window.len() > 2 {
            return Err(CoreError::Validation(format!(
                "context window holds {} turns, at most 2 allowed",
                window.len()
            )));
        }
        if window.len() == 2 && window[0].speaker == window[1].speaker {
            return Err(CoreError::Validation(
                "context window turns must alternate speakers".into(),
            ));
        }
        Ok(Self {
            window,
            previous_stage,
            belief,
        })
    }

    pub fn empty() -> Self {
        Self {
            window: Vec::new(),
            previous_stage: Stage::GoalSetting,
            belief: BeliefState::new(),
        }
    }

    /// Window for a freshly received patient turn: the last coach turn of the
    /// log (if any) followed by the patient turn.
    pub fn for_patient_turn(
        log: &[DialogueTurn],
        patient: DialogueTurn,
        previous_stage: Stage,
        belief: BeliefState,
    ) -> Self {
        let mut window = Vec::with_capacity(2);
        if let Some(coach) = log.iter().rev().find(|t| t.speaker == Speaker::Coach) {
            window.push(coach.clone());
        }
        window.push(patient);
        Self {
            window,
            previous_stage,
            belief,
        }
    }

    pub fn window(&self) -> &[DialogueTurn] {
        &self.window
    }

    pub fn last_coach(&self) -> Option<&DialogueTurn> {
        self.window.iter().rev().find(|t| t.speaker == Speaker::Coach)
    }

    pub fn last_patient(&self) -> Option<&DialogueTurn> {
        self.window.iter().rev().find(|t| t.speaker == Speaker::Patient)
    }

    pub fn with_belief(mut self, belief: BeliefState) -> Self {
        self.belief = belief;
        self
    }
}
