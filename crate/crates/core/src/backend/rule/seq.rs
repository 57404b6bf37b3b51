//! Template stage/response tables and the confirmation carryover heuristic.

use rand::RngCore;

use crate::backend::{
    Backend, BackendError, BackendKind, BackendResult, BackendSpec, CarryoverClassifier, DecodeParams, SeqBackend,
};
use crate::belief::BeliefState;
use crate::dialogue::{Speaker, Stage};
use crate::nlg_hc::{split_input, Task};
use crate::nlu::{CarryoverDecision, CarryoverQuery};
use crate::slot::SlotName;
use crate::text::{normalize_value, normalized_tokens};

const REVISION_CUES: &[&str] = &[
    "instead", "actually", "change", "rather", "switch", "how about", "make it", "let's do", "can we do",
    "i'd prefer", "i prefer", "no,", "update", "revise",
];

const SUMMARY_CUES: &[&str] = &["your goal is", "to confirm", "so your goal", "your goal for this week is"];

const POSITIVE_CUES: &[&str] = &["did it", "done", "went well", "great", "good", "finished", "managed", "yes", "i did", "completed"];
const NEGATIVE_CUES: &[&str] = &["didn't", "did not", "couldn't", "could not", "missed", "skip", "sick", "haven't", "no time", "busy"];

fn contains_cue(text: &str, cues: &[&str]) -> bool {
    let lowered = format!(" {} ", normalize_value(text).replace('’', "'"));
    cues.iter().any(|c| {
        if c.contains(' ') || c.ends_with(',') || c.contains('\'') {
            lowered.contains(c)
        } else {
            normalized_tokens(&lowered).iter().any(|t| t == c)
        }
    })
}

pub fn has_revision_cue(text: &str) -> bool {
    contains_cue(text, REVISION_CUES)
}

pub fn is_summary(text: &str) -> bool {
    contains_cue(text, SUMMARY_CUES)
}

/// Activity, a measure, a schedule, and a confidence score.
pub fn goal_complete(b: &BeliefState) -> bool {
    use SlotName::*;
    b.is_filled(Activity)
        && (b.is_filled(Amount) || b.is_filled(Duration) || b.is_filled(Distance))
        && (b.is_filled(Dayname) || b.is_filled(Daynumber))
        && b.is_filled(Score)
}

/// Keep the recorded value when the coach's last turn restated it and the
/// patient gives no sign of revising.
pub struct ConfirmationCarryover;

impl ConfirmationCarryover {
    pub const IDENTITY: &'static str = "confirmation-carryover";
}

impl Backend for ConfirmationCarryover {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::Carryover,
            identity: Self::IDENTITY.into(),
            config: Default::default(),
        }
    }
}

impl CarryoverClassifier for ConfirmationCarryover {
    fn decide(&self, q: &CarryoverQuery) -> BackendResult<CarryoverDecision> {
        let coach = q
            .window
            .iter()
            .rev()
            .find(|t| t.speaker == Speaker::Coach)
            .map(|t| normalize_value(&t.text))
            .unwrap_or_default();
        let patient = q
            .window
            .iter()
            .rev()
            .find(|t| t.speaker == Speaker::Patient)
            .map(|t| t.text.as_str())
            .unwrap_or("");
        let confirmed = q
            .previous
            .iter()
            .any(|v| coach.contains(&normalize_value(v)));
        let keep = confirmed && !has_revision_cue(patient);
        Ok(CarryoverDecision {
            slot: q.slot,
            keep_previous: keep,
            confidence: 1.0,
        })
    }
}

/// Serves both tasks from the assembled input using fixed tables.
pub struct TemplateSeqBackend;

impl TemplateSeqBackend {
    pub const IDENTITY: &'static str = "template-seq";
}

impl Backend for TemplateSeqBackend {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::SeqMultitask,
            identity: Self::IDENTITY.into(),
            config: Default::default(),
        }
    }
}

fn confirmation(b: &BeliefState) -> String {
    use SlotName::*;
    let mut parts = vec!["Great! So your goal is to [activity]".to_string()];
    for slot in [Amount, Duration, Distance, Repeatation, Location, Time] {
        if b.is_filled(slot) {
            parts.push(slot.placeholder());
        }
    }
    if b.is_filled(Dayname) {
        parts.push("on [dayname]".into());
    } else if b.is_filled(Daynumber) {
        parts.push("[daynumber]".into());
    }
    format!("{}. Does that sound right?", parts.join(" "))
}

/// Delexicalized response for `stage` given the belief and context.
pub fn template_response(stage: Stage, b: &BeliefState, coach: Option<&str>, patient: Option<&str>) -> String {
    use SlotName::*;
    match stage {
        Stage::GoalSetting => {
            if !b.is_filled(Activity) {
                "What would you like [activity] to be this week?".into()
            } else if !(b.is_filled(Amount) || b.is_filled(Duration) || b.is_filled(Distance)) {
                "How long or how far would you like to [activity] each time?".into()
            } else if !(b.is_filled(Dayname) || b.is_filled(Daynumber)) {
                "Which days would you like to [activity]?".into()
            } else if !b.is_filled(Score) {
                "On a scale of 1 to 10, how confident are you that you can [activity] this week?".into()
            } else {
                confirmation(b)
            }
        }
        Stage::GoalImplementation => {
            let patient = patient.unwrap_or("");
            if coach.is_some_and(is_summary) {
                "Great, good luck with your goal to [activity] this week! I'll check in with you soon.".into()
            } else if contains_cue(patient, NEGATIVE_CUES) {
                "That's okay. Do you think you can still [activity] this week?".into()
            } else if contains_cue(patient, POSITIVE_CUES) {
                "That's great to hear! Keep it up with your goal to [activity].".into()
            } else {
                "How is your goal to [activity] going so far?".into()
            }
        }
    }
}

/// Stage truth table: implementation persists unless the patient revises;
/// setting moves to implementation once the goal is complete and the coach
/// has just summarized it.
pub fn template_stage(prev: Stage, b: &BeliefState, coach: Option<&str>, patient: Option<&str>) -> Stage {
    let revising = patient.is_some_and(has_revision_cue);
    match prev {
        Stage::GoalImplementation if revising => Stage::GoalSetting,
        Stage::GoalImplementation => Stage::GoalImplementation,
        Stage::GoalSetting => {
            if goal_complete(b) && coach.is_some_and(is_summary) && !revising {
                Stage::GoalImplementation
            } else {
                Stage::GoalSetting
            }
        }
    }
}

impl SeqBackend for TemplateSeqBackend {
    fn generate(&self, input: &str, _decode: &DecodeParams, _rng: &mut dyn RngCore) -> BackendResult<String> {
        let parsed = split_input(input).map_err(|e| BackendError::invalid(Self::IDENTITY, e.to_string()))?;
        let belief = parsed
            .belief()
            .map_err(|e| BackendError::invalid(Self::IDENTITY, e.to_string()))?;
        let stage = parsed
            .stage()
            .ok_or_else(|| BackendError::invalid(Self::IDENTITY, format!("unknown stage {:?}", parsed.stage_token)))?;
        let turns = parsed.turns();
        let coach = turns.iter().rev().find(|(s, _)| *s == Speaker::Coach).map(|(_, t)| t.as_str());
        let patient = turns.iter().rev().find(|(s, _)| *s == Speaker::Patient).map(|(_, t)| t.as_str());
        Ok(match parsed.task {
            Task::PredictStage => template_stage(stage, &belief, coach, patient).token().to_string(),
            Task::GenerateResponse => template_response(stage, &belief, coach, patient),
        })
    }
}
