//! Per-turn pipeline and week-long session lifecycle.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{Backends, DecodeParams};
use crate::belief::BeliefState;
use crate::bio::SlotSpan;
use crate::dialogue::{DialogueTurn, SessionContext, Speaker, Stage};
use crate::emotion::EmotionPrediction;
use crate::empathy::{detect_emotion, generate_empathetic, should_empathize, GateConfig, EMPATHY_FALLBACK};
use crate::error::{CoreError, Result};
use crate::mechanism::{Mechanism, MechanismSet};
use crate::nlg_hc::{generate_response, lexicalize, predict_stage};
use crate::nlu::{extract_slots, update_belief, CarryoverDecision};
use crate::slot::SlotName;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub gate: GateConfig,
    /// Mechanisms for which a variant is generated when the gate fires.
    pub mechanisms: Vec<Mechanism>,
    /// Variant prepended to the goal response in the default reply.
    pub default_mechanism: Mechanism,
    pub response_decode: DecodeParams,
    pub empathy_decode: DecodeParams,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            gate: GateConfig::default(),
            mechanisms: Mechanism::ALL.to_vec(),
            default_mechanism: Mechanism::EmotionalReaction,
            response_decode: DecodeParams::RESPONSE,
            empathy_decode: DecodeParams::EMPATHY,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.gate.validate()?;
        if self.mechanisms.is_empty() {
            return Err(CoreError::Validation("at least one mechanism must be configured".into()));
        }
        if !self.mechanisms.contains(&self.default_mechanism) {
            return Err(CoreError::Validation(format!(
                "default mechanism {} is not among the configured mechanisms",
                self.default_mechanism
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotPoint {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSnapshot {
    pub belief: BeliefState,
    pub point: SnapshotPoint,
    pub week_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub spans: Vec<SlotSpan>,
    pub collisions: Vec<SlotName>,
    pub decisions: Vec<CarryoverDecision>,
    pub fallbacks: Vec<String>,
    pub dropped_spans: Vec<SlotSpan>,
    pub unfilled_placeholders: Vec<SlotName>,
    pub delexicalized_response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub turn_index: u32,
    /// Default outgoing message.
    pub coach_response: String,
    /// Lexicalized goal-oriented response alone.
    pub goal_response: String,
    pub empathetic_variants: BTreeMap<Mechanism, String>,
    pub belief: BeliefState,
    pub stage: Stage,
    pub gate_fired: bool,
    pub emotion: EmotionPrediction,
    pub diagnostics: Diagnostics,
}

/// Inputs that drive a session; replaying them reproduces it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionEvent {
    Patient { text: String },
    Coach { text: String },
}

/// One line of the transcript export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TranscriptRecord {
    Turn {
        week_id: String,
        patient: String,
        result: TurnResult,
    },
    CoachMessage {
        week_id: String,
        turn_index: u32,
        text: String,
    },
    Snapshot(GoalSnapshot),
}

#[derive(Debug, Clone)]
pub struct Session {
    week_id: String,
    config: SessionConfig,
    turns: Vec<DialogueTurn>,
    belief: BeliefState,
    stage: Stage,
    snapshots: Vec<GoalSnapshot>,
    events: Vec<SessionEvent>,
    results: Vec<TurnResult>,
    records: Vec<TranscriptRecord>,
    rng: ChaCha8Rng,
    next_index: u32,
    /// Whether the last logged turn is an unreviewed system suggestion.
    suggestion_pending: bool,
    closed: bool,
}

impl Session {
    pub fn new(week_id: impl Into<String>, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            week_id: week_id.into(),
            config,
            turns: Vec::new(),
            belief: BeliefState::new(),
            stage: Stage::GoalSetting,
            snapshots: Vec::new(),
            events: Vec::new(),
            results: Vec::new(),
            records: Vec::new(),
            rng,
            next_index: 0,
            suggestion_pending: false,
            closed: false,
        })
    }

    pub fn week_id(&self) -> &str {
        &self.week_id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn turns(&self) -> &[DialogueTurn] {
        &self.turns
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn snapshots(&self) -> &[GoalSnapshot] {
        &self.snapshots
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn results(&self) -> &[TurnResult] {
        &self.results
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Run the pipeline on one patient message and commit the outcome.
    pub fn step(&mut self, utterance: &str, backends: &Backends) -> Result<TurnResult> {
        if self.closed {
            return Err(CoreError::AlreadyClosed);
        }
        if utterance.trim().is_empty() {
            return Err(CoreError::Validation("patient message is empty".into()));
        }
        let mut rng = self.rng.clone();
        let mut diag = Diagnostics::default();
        let turn_index = self.next_index;
        let patient = DialogueTurn::new(Speaker::Patient, utterance, turn_index)?;

        let spans = match extract_slots(utterance, backends.tagger.as_ref()) {
            Ok(spans) => spans,
            Err(e) => {
                warn!("slot extraction failed: {e}");
                diag.fallbacks.push(format!("tagger: {e}"));
                Vec::new()
            }
        };
        let ctx = SessionContext::for_patient_turn(&self.turns, patient.clone(), self.stage, self.belief.clone());
        let update = update_belief(&self.belief, &spans, backends.carryover.as_ref(), &ctx);
        diag.spans = spans;
        diag.collisions = update.collisions;
        diag.decisions = update.decisions;
        diag.fallbacks.extend(update.fallbacks);
        diag.dropped_spans = update.dropped;
        let belief = update.belief;

        let emotion = detect_emotion(utterance, backends.emotion.as_ref())?;
        diag.fallbacks.extend(emotion.fallback);
        let emotion = emotion.prediction;
        let gate_fired = should_empathize(&emotion, &self.config.gate);

        let ctx = ctx.with_belief(belief.clone());
        let stage = predict_stage(&ctx, backends.seq.as_ref(), &mut rng);
        diag.fallbacks.extend(stage.warning);
        let stage = stage.stage;

        let response = generate_response(&ctx, stage, backends.seq.as_ref(), &self.config.response_decode, &mut rng);
        diag.fallbacks.extend(response.fallback);
        diag.delexicalized_response = response.response.as_str().to_string();
        let lexical = lexicalize(&response.response, &belief);
        diag.unfilled_placeholders = lexical.unfilled;
        let goal_response = lexical.text;

        let mut variants = BTreeMap::new();
        if gate_fired {
            for &m in &self.config.mechanisms {
                let text = match generate_empathetic(
                    utterance,
                    &MechanismSet::single(m),
                    backends.empathy_lm.as_ref(),
                    &self.config.empathy_decode,
                    &mut rng,
                ) {
                    Ok(out) => {
                        diag.fallbacks.extend(out.fallback.map(|f| format!("{m}: {f}")));
                        out.text
                    }
                    Err(e) => {
                        diag.fallbacks.push(format!("{m}: {e}"));
                        EMPATHY_FALLBACK.to_string()
                    }
                };
                variants.insert(m, text);
            }
        }
        let coach_response = match variants.get(&self.config.default_mechanism) {
            Some(emp) => format!("{emp} {goal_response}"),
            None => goal_response.clone(),
        };

        let result = TurnResult {
            turn_index,
            coach_response: coach_response.clone(),
            goal_response,
            empathetic_variants: variants,
            belief: belief.clone(),
            stage,
            gate_fired,
            emotion,
            diagnostics: diag,
        };

        // commit
        let previous_stage = self.stage;
        self.rng = rng;
        self.turns.push(patient.with_stage(stage));
        self.turns.push(DialogueTurn::new(Speaker::Coach, coach_response, turn_index + 1)?.with_stage(stage));
        self.next_index = turn_index + 2;
        self.suggestion_pending = true;
        self.belief = belief;
        self.stage = stage;
        self.events.push(SessionEvent::Patient {
            text: utterance.to_string(),
        });
        self.results.push(result.clone());
        self.records.push(TranscriptRecord::Turn {
            week_id: self.week_id.clone(),
            patient: utterance.to_string(),
            result: result.clone(),
        });
        if previous_stage == Stage::GoalSetting
            && stage == Stage::GoalImplementation
            && !self.has_snapshot(SnapshotPoint::Forward)
        {
            self.push_snapshot(SnapshotPoint::Forward);
        }
        Ok(result)
    }

    /// Record what the coach actually sent. It replaces the pending system
    /// suggestion in the turn log, or is appended when none is pending.
    pub fn record_coach_message(&mut self, text: &str) -> Result<()> {
        if self.closed {
            return Err(CoreError::AlreadyClosed);
        }
        if text.trim().is_empty() {
            return Err(CoreError::Validation("coach message is empty".into()));
        }
        let turn_index = if self.suggestion_pending {
            let last = self.turns.last_mut().expect("pending suggestion is logged");
            last.text = text.to_string();
            last.turn_index
        } else {
            let turn = DialogueTurn::new(Speaker::Coach, text, self.next_index)?.with_stage(self.stage);
            self.next_index += 1;
            self.turns.push(turn);
            self.next_index - 1
        };
        self.suggestion_pending = false;
        self.events.push(SessionEvent::Coach { text: text.to_string() });
        self.records.push(TranscriptRecord::CoachMessage {
            week_id: self.week_id.clone(),
            turn_index,
            text: text.to_string(),
        });
        Ok(())
    }

    fn has_snapshot(&self, point: SnapshotPoint) -> bool {
        self.snapshots.iter().any(|s| s.point == point)
    }

    fn push_snapshot(&mut self, point: SnapshotPoint) {
        let snap = GoalSnapshot {
            belief: self.belief.clone(),
            point,
            week_id: self.week_id.clone(),
        };
        self.records.push(TranscriptRecord::Snapshot(snap.clone()));
        self.snapshots.push(snap);
    }

    /// The recorded snapshot at `point`.
    pub fn snapshot_goal(&self, point: SnapshotPoint) -> Result<GoalSnapshot> {
        if let Some(s) = self.snapshots.iter().find(|s| s.point == point) {
            return Ok(s.clone());
        }
        Err(CoreError::Precondition(match point {
            SnapshotPoint::Forward => "no transition to goal implementation yet".into(),
            SnapshotPoint::Backward => "session is still open".into(),
        }))
    }

    /// Take the backward snapshot and freeze the session.
    pub fn close(&mut self) -> Result<GoalSnapshot> {
        if self.closed {
            return Err(CoreError::AlreadyClosed);
        }
        self.push_snapshot(SnapshotPoint::Backward);
        self.closed = true;
        self.snapshot_goal(SnapshotPoint::Backward)
    }

    /// Apply one recorded event.
    pub fn apply(&mut self, event: &SessionEvent, backends: &Backends) -> Result<()> {
        match event {
            SessionEvent::Patient { text } => self.step(text, backends).map(|_| ()),
            SessionEvent::Coach { text } => self.record_coach_message(text),
        }
    }

    /// Rebuild a session from its events.
    pub fn replay(
        week_id: impl Into<String>,
        config: SessionConfig,
        events: &[SessionEvent],
        backends: &Backends,
        close: bool,
    ) -> Result<Session> {
        let mut session = Session::new(week_id, config)?;
        for event in events {
            session.apply(event, backends)?;
        }
        if close {
            session.close()?;
        }
        Ok(session)
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.records
    }

    /// Line-delimited JSON export of the transcript.
    pub fn write_transcript<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_transcript<R: BufRead>(input: R) -> Result<Vec<TranscriptRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CoreError::Validation(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| CoreError::Validation(format!("line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::{track_transcript, TrackingScope};
    use SlotName::*;

    fn session() -> Session {
        Session::new("w1", SessionConfig::default()).unwrap()
    }

    const MIGRAINE: &str = "I'm sorry I didn't go to work today I have a massive migraine headache.";

    #[test]
    fn goal_setting_turn_asks_for_days() {
        let backends = Backends::rule();
        let mut s = session();
        let r = s.step("I want to walk 30 min a day between 6am to 8am.", &backends).unwrap();
        assert!(!r.gate_fired);
        assert!(r.empathetic_variants.is_empty());
        assert_eq!(r.stage, Stage::GoalSetting);
        assert_eq!(r.coach_response, "Which days would you like to walk?");
        assert_eq!(r.belief.get(Time), ["6am to 8am"]);
    }

    #[test]
    fn migraine_fires_gate_with_three_variants() {
        let backends = Backends::rule();
        let mut s = session();
        let r = s.step(MIGRAINE, &backends).unwrap();
        assert!(r.gate_fired);
        assert_eq!(r.empathetic_variants.len(), 3);
        assert_eq!(r.empathetic_variants[&Mechanism::EmotionalReaction], "Oh no, I hope you are okay.");
        assert!(r.coach_response.starts_with("Oh no, I hope you are okay. "));
    }

    #[test]
    fn empty_message_rejected_before_backends() {
        let mut backends = Backends::rule();
        backends.tagger = std::sync::Arc::new(crate::backend::testing::FailingBackend);
        let mut s = session();
        assert!(matches!(s.step("   ", &backends), Err(CoreError::Validation(_))));
        assert!(s.turns().is_empty());
    }

    fn full_week(s: &mut Session, backends: &Backends) {
        for msg in [
            "Hi! I want to walk this week.",
            "I want to walk 30 min a day",
            "Monday and Wednesday",
            "I'd say 8",
            "Yes, that sounds right.",
        ] {
            s.step(msg, backends).unwrap();
        }
    }

    #[test]
    fn forward_snapshot_at_transition() {
        let backends = Backends::rule();
        let mut s = session();
        assert!(matches!(s.snapshot_goal(SnapshotPoint::Forward), Err(CoreError::Precondition(_))));
        full_week(&mut s, &backends);
        assert_eq!(s.stage(), Stage::GoalImplementation);
        let fwd = s.snapshot_goal(SnapshotPoint::Forward).unwrap();
        assert_eq!(&fwd.belief, s.belief());
        assert_eq!(fwd.belief.get(Dayname), ["Monday", "Wednesday"]);
        s.step("I walked on Monday, it went well", &backends).unwrap();
        assert_eq!(s.stage(), Stage::GoalImplementation);
        assert_eq!(s.snapshots().len(), 1);
    }

    #[test]
    fn close_lifecycle() {
        let backends = Backends::rule();
        let mut s = session();
        full_week(&mut s, &backends);
        let back = s.close().unwrap();
        assert_eq!(&back.belief, s.belief());
        assert!(matches!(s.close(), Err(CoreError::AlreadyClosed)));
        assert!(matches!(s.step("hi", &backends), Err(CoreError::AlreadyClosed)));
        let folded = track_transcript(s.turns(), backends.tagger.as_ref(), backends.carryover.as_ref(), TrackingScope::PatientOnly);
        assert!(folded.same_slots(&back.belief));
    }

    #[test]
    fn coach_override_replaces_suggestion() {
        let backends = Backends::rule();
        let mut s = session();
        s.step("I want to swim", &backends).unwrap();
        s.record_coach_message("How many laps?").unwrap();
        assert_eq!(s.turns().len(), 2);
        assert_eq!(s.turns()[1].text, "How many laps?");
        s.record_coach_message("Take your time.").unwrap();
        assert_eq!(s.turns().len(), 3);
        assert!(s.record_coach_message(" ").is_err());
    }

    #[test]
    fn replay_is_deterministic() {
        let backends = Backends::rule();
        let mut s = session();
        full_week(&mut s, &backends);
        s.record_coach_message("Good luck!").unwrap();
        s.step(MIGRAINE, &backends).unwrap();
        s.close().unwrap();
        let again = Session::replay("w1", SessionConfig::default(), s.events(), &backends, true).unwrap();
        assert_eq!(again.transcript(), s.transcript());
        let mut a = Vec::new();
        let mut b = Vec::new();
        s.write_transcript(&mut a).unwrap();
        again.write_transcript(&mut b).unwrap();
        assert_eq!(a, b);
        let parsed = read_transcript(&a[..]).unwrap();
        assert_eq!(parsed, s.transcript());
    }

    #[test]
    fn config_validation() {
        let mut c = SessionConfig::default();
        c.gate.tau = 1.5;
        assert!(Session::new("w", c).is_err());
        let c = SessionConfig {
            mechanisms: vec![Mechanism::Exploration],
            ..SessionConfig::default()
        };
        assert!(Session::new("w", c).is_err());
    }
}
