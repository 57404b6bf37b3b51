//! Replays of scripted sessions on the rule backends: identical transcripts
//! every time, and the closing goal equals the offline fold of belief
//! updates over the same turns.

use std::time::{Duration, Instant};

use goalcoach_core::dialogue::Speaker;
use goalcoach_core::nlu::{extract_slots, update_belief};
use goalcoach_core::{BeliefState, Backends, DialogueTurn, Session, SessionConfig, SessionContext, Stage};
use goalcoach_corpus::{generate_toy, ToyConfig, Week};
use goalcoach_eval::replay_week;

use crate::Outcome;

const SESSIONS: usize = 20;
const REPLAYS: usize = 5;

/// Belief after every patient turn, recomputed without a session.
fn fold(week: &Week, stages: &[Stage], backends: &Backends) -> Vec<BeliefState> {
    let mut log: Vec<DialogueTurn> = Vec::new();
    let mut belief = BeliefState::new();
    let mut stage = Stage::GoalSetting;
    let mut out = Vec::new();
    let mut next_stage = stages.iter();
    for (i, u) in week.utterances.iter().enumerate() {
        let turn = DialogueTurn::new(u.speaker, &u.text, i as u32).unwrap();
        if u.speaker == Speaker::Patient {
            let spans = extract_slots(&u.text, backends.tagger.as_ref()).unwrap();
            let ctx = SessionContext::for_patient_turn(&log, turn.clone(), stage, belief.clone());
            belief = update_belief(&belief, &spans, backends.carryover.as_ref(), &ctx).belief;
            out.push(belief.clone());
            stage = *next_stage.next().expect("one stage per patient turn");
        }
        log.push(turn);
    }
    out
}

pub fn check() -> Outcome {
    let start = Instant::now();
    let corpus = generate_toy(&ToyConfig {
        weeks: SESSIONS,
        seed: 23,
        ..ToyConfig::default()
    });
    assert_eq!(corpus.weeks.len(), SESSIONS);
    let backends = Backends::rule();
    let config = SessionConfig::default();
    let (mut turns, mut collisions) = (0, 0);

    for week in &corpus.weeks {
        let first = serde_json::to_string(&replay_week(week, &backends, &config).unwrap()).unwrap();
        for r in 1..REPLAYS {
            let again = serde_json::to_string(&replay_week(week, &backends, &config).unwrap()).unwrap();
            assert!(first == again, "week {} differs on replay {r}", week.week_id);
        }

        let mut session = Session::new(week.week_id.clone(), config.clone()).unwrap();
        let mut online = Vec::new();
        let mut stages = Vec::new();
        for u in &week.utterances {
            match u.speaker {
                Speaker::Patient => {
                    let r = session.step(&u.text, &backends).unwrap();
                    collisions += r.diagnostics.collisions.len();
                    online.push(r.belief);
                    stages.push(r.stage);
                }
                Speaker::Coach => session.record_coach_message(&u.text).unwrap(),
            }
        }
        let backward = session.close().unwrap().belief;
        let offline = fold(week, &stages, &backends);
        assert_eq!(online, offline, "week {}: per-turn beliefs", week.week_id);
        assert_eq!(Some(&backward), offline.last(), "week {}: backward snapshot", week.week_id);
        turns += online.len();
    }
    crate::within(
        Duration::from_secs(30),
        start.elapsed(),
        format!("{SESSIONS} sessions x {REPLAYS} replays identical; {turns} patient turns ({collisions} collisions) match the offline fold"),
    )
}
