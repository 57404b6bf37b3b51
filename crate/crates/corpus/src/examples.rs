//! Supervised examples mined from annotated weeks: stage and response
//! pairs for the sequence model, and collision decisions for carryover.

use std::sync::Mutex;

use goalcoach_core::backend::{Backend, BackendKind, BackendResult, BackendSpec, CarryoverClassifier};
use goalcoach_core::dialogue::SessionContext;
use goalcoach_core::nlg_hc::{assemble_response_input, assemble_stage_input, Task};
use goalcoach_core::nlu::{update_belief, CarryoverDecision, CarryoverQuery};
use goalcoach_core::text::normalize_value;
use goalcoach_core::{BeliefState, Speaker, Stage};
use serde::{Deserialize, Serialize};

use crate::delex::delexicalize;
use crate::record::{Corpus, Week};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqExample {
    pub task: Task,
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarryoverExample {
    pub query: CarryoverQuery,
    pub keep_previous: bool,
}

fn context_for(week: &Week, i: usize, belief: BeliefState) -> SessionContext {
    let turns = week.turns();
    let previous_stage = if i == 0 { Stage::GoalSetting } else { week.utterances[i - 1].stage };
    SessionContext::for_patient_turn(&turns[..i], turns[i].clone(), previous_stage, belief)
}

/// One stage example per patient utterance, plus a response example when
/// the coach answers it. Targets: the stage token and the delexicalized
/// coach reply.
pub fn seq_examples(week: &Week) -> Vec<SeqExample> {
    let gold = week.gold_beliefs();
    let mut out = Vec::new();
    for (i, u) in week.utterances.iter().enumerate() {
        if u.speaker != Speaker::Patient {
            continue;
        }
        let ctx = context_for(week, i, gold[i].clone());
        out.push(SeqExample {
            task: Task::PredictStage,
            input: assemble_stage_input(&ctx).rendered,
            target: u.stage.token().to_string(),
        });
        if let Some(reply) = week.utterances.get(i + 1).filter(|r| r.speaker == Speaker::Coach) {
            out.push(SeqExample {
                task: Task::GenerateResponse,
                input: assemble_response_input(&ctx, u.stage).rendered,
                target: delexicalize(reply),
            });
        }
    }
    out
}

pub fn corpus_seq_examples<'a>(weeks: impl IntoIterator<Item = &'a Week>) -> Vec<SeqExample> {
    weeks.into_iter().flat_map(seq_examples).collect()
}

/// Answers every query from the gold belief after the turn and records it.
struct GoldOracle {
    after: BeliefState,
    seen: Mutex<Vec<CarryoverExample>>,
}

impl Backend for GoldOracle {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::Carryover,
            identity: "gold-oracle".into(),
            config: Default::default(),
        }
    }
}

impl CarryoverClassifier for GoldOracle {
    fn decide(&self, q: &CarryoverQuery) -> BackendResult<CarryoverDecision> {
        let gold: Vec<String> = self.after.get(q.slot).iter().map(|v| normalize_value(v)).collect();
        let keep = !q.previous.is_empty() && q.previous.iter().all(|v| gold.contains(&normalize_value(v)));
        self.seen.lock().expect("oracle lock").push(CarryoverExample {
            query: q.clone(),
            keep_previous: keep,
        });
        Ok(CarryoverDecision {
            slot: q.slot,
            keep_previous: keep,
            confidence: 1.0,
        })
    }
}

/// Collision queries exactly as the online tracker would pose them, starting
/// from the gold belief before each patient turn, labelled with whether the
/// gold belief after the turn still holds the previous value(s).
pub fn carryover_examples(week: &Week) -> Vec<CarryoverExample> {
    let gold = week.gold_beliefs();
    let mut out = Vec::new();
    for (i, u) in week.utterances.iter().enumerate() {
        if u.speaker != Speaker::Patient || !u.has_slots() {
            continue;
        }
        let before = if i == 0 { BeliefState::new() } else { gold[i - 1].clone() };
        let oracle = GoldOracle {
            after: gold[i].clone(),
            seen: Mutex::new(Vec::new()),
        };
        let ctx = context_for(week, i, before.clone());
        update_belief(&before, &u.spans(), &oracle, &ctx);
        out.extend(oracle.seen.into_inner().expect("oracle lock"));
    }
    out
}

pub fn corpus_carryover_examples<'a>(weeks: impl IntoIterator<Item = &'a Week>) -> Vec<CarryoverExample> {
    weeks.into_iter().flat_map(carryover_examples).collect()
}

impl Corpus {
    pub fn seq_examples(&self) -> Vec<SeqExample> {
        corpus_seq_examples(&self.weeks)
    }

    pub fn carryover_examples(&self) -> Vec<CarryoverExample> {
        corpus_carryover_examples(&self.weeks)
    }
}
