//! End-to-end evaluation of a system transcript against a gold corpus.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use goalcoach_core::backend::{Backends, EmpathyRegressor, LmScorer};
use goalcoach_core::orchestrator::{read_transcript, Session, SessionConfig, SnapshotPoint, TranscriptRecord, TurnResult};
use goalcoach_core::{BeliefState, SlotSpan, Speaker};
use goalcoach_corpus::{Corpus, Week};
use serde::{Deserialize, Serialize};

use crate::bleu::{bleu, BleuScores};
use crate::error::{EvalError, Result};
use crate::goals::{correctness_table, match_rates, GoalPrediction, MatchRates};
use crate::scorers::{empathy_delta, perplexity, plugin_mean, PairScorer, PluginScore};
use crate::slots::{slot_counts, Prf, SpanCounts};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const GOAL_AVERAGING: &str = "per_goal_then_across_goals";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub prf: Prf,
    pub counts: SpanCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalReport {
    pub goals: usize,
    pub match_rates: MatchRates,
    /// correctness@k in percent for k = 0..=10.
    pub correctness_at_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendMetric {
    pub value: f64,
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub pairs: usize,
    pub bleu: BleuScores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<BackendMetric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empathy_delta: Option<BackendMetric>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plugins: Vec<PluginScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub goal_averaging: String,
    pub weeks: usize,
    pub patient_turns: usize,
    pub slots: SlotReport,
    pub stage_accuracy: f64,
    pub goals: BTreeMap<SnapshotPoint, GoalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationReport>,
}

/// Optional model-based scorers.
#[derive(Default)]
pub struct Scorers<'a> {
    pub lm: Option<&'a dyn LmScorer>,
    pub regressor: Option<&'a dyn EmpathyRegressor>,
    pub plugins: Vec<&'a dyn PairScorer>,
}

/// Drive one gold week through a session: patient turns are stepped, coach
/// turns are recorded as what the coach sent, then the week is closed.
pub fn replay_week(week: &Week, backends: &Backends, config: &SessionConfig) -> Result<Vec<TranscriptRecord>> {
    let mut session = Session::new(week.week_id.clone(), config.clone())?;
    for u in &week.utterances {
        match u.speaker {
            Speaker::Patient => {
                session.step(&u.text, backends)?;
            }
            Speaker::Coach => session.record_coach_message(&u.text)?,
        }
    }
    session.close()?;
    Ok(session.transcript().to_vec())
}

pub fn replay_corpus<'a>(
    weeks: impl IntoIterator<Item = &'a Week>,
    backends: &Backends,
    config: &SessionConfig,
) -> Result<Vec<TranscriptRecord>> {
    let mut out = Vec::new();
    for w in weeks {
        out.extend(replay_week(w, backends, config)?);
    }
    Ok(out)
}

#[derive(Default)]
struct WeekRecords<'a> {
    turns: Vec<(&'a str, &'a TurnResult)>,
    snapshots: HashMap<SnapshotPoint, &'a BeliefState>,
}

fn group(system: &[TranscriptRecord]) -> HashMap<&str, WeekRecords<'_>> {
    let mut m: HashMap<&str, WeekRecords> = HashMap::new();
    for r in system {
        match r {
            TranscriptRecord::Turn { week_id, patient, result } => {
                m.entry(week_id).or_default().turns.push((patient, result));
            }
            TranscriptRecord::Snapshot(s) => {
                m.entry(&s.week_id).or_default().snapshots.insert(s.point, &s.belief);
            }
            TranscriptRecord::CoachMessage { .. } => {}
        }
    }
    m
}

/// Score `system` (transcript records for some or all weeks) against every
/// week of `gold`. Each gold week must have a matching run whose patient
/// turns are the gold patient utterances in order.
pub fn evaluate(system: &[TranscriptRecord], gold: &Corpus, scorers: &Scorers) -> Result<EvalReport> {
    if gold.weeks.is_empty() {
        return Err(EvalError::EmptyInput("gold corpus has no weeks".into()));
    }
    let grouped = group(system);
    let mut pred_spans: Vec<Vec<SlotSpan>> = Vec::new();
    let mut gold_spans: Vec<Vec<SlotSpan>> = Vec::new();
    let (mut stage_hits, mut turns) = (0usize, 0usize);
    let mut candidates = Vec::new();
    let mut references = Vec::new();
    let mut goals: BTreeMap<SnapshotPoint, Vec<GoalPrediction>> = BTreeMap::new();

    for week in &gold.weeks {
        let run = grouped
            .get(week.week_id.as_str())
            .ok_or_else(|| EvalError::Alignment(format!("no system run for week {}", week.week_id)))?;
        let patients: Vec<(usize, &goalcoach_corpus::AnnotatedUtterance)> = week
            .utterances
            .iter()
            .enumerate()
            .filter(|(_, u)| u.speaker == Speaker::Patient)
            .collect();
        if patients.len() != run.turns.len() {
            return Err(EvalError::Alignment(format!(
                "week {}: {} gold patient turns, {} system turns",
                week.week_id,
                patients.len(),
                run.turns.len()
            )));
        }
        for ((i, u), (text, result)) in patients.iter().zip(&run.turns) {
            if u.text.trim() != text.trim() {
                return Err(EvalError::Alignment(format!(
                    "week {} turn {}: system saw `{text}`, gold has `{}`",
                    week.week_id, u.turn_index, u.text
                )));
            }
            pred_spans.push(result.diagnostics.spans.clone());
            gold_spans.push(u.spans());
            turns += 1;
            stage_hits += usize::from(result.stage == u.stage);
            if let Some(reply) = week.utterances.get(i + 1).filter(|r| r.speaker == Speaker::Coach) {
                candidates.push(result.coach_response.clone());
                references.push(reply.text.clone());
            }
        }
        let last = run.turns.last().map(|(_, r)| r.belief.clone()).unwrap_or_default();
        if let Some(fwd) = week.gold_forward() {
            goals.entry(SnapshotPoint::Forward).or_default().push(GoalPrediction {
                week_id: week.week_id.clone(),
                point: SnapshotPoint::Forward,
                predicted: run.snapshots.get(&SnapshotPoint::Forward).map(|b| (*b).clone()).unwrap_or_default(),
                gold: fwd,
            });
        }
        goals.entry(SnapshotPoint::Backward).or_default().push(GoalPrediction {
            week_id: week.week_id.clone(),
            point: SnapshotPoint::Backward,
            predicted: run.snapshots.get(&SnapshotPoint::Backward).map(|b| (*b).clone()).unwrap_or(last),
            gold: week.gold_backward(),
        });
    }

    let counts = slot_counts(&pred_spans, &gold_spans)?;
    let mut goal_reports = BTreeMap::new();
    for (point, preds) in goals {
        goal_reports.insert(
            point,
            GoalReport {
                goals: preds.len(),
                match_rates: match_rates(&preds)?,
                correctness_at_k: correctness_table(&preds)?,
            },
        );
    }
    let generation = if candidates.is_empty() {
        None
    } else {
        let mut plugins = Vec::new();
        for p in &scorers.plugins {
            plugins.push(plugin_mean(&candidates, &references, *p)?);
        }
        Some(GenerationReport {
            pairs: candidates.len(),
            bleu: bleu(&candidates, &references)?,
            perplexity: match scorers.lm {
                Some(lm) => Some(BackendMetric {
                    value: perplexity(&candidates, lm)?,
                    backend: lm.identity(),
                }),
                None => None,
            },
            empathy_delta: match scorers.regressor {
                Some(r) => Some(BackendMetric {
                    value: empathy_delta(&candidates, &references, r)?,
                    backend: r.identity(),
                }),
                None => None,
            },
            plugins,
        })
    };
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        goal_averaging: GOAL_AVERAGING.into(),
        weeks: gold.weeks.len(),
        patient_turns: turns,
        slots: SlotReport {
            prf: counts.prf(),
            counts,
        },
        stage_accuracy: if turns == 0 { 1.0 } else { stage_hits as f64 / turns as f64 },
        goals: goal_reports,
        generation,
    })
}

pub fn load_transcript(path: &Path) -> Result<Vec<TranscriptRecord>> {
    let f = std::fs::File::open(path).map_err(|e| EvalError::io(path, e))?;
    let reader: Box<dyn BufRead> = Box::new(std::io::BufReader::new(f));
    Ok(read_transcript(reader)?)
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| EvalError::io(path, e.into()))?;
    std::fs::write(path, json + "\n").map_err(|e| EvalError::io(path, e))
}
