//! Metrics, reports and A/B export.

pub mod ab;
pub mod bleu;
pub mod error;
pub mod goals;
pub mod report;
pub mod scorers;
pub mod slots;

pub use ab::{export_ab, AbItem};
pub use bleu::{bleu, bleu_avg, BleuScores};
pub use error::{EvalError, Result};
pub use goals::{correctness_at_k, match_rates, GoalPrediction, MatchRates};
pub use report::{evaluate, replay_corpus, replay_week, EvalReport, Scorers};
pub use scorers::{empathy_delta, perplexity, PairScorer};
pub use slots::{slot_prf, Prf};
