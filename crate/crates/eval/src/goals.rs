//! Goal-level match rates and correctness@k.

use goalcoach_core::orchestrator::SnapshotPoint;
use goalcoach_core::{BeliefState, SlotName};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalPrediction {
    pub week_id: String,
    pub point: SnapshotPoint,
    pub predicted: BeliefState,
    pub gold: BeliefState,
}

impl GoalPrediction {
    pub fn validate(&self) -> Result<()> {
        self.predicted.validate()?;
        self.gold.validate()?;
        Ok(())
    }
}

/// Value sets equal after normalization (both empty counts as equal).
pub fn complete_match(pred: &BeliefState, gold: &BeliefState, slot: SlotName) -> bool {
    pred.normalized(slot) == gold.normalized(slot)
}

/// Normalized value sets share at least one value.
pub fn partial_match(pred: &BeliefState, gold: &BeliefState, slot: SlotName) -> bool {
    !pred.normalized(slot).is_disjoint(&gold.normalized(slot))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRates {
    pub complete: f64,
    pub partial: f64,
    /// Goals with at least one filled gold slot.
    pub goals_scored: usize,
}

/// Per goal, the share of gold-filled slots matched completely / partially;
/// then the mean over goals. Goals with no filled gold slot are skipped; if
/// every goal is skipped both rates are 1.
pub fn match_rates(preds: &[GoalPrediction]) -> Result<MatchRates> {
    if preds.is_empty() {
        return Err(EvalError::EmptyInput("no goal predictions".into()));
    }
    let (mut complete, mut partial, mut n) = (0.0, 0.0, 0usize);
    for p in preds {
        let filled: Vec<SlotName> = p.gold.filled_slots().collect();
        if filled.is_empty() {
            continue;
        }
        let c = filled.iter().filter(|&&s| complete_match(&p.predicted, &p.gold, s)).count();
        let q = filled.iter().filter(|&&s| partial_match(&p.predicted, &p.gold, s)).count();
        complete += c as f64 / filled.len() as f64;
        partial += q as f64 / filled.len() as f64;
        n += 1;
    }
    if n == 0 {
        return Ok(MatchRates {
            complete: 1.0,
            partial: 1.0,
            goals_scored: 0,
        });
    }
    Ok(MatchRates {
        complete: complete / n as f64,
        partial: partial / n as f64,
        goals_scored: n,
    })
}

/// Number of the ten attributes matched completely, counting slots that are
/// unfilled in both as matched.
pub fn attributes_correct(pred: &BeliefState, gold: &BeliefState) -> usize {
    SlotName::ALL.iter().filter(|&&s| complete_match(pred, gold, s)).count()
}

/// Percentage of goals with at least `k` correct attributes.
pub fn correctness_at_k(preds: &[GoalPrediction], k: usize) -> Result<f64> {
    if k > SlotName::ALL.len() {
        return Err(EvalError::OutOfRange(format!("k = {k}, must be within 0..=10")));
    }
    if preds.is_empty() {
        return Err(EvalError::EmptyInput("no goal predictions".into()));
    }
    let correct = preds
        .iter()
        .filter(|p| attributes_correct(&p.predicted, &p.gold) >= k)
        .count();
    Ok(100.0 * correct as f64 / preds.len() as f64)
}

/// correctness@k for every k in 0..=10.
pub fn correctness_table(preds: &[GoalPrediction]) -> Result<Vec<f64>> {
    (0..=SlotName::ALL.len()).map(|k| correctness_at_k(preds, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn goal(pairs: &[(SlotName, &str)]) -> BeliefState {
        let mut b = BeliefState::new();
        for (s, v) in pairs {
            b.push(*s, v).unwrap();
        }
        b
    }

    fn pred(p: BeliefState, g: BeliefState) -> GoalPrediction {
        GoalPrediction {
            week_id: "w".into(),
            point: SnapshotPoint::Backward,
            predicted: p,
            gold: g,
        }
    }

    #[test]
    fn dayname_subset_is_partial_only() {
        use SlotName::*;
        let g = goal(&[(Dayname, "Mon"), (Dayname, "Tue")]);
        let p = goal(&[(Dayname, "mon")]);
        let r = match_rates(&[pred(p, g)]).unwrap();
        assert_eq!((r.complete, r.partial), (0.0, 1.0));
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let g = goal(&[(SlotName::Activity, "walk")]);
        let r = match_rates(&[pred(BeliefState::new(), g)]).unwrap();
        assert_eq!((r.complete, r.partial), (0.0, 0.0));
        assert!(match_rates(&[]).is_err());
    }

    #[test]
    fn correctness_nine_and_eight() {
        use SlotName::*;
        let full: Vec<(SlotName, &str)> = SlotName::ALL.iter().map(|&s| (s, if s == Score { "8" } else { "x" })).collect();
        let gold = goal(&full);
        let nine = goal(&full[..9]);
        let eight = goal(&full[..8]);
        let preds = [pred(nine, gold.clone()), pred(eight, gold)];
        assert_eq!(correctness_at_k(&preds, 9).unwrap(), 50.0);
        assert_eq!(correctness_at_k(&preds, 0).unwrap(), 100.0);
        assert!(correctness_at_k(&preds, 11).is_err());
    }
}
