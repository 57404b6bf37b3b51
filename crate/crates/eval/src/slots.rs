//! Span-level precision, recall and F1.

use std::collections::HashMap;

use goalcoach_core::text::normalize_value;
use goalcoach_core::{SlotName, SlotSpan};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// From raw counts. No predictions and no gold spans is a perfect score;
    /// any other zero denominator gives 0.
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> Prf {
        if predicted == 0 && gold == 0 {
            return Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let p = if predicted == 0 { 0.0 } else { matched as f64 / predicted as f64 };
        let r = if gold == 0 { 0.0 } else { matched as f64 / gold as f64 };
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Prf {
            precision: p,
            recall: r,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCounts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SpanCounts {
    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.matched, self.predicted, self.gold)
    }
}

fn keyed(spans: &[SlotSpan]) -> HashMap<(SlotName, String), usize> {
    let mut m = HashMap::new();
    for s in spans {
        *m.entry((s.slot, normalize_value(&s.value))).or_insert(0) += 1;
    }
    m
}

/// Exact-match counts for one utterance: a predicted span matches a gold
/// span with the same slot and normalized value (multiset intersection).
pub fn utterance_counts(pred: &[SlotSpan], gold: &[SlotSpan]) -> SpanCounts {
    let g = keyed(gold);
    let matched = keyed(pred)
        .into_iter()
        .map(|(k, n)| n.min(g.get(&k).copied().unwrap_or(0)))
        .sum();
    SpanCounts {
        matched,
        predicted: pred.len(),
        gold: gold.len(),
    }
}

/// Micro-averaged over utterances; `pred[i]` and `gold[i]` describe the same utterance.
pub fn slot_counts(pred: &[Vec<SlotSpan>], gold: &[Vec<SlotSpan>]) -> Result<SpanCounts> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    let mut total = SpanCounts::default();
    for (p, g) in pred.iter().zip(gold) {
        let c = utterance_counts(p, g);
        total.matched += c.matched;
        total.predicted += c.predicted;
        total.gold += c.gold;
    }
    Ok(total)
}

pub fn slot_prf(pred: &[Vec<SlotSpan>], gold: &[Vec<SlotSpan>]) -> Result<Prf> {
    Ok(slot_counts(pred, gold)?.prf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(slot: SlotName, v: &str) -> SlotSpan {
        SlotSpan {
            slot,
            value: v.into(),
            token_start: 0,
            token_end: 1,
        }
    }

    #[test]
    fn subset_prediction() {
        let gold = vec![vec![span(SlotName::Activity, "walk"), span(SlotName::Dayname, "Monday")]];
        let pred = vec![vec![span(SlotName::Activity, "Walk")]];
        let prf = slot_prf(&pred, &gold).unwrap();
        assert_eq!((prf.precision, prf.recall), (1.0, 0.5));
        assert!((prf.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn edge_cases() {
        assert_eq!(slot_prf(&[vec![]], &[vec![]]).unwrap().f1, 1.0);
        let p = slot_prf(&[vec![span(SlotName::Time, "at night")]], &[vec![span(SlotName::Score, "8")]]).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
        assert!(slot_prf(&[], &[vec![]]).is_err());
        // slot must agree as well as value
        let p = slot_prf(&[vec![span(SlotName::Time, "8")]], &[vec![span(SlotName::Score, "8")]]).unwrap();
        assert_eq!(p.f1, 0.0);
    }
}
