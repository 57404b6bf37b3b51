//! Corpus BLEU-1..4 over lowercased pipeline tokens.
//!
//! Unigram precision is unsmoothed; higher orders use add-one on both the
//! clipped match count and the candidate n-gram count. Brevity penalty is
//! computed once over the whole corpus.

use std::collections::HashMap;

use goalcoach_core::text::tokenize_words;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScores {
    /// BLEU-1 to BLEU-4.
    pub bleu: [f64; MAX_ORDER],
    pub average: f64,
    pub candidate_length: usize,
    pub reference_length: usize,
}

fn tokens(text: &str) -> Vec<String> {
    tokenize_words(&text.to_lowercase())
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

pub fn bleu(candidates: &[String], references: &[String]) -> Result<BleuScores> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(EvalError::EmptyInput("no candidate/reference pairs".into()));
    }
    let mut matches = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let (mut c_len, mut r_len) = (0, 0);
    for (c, r) in candidates.iter().zip(references) {
        let (ct, rt) = (tokens(c), tokens(r));
        c_len += ct.len();
        r_len += rt.len();
        for n in 1..=MAX_ORDER {
            let rc = ngram_counts(&rt, n);
            for (g, k) in ngram_counts(&ct, n) {
                matches[n - 1] += k.min(rc.get(g).copied().unwrap_or(0));
            }
            totals[n - 1] += ct.len().saturating_sub(n - 1);
        }
    }
    let mut precisions = [0.0; MAX_ORDER];
    for i in 0..MAX_ORDER {
        precisions[i] = if i == 0 {
            if totals[0] == 0 {
                0.0
            } else {
                matches[0] as f64 / totals[0] as f64
            }
        } else {
            (matches[i] + 1) as f64 / (totals[i] + 1) as f64
        };
    }
    let bp = if c_len == 0 {
        0.0
    } else if c_len > r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    let mut scores = [0.0; MAX_ORDER];
    for n in 1..=MAX_ORDER {
        scores[n - 1] = if precisions[..n].contains(&0.0) || bp == 0.0 {
            0.0
        } else {
            bp * (precisions[..n].iter().map(|p| p.ln()).sum::<f64>() / n as f64).exp()
        };
    }
    Ok(BleuScores {
        bleu: scores,
        average: scores.iter().sum::<f64>() / MAX_ORDER as f64,
        candidate_length: c_len,
        reference_length: r_len,
    })
}

/// Mean of corpus BLEU-1..4.
pub fn bleu_avg(candidates: &[String], references: &[String]) -> Result<f64> {
    Ok(bleu(candidates, references)?.average)
}
