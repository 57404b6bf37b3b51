//! Model-based scores: empathy difference, perplexity, and pluggable
//! pairwise scorers.

use goalcoach_core::backend::{EmpathyRegressor, LmScorer};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// `mean(score(candidates)) - mean(score(references))`.
pub fn empathy_delta(candidates: &[String], references: &[String], scorer: &dyn EmpathyRegressor) -> Result<f64> {
    if candidates.is_empty() || references.is_empty() {
        return Err(EvalError::EmptyInput("empathy delta needs candidates and references".into()));
    }
    Ok(mean_score(candidates, scorer)? - mean_score(references, scorer)?)
}

pub fn mean_score(texts: &[String], scorer: &dyn EmpathyRegressor) -> Result<f64> {
    if texts.is_empty() {
        return Err(EvalError::EmptyInput("no texts to score".into()));
    }
    let mut sum = 0.0;
    for t in texts {
        sum += scorer.score(t)?;
    }
    Ok(sum / texts.len() as f64)
}

/// `exp` of the mean per-token negative log-likelihood over all candidates,
/// tokenized by the scorer itself.
pub fn perplexity(candidates: &[String], lm: &dyn LmScorer) -> Result<f64> {
    if candidates.is_empty() {
        return Err(EvalError::EmptyInput("no candidates".into()));
    }
    let (mut nll, mut n) = (0.0, 0usize);
    for c in candidates {
        let lps = lm.token_log_probs(c)?;
        nll -= lps.iter().sum::<f64>();
        n += lps.len();
    }
    if n == 0 {
        return Err(EvalError::EmptyInput("candidates contain no tokens".into()));
    }
    Ok((nll / n as f64).exp())
}

/// Reference-based scorer plugin (e.g. an embedding similarity metric).
pub trait PairScorer: Send + Sync {
    fn name(&self) -> String;
    fn score(&self, candidate: &str, reference: &str) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginScore {
    pub name: String,
    pub mean: f64,
}

pub fn plugin_mean(candidates: &[String], references: &[String], scorer: &dyn PairScorer) -> Result<PluginScore> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(EvalError::EmptyInput("no candidate/reference pairs".into()));
    }
    let mut sum = 0.0;
    for (c, r) in candidates.iter().zip(references) {
        sum += scorer.score(c, r)?;
    }
    Ok(PluginScore {
        name: scorer.name(),
        mean: sum / candidates.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use goalcoach_core::backend::rule::{ConstantRegressor, UniformLm};
    use goalcoach_core::backend::testing::{DegenerateLm, FailingBackend};

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn closed_forms() {
        let c = v(&["hello there", "how are you"]);
        assert!((perplexity(&c, &UniformLm { vocab_size: 37 }).unwrap() - 37.0).abs() < 1e-9);
        assert_eq!(perplexity(&c, &DegenerateLm).unwrap(), 1.0);
        assert!(perplexity(&[], &DegenerateLm).is_err());
        assert_eq!(empathy_delta(&c, &v(&["x"]), &ConstantRegressor::default()).unwrap(), 0.0);
        assert!(matches!(perplexity(&c, &FailingBackend), Err(EvalError::Backend(_))));
    }
}
