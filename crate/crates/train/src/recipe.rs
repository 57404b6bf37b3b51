//! Training recipes. `reference` gives the published configuration for each
//! component; `cpu_small` is a quick configuration for the linear models
//! shipped here.

use goalcoach_core::backend::{BackendKind, DecodeParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    AdamW,
}

/// Optional hyperparameter grid; empty axes keep the recipe value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub epochs: Vec<u32>,
    pub learning_rate: Vec<f64>,
    pub batch_size: Vec<usize>,
}

impl Sweep {
    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty() && self.learning_rate.is_empty() && self.batch_size.is_empty()
    }
}

/// Second-stage adaptation on a small in-domain set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FewShot {
    pub examples: usize,
    pub epochs: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRecipe {
    pub kind: BackendKind,
    /// Backbone named by the reference configuration. Informational: the
    /// models trained here are linear or count-based.
    pub model_family: String,
    pub max_length: usize,
    pub epochs: u32,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub warmup_steps: usize,
    pub optimizer: Optimizer,
    pub weight_decay: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode: Option<DecodeParams>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub few_shot: Option<FewShot>,
    /// Joint sentence-level head for the tagger. Not supported.
    pub joint_head: bool,
    /// Share of training weeks (or examples) held out for dev metrics.
    pub dev_fraction: f64,
    /// Training-set floor below which training refuses to run.
    pub min_examples: usize,
    /// Augmented variants per slot-bearing utterance (tagger only).
    pub augment_variants: usize,
    /// Features seen fewer times than this are dropped.
    pub min_count: u32,
    /// Response inventory cap for the sequence model.
    pub response_inventory: usize,
    /// n-gram order for count-based language models.
    pub ngram_order: usize,
    /// Additive smoothing for count-based models.
    pub smoothing: f64,
}

fn base(kind: BackendKind, family: &str) -> TrainRecipe {
    TrainRecipe {
        kind,
        model_family: family.into(),
        max_length: 96,
        epochs: 1,
        learning_rate: 5e-5,
        batch_size: 32,
        warmup_steps: 0,
        optimizer: Optimizer::Adam,
        weight_decay: 0.0,
        decode: None,
        seed: 42,
        sweep: None,
        few_shot: None,
        joint_head: false,
        dev_fraction: 0.1,
        min_examples: 20,
        augment_variants: 0,
        min_count: 1,
        response_inventory: 256,
        ngram_order: 3,
        smoothing: 0.1,
    }
}

impl TrainRecipe {
    /// Published configuration for `kind`. Kinds without a published
    /// configuration get conservative defaults.
    pub fn reference(kind: BackendKind) -> Self {
        use BackendKind::*;
        match kind {
            SlotTagger => TrainRecipe {
                max_length: 50,
                epochs: 5,
                learning_rate: 5e-5,
                batch_size: 32,
                min_examples: 50,
                sweep: Some(Sweep {
                    epochs: vec![5, 7, 10],
                    learning_rate: vec![2e-5, 5e-5],
                    batch_size: vec![32, 64],
                }),
                ..base(kind, "bert-base")
            },
            Carryover => TrainRecipe {
                max_length: 96,
                epochs: 7,
                learning_rate: 5e-5,
                batch_size: 16,
                min_examples: 1,
                sweep: Some(Sweep {
                    epochs: vec![5, 7, 10],
                    learning_rate: vec![2e-5, 5e-5],
                    batch_size: vec![16, 32, 64],
                }),
                ..base(kind, "bert-base")
            },
            SeqMultitask => TrainRecipe {
                max_length: 128,
                epochs: 10,
                learning_rate: 1e-4,
                batch_size: 64,
                warmup_steps: 400,
                optimizer: Optimizer::AdamW,
                decode: Some(DecodeParams::RESPONSE),
                ..base(kind, "t5-base")
            },
            CausalLm => TrainRecipe {
                max_length: 96,
                epochs: 10,
                learning_rate: 1e-4,
                batch_size: 32,
                warmup_steps: 400,
                decode: Some(DecodeParams::EMPATHY),
                few_shot: Some(FewShot { examples: 64, epochs: 1 }),
                ..base(kind, "gpt2")
            },
            EmotionClassifier => TrainRecipe {
                max_length: 96,
                epochs: 8,
                learning_rate: 4e-5,
                batch_size: 32,
                ..base(kind, "bert-base")
            },
            MechanismLabeler | EmpathyRegressor => TrainRecipe {
                epochs: 4,
                learning_rate: 2e-5,
                ..base(kind, "bert-base")
            },
            LmScorer => TrainRecipe {
                ngram_order: 2,
                ..base(kind, "gpt2")
            },
            Paraphraser => TrainRecipe {
                min_count: 2,
                ..base(kind, "t5-base")
            },
        }
    }

    /// Small-scale configuration for CPU runs of the linear models.
    pub fn cpu_small(kind: BackendKind) -> Self {
        use BackendKind::*;
        let r = Self::reference(kind);
        let linear = |epochs: u32, learning_rate: f64, batch_size: usize| TrainRecipe {
            epochs,
            learning_rate,
            batch_size,
            warmup_steps: 0,
            sweep: None,
            ..r.clone()
        };
        match kind {
            SlotTagger => linear(8, 0.05, 8),
            Carryover => linear(30, 0.05, 8),
            SeqMultitask => linear(15, 0.05, 16),
            EmotionClassifier => linear(10, 0.05, 16),
            MechanismLabeler => linear(10, 0.05, 16),
            EmpathyRegressor => linear(20, 0.02, 16),
            CausalLm | LmScorer | Paraphraser => TrainRecipe { sweep: None, ..r },
        }
    }

    /// Parse a recipe file: a JSON object whose fields override the
    /// reference recipe (or `cpu_small` when `"base": "cpu_small"`).
    /// `kind` may be omitted when the caller supplies it.
    pub fn from_json(text: &str, kind: Option<BackendKind>) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| TrainError::InvalidRecipe(e.to_string()))?;
        let Value::Object(mut overrides) = value else {
            return Err(TrainError::InvalidRecipe("recipe must be a JSON object".into()));
        };
        let file_kind = match overrides.get("kind") {
            Some(k) => Some(
                serde_json::from_value::<BackendKind>(k.clone())
                    .map_err(|e| TrainError::InvalidRecipe(format!("kind: {e}")))?,
            ),
            None => None,
        };
        let kind = match (file_kind, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(TrainError::InvalidRecipe(format!("recipe is for {a}, asked to train {b}")))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(TrainError::InvalidRecipe("recipe does not name a kind".into())),
        };
        let start = match overrides.remove("base").as_ref().and_then(Value::as_str) {
            None | Some("reference") => Self::reference(kind),
            Some("cpu_small") => Self::cpu_small(kind),
            Some(other) => return Err(TrainError::InvalidRecipe(format!("unknown base `{other}`"))),
        };
        let Value::Object(mut merged) = serde_json::to_value(&start).expect("recipe serializes") else {
            unreachable!("recipe serializes to an object")
        };
        merged.extend(overrides);
        let recipe: TrainRecipe =
            serde_json::from_value(Value::Object(merged)).map_err(|e| TrainError::InvalidRecipe(e.to_string()))?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TrainError::InvalidRecipe(m));
        if self.joint_head {
            return bad("the joint sentence-label head is not supported; set joint_head to false".into());
        }
        if self.epochs == 0 || self.batch_size == 0 || self.max_length == 0 {
            return bad("epochs, batch_size and max_length must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight_decay {} must be non-negative", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return bad(format!("dev_fraction {} must be in [0, 1)", self.dev_fraction));
        }
        if !(self.smoothing.is_finite() && self.smoothing > 0.0) {
            return bad(format!("smoothing {} must be positive", self.smoothing));
        }
        if self.ngram_order == 0 || self.response_inventory == 0 {
            return bad("ngram_order and response_inventory must be positive".into());
        }
        if let Some(d) = self.decode {
            if d.top_k == 0 || !(d.top_p > 0.0 && d.top_p <= 1.0) || d.max_tokens == 0 {
                return bad(format!("bad decode parameters {d:?}"));
            }
        }
        if let Some(f) = self.few_shot {
            if f.examples == 0 || f.epochs == 0 {
                return bad("few_shot needs positive examples and epochs".into());
            }
        }
        Ok(())
    }

    /// One recipe per grid point (the recipe itself when there is no sweep).
    pub fn expand_sweep(&self) -> Vec<TrainRecipe> {
        let Some(sweep) = self.sweep.as_ref().filter(|s| !s.is_empty()) else {
            return vec![self.clone()];
        };
        let mut out = Vec::new();
        for &epochs in &or(&sweep.epochs, self.epochs) {
            for &learning_rate in &or(&sweep.learning_rate, self.learning_rate) {
                for &batch_size in &or(&sweep.batch_size, self.batch_size) {
                    out.push(TrainRecipe {
                        epochs,
                        learning_rate,
                        batch_size,
                        sweep: None,
                        ..self.clone()
                    });
                }
            }
        }
        out
    }

    /// Recipe with the sweep removed, as recorded in a manifest.
    pub fn without_sweep(&self) -> TrainRecipe {
        TrainRecipe {
            sweep: None,
            ..self.clone()
        }
    }
}

fn or<T: Clone>(values: &[T], default: T) -> Vec<T> {
    if values.is_empty() {
        vec![default]
    } else {
        values.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use BackendKind::*;

    #[test]
    fn reference_values() {
        let t = TrainRecipe::reference(SlotTagger);
        assert_eq!((t.epochs, t.learning_rate, t.batch_size, t.max_length), (5, 5e-5, 32, 50));
        assert!(!t.joint_head);
        assert_eq!(t.min_examples, 50);
        let c = TrainRecipe::reference(Carryover);
        assert_eq!((c.epochs, c.learning_rate, c.batch_size, c.max_length), (7, 5e-5, 16, 96));
        let s = TrainRecipe::reference(SeqMultitask);
        assert_eq!((s.epochs, s.learning_rate, s.batch_size, s.max_length, s.warmup_steps), (10, 1e-4, 64, 128, 400));
        assert_eq!(s.optimizer, Optimizer::AdamW);
        let d = s.decode.unwrap();
        assert_eq!((d.top_k, d.top_p), (50, 0.95));
        let g = TrainRecipe::reference(CausalLm);
        assert_eq!((g.epochs, g.learning_rate, g.batch_size, g.max_length, g.warmup_steps), (10, 1e-4, 32, 96, 400));
        assert_eq!(g.few_shot, Some(FewShot { examples: 64, epochs: 1 }));
        let e = TrainRecipe::reference(EmotionClassifier);
        assert_eq!((e.epochs, e.learning_rate, e.batch_size, e.max_length), (8, 4e-5, 32, 96));
        for k in BackendKind::ALL {
            TrainRecipe::reference(k).validate().unwrap();
            TrainRecipe::cpu_small(k).validate().unwrap();
        }
    }

    #[test]
    fn grids_expand() {
        assert_eq!(TrainRecipe::reference(SlotTagger).expand_sweep().len(), 12);
        assert_eq!(TrainRecipe::reference(Carryover).expand_sweep().len(), 18);
        assert_eq!(TrainRecipe::reference(SeqMultitask).expand_sweep().len(), 1);
    }

    #[test]
    fn file_overrides() {
        let r = TrainRecipe::from_json(r#"{"epochs": 3, "base": "cpu_small"}"#, Some(Carryover)).unwrap();
        assert_eq!(r.epochs, 3);
        assert_eq!(r.learning_rate, TrainRecipe::cpu_small(Carryover).learning_rate);
        assert!(TrainRecipe::from_json(r#"{"joint_head": true}"#, Some(SlotTagger)).is_err());
        assert!(TrainRecipe::from_json(r#"{"epoch": 3}"#, Some(SlotTagger)).is_err());
        assert!(TrainRecipe::from_json(r#"{"kind": "carryover"}"#, Some(SlotTagger)).is_err());
        assert!(TrainRecipe::from_json("{}", None).is_err());
        assert_eq!(TrainRecipe::from_json(r#"{"kind": "slot_tagger"}"#, None).unwrap(), TrainRecipe::reference(SlotTagger));
    }
}
