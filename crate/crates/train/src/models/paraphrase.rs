//! Distributional word-substitution paraphraser.

use std::collections::{BTreeMap, BTreeSet};

use goalcoach_core::backend::{Backend, BackendConfig, BackendKind, BackendResult, BackendSpec, Paraphraser};
use goalcoach_core::text::tokenize;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::artifact::{hash_records, Model, Trained};
use crate::error::{Result, TrainError};
use crate::recipe::TrainRecipe;

/// Context buckets larger than this are too generic to signal similarity.
const MAX_BUCKET: usize = 24;

fn eligible(w: &str) -> bool {
    w.len() > 2 && w.chars().all(|c| c.is_ascii_alphabetic())
}

/// Replaces one word with a substitute seen in enough of the same
/// (left, right) contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionParaphraser {
    pub config: BackendConfig,
    pub substitutes: BTreeMap<String, Vec<String>>,
}

impl SubstitutionParaphraser {
    pub fn fit(texts: &[String], min_count: u32, config: BackendConfig) -> Self {
        let mut buckets: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for t in texts {
            let words: Vec<String> = tokenize(t).into_iter().map(|tok| tok.text.to_lowercase()).collect();
            for i in 0..words.len() {
                if !eligible(&words[i]) {
                    continue;
                }
                let left = if i == 0 { "<s>".to_string() } else { words[i - 1].clone() };
                let right = words.get(i + 1).cloned().unwrap_or_else(|| "</s>".into());
                buckets.entry((left, right)).or_default().insert(words[i].clone());
            }
        }
        let mut shared: BTreeMap<(String, String), u32> = BTreeMap::new();
        for ws in buckets.values().filter(|ws| ws.len() > 1 && ws.len() <= MAX_BUCKET) {
            let ws: Vec<&String> = ws.iter().collect();
            for a in 0..ws.len() {
                for b in a + 1..ws.len() {
                    *shared.entry((ws[a].clone(), ws[b].clone())).or_default() += 1;
                }
            }
        }
        let mut substitutes: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for ((a, b), n) in shared {
            if n >= min_count.max(1) {
                substitutes.entry(a.clone()).or_default().push(b.clone());
                substitutes.entry(b).or_default().push(a);
            }
        }
        for v in substitutes.values_mut() {
            v.sort();
        }
        SubstitutionParaphraser { config, substitutes }
    }
}

fn match_case(original: &str, replacement: &str) -> String {
    if original.chars().next().is_some_and(|c| c.is_uppercase()) {
        let mut c = replacement.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    } else {
        replacement.to_string()
    }
}

impl Backend for SubstitutionParaphraser {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::Paraphraser,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl Paraphraser for SubstitutionParaphraser {
    fn paraphrase(&self, text: &str, rng: &mut dyn RngCore) -> BackendResult<String> {
        let tokens = tokenize(text);
        let sites: Vec<(usize, &Vec<String>)> = tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| self.substitutes.get(&t.text.to_lowercase()).map(|s| (i, s)))
            .collect();
        if sites.is_empty() {
            return Ok(text.to_string());
        }
        let (i, subs) = sites[rng.gen_range(0..sites.len())];
        let sub = &subs[rng.gen_range(0..subs.len())];
        let t = &tokens[i];
        Ok(format!("{}{}{}", &text[..t.start], match_case(&t.text, sub), &text[t.end..]))
    }
}

impl Model for SubstitutionParaphraser {
    const KIND: BackendKind = BackendKind::Paraphraser;
    const IDENTITY: &'static str = "substitution-paraphraser";
    type Meta = SubstitutionParaphraser;

    fn to_parts(&self) -> (Self, Vec<f32>) {
        (self.clone(), Vec::new())
    }

    fn from_parts(meta: Self, weights: Vec<f32>) -> std::result::Result<Self, String> {
        if !weights.is_empty() {
            return Err("paraphraser artifacts carry no weights".into());
        }
        Ok(meta)
    }
}

pub fn train_paraphraser(texts: &[String], recipe: &TrainRecipe) -> Result<Trained<SubstitutionParaphraser>> {
    recipe.validate()?;
    if texts.len() < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::Paraphraser, texts.len(), recipe.min_examples.max(1)));
    }
    let config = BackendConfig {
        max_length: None,
        decode: None,
        seed: Some(recipe.seed),
    };
    let model = SubstitutionParaphraser::fit(texts, recipe.min_count, config);
    let mut metrics = BTreeMap::new();
    metrics.insert("train_texts".into(), texts.len() as f64);
    metrics.insert("substitutable_words".into(), model.substitutes.len() as f64);
    let spec = model.spec();
    Ok(Trained::new(model, spec, recipe, hash_records(texts), metrics))
}
