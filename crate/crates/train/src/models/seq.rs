//! One model serving both text-to-text tasks: a stage head and a response
//! head over a fixed inventory of delexicalized responses. The task is read
//! from the input prefix, exactly as a prefix-conditioned seq2seq model
//! would receive it.

use std::collections::{BTreeMap, HashMap};

use goalcoach_core::backend::rule::goal_complete;
use goalcoach_core::backend::{Backend, BackendConfig, BackendError, BackendKind, BackendResult, BackendSpec, DecodeParams, SeqBackend};
use goalcoach_core::nlg_hc::{split_input, Task};
use goalcoach_core::text::normalized_tokens;
use goalcoach_core::{Speaker, Stage};
use goalcoach_corpus::examples::seq_examples;
use goalcoach_corpus::{Corpus, SeqExample};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{hash_records, Model, Trained};
use crate::data::{accuracy, best_of_sweep, split_weeks};
use crate::error::{Result, TrainError};
use crate::features::{bag_of_ngrams, FeatureIndex};
use crate::linear::{argmax, fit, softmax, Linear, Target};
use crate::recipe::TrainRecipe;
use crate::sample::choose;

fn words(text: &str) -> Vec<String> {
    normalized_tokens(text)
        .into_iter()
        .map(|w| if w.chars().any(|c| c.is_ascii_digit()) { "#".to_string() } else { w })
        .collect()
}

/// Features of a rendered input (either task).
pub fn input_features(input: &str, max_len: usize) -> std::result::Result<(Task, Vec<String>), String> {
    let parsed = split_input(input).map_err(|e| e.to_string())?;
    let belief = parsed.belief().map_err(|e| e.to_string())?;
    let stage = parsed.stage_token.clone();
    let turns = parsed.turns();
    let last = |sp: Speaker| turns.iter().rev().find(|(s, _)| *s == sp).map(|(_, t)| t.as_str()).unwrap_or("");
    let mut f = vec!["bias".to_string(), format!("st={stage}")];
    let mut state = Vec::new();
    for slot in belief.filled_slots() {
        state.push(format!("filled={}", slot.as_str()));
    }
    state.push(format!("complete={}", goal_complete(&belief)));
    let mut budget = max_len;
    for (ns, sp) in [("p", Speaker::Patient), ("c", Speaker::Coach)] {
        let mut w = words(last(sp));
        w.truncate(budget);
        budget -= w.len();
        let mut grams = Vec::new();
        bag_of_ngrams(ns, &w, &mut grams);
        for g in &grams {
            f.push(format!("{g}|st={stage}"));
        }
        f.extend(grams);
    }
    for s in &state {
        f.push(format!("{s}|st={stage}"));
    }
    f.extend(state);
    Ok((parsed.task, f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultitaskSeq {
    pub config: BackendConfig,
    pub features: FeatureIndex,
    pub stage_head: Linear,
    pub responses: Vec<String>,
    pub response_head: Linear,
}

#[derive(Serialize, Deserialize)]
pub struct SeqMeta {
    config: BackendConfig,
    features: FeatureIndex,
    responses: Vec<String>,
}

impl MultitaskSeq {
    fn encode(&self, input: &str) -> BackendResult<(Task, Vec<u32>)> {
        let (task, f) = input_features(input, self.config.max_length.unwrap_or(usize::MAX))
            .map_err(|e| BackendError::invalid(Self::IDENTITY, e))?;
        Ok((task, self.features.encode(&f)))
    }

    pub fn stage_probs(&self, x: &[u32]) -> Vec<f32> {
        softmax(&self.stage_head.scores(x))
    }

    pub fn response_probs(&self, x: &[u32]) -> Vec<f32> {
        softmax(&self.response_head.scores(x))
    }
}

impl Backend for MultitaskSeq {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::SeqMultitask,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl SeqBackend for MultitaskSeq {
    fn generate(&self, input: &str, decode: &DecodeParams, rng: &mut dyn RngCore) -> BackendResult<String> {
        let (task, x) = self.encode(input)?;
        match task {
            Task::PredictStage => Ok(Stage::ALL[argmax(&self.stage_probs(&x))].token().to_string()),
            Task::GenerateResponse => {
                let probs: Vec<f64> = self.response_probs(&x).into_iter().map(f64::from).collect();
                let i = choose(&probs, decode, rng).ok_or_else(|| BackendError::failed(Self::IDENTITY, "empty response inventory"))?;
                Ok(self.responses[i].clone())
            }
        }
    }
}

impl Model for MultitaskSeq {
    const KIND: BackendKind = BackendKind::SeqMultitask;
    const IDENTITY: &'static str = "multitask-linear-seq";
    type Meta = SeqMeta;

    fn to_parts(&self) -> (SeqMeta, Vec<f32>) {
        let mut w = self.stage_head.weights.clone();
        w.extend_from_slice(&self.response_head.weights);
        (
            SeqMeta {
                config: self.config.clone(),
                features: self.features.clone(),
                responses: self.responses.clone(),
            },
            w,
        )
    }

    fn from_parts(meta: SeqMeta, mut weights: Vec<f32>) -> std::result::Result<Self, String> {
        let n = meta.features.len();
        let stage_len = (n + 1) * Stage::ALL.len();
        if meta.responses.is_empty() || weights.len() != stage_len + (n + 1) * meta.responses.len() {
            return Err("weight count does not match features and inventory".into());
        }
        let resp = weights.split_off(stage_len);
        Ok(MultitaskSeq {
            stage_head: Linear::from_weights(n, Stage::ALL.len(), weights).ok_or("bad stage head")?,
            response_head: Linear::from_weights(n, meta.responses.len(), resp).ok_or("bad response head")?,
            config: meta.config,
            features: meta.features,
            responses: meta.responses,
        })
    }
}

fn stage_index(target: &str) -> Option<usize> {
    Stage::from_token(target).and_then(|s| Stage::ALL.iter().position(|x| *x == s))
}

/// Most frequent targets first, ties broken by text, capped at `cap`.
pub fn response_inventory(examples: &[SeqExample], cap: usize) -> Vec<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for e in examples.iter().filter(|e| e.task == Task::GenerateResponse) {
        *counts.entry(e.target.as_str()).or_default() += 1;
    }
    let mut v: Vec<(&str, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    v.into_iter().take(cap).map(|(t, _)| t.to_string()).collect()
}

pub fn fit_seq(train: &[SeqExample], recipe: &TrainRecipe) -> Result<MultitaskSeq> {
    let responses = response_inventory(train, recipe.response_inventory);
    if responses.is_empty() {
        return Err(TrainError::too_small(BackendKind::SeqMultitask, 0, 1));
    }
    let lookup: HashMap<&str, usize> = responses.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let mut feats = Vec::with_capacity(train.len());
    for e in train {
        let (_, f) = input_features(&e.input, recipe.max_length).map_err(TrainError::Schema)?;
        feats.push(f);
    }
    let features = FeatureIndex::build(&feats, recipe.min_count);
    let (mut stage_data, mut resp_data) = (Vec::new(), Vec::new());
    for (e, f) in train.iter().zip(&feats) {
        let x = features.encode(f);
        match e.task {
            Task::PredictStage => stage_data.push((x, Target::Class(stage_index(&e.target).expect("checked by caller")))),
            Task::GenerateResponse => {
                if let Some(&i) = lookup.get(e.target.as_str()) {
                    resp_data.push((x, Target::Class(i)));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let mut stage_head = Linear::zeros(features.len(), Stage::ALL.len());
    fit(&mut stage_head, &stage_data, recipe, &mut rng);
    let mut response_head = Linear::zeros(features.len(), responses.len());
    fit(&mut response_head, &resp_data, recipe, &mut rng);
    Ok(MultitaskSeq {
        config: BackendConfig {
            max_length: Some(recipe.max_length),
            decode: recipe.decode,
            seed: Some(recipe.seed),
        },
        features,
        stage_head,
        responses,
        response_head,
    })
}

/// (stage accuracy, response exact-match rate) under greedy decoding.
pub fn seq_scores(m: &MultitaskSeq, examples: &[SeqExample]) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let greedy = DecodeParams::greedy(m.config.max_length.unwrap_or(128));
    let (mut sh, mut sn, mut rh, mut rn) = (0, 0, 0, 0);
    for e in examples {
        let out = m.generate(&e.input, &greedy, &mut rng).unwrap_or_default();
        match e.task {
            Task::PredictStage => {
                sn += 1;
                sh += usize::from(out == e.target);
            }
            Task::GenerateResponse => {
                rn += 1;
                rh += usize::from(out == e.target);
            }
        }
    }
    (accuracy(sh, sn), accuracy(rh, rn))
}

fn check(examples: &[SeqExample]) -> Result<()> {
    for e in examples.iter().filter(|e| e.task == Task::PredictStage) {
        if stage_index(&e.target).is_none() {
            return Err(TrainError::Schema(format!("stage target `{}` is not a stage label", e.target)));
        }
    }
    Ok(())
}

pub fn train_seq_multitask(corpus: &Corpus, recipe: &TrainRecipe) -> Result<Trained<MultitaskSeq>> {
    recipe.validate()?;
    let split = split_weeks(corpus, recipe.dev_fraction, recipe.seed);
    let mut train: Vec<SeqExample> = split.train.iter().flat_map(|w| seq_examples(w)).collect();
    let mut dev: Vec<SeqExample> = split.dev.iter().flat_map(|w| seq_examples(w)).collect();
    let test: Vec<SeqExample> = split.test.iter().flat_map(|w| seq_examples(w)).collect();
    check(&train)?;
    check(&dev)?;
    check(&test)?;
    let total = train.len() + dev.len();
    if total < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::SeqMultitask, total, recipe.min_examples.max(1)));
    }
    if train.is_empty() {
        train = std::mem::take(&mut dev);
    }
    let (model, chosen) = best_of_sweep(recipe, |r| {
        let m = fit_seq(&train, r)?;
        let score = (!dev.is_empty()).then(|| seq_scores(&m, &dev).0);
        Ok((m, score))
    })?;
    let mut metrics = BTreeMap::new();
    metrics.insert("train_examples".into(), train.len() as f64);
    metrics.insert("response_inventory".into(), model.responses.len() as f64);
    if !dev.is_empty() {
        let (s, r) = seq_scores(&model, &dev);
        metrics.insert("dev_stage_accuracy".into(), s);
        metrics.insert("dev_response_exact".into(), r);
    }
    if !test.is_empty() {
        let (s, r) = seq_scores(&model, &test);
        metrics.insert("test_stage_accuracy".into(), s);
        metrics.insert("test_response_exact".into(), r);
    }
    let records: Vec<_> = corpus.utterances().map(|u| u.to_record()).collect();
    let spec = model.spec();
    Ok(Trained::new(model, spec, &chosen, hash_records(&records), metrics))
}
