//! Count-based language models: the mechanism-conditioned empathetic
//! generator and the bigram fluency scorer.

use std::collections::{BTreeMap, HashMap};

use goalcoach_core::backend::rule::TemplateEmpathyLm;
use goalcoach_core::backend::{
    Backend, BackendConfig, BackendError, BackendKind, BackendResult, BackendSpec, CausalLm, DecodeParams, LmScorer,
};
use goalcoach_core::empathy::EOS;
use goalcoach_core::text::tokenize_words;
use goalcoach_core::EmpathySample;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::artifact::{hash_records, Model, Trained};
use crate::error::{Result, TrainError};
use crate::recipe::TrainRecipe;
use crate::sample::choose;

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const START: &str = "<s>";

/// Join pipeline tokens, attaching closing punctuation to the left.
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for t in tokens {
        let attach = matches!(t.as_str(), "." | "," | "!" | "?" | ";" | ":" | ")" | "…");
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramEntry {
    /// Mechanism mask; 0 is the unconditioned table.
    pub mask: u8,
    pub context: Vec<u32>,
    pub next: u32,
}

type Table = HashMap<(u8, Vec<u32>), Vec<(u32, f32)>>;

/// Response n-gram model conditioned on the mechanism set, backing off to
/// shorter contexts and then to the unconditioned table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalNgramLm {
    pub config: BackendConfig,
    pub order: usize,
    pub vocab: Vec<String>,
    pub entries: Vec<NgramEntry>,
    pub counts: Vec<f32>,
    table: Table,
}

#[derive(Serialize, Deserialize)]
pub struct NgramMeta {
    config: BackendConfig,
    order: usize,
    vocab: Vec<String>,
    entries: Vec<NgramEntry>,
}

fn build_table(entries: &[NgramEntry], counts: &[f32]) -> Table {
    let mut t: Table = HashMap::new();
    for (e, c) in entries.iter().zip(counts) {
        t.entry((e.mask, e.context.clone())).or_default().push((e.next, *c));
    }
    t
}

impl ConditionalNgramLm {
    fn distribution(&self, mask: u8, history: &[u32]) -> Option<&Vec<(u32, f32)>> {
        for n in (0..self.order).rev() {
            if history.len() < n {
                continue;
            }
            let ctx = history[history.len() - n..].to_vec();
            for m in [mask, 0] {
                if let Some(d) = self.table.get(&(m, ctx.clone())) {
                    return Some(d);
                }
            }
        }
        None
    }

    pub fn generate_tokens(&self, mask: u8, decode: &DecodeParams, rng: &mut dyn RngCore) -> Vec<String> {
        let mut history = vec![BOS_ID; self.order.saturating_sub(1)];
        let mut out = Vec::new();
        for _ in 0..decode.max_tokens {
            let Some(dist) = self.distribution(mask, &history) else { break };
            let probs: Vec<f64> = dist.iter().map(|(_, c)| *c as f64).collect();
            let Some(i) = choose(&probs, decode, rng) else { break };
            let next = dist[i].0;
            if next == EOS_ID {
                break;
            }
            out.push(self.vocab[next as usize].clone());
            history.push(next);
        }
        out
    }
}

impl Backend for ConditionalNgramLm {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::CausalLm,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl CausalLm for ConditionalNgramLm {
    fn complete(&self, prompt: &str, decode: &DecodeParams, rng: &mut dyn RngCore) -> BackendResult<String> {
        let (mechanisms, _) = TemplateEmpathyLm::parse_prompt(prompt)
            .ok_or_else(|| BackendError::invalid(Self::IDENTITY, "prompt is not `<|bos|> ... <|sep|>`"))?;
        if mechanisms.is_empty() {
            return Err(BackendError::invalid(Self::IDENTITY, "prompt has no mechanism tokens"));
        }
        let tokens = self.generate_tokens(mechanisms.mask(), decode, rng);
        Ok(format!(" {} {EOS}", detokenize(&tokens)))
    }
}

impl Model for ConditionalNgramLm {
    const KIND: BackendKind = BackendKind::CausalLm;
    const IDENTITY: &'static str = "conditional-ngram-lm";
    type Meta = NgramMeta;

    fn to_parts(&self) -> (NgramMeta, Vec<f32>) {
        (
            NgramMeta {
                config: self.config.clone(),
                order: self.order,
                vocab: self.vocab.clone(),
                entries: self.entries.clone(),
            },
            self.counts.clone(),
        )
    }

    fn from_parts(meta: NgramMeta, weights: Vec<f32>) -> std::result::Result<Self, String> {
        if weights.len() != meta.entries.len() {
            return Err("count array does not match the n-gram table".into());
        }
        if meta.entries.iter().any(|e| e.next as usize >= meta.vocab.len()) {
            return Err("n-gram entry outside the vocabulary".into());
        }
        let table = build_table(&meta.entries, &weights);
        Ok(ConditionalNgramLm {
            config: meta.config,
            order: meta.order,
            vocab: meta.vocab,
            entries: meta.entries,
            counts: weights,
            table,
        })
    }
}

struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    fn new(reserved: &[&str]) -> Self {
        let mut v = Vocab {
            words: Vec::new(),
            ids: HashMap::new(),
        };
        for r in reserved {
            v.id(r);
        }
        v
    }

    fn id(&mut self, w: &str) -> u32 {
        if let Some(&i) = self.ids.get(w) {
            return i;
        }
        let i = self.words.len() as u32;
        self.words.push(w.to_string());
        self.ids.insert(w.to_string(), i);
        i
    }
}

/// Train on encoded empathetic samples, then adapt on the few-shot set.
///
/// Counts have no notion of passes, so the adaptation is expressed as mass:
/// the few-shot set receives `few_shot.epochs / epochs` of the base set's
/// total weight.
pub fn train_empathy_lm(base: &[EmpathySample], few_shot: &[EmpathySample], recipe: &TrainRecipe) -> Result<Trained<ConditionalNgramLm>> {
    recipe.validate()?;
    if base.len() < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::CausalLm, base.len(), recipe.min_examples.max(1)));
    }
    let few_shot: &[EmpathySample] = match recipe.few_shot {
        Some(f) => &few_shot[..few_shot.len().min(f.examples)],
        None => &[],
    };
    let few_weight = match recipe.few_shot {
        Some(f) if !few_shot.is_empty() => f.epochs as f32 / recipe.epochs as f32 * base.len() as f32 / few_shot.len() as f32,
        _ => 0.0,
    };
    let mut vocab = Vocab::new(&[START, EOS]);
    let mut counts: BTreeMap<(u8, Vec<u32>, u32), f32> = BTreeMap::new();
    let order = recipe.ngram_order;
    for (samples, w) in [(base, 1.0f32), (few_shot, few_weight)] {
        for s in samples {
            let mut ids: Vec<u32> = vec![BOS_ID; order - 1];
            let mut words = tokenize_words(&s.response);
            words.truncate(recipe.max_length);
            ids.extend(words.iter().map(|t| vocab.id(t)));
            ids.push(EOS_ID);
            let mask = s.mechanisms.mask();
            for i in order - 1..ids.len() {
                for n in 0..order {
                    let ctx = ids[i - n..i].to_vec();
                    for m in [mask, 0] {
                        *counts.entry((m, ctx.clone(), ids[i])).or_default() += w;
                    }
                }
            }
        }
    }
    let (entries, weights): (Vec<NgramEntry>, Vec<f32>) = counts
        .into_iter()
        .map(|((mask, context, next), c)| (NgramEntry { mask, context, next }, c))
        .unzip();
    let table = build_table(&entries, &weights);
    let model = ConditionalNgramLm {
        config: BackendConfig {
            max_length: Some(recipe.max_length),
            decode: recipe.decode,
            seed: Some(recipe.seed),
        },
        order,
        vocab: vocab.words,
        entries,
        counts: weights,
        table,
    };
    let mut metrics = BTreeMap::new();
    metrics.insert("train_examples".into(), base.len() as f64);
    metrics.insert("few_shot_examples".into(), few_shot.len() as f64);
    metrics.insert("vocabulary".into(), model.vocab.len() as f64);
    let spec = model.spec();
    let hash = hash_records(base.iter().chain(few_shot));
    Ok(Trained::new(model, spec, recipe, hash, metrics))
}

// ------------------------------------------------------------- bigram LM

const UNK: &str = "<unk>";
const END: &str = "</s>";

/// Add-k smoothed bigram model over lowercased pipeline tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramLm {
    pub config: BackendConfig,
    pub smoothing: f64,
    pub vocab: Vec<String>,
    pub pairs: Vec<(u32, u32)>,
    pub counts: Vec<f32>,
    ids: HashMap<String, u32>,
    bigrams: HashMap<(u32, u32), f64>,
    contexts: HashMap<u32, f64>,
}

#[derive(Serialize, Deserialize)]
pub struct BigramMeta {
    config: BackendConfig,
    smoothing: f64,
    vocab: Vec<String>,
    pairs: Vec<(u32, u32)>,
}

impl BigramLm {
    fn assemble(config: BackendConfig, smoothing: f64, vocab: Vec<String>, pairs: Vec<(u32, u32)>, counts: Vec<f32>) -> Self {
        let ids = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let mut bigrams = HashMap::new();
        let mut contexts: HashMap<u32, f64> = HashMap::new();
        for (p, c) in pairs.iter().zip(&counts) {
            bigrams.insert(*p, *c as f64);
            *contexts.entry(p.0).or_default() += *c as f64;
        }
        BigramLm {
            config,
            smoothing,
            vocab,
            pairs,
            counts,
            ids,
            bigrams,
            contexts,
        }
    }

    fn id(&self, w: &str) -> u32 {
        self.ids.get(w).copied().unwrap_or(2)
    }

    pub fn log_prob(&self, prev: u32, next: u32) -> f64 {
        let v = self.vocab.len() as f64;
        let k = self.smoothing;
        let c = self.bigrams.get(&(prev, next)).copied().unwrap_or(0.0);
        let z = self.contexts.get(&prev).copied().unwrap_or(0.0);
        ((c + k) / (z + k * v)).ln()
    }
}

impl Backend for BigramLm {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::LmScorer,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl LmScorer for BigramLm {
    fn token_log_probs(&self, text: &str) -> BackendResult<Vec<f64>> {
        let mut prev = 0;
        Ok(tokenize_words(text)
            .iter()
            .map(|w| {
                let id = self.id(&w.to_lowercase());
                let lp = self.log_prob(prev, id);
                prev = id;
                lp
            })
            .collect())
    }
}

impl Model for BigramLm {
    const KIND: BackendKind = BackendKind::LmScorer;
    const IDENTITY: &'static str = "bigram-lm";
    type Meta = BigramMeta;

    fn to_parts(&self) -> (BigramMeta, Vec<f32>) {
        (
            BigramMeta {
                config: self.config.clone(),
                smoothing: self.smoothing,
                vocab: self.vocab.clone(),
                pairs: self.pairs.clone(),
            },
            self.counts.clone(),
        )
    }

    fn from_parts(meta: BigramMeta, weights: Vec<f32>) -> std::result::Result<Self, String> {
        if weights.len() != meta.pairs.len() || meta.vocab.len() < 3 {
            return Err("bigram table does not match its counts".into());
        }
        Ok(Self::assemble(meta.config, meta.smoothing, meta.vocab, meta.pairs, weights))
    }
}

/// Fit on `texts`; words seen fewer than `min_count` times map to `<unk>`.
pub fn fit_bigram(texts: &[String], recipe: &TrainRecipe) -> BigramLm {
    let tokenized: Vec<Vec<String>> = texts
        .iter()
        .map(|t| tokenize_words(t).into_iter().map(|w| w.to_lowercase()).collect())
        .collect();
    let mut freq: BTreeMap<&str, u32> = BTreeMap::new();
    for ws in &tokenized {
        for w in ws {
            *freq.entry(w).or_default() += 1;
        }
    }
    let mut vocab: Vec<String> = vec![START.into(), END.into(), UNK.into()];
    vocab.extend(freq.into_iter().filter(|(_, c)| *c >= recipe.min_count.max(1)).map(|(w, _)| w.to_string()));
    let ids: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i as u32)).collect();
    let mut counts: BTreeMap<(u32, u32), f32> = BTreeMap::new();
    for ws in &tokenized {
        let mut prev = 0;
        for w in ws.iter().map(|w| ids.get(w.as_str()).copied().unwrap_or(2)).chain([1]) {
            *counts.entry((prev, w)).or_default() += 1.0;
            prev = w;
        }
    }
    let (pairs, weights): (Vec<(u32, u32)>, Vec<f32>) = counts.into_iter().unzip();
    BigramLm::assemble(
        BackendConfig {
            max_length: None,
            decode: None,
            seed: Some(recipe.seed),
        },
        recipe.smoothing,
        vocab,
        pairs,
        weights,
    )
}

pub fn train_bigram(train: &[String], dev: &[String], recipe: &TrainRecipe) -> Result<Trained<BigramLm>> {
    recipe.validate()?;
    if train.len() < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::LmScorer, train.len(), recipe.min_examples.max(1)));
    }
    let model = fit_bigram(train, recipe);
    let mut metrics = BTreeMap::new();
    metrics.insert("train_texts".into(), train.len() as f64);
    metrics.insert("vocabulary".into(), model.vocab.len() as f64);
    if let Ok(ppl) = goalcoach_eval::perplexity(dev, &model) {
        metrics.insert("dev_perplexity".into(), ppl);
    }
    let spec = model.spec();
    Ok(Trained::new(model, spec, recipe, hash_records(train), metrics))
}
