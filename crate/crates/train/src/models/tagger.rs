//! CRF slot tagger.

use std::collections::BTreeMap;

use goalcoach_core::backend::rule::IdentityParaphraser;
use goalcoach_core::backend::{Backend, BackendConfig, BackendKind, BackendResult, BackendSpec, SlotTagger};
use goalcoach_core::bio::{decode_spans, BioLabel};
use goalcoach_core::text::tokenize;
use goalcoach_core::SlotSpan;
use goalcoach_corpus::{augment_all, AnnotatedUtterance, AugmentationRecipe, Corpus};
use goalcoach_eval::slots::slot_prf;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{hash_records, Model, Trained};
use crate::crf::Crf;
use crate::data::best_of_sweep;
use crate::error::{Result, TrainError};
use crate::features::{token_features, FeatureIndex};
use crate::linear::Linear;
use crate::recipe::TrainRecipe;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfTagger {
    pub config: BackendConfig,
    pub crf: Crf,
}

#[derive(Serialize, Deserialize)]
pub struct TaggerMeta {
    config: BackendConfig,
    features: FeatureIndex,
}

impl CrfTagger {
    fn max_length(&self) -> usize {
        self.config.max_length.unwrap_or(usize::MAX)
    }

    pub fn tag_tokens(&self, tokens: &[String]) -> Vec<BioLabel> {
        let n = tokens.len().min(self.max_length());
        let mut labels = self.crf.viterbi(&self.crf.encode(&tokens[..n]));
        labels.resize(tokens.len(), BioLabel::O);
        labels
    }

    /// Predicted spans for an annotated utterance's text.
    pub fn spans(&self, text: &str) -> Vec<SlotSpan> {
        let tokens = tokenize(text);
        let words: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
        decode_spans(text, &tokens, &self.tag_tokens(&words)).unwrap_or_default()
    }
}

impl Backend for CrfTagger {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::SlotTagger,
            identity: Self::IDENTITY.into(),
            config: self.config.clone(),
        }
    }
}

impl SlotTagger for CrfTagger {
    fn tag(&self, tokens: &[String]) -> BackendResult<Vec<BioLabel>> {
        Ok(self.tag_tokens(tokens))
    }
}

impl Model for CrfTagger {
    const KIND: BackendKind = BackendKind::SlotTagger;
    const IDENTITY: &'static str = "linear-crf-tagger";
    type Meta = TaggerMeta;

    fn to_parts(&self) -> (TaggerMeta, Vec<f32>) {
        let mut w = self.crf.emission.weights.clone();
        w.extend_from_slice(&self.crf.transitions);
        (
            TaggerMeta {
                config: self.config.clone(),
                features: self.crf.features.clone(),
            },
            w,
        )
    }

    fn from_parts(meta: TaggerMeta, mut weights: Vec<f32>) -> std::result::Result<Self, String> {
        let mut crf = Crf::new(meta.features);
        let n_emit = crf.emission.weights.len();
        if weights.len() != n_emit + crf.transitions.len() {
            return Err(format!("expected {} weights, found {}", n_emit + crf.transitions.len(), weights.len()));
        }
        let trans = weights.split_off(n_emit);
        crf.emission = Linear::from_weights(crf.emission.features, crf.emission.outputs, weights).ok_or("bad emission shape")?;
        crf.transitions = trans;
        Ok(CrfTagger {
            config: meta.config,
            crf,
        })
    }
}

/// Span F1 of `tagger` over utterances (exact slot and normalized value).
pub fn tagger_f1(tagger: &CrfTagger, utterances: &[AnnotatedUtterance]) -> Result<f64> {
    if utterances.is_empty() {
        return Ok(1.0);
    }
    let pred: Vec<Vec<SlotSpan>> = utterances.iter().map(|u| tagger.spans(&u.text)).collect();
    let gold: Vec<Vec<SlotSpan>> = utterances.iter().map(|u| u.spans()).collect();
    Ok(slot_prf(&pred, &gold)?.f1)
}

fn fit(train: &[AnnotatedUtterance], recipe: &TrainRecipe) -> CrfTagger {
    let truncated: Vec<&[String]> = train.iter().map(|u| &u.tokens[..u.tokens.len().min(recipe.max_length)]).collect();
    let feats: Vec<Vec<String>> = truncated
        .iter()
        .flat_map(|toks| (0..toks.len()).map(move |i| token_features(toks, i)))
        .collect();
    let mut crf = Crf::new(FeatureIndex::build(&feats, recipe.min_count));
    let data: Vec<(Vec<Vec<u32>>, Vec<usize>)> = train
        .iter()
        .zip(&truncated)
        .map(|(u, toks)| (crf.encode(toks), u.bio_labels[..toks.len()].iter().map(|l| l.index()).collect()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let loss = crf.fit(&data, recipe, &mut rng);
    log::debug!("tagger final epoch loss {loss:.4}");
    CrfTagger {
        config: BackendConfig {
            max_length: Some(recipe.max_length),
            decode: None,
            seed: Some(recipe.seed),
        },
        crf,
    }
}

/// Train on the slot-bearing utterances of the training dataset, selecting
/// sweep points (if any) by dev F1 and reporting held-out test F1.
pub fn train_slot_tagger(corpus: &Corpus, recipe: &TrainRecipe) -> Result<Trained<CrfTagger>> {
    recipe.validate()?;
    let split = corpus.tagger_split(recipe.dev_fraction, recipe.seed);
    if split.train.len() < recipe.min_examples.max(1) {
        return Err(TrainError::too_small(BackendKind::SlotTagger, split.train.len(), recipe.min_examples));
    }
    let train = if recipe.augment_variants > 0 {
        let pool = Corpus::from_utterances(split.train.clone()).slot_values();
        let aug = AugmentationRecipe {
            max_variants: recipe.augment_variants,
            paraphrase: false,
            ..AugmentationRecipe::with_alternatives(pool)
        };
        augment_all(&split.train, &aug, &IdentityParaphraser, recipe.seed)?
    } else {
        split.train.clone()
    };
    let (tagger, chosen) = best_of_sweep(recipe, |r| {
        let t = fit(&train, r);
        let dev = if split.dev.is_empty() { None } else { Some(tagger_f1(&t, &split.dev)?) };
        Ok((t, dev))
    })?;
    let mut metrics = BTreeMap::new();
    metrics.insert("train_examples".into(), train.len() as f64);
    metrics.insert("dev_examples".into(), split.dev.len() as f64);
    if !split.dev.is_empty() {
        metrics.insert("dev_f1".into(), tagger_f1(&tagger, &split.dev)?);
    }
    if !split.test.is_empty() {
        metrics.insert("test_examples".into(), split.test.len() as f64);
        metrics.insert("test_f1".into(), tagger_f1(&tagger, &split.test)?);
    }
    let records: Vec<_> = corpus.utterances().map(|u| u.to_record()).collect();
    let spec = tagger.spec();
    Ok(Trained::new(tagger, spec, &chosen, hash_records(&records), metrics))
}
