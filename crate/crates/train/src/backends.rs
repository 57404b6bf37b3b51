//! Loading trained artifacts into a backend set, and the per-kind training
//! dispatcher used by the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use goalcoach_core::backend::BackendKind;
use goalcoach_core::empathy::decode_training_sequence;
use goalcoach_core::{Backends, EmotionVocab, EmpathySample};
use goalcoach_corpus::empathy::{load_emotion_examples, load_mechanism_ratings};
use goalcoach_corpus::load_corpus;

use crate::artifact::{load_model, read_manifest, Manifest, Model, Trained};
use crate::data::split_weeks;
use crate::error::{Result, TrainError};
use crate::models::*;
use crate::recipe::TrainRecipe;

/// Replace the backend of the artifact's kind in `backends`.
pub fn install_artifact(backends: &mut Backends, dir: &Path) -> Result<Manifest> {
    let manifest = read_manifest(dir)?;
    match manifest.spec.kind {
        BackendKind::SlotTagger => backends.tagger = Arc::new(load_model::<CrfTagger>(dir)?.0),
        BackendKind::Carryover => backends.carryover = Arc::new(load_model::<LogisticCarryover>(dir)?.0),
        BackendKind::SeqMultitask => backends.seq = Arc::new(load_model::<MultitaskSeq>(dir)?.0),
        BackendKind::EmotionClassifier => backends.emotion = Arc::new(load_model::<SoftmaxEmotion>(dir)?.0),
        BackendKind::MechanismLabeler => backends.mechanisms = Arc::new(load_model::<LogisticMechanisms>(dir)?.0),
        BackendKind::CausalLm => backends.empathy_lm = Arc::new(load_model::<ConditionalNgramLm>(dir)?.0),
        BackendKind::EmpathyRegressor => backends.regressor = Arc::new(load_model::<LinearEmpathyRegressor>(dir)?.0),
        BackendKind::LmScorer => backends.lm_scorer = Arc::new(load_model::<BigramLm>(dir)?.0),
        BackendKind::Paraphraser => backends.paraphraser = Arc::new(load_model::<SubstitutionParaphraser>(dir)?.0),
    }
    Ok(manifest)
}

/// Where each backend kind comes from: `"rule"` or an artifact directory.
/// Kinds not listed use the rule backend.
pub type BackendsManifest = BTreeMap<BackendKind, String>;

pub const RULE: &str = "rule";

/// Build a backend set from a manifest file; artifact paths are relative to
/// the manifest's directory.
pub fn load_backends(path: &Path) -> Result<Backends> {
    let text = std::fs::read_to_string(path).map_err(|e| TrainError::io(path, e))?;
    let manifest: BackendsManifest =
        serde_json::from_str(&text).map_err(|e| TrainError::artifact(path, format!("backends manifest: {e}")))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut backends = Backends::rule();
    for (kind, p) in &manifest {
        if p == RULE {
            continue;
        }
        let dir = base.join(p);
        let loaded = install_artifact(&mut backends, &dir)?;
        if loaded.spec.kind != *kind {
            return Err(TrainError::artifact(
                &dir,
                format!("listed as {} but holds a {} artifact", kind.as_str(), loaded.spec.kind.as_str()),
            ));
        }
    }
    Ok(backends)
}

fn save<M: Model>(t: Trained<M>, out: &Path) -> Result<Manifest> {
    t.save(out)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| TrainError::io(path, e))?;
    Ok(text.lines().filter(|l| !l.trim().is_empty()).map(String::from).collect())
}

fn read_sequences(path: &Path) -> Result<Vec<EmpathySample>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| decode_training_sequence(l).map_err(|e| TrainError::Schema(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn optional(dir: &Path, name: &str) -> Option<PathBuf> {
    let p = dir.join(name);
    p.exists().then_some(p)
}

/// Train one backend kind from `input` and write its artifact to `out`.
///
/// Inputs per kind:
/// - tagger, carryover, seq, lm scorer, paraphraser: a goal-coaching corpus
/// - emotion classifier: a directory with `train.csv` (and optionally
///   `valid.csv`, `emotions.txt`) in the empathetic-dialogue layout
/// - mechanism labeler, empathy regressor: a directory of rating files
/// - causal LM: a directory with `train.txt` of encoded sequences and an
///   optional `few_shot.txt`
pub fn train(kind: BackendKind, input: &Path, recipe: &TrainRecipe, out: &Path) -> Result<Manifest> {
    if recipe.kind != kind {
        return Err(TrainError::InvalidRecipe(format!("recipe is for {}, not {}", recipe.kind.as_str(), kind.as_str())));
    }
    match kind {
        BackendKind::SlotTagger => save(train_slot_tagger(&load_corpus(input)?, recipe)?, out),
        BackendKind::Carryover => save(train_carryover(&load_corpus(input)?, recipe)?, out),
        BackendKind::SeqMultitask => save(train_seq_multitask(&load_corpus(input)?, recipe)?, out),
        BackendKind::LmScorer => {
            let corpus = load_corpus(input)?;
            let split = split_weeks(&corpus, recipe.dev_fraction, recipe.seed);
            let texts = |weeks: &[&goalcoach_corpus::Week]| -> Vec<String> {
                weeks.iter().flat_map(|w| w.utterances.iter().map(|u| u.text.clone())).collect()
            };
            save(train_bigram(&texts(&split.train), &texts(&split.dev), recipe)?, out)
        }
        BackendKind::Paraphraser => {
            let corpus = load_corpus(input)?;
            let texts: Vec<String> = corpus.utterances().map(|u| u.text.clone()).collect();
            save(train_paraphraser(&texts, recipe)?, out)
        }
        BackendKind::EmotionClassifier => {
            let train_path = input.join("train.csv");
            let train_set = load_emotion_examples(&train_path)?;
            let dev = match optional(input, "valid.csv") {
                Some(p) => load_emotion_examples(&p)?,
                None => Vec::new(),
            };
            let vocab = match optional(input, "emotions.txt") {
                Some(p) => EmotionVocab::load(p)?,
                None => EmotionVocab::builtin(),
            };
            save(train_emotion(&train_set, &dev, &vocab, recipe)?, out)
        }
        BackendKind::MechanismLabeler => save(train_mechanisms(&load_mechanism_ratings(input)?, recipe)?, out),
        BackendKind::EmpathyRegressor => save(train_regressor(&load_mechanism_ratings(input)?, recipe)?, out),
        BackendKind::CausalLm => {
            let base = read_sequences(&input.join("train.txt"))?;
            let few = match optional(input, "few_shot.txt") {
                Some(p) => read_sequences(&p)?,
                None => Vec::new(),
            };
            save(train_empathy_lm(&base, &few, recipe)?, out)
        }
    }
}
