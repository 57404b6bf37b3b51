//! Full-scale targets on the released coaching datasets. Runs only when
//! `GOALCOACH_DATASET1` and `GOALCOACH_DATASET2` point at the raw dataset
//! directories.

use std::path::PathBuf;

use goalcoach_core::backend::BackendKind;
use goalcoach_core::{Backends, SessionConfig, SnapshotPoint};
use goalcoach_corpus::import::import;
use goalcoach_corpus::load_corpus;
use goalcoach_corpus::record::TEST_DATASET;
use goalcoach_eval::{evaluate, replay_corpus, Scorers};
use goalcoach_train::{install_artifact, train, TrainRecipe};

use crate::Outcome;

/// correctness@k on dataset 2 at k = 10, 9, 8.
const CORRECTNESS: [(usize, f64); 3] = [(10, 13.6), (9, 27.3), (8, 63.6)];

fn env_dir(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).map(PathBuf::from).filter(|p| p.is_dir())
}

pub fn check() -> Outcome {
    let (Some(d1), Some(d2)) = (env_dir("GOALCOACH_DATASET1"), env_dir("GOALCOACH_DATASET2")) else {
        return Outcome::NotRun("set GOALCOACH_DATASET1 and GOALCOACH_DATASET2 to the released dataset directories".into());
    };
    let work = tempfile::tempdir().unwrap();
    let data = work.path().join("corpus");
    std::fs::create_dir_all(&data).unwrap();
    import(&d1, &d2, &data).unwrap();

    let run = |kind: BackendKind, recipe: TrainRecipe, name: &str| {
        let out = work.path().join(name);
        let m = train(kind, &data, &recipe, &out).unwrap();
        (out, m.metrics)
    };
    let (tagger, with_aug) = run(BackendKind::SlotTagger, TrainRecipe::reference(BackendKind::SlotTagger), "tagger");
    let mut plain = TrainRecipe::reference(BackendKind::SlotTagger);
    plain.augment_variants = 0;
    let (_, without_aug) = run(BackendKind::SlotTagger, plain, "tagger-plain");
    let (carry, carry_m) = run(BackendKind::Carryover, TrainRecipe::reference(BackendKind::Carryover), "carryover");
    let (seq, seq_m) = run(BackendKind::SeqMultitask, TrainRecipe::reference(BackendKind::SeqMultitask), "seq");

    let mut backends = Backends::rule();
    for dir in [&tagger, &carry, &seq] {
        install_artifact(&mut backends, dir).unwrap();
    }
    let corpus = load_corpus(&data).unwrap();
    let gold = corpus.subset(TEST_DATASET);
    let transcript = replay_corpus(&gold.weeks, &backends, &SessionConfig::default()).unwrap();
    let report = evaluate(&transcript, &gold, &Scorers::default()).unwrap();
    let correctness = &report.goals[&SnapshotPoint::Backward].correctness_at_k;

    let (f1, f1_plain) = (with_aug["test_f1"], without_aug["test_f1"]);
    let (carry_f1, stage) = (carry_m["test_f1"], seq_m["test_stage_accuracy"]);
    let mut misses = Vec::new();
    if f1 < 0.85 {
        misses.push(format!("slot F1 {f1:.3} < 0.85"));
    }
    if f1 <= f1_plain {
        misses.push(format!("augmentation does not help ({f1:.3} vs {f1_plain:.3})"));
    }
    if (carry_f1 - 0.88).abs() > 0.05 {
        misses.push(format!("carryover F1 {carry_f1:.3} not within 0.05 of 0.88"));
    }
    if (stage - 0.92).abs() > 0.05 {
        misses.push(format!("stage accuracy {stage:.3} not within 0.05 of 0.92"));
    }
    for (k, target) in CORRECTNESS {
        if (correctness[k] - target).abs() > 10.0 {
            misses.push(format!("correctness@{k} {:.1} not within 10 of {target}", correctness[k]));
        }
    }
    let bleu = report.generation.as_ref().map(|g| g.bleu.average).unwrap_or(f64::NAN);
    let detail = format!(
        "slot F1 {f1:.3} (no aug {f1_plain:.3}), carryover F1 {carry_f1:.3}, stage {stage:.3}, correctness@10/9/8 {:.1}/{:.1}/{:.1}, BLEU {bleu:.3} (reported only)",
        correctness[10], correctness[9], correctness[8]
    );
    if misses.is_empty() {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(format!("{detail}; {}", misses.join("; ")))
    }
}
