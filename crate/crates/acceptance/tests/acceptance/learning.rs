//! Small recipes on the synthetic toy corpus, CPU only.

use std::time::{Duration, Instant};

use goalcoach_core::backend::BackendKind;
use goalcoach_corpus::{generate_toy, ToyConfig};
use goalcoach_train::models::{train_carryover, train_seq_multitask, train_slot_tagger};
use goalcoach_train::TrainRecipe;

use crate::Outcome;

pub fn check() -> Outcome {
    let start = Instant::now();
    let corpus = generate_toy(&ToyConfig::default());
    let tagger = train_slot_tagger(&corpus, &TrainRecipe::cpu_small(BackendKind::SlotTagger)).unwrap();
    let carry = train_carryover(&corpus, &TrainRecipe::cpu_small(BackendKind::Carryover)).unwrap();
    let seq = train_seq_multitask(&corpus, &TrainRecipe::cpu_small(BackendKind::SeqMultitask)).unwrap();
    let elapsed = start.elapsed();

    let tagger_f1 = tagger.manifest.metrics["test_f1"];
    let carry_f1 = carry.manifest.metrics["test_f1"];
    let stage = seq.manifest.metrics["test_stage_accuracy"];
    let detail = format!("tagger F1 {tagger_f1:.3} (>= 0.95), carryover F1 {carry_f1:.3} (>= 0.95), stage accuracy {stage:.3} (>= 0.90)");
    if tagger_f1 < 0.95 || carry_f1 < 0.95 || stage < 0.90 {
        return Outcome::Fail(detail);
    }
    crate::within(Duration::from_secs(15 * 60), elapsed, detail)
}
