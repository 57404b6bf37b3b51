use goalcoach_core::backend::rule::{IdentityParaphraser, RegexSlotTagger};
use goalcoach_core::backend::SlotTagger;
use goalcoach_corpus::augment::{augment_all, AugmentationRecipe};
use goalcoach_corpus::record::{load_corpus, write_corpus, TEST_DATASET};
use goalcoach_corpus::{generate_toy, ToyConfig};

fn corpus() -> goalcoach_corpus::Corpus {
    generate_toy(&ToyConfig {
        weeks: 60,
        ..Default::default()
    })
}

#[test]
fn toy_annotations_agree_with_pattern_tagger() {
    let tagger = RegexSlotTagger::new();
    for u in corpus().utterances() {
        let labels = tagger.tag(&u.tokens).unwrap();
        assert_eq!(labels, u.bio_labels, "{}", u.text);
    }
}

#[test]
fn toy_round_trips_through_jsonl() {
    let c = corpus();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.jsonl");
    write_corpus(&path, &c).unwrap();
    let back = load_corpus(&path).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.weeks_in(TEST_DATASET).len(), 12);
}

#[test]
fn toy_mines_both_carryover_labels() {
    let ex = corpus().carryover_examples();
    let keeps = ex.iter().filter(|e| e.keep_previous).count();
    assert!(keeps > 5 && ex.len() - keeps > 5, "{keeps} of {}", ex.len());
}

#[test]
fn split_is_seeded_and_disjoint() {
    let c = corpus();
    let a = c.tagger_split(0.1, 3);
    let b = c.tagger_split(0.1, 3);
    assert_eq!(a.dev, b.dev);
    assert!(a.dev.len() >= 10);
    assert!(a.test.iter().all(|u| u.dataset.as_deref() == Some(TEST_DATASET)));
    assert!(a.train.iter().chain(&a.dev).all(|u| u.dataset.as_deref() != Some(TEST_DATASET)));
}

#[test]
fn augmented_toy_labels_decode_to_values() {
    let c = corpus();
    let split = c.tagger_split(0.0, 0);
    let values = c.slot_values();
    let recipe = AugmentationRecipe::with_alternatives(values.clone());
    let out = augment_all(&split.train[..50], &recipe, &IdentityParaphraser, 9).unwrap();
    assert!(out.len() > 50);
    for u in &out {
        u.validate().unwrap();
        for span in u.spans() {
            assert!(values[&span.slot].iter().any(|v| v.eq_ignore_ascii_case(&span.value)), "{}", span.value);
        }
    }
}
