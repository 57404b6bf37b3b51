use std::collections::BTreeMap;

use goalcoach_core::backend::rule::IdentityParaphraser;
use goalcoach_core::{SlotName, Speaker, Stage};
use goalcoach_corpus::augment::{augment, AugmentationRecipe};
use goalcoach_corpus::import::import;
use goalcoach_corpus::record::{load_corpus, SpanRecord};
use goalcoach_corpus::{AnnotatedUtterance, CorpusError};

#[test]
fn import_then_load() {
    let root = tempfile::tempdir().unwrap();
    let (d1, d2, out) = (root.path().join("d1"), root.path().join("d2"), root.path().join("out"));
    std::fs::create_dir_all(&d1).unwrap();
    std::fs::create_dir_all(&d2).unwrap();
    std::fs::write(
        d1.join("w1.tsv"),
        "# week one\ncoach\tgoal_setting\tnegotiation\tWhat would you like to do?\n\
         patient\tgoal_setting\t-\tI'll [walk](activity) [2000 steps](amount)\tactivity=walk; amount=2000 steps\n",
    )
    .unwrap();
    std::fs::write(d2.join("w9.tsv"), "patient\tgoal_implementation\t-\tDone!\n").unwrap();
    assert_eq!(import(&d1, &d2, &out).unwrap(), (2, 1));
    let corpus = load_corpus(&out).unwrap();
    assert_eq!(corpus.weeks.len(), 2);
    let w1 = &corpus.weeks[0];
    assert_eq!(w1.utterances[0].phase.as_deref(), Some("negotiation"));
    assert_eq!(w1.gold_backward().get(SlotName::Amount), ["2000 steps"]);

    std::fs::write(d2.join("bad.tsv"), "patient\tgoal_setting\t-\t[x](steps)\n").unwrap();
    match import(&d1, &d2, &out) {
        Err(CorpusError::Schema { line, .. }) => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn substitution_shifts_labels() {
    let u = AnnotatedUtterance::from_spans(
        "w",
        0,
        Speaker::Patient,
        "walk 2000 steps",
        Stage::GoalSetting,
        &[
            SpanRecord { slot: SlotName::Activity, start: 0, end: 1 },
            SpanRecord { slot: SlotName::Amount, start: 1, end: 3 },
        ],
    )
    .unwrap();
    let mut alts = BTreeMap::new();
    alts.insert(SlotName::Amount, vec!["3000 steps".to_string()]);
    let recipe = AugmentationRecipe {
        value_alternatives: alts,
        max_variants: 1,
        paraphrase: true,
    };
    let out = augment(&u, &recipe, &IdentityParaphraser, 0).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].text, "walk 3000 steps");
    assert_eq!(out[0].bio_labels, u.bio_labels);

    let mut alts = BTreeMap::new();
    alts.insert(SlotName::Amount, vec!["a few thousand steps".to_string()]);
    let out = augment(&u, &AugmentationRecipe::with_alternatives(alts), &IdentityParaphraser, 0).unwrap();
    assert_eq!(out[0].tokens.len(), 5);
    assert_eq!(out[0].spans()[1].value, "a few thousand steps");
}
