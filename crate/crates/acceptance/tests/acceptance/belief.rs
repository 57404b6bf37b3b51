//! With a carryover model that always replaces, the belief update reduces to
//! last-mention-wins on single-valued slots.

use std::collections::BTreeMap;

use goalcoach_core::backend::testing::AlwaysReplace;
use goalcoach_core::nlu::{rule_update, update_belief};
use goalcoach_core::{BeliefState, SessionContext, SlotName, SlotSpan};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use crate::Outcome;

const SCRIPTS: u32 = 500;

fn single_valued() -> Vec<SlotName> {
    SlotName::ALL.into_iter().filter(|s| !s.is_multi_valued()).collect()
}

fn value(slot: SlotName) -> impl Strategy<Value = String> {
    if slot == SlotName::Score {
        (1..=10u8).prop_map(|n| n.to_string()).boxed()
    } else {
        // a small pool so collisions and repeats are common
        prop::sample::select(vec!["walk", "Walk", "swim", "30 minutes", "the park", "6 pm", "two"])
            .prop_map(String::from)
            .boxed()
    }
}

fn turn() -> impl Strategy<Value = Vec<SlotSpan>> {
    prop::collection::vec(prop::sample::select(single_valued()), 0..4).prop_flat_map(|slots| {
        slots
            .into_iter()
            .enumerate()
            .map(|(i, slot)| {
                value(slot).prop_map(move |value| SlotSpan {
                    slot,
                    value,
                    token_start: 3 * i,
                    token_end: 3 * i + 2,
                })
            })
            .collect::<Vec<_>>()
    })
}

fn script() -> impl Strategy<Value = Vec<Vec<SlotSpan>>> {
    prop::collection::vec(turn(), 1..12)
}

/// Last mention wins, tracked on normalized values.
fn oracle(script: &[Vec<SlotSpan>]) -> BTreeMap<SlotName, String> {
    let mut m = BTreeMap::new();
    for turn in script {
        for s in turn {
            m.insert(s.slot, s.value.to_lowercase());
        }
    }
    m
}

fn lowered(b: &BeliefState) -> BTreeMap<SlotName, String> {
    b.iter()
        .map(|(s, vs)| {
            assert_eq!(vs.len(), 1, "single-valued slot {s} holds {vs:?}");
            (s, vs[0].to_lowercase())
        })
        .collect()
}

pub fn check() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: SCRIPTS,
        failure_persistence: None,
        ..Config::default()
    });
    let ctx = SessionContext::empty();
    let result = runner.run(&script(), |script| {
        let (mut online, mut rule) = (BeliefState::new(), BeliefState::new());
        for spans in &script {
            online = update_belief(&online, spans, &AlwaysReplace, &ctx).belief;
            rule = rule_update(&rule, spans);
            prop_assert!(online.same_goal(&rule), "{online:?} vs {rule:?}");
            prop_assert_eq!(online.turn_index, rule.turn_index);
        }
        prop_assert_eq!(lowered(&online), oracle(&script));
        Ok(())
    });
    match result {
        Ok(()) => Outcome::Pass(format!("{SCRIPTS} random scripts agree with last-mention-wins")),
        Err(e) => Outcome::Fail(e.to_string()),
    }
}
