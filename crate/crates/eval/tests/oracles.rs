//! Metrics checked against brute-force reimplementations on random instances.

use goalcoach_core::orchestrator::SnapshotPoint;
use goalcoach_core::{BeliefState, SlotName, SlotSpan};
use goalcoach_eval::bleu::bleu;
use goalcoach_eval::goals::{correctness_at_k, match_rates, GoalPrediction};
use goalcoach_eval::slots::slot_prf;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POOL: [&str; 5] = ["walk", "Walk", "30 minutes", "monday", "8"];

fn key(v: &str) -> String {
    v.split_whitespace().map(|w| w.to_lowercase()).collect::<Vec<_>>().join(" ")
}

fn random_belief(rng: &mut ChaCha8Rng) -> BeliefState {
    let mut b = BeliefState::new();
    for slot in SlotName::ALL {
        if rng.gen_bool(0.5) {
            continue;
        }
        let n = if slot.is_multi_valued() { rng.gen_range(1..=3) } else { 1 };
        let values: Vec<String> = (0..n)
            .map(|_| {
                if slot == SlotName::Score {
                    rng.gen_range(1..=3).to_string()
                } else {
                    POOL[rng.gen_range(0..POOL.len())].to_string()
                }
            })
            .collect();
        b.set(slot, values).unwrap();
    }
    b
}

fn values(b: &BeliefState, s: SlotName) -> Vec<String> {
    let mut v: Vec<String> = b.get(s).iter().map(|x| key(x)).collect();
    v.sort();
    v.dedup();
    v
}

fn oracle_correct(p: &BeliefState, g: &BeliefState) -> usize {
    let mut n = 0;
    for s in SlotName::ALL {
        if values(p, s) == values(g, s) {
            n += 1;
        }
    }
    n
}

fn oracle_rates(preds: &[(BeliefState, BeliefState)]) -> (f64, f64) {
    let mut rows = Vec::new();
    for (p, g) in preds {
        let (mut c, mut q, mut f) = (0.0, 0.0, 0.0);
        for s in SlotName::ALL {
            let gv = values(g, s);
            if gv.is_empty() {
                continue;
            }
            f += 1.0;
            let pv = values(p, s);
            if pv == gv {
                c += 1.0;
            }
            if pv.iter().any(|x| gv.contains(x)) {
                q += 1.0;
            }
        }
        if f > 0.0 {
            rows.push((c / f, q / f));
        }
    }
    if rows.is_empty() {
        return (1.0, 1.0);
    }
    let n = rows.len() as f64;
    (rows.iter().map(|r| r.0).sum::<f64>() / n, rows.iter().map(|r| r.1).sum::<f64>() / n)
}

#[test]
fn goal_metrics_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.gen_range(1..6);
        let pairs: Vec<(BeliefState, BeliefState)> = (0..n)
            .map(|_| {
                let g = random_belief(&mut rng);
                let p = if rng.gen_bool(0.3) { g.clone() } else { random_belief(&mut rng) };
                (p, g)
            })
            .collect();
        let preds: Vec<GoalPrediction> = pairs
            .iter()
            .map(|(p, g)| GoalPrediction {
                week_id: "w".into(),
                point: SnapshotPoint::Forward,
                predicted: p.clone(),
                gold: g.clone(),
            })
            .collect();
        let mut previous = f64::INFINITY;
        for k in 0..=10 {
            let expect = 100.0 * pairs.iter().filter(|(p, g)| oracle_correct(p, g) >= k).count() as f64 / n as f64;
            let got = correctness_at_k(&preds, k).unwrap();
            assert_eq!(got, expect, "k={k}");
            assert!(got <= previous);
            previous = got;
        }
        assert_eq!(correctness_at_k(&preds, 0).unwrap(), 100.0);
        let (c, q) = oracle_rates(&pairs);
        let r = match_rates(&preds).unwrap();
        assert!((r.complete - c).abs() < 1e-12 && (r.partial - q).abs() < 1e-12);
        assert!(r.complete <= r.partial);
    }
}

fn span(slot: SlotName, value: &str) -> SlotSpan {
    SlotSpan {
        slot,
        value: value.into(),
        token_start: 0,
        token_end: 1,
    }
}

#[test]
fn slot_prf_matches_greedy_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let slots = [SlotName::Activity, SlotName::Dayname, SlotName::Time];
    let draw = |rng: &mut ChaCha8Rng| -> Vec<SlotSpan> {
        (0..rng.gen_range(0..4))
            .map(|_| span(slots[rng.gen_range(0..3)], POOL[rng.gen_range(0..POOL.len())]))
            .collect()
    };
    for _ in 0..1000 {
        let n = rng.gen_range(1..5);
        let pred: Vec<Vec<SlotSpan>> = (0..n).map(|_| draw(&mut rng)).collect();
        let gold: Vec<Vec<SlotSpan>> = (0..n).map(|_| draw(&mut rng)).collect();
        let (mut m, mut np, mut ng) = (0usize, 0usize, 0usize);
        for (p, g) in pred.iter().zip(&gold) {
            let mut remaining: Vec<(SlotName, String)> = g.iter().map(|s| (s.slot, key(&s.value))).collect();
            for s in p {
                if let Some(i) = remaining.iter().position(|r| *r == (s.slot, key(&s.value))) {
                    remaining.remove(i);
                    m += 1;
                }
            }
            np += p.len();
            ng += g.len();
        }
        let got = slot_prf(&pred, &gold).unwrap();
        if np == 0 && ng == 0 {
            assert_eq!(got.f1, 1.0);
            continue;
        }
        let p = if np == 0 { 0.0 } else { m as f64 / np as f64 };
        let r = if ng == 0 { 0.0 } else { m as f64 / ng as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        assert!((got.precision - p).abs() < 1e-12 && (got.recall - r).abs() < 1e-12 && (got.f1 - f).abs() < 1e-12);
    }
}

#[test]
fn bleu_single_pair_by_hand() {
    // "a b c d" vs "a b c e": unigrams 3/4, bigrams 2/3 -> (2+1)/(3+1),
    // trigrams 1/2 -> 2/3, 4-grams 0/1 -> 1/2; equal lengths so BP = 1.
    let p = [0.75f64, 0.75, 2.0 / 3.0, 0.5];
    let expect: Vec<f64> = (1..=4)
        .map(|n| p[..n].iter().product::<f64>().powf(1.0 / n as f64))
        .collect();
    let s = bleu(&["a b c d".to_string()], &["a b c e".to_string()]).unwrap();
    for n in 0..4 {
        assert!((s.bleu[n] - expect[n]).abs() < 1e-12, "BLEU-{}", n + 1);
    }
    assert!((s.average - expect.iter().sum::<f64>() / 4.0).abs() < 1e-12);
    assert!((s.bleu[2] - 0.375f64.cbrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn duplicate_pair_never_lowers_bleu(
        c in prop::collection::vec("[a-d]( [a-d]){0,5}", 1..4),
        r in prop::collection::vec("[a-d]( [a-d]){0,5}", 1..4),
        dup in "[a-d]( [a-d]){0,5}",
    ) {
        let n = c.len().min(r.len());
        let (c, r) = (c[..n].to_vec(), r[..n].to_vec());
        let before = bleu(&c, &r).unwrap().average;
        let (mut c2, mut r2) = (c.clone(), r.clone());
        c2.push(dup.clone());
        r2.push(dup);
        prop_assert!(bleu(&c2, &r2).unwrap().average >= before - 1e-12);
        prop_assert!((bleu(&c, &c).unwrap().average - 1.0).abs() < 1e-12);
    }
}
