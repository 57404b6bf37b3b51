//! Goal and span metrics against brute-force oracles built from the raw
//! generated values, never from the library's own data structures.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use goalcoach_core::orchestrator::SnapshotPoint;
use goalcoach_core::{BeliefState, SlotName, SlotSpan};
use goalcoach_eval::goals::correctness_table;
use goalcoach_eval::{correctness_at_k, match_rates, slot_prf, GoalPrediction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

const INSTANCES: usize = 1000;

/// Raw goal: per slot, the surface values as generated.
type RawGoal = Vec<(SlotName, Vec<String>)>;

fn pool(slot: SlotName) -> &'static [&'static str] {
    use SlotName::*;
    match slot {
        Activity => &["walk", "Walking", "swim", "yoga", "run"],
        Amount => &["2", "3 times", "three times"],
        Duration => &["30 minutes", "an hour", "1 hour"],
        Distance => &["2 miles", "5 km"],
        Time => &["morning", "6 pm", "after work"],
        Location => &["the park", "gym", "Gym"],
        Dayname => &["Monday", "tuesday", "Friday", "sunday", "Sat"],
        Daynumber => &["2", "4"],
        Repeatation => &["every day", "daily", "twice a week"],
        Score => &["7", "8", "10", "1"],
    }
}

/// Random surface form: case changes and stray whitespace.
fn surface(rng: &mut ChaCha8Rng, v: &str) -> String {
    let mut s = match rng.gen_range(0..3) {
        0 => v.to_string(),
        1 => v.to_uppercase(),
        _ => v.to_lowercase(),
    };
    if rng.gen_bool(0.2) {
        s = format!("  {}  ", s.replace(' ', "   "));
    }
    s
}

fn pick(rng: &mut ChaCha8Rng, slot: SlotName) -> String {
    let v = *pool(slot).choose(rng).unwrap();
    surface(rng, v)
}

fn raw_goal(rng: &mut ChaCha8Rng) -> RawGoal {
    let mut g = Vec::new();
    for slot in SlotName::ALL {
        if !rng.gen_bool(0.55) {
            continue;
        }
        let n = if slot == SlotName::Dayname { rng.gen_range(1..=3) } else { 1 };
        let values = (0..n).map(|_| pick(rng, slot)).collect();
        g.push((slot, values));
    }
    g
}

/// Prediction derived from gold by dropping, swapping and adding slots.
fn perturb(rng: &mut ChaCha8Rng, gold: &RawGoal) -> RawGoal {
    let mut p: RawGoal = Vec::new();
    for (slot, values) in gold {
        match rng.gen_range(0..10) {
            0 | 1 => {}
            2 | 3 => p.push((*slot, vec![pick(rng, *slot)])),
            4 if values.len() > 1 => p.push((*slot, values[..1].to_vec())),
            _ => p.push((*slot, values.iter().map(|v| surface(rng, v)).collect())),
        }
    }
    for slot in SlotName::ALL {
        if !gold.iter().any(|(s, _)| *s == slot) && rng.gen_bool(0.1) {
            p.push((slot, vec![pool(slot).choose(rng).unwrap().to_string()]));
        }
    }
    p
}

fn belief(raw: &RawGoal) -> BeliefState {
    let mut b = BeliefState::new();
    for (slot, values) in raw {
        for v in values {
            b.push(*slot, v).unwrap();
        }
    }
    b
}

fn norm(v: &str) -> String {
    v.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn values(raw: &RawGoal, slot: SlotName) -> BTreeSet<String> {
    raw.iter()
        .filter(|(s, _)| *s == slot)
        .flat_map(|(_, vs)| vs.iter().map(|v| norm(v)))
        .collect()
}

fn oracle_correct(pred: &RawGoal, gold: &RawGoal) -> usize {
    SlotName::ALL.iter().filter(|&&s| values(pred, s) == values(gold, s)).count()
}

fn oracle_correctness(pairs: &[(RawGoal, RawGoal)], k: usize) -> f64 {
    let hits = pairs.iter().filter(|(p, g)| oracle_correct(p, g) >= k).count();
    100.0 * hits as f64 / pairs.len() as f64
}

fn oracle_match(pairs: &[(RawGoal, RawGoal)]) -> (f64, f64) {
    let (mut c, mut q, mut n) = (0.0, 0.0, 0usize);
    for (p, g) in pairs {
        let filled: Vec<SlotName> = SlotName::ALL.into_iter().filter(|&s| !values(g, s).is_empty()).collect();
        if filled.is_empty() {
            continue;
        }
        let complete = filled.iter().filter(|&&s| values(p, s) == values(g, s)).count();
        let partial = filled.iter().filter(|&&s| !values(p, s).is_disjoint(&values(g, s))).count();
        c += complete as f64 / filled.len() as f64;
        q += partial as f64 / filled.len() as f64;
        n += 1;
    }
    if n == 0 {
        (1.0, 1.0)
    } else {
        (c / n as f64, q / n as f64)
    }
}

fn spans(rng: &mut ChaCha8Rng) -> Vec<SlotSpan> {
    let n = rng.gen_range(0..5);
    (0..n)
        .map(|i| {
            let slot = *SlotName::ALL.choose(rng).unwrap();
            SlotSpan {
                slot,
                value: pick(rng, slot),
                token_start: 2 * i,
                token_end: 2 * i + 1,
            }
        })
        .collect()
}

fn perturb_spans(rng: &mut ChaCha8Rng, gold: &[SlotSpan]) -> Vec<SlotSpan> {
    let mut out = Vec::new();
    for s in gold {
        if !rng.gen_bool(0.8) {
            continue;
        }
        let mut s = s.clone();
        if rng.gen_bool(0.15) {
            s.value = pool(s.slot).choose(rng).unwrap().to_string();
        }
        out.push(s);
    }
    if rng.gen_bool(0.2) {
        out.extend(spans(rng).into_iter().take(1));
    }
    out
}

/// Brute-force span matching: each predicted span claims at most one unused
/// gold span with the same slot and normalized value.
fn oracle_prf(pred: &[Vec<SlotSpan>], gold: &[Vec<SlotSpan>]) -> (f64, f64, f64) {
    let (mut m, mut np, mut ng) = (0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        let mut used = vec![false; g.len()];
        for ps in p {
            if let Some(j) = (0..g.len()).find(|&j| !used[j] && g[j].slot == ps.slot && norm(&g[j].value) == norm(&ps.value)) {
                used[j] = true;
                m += 1;
            }
        }
        np += p.len();
        ng += g.len();
    }
    if np == 0 && ng == 0 {
        return (1.0, 1.0, 1.0);
    }
    let p = if np == 0 { 0.0 } else { m as f64 / np as f64 };
    let r = if ng == 0 { 0.0 } else { m as f64 / ng as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

pub fn check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let mut pairs = Vec::with_capacity(INSTANCES);
    let mut preds = Vec::with_capacity(INSTANCES);
    let (mut span_pred, mut span_gold) = (Vec::new(), Vec::new());
    for i in 0..INSTANCES {
        let gold = raw_goal(&mut rng);
        let pred = perturb(&mut rng, &gold);
        let gp = GoalPrediction {
            week_id: format!("w{i}"),
            point: SnapshotPoint::Backward,
            predicted: belief(&pred),
            gold: belief(&gold),
        };
        // correctness@0 is 100 for every single goal
        assert_eq!(correctness_at_k(std::slice::from_ref(&gp), 0).unwrap(), 100.0, "instance {i}");
        preds.push(gp);
        pairs.push((pred, gold));
        let g = spans(&mut rng);
        span_pred.push(perturb_spans(&mut rng, &g));
        span_gold.push(g);
    }

    let table = correctness_table(&preds).unwrap();
    for (k, &got) in table.iter().enumerate() {
        assert_eq!(got, oracle_correctness(&pairs, k), "correctness@{k}");
        assert_eq!(got, correctness_at_k(&preds, k).unwrap());
    }
    assert_eq!(table[0], 100.0);

    let rates = match_rates(&preds).unwrap();
    let (c, q) = oracle_match(&pairs);
    assert_eq!((rates.complete, rates.partial), (c, q), "match rates");

    // per-instance agreement catches errors that cancel in aggregate
    for (gp, pair) in preds.iter().zip(&pairs) {
        let one = match_rates(std::slice::from_ref(gp)).unwrap();
        let (c, q) = oracle_match(std::slice::from_ref(pair));
        assert_eq!((one.complete, one.partial), (c, q), "match rates for {}", gp.week_id);
    }

    let prf = slot_prf(&span_pred, &span_gold).unwrap();
    let (p, r, f) = oracle_prf(&span_pred, &span_gold);
    assert_eq!((prf.precision, prf.recall, prf.f1), (p, r, f), "slot P/R/F1");
    for (sp, sg) in span_pred.iter().zip(&span_gold) {
        let one = slot_prf(std::slice::from_ref(sp), std::slice::from_ref(sg)).unwrap();
        let (p, r, f) = oracle_prf(std::slice::from_ref(sp), std::slice::from_ref(sg));
        assert_eq!((one.precision, one.recall, one.f1), (p, r, f));
    }

    crate::within(
        Duration::from_secs(10),
        start.elapsed(),
        format!(
            "{INSTANCES} instances agree; correctness@k {:?}; complete {c:.3} partial {q:.3}; slot F1 {f:.3}",
            table.iter().map(|v| v.round() as i64).collect::<Vec<_>>()
        ),
    )
}
