//! Empathy gate on the reference emotion rows.

use goalcoach_core::empathy::should_empathize;
use goalcoach_core::{EmotionPrediction, EmotionVocab, GateConfig};

use crate::Outcome;

/// The two named emotions take the given mass; the rest is spread evenly.
fn prediction(vocab: &EmotionVocab, top: [(&str, f64); 2]) -> EmotionPrediction {
    let rest = (1.0 - top[0].1 - top[1].1) / (vocab.len() - 2) as f64;
    let mut probs = vec![rest; vocab.len()];
    for (label, p) in top {
        probs[vocab.index_of(label).unwrap_or_else(|| panic!("{label} not in vocabulary"))] = p;
    }
    EmotionPrediction::new(vocab, &probs).unwrap()
}

pub fn check() -> Outcome {
    let vocab = EmotionVocab::builtin();
    let gate = GateConfig::default();
    assert_eq!((gate.tau, gate.top_n), (0.7, 2), "default gate");
    let rows = [
        ([("Guilty", 0.506), ("Ashamed", 0.323)], true),
        ([("Angry", 0.127), ("Furious", 0.059)], false),
        ([("Hopeful", 0.484), ("Confident", 0.132)], false),
        ([("Sad", 0.4), ("Lonely", 0.3)], false),
    ];
    let mut seen = Vec::new();
    for (top, expected) in rows {
        let e = prediction(&vocab, top);
        let fired = should_empathize(&e, &gate);
        assert_eq!(fired, expected, "{top:?}");
        seen.push(format!("{}+{} {}", top[0].0, top[1].0, if fired { "fires" } else { "holds" }));
    }
    // strict inequality: a hair above the threshold fires
    assert!(should_empathize(&prediction(&vocab, [("Sad", 0.4), ("Lonely", 0.300001)]), &gate));
    Outcome::Pass(seen.join(", "))
}
