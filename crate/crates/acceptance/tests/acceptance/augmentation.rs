//! Value substitution with the identity paraphraser never corrupts labels.

use std::collections::BTreeMap;

use goalcoach_core::backend::rule::IdentityParaphraser;
use goalcoach_core::text::normalize_value;
use goalcoach_core::SlotName;
use goalcoach_corpus::augment::augment;
use goalcoach_corpus::{generate_toy, AugmentationRecipe, ToyConfig};

use crate::Outcome;

const UTTERANCES: usize = 200;

fn alternatives() -> BTreeMap<SlotName, Vec<String>> {
    use SlotName::*;
    let alts: [(SlotName, &[&str]); 10] = [
        (Activity, &["jog", "ride my bike", "do pilates", "swim laps"]),
        (Amount, &["4", "five times", "2"]),
        (Duration, &["45 minutes", "two hours", "20 min"]),
        (Distance, &["3 miles", "10 km"]),
        (Time, &["in the evening", "7 am", "at lunch"]),
        (Location, &["the track", "my street", "the pool"]),
        (Dayname, &["Wednesday", "Thursday", "Saturday"]),
        (Daynumber, &["3", "6"]),
        (Repeatation, &["every other day", "three times a week"]),
        (Score, &["6", "9", "5"]),
    ];
    alts.into_iter()
        .map(|(s, vs)| (s, vs.iter().map(|v| v.to_string()).collect()))
        .collect()
}

pub fn check() -> Outcome {
    let corpus = generate_toy(&ToyConfig::default());
    let sources: Vec<_> = corpus.utterances().filter(|u| u.has_slots()).take(UTTERANCES).collect();
    assert_eq!(sources.len(), UTTERANCES, "toy corpus has too few slot-bearing utterances");
    let recipe = AugmentationRecipe {
        value_alternatives: alternatives(),
        max_variants: 3,
        paraphrase: true,
    };
    let (mut variants, mut substituted) = (0, 0);
    for (i, u) in sources.iter().enumerate() {
        let original = u.spans();
        for v in augment(u, &recipe, &IdentityParaphraser, i as u64).unwrap() {
            v.validate().unwrap();
            let decoded = v.spans();
            assert_eq!(decoded.len(), original.len(), "{:?} -> {:?}", u.text, v.text);
            for (d, o) in decoded.iter().zip(&original) {
                assert_eq!(d.slot, o.slot, "{:?} -> {:?}", u.text, v.text);
                // the span text is exactly the value that was put there
                let words: Vec<&str> = v.tokens[d.token_start..d.token_end].iter().map(String::as_str).collect();
                assert_eq!(normalize_value(&words.join(" ")), normalize_value(&d.value));
                let allowed = &recipe.value_alternatives[&d.slot];
                let is_alt = allowed.iter().any(|a| normalize_value(a) == normalize_value(&d.value));
                assert!(is_alt || normalize_value(&d.value) == normalize_value(&o.value), "{:?} is not a substitute for {}", d.value, d.slot);
                substituted += usize::from(is_alt);
            }
            assert_eq!((v.week_id.as_str(), v.turn_index, v.stage), (u.week_id.as_str(), u.turn_index, u.stage));
            variants += 1;
        }
    }
    assert!(variants >= UTTERANCES, "only {variants} variants");
    Outcome::Pass(format!("{UTTERANCES} utterances -> {variants} variants, {substituted} substituted spans, 0 corrupted"))
}
