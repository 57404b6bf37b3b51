//! Training-sequence codec: fuzzed round trips and the reference line.

use goalcoach_core::empathy::{decode_training_sequence, encode_training_sequence};
use goalcoach_core::{EmpathySample, Mechanism, MechanismSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

const ROUND_TRIPS: usize = 10_000;

const PIECES: &[&str] = &[
    "a", "I", "was", " ", "  ", ".", "!", "?", "'", ",", "é", "😊", "[", "]", "<", ">", "|", "[EMOR]", "[INTERP]",
    "[EXPLOR]", "<|sep", "sep|>", "<|bos|", "|eos|>", "\t", "walk", "0", "Monday",
];

/// Occasionally a forbidden delimiter, so rejected inputs get exercised too.
const FORBIDDEN: &[&str] = &["<|sep|>", "<|eos|>", "<|bos|>", "\n"];

fn text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..12);
    let mut s: String = (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect();
    if rng.gen_bool(0.03) {
        let f = FORBIDDEN.choose(rng).unwrap();
        if rng.gen_bool(0.5) {
            s.insert_str(0, f);
        } else {
            s.push_str(f);
        }
    }
    s
}

fn mechanisms(rng: &mut ChaCha8Rng) -> MechanismSet {
    Mechanism::ALL.into_iter().filter(|_| rng.gen_bool(0.5)).collect()
}

pub fn check() -> Outcome {
    let reference = EmpathySample::new(
        "I was so exhausted yesterday.",
        "That's understandable. Take some rest!",
        MechanismSet::single(Mechanism::EmotionalReaction),
    )
    .unwrap();
    let line = encode_training_sequence(&reference).unwrap();
    assert_eq!(
        line.as_bytes(),
        "<|bos|> [EMOR] I was so exhausted yesterday. <|sep|> That's understandable. Take some rest! <|eos|>".as_bytes()
    );
    assert_eq!(decode_training_sequence(&line).unwrap(), reference);

    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DEC);
    let (mut ok, mut rejected) = (0, 0);
    while ok < ROUND_TRIPS {
        let s = EmpathySample {
            user_utterance: text(&mut rng),
            response: text(&mut rng),
            mechanisms: mechanisms(&mut rng),
        };
        match encode_training_sequence(&s) {
            Ok(line) => {
                assert!(!line.contains('\n'));
                let back = decode_training_sequence(&line).unwrap_or_else(|e| panic!("{line:?}: {e}"));
                assert_eq!(back, s, "{line:?}");
                ok += 1;
            }
            Err(_) => {
                // only samples that break a stated precondition are refused
                let u = &s.user_utterance;
                assert!(
                    s.mechanisms.is_empty()
                        || [u, &s.response].iter().any(|t| t.trim().is_empty() || FORBIDDEN.iter().any(|f| t.contains(f)))
                        || ["[EMOR]", "[INTERP]", "[EXPLOR]"].iter().any(|m| u.starts_with(m)),
                    "refused a valid sample: {s:?}"
                );
                rejected += 1;
            }
        }
    }
    Outcome::Pass(format!(
        "reference line byte-exact; {ok} fuzzed samples round-trip ({rejected} invalid inputs refused)"
    ))
}
