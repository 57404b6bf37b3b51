//! Behavioral contract every backend must honor, whether rule-based or
//! trained. Probes are drawn from a small synthetic corpus.

use std::fmt;

use goalcoach_core::backend::{BackendKind, DecodeParams};
use goalcoach_core::bio::validate_labels;
use goalcoach_core::empathy::{encode_prompt, generate_empathetic};
use goalcoach_core::nlg_hc::Task;
use goalcoach_core::text::tokenize_words;
use goalcoach_core::{Backends, Mechanism, MechanismSet, Stage};
use goalcoach_corpus::examples::{carryover_examples, seq_examples};
use goalcoach_corpus::{generate_toy, Corpus, ToyConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: BackendKind,
    pub identity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.kind.as_str(), self.identity, self.message)
    }
}

pub fn probe_corpus() -> Corpus {
    generate_toy(&ToyConfig {
        weeks: 6,
        seed: 5,
        test_fraction: 0.0,
        collision_rate: 0.6,
    })
}

struct Report<'a> {
    backends: &'a Backends,
    out: Vec<Violation>,
}

impl Report<'_> {
    fn fail(&mut self, kind: BackendKind, message: String) {
        let identity = self
            .backends
            .specs()
            .into_iter()
            .find(|s| s.kind == kind)
            .map(|s| s.identity)
            .unwrap_or_default();
        self.out.push(Violation { kind, identity, message });
    }
}

const EXTRA_TEXTS: [&str; 4] = ["", "Ok.", "I have a terrible migraine and I feel so guilty.", "WALK!!! 3x per week?"];

/// Run every contract against `backends`, using `corpus` for probes.
pub fn check(backends: &Backends, corpus: &Corpus) -> Vec<Violation> {
    let mut r = Report {
        backends,
        out: Vec::new(),
    };
    let mut texts: Vec<String> = corpus.utterances().map(|u| u.text.clone()).take(60).collect();
    texts.extend(EXTRA_TEXTS.map(String::from));

    for t in &texts {
        let tokens = tokenize_words(t);
        match backends.tagger.tag(&tokens) {
            Ok(labels) if labels.len() != tokens.len() => {
                r.fail(BackendKind::SlotTagger, format!("{} labels for {} tokens in {t:?}", labels.len(), tokens.len()))
            }
            Ok(labels) => {
                if let Err(e) = validate_labels(&labels) {
                    r.fail(BackendKind::SlotTagger, format!("ill-formed labels for {t:?}: {e}"));
                }
            }
            Err(e) => r.fail(BackendKind::SlotTagger, format!("failed on {t:?}: {e}")),
        }

        match backends.emotion.predict(t) {
            Ok(p) => {
                let total: f64 = p.entries().iter().map(|(_, x)| x).sum();
                if p.entries().len() != backends.emotion.vocab().len() || (total - 1.0).abs() > 1e-6 {
                    r.fail(BackendKind::EmotionClassifier, format!("not a distribution over the vocabulary for {t:?}"));
                }
            }
            Err(e) => r.fail(BackendKind::EmotionClassifier, format!("failed on {t:?}: {e}")),
        }

        match (backends.mechanisms.label(t), backends.mechanisms.label(t)) {
            (Ok(a), Ok(b)) if a != b => r.fail(BackendKind::MechanismLabeler, format!("nondeterministic on {t:?}")),
            (Err(e), _) | (_, Err(e)) => r.fail(BackendKind::MechanismLabeler, format!("failed on {t:?}: {e}")),
            _ => {}
        }

        match backends.regressor.score(t) {
            Ok(s) if !(0.0..=2.0).contains(&s) => r.fail(BackendKind::EmpathyRegressor, format!("score {s} off the scale for {t:?}")),
            Ok(_) => {}
            Err(e) => r.fail(BackendKind::EmpathyRegressor, format!("failed on {t:?}: {e}")),
        }

        match backends.lm_scorer.token_log_probs(t) {
            Ok(lp) if lp.len() != tokens.len() => {
                r.fail(BackendKind::LmScorer, format!("{} log probs for {} tokens in {t:?}", lp.len(), tokens.len()))
            }
            Ok(lp) => {
                if lp.iter().any(|x| !x.is_finite() || *x > 0.0) {
                    r.fail(BackendKind::LmScorer, format!("log probs outside (-inf, 0] for {t:?}"));
                }
            }
            Err(e) => r.fail(BackendKind::LmScorer, format!("failed on {t:?}: {e}")),
        }

        let run = |seed| backends.paraphraser.paraphrase(t, &mut ChaCha8Rng::seed_from_u64(seed));
        match (run(9), run(9)) {
            (Ok(a), Ok(b)) if a != b => r.fail(BackendKind::Paraphraser, format!("not reproducible under a fixed seed for {t:?}")),
            (Ok(a), _) if !t.trim().is_empty() && a.trim().is_empty() => {
                r.fail(BackendKind::Paraphraser, format!("erased {t:?}"))
            }
            (Err(e), _) | (_, Err(e)) => r.fail(BackendKind::Paraphraser, format!("failed on {t:?}: {e}")),
            _ => {}
        }
    }

    for week in &corpus.weeks {
        for ex in carryover_examples(week) {
            match backends.carryover.decide(&ex.query) {
                Ok(d) if d.slot != ex.query.slot || !(0.0..=1.0).contains(&d.confidence) => {
                    r.fail(BackendKind::Carryover, format!("bad decision {d:?} for slot {}", ex.query.slot.as_str()))
                }
                Ok(_) => {}
                Err(e) => r.fail(BackendKind::Carryover, format!("failed: {e}")),
            }
        }
        for ex in seq_examples(week).into_iter().take(12) {
            let greedy = DecodeParams::greedy(128);
            let a = backends.seq.generate(&ex.input, &greedy, &mut ChaCha8Rng::seed_from_u64(1));
            let b = backends.seq.generate(&ex.input, &greedy, &mut ChaCha8Rng::seed_from_u64(2));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    if a != b {
                        r.fail(BackendKind::SeqMultitask, "greedy decoding depends on the rng".into());
                    }
                    if ex.task == Task::PredictStage && Stage::from_token(a.trim()).is_none() {
                        r.fail(BackendKind::SeqMultitask, format!("stage output {a:?} is not a stage token"));
                    }
                    if ex.task == Task::GenerateResponse && a.trim().is_empty() {
                        r.fail(BackendKind::SeqMultitask, "empty response".into());
                    }
                }
                (Err(e), _) | (_, Err(e)) => r.fail(BackendKind::SeqMultitask, format!("failed: {e}")),
            }
        }
    }
    if backends.seq.generate("not a rendered input", &DecodeParams::greedy(16), &mut ChaCha8Rng::seed_from_u64(0)).is_ok() {
        r.fail(BackendKind::SeqMultitask, "accepted an input without a task prefix".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in texts.iter().filter(|t| !t.trim().is_empty()).take(20) {
        for m in Mechanism::ALL {
            let set = MechanismSet::single(m);
            match generate_empathetic(t, &set, backends.empathy_lm.as_ref(), &DecodeParams::EMPATHY, &mut rng) {
                Ok(g) if g.fallback.is_some() => {
                    r.fail(BackendKind::CausalLm, format!("fell back on {t:?}: {}", g.fallback.unwrap_or_default()))
                }
                Ok(g) if g.text.trim().is_empty() => r.fail(BackendKind::CausalLm, format!("empty output for {t:?}")),
                Ok(g) if g.text.contains("<|") => r.fail(BackendKind::CausalLm, format!("special token leaked: {:?}", g.text)),
                Ok(_) => {}
                Err(e) => r.fail(BackendKind::CausalLm, format!("failed on {t:?}: {e}")),
            }
        }
    }
    let prompt = encode_prompt("hello", &MechanismSet::all()).expect("valid prompt");
    if backends.empathy_lm.complete(&prompt[..prompt.len() - 2], &DecodeParams::EMPATHY, &mut rng).is_ok() {
        r.fail(BackendKind::CausalLm, "accepted a truncated prompt".into());
    }
    r.out
}
