use goalcoach_core::backend::rule::{ConstantRegressor, UniformLm};
use goalcoach_core::orchestrator::{SessionConfig, SnapshotPoint};
use goalcoach_core::Backends;
use goalcoach_corpus::{generate_toy, ToyConfig};
use goalcoach_eval::report::{evaluate, load_transcript, replay_corpus, write_report, EvalReport, Scorers};
use goalcoach_eval::EvalError;

#[test]
fn rule_system_on_toy_weeks() {
    let corpus = generate_toy(&ToyConfig {
        weeks: 12,
        ..Default::default()
    });
    let system = replay_corpus(&corpus.weeks, &Backends::rule(), &SessionConfig::default()).unwrap();
    let lm = UniformLm { vocab_size: 100 };
    let reg = ConstantRegressor::default();
    let scorers = Scorers {
        lm: Some(&lm),
        regressor: Some(&reg),
        plugins: vec![],
    };
    let report = evaluate(&system, &corpus, &scorers).unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.weeks, 12);
    // the pattern tagger reproduces the toy annotations exactly
    assert_eq!(report.slots.prf.f1, 1.0);
    for g in report.goals.values() {
        assert_eq!(g.correctness_at_k[0], 100.0);
        assert!(g.match_rates.complete <= g.match_rates.partial);
    }
    assert!(report.goals.contains_key(&SnapshotPoint::Forward));
    let gen = report.generation.as_ref().unwrap();
    assert!((gen.perplexity.as_ref().unwrap().value - 100.0).abs() < 1e-9);
    assert_eq!(gen.empathy_delta.as_ref().unwrap().value, 0.0);
    assert!(gen.bleu.average > 0.0 && gen.bleu.average <= 1.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.jsonl");
    let mut buf = Vec::new();
    for r in &system {
        serde_json::to_writer(&mut buf, r).unwrap();
        buf.push(b'\n');
    }
    std::fs::write(&path, buf).unwrap();
    let back = load_transcript(&path).unwrap();
    assert_eq!(evaluate(&back, &corpus, &scorers).unwrap(), report);
    let rp = dir.path().join("report.json");
    write_report(&rp, &report).unwrap();
    let parsed: EvalReport = serde_json::from_str(&std::fs::read_to_string(&rp).unwrap()).unwrap();
    assert_eq!(parsed, report);
}

#[test]
fn misaligned_transcript_is_rejected() {
    let corpus = generate_toy(&ToyConfig {
        weeks: 2,
        ..Default::default()
    });
    let system = replay_corpus(&corpus.weeks[..1], &Backends::rule(), &SessionConfig::default()).unwrap();
    assert!(matches!(
        evaluate(&system, &corpus, &Scorers::default()),
        Err(EvalError::Alignment(_))
    ));
}
