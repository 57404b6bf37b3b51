use goalcoach_core::orchestrator::{read_transcript, SessionEvent};
use goalcoach_core::{Backends, CoreError, Session, SessionConfig, SnapshotPoint, SlotName};

fn events() -> Vec<SessionEvent> {
    let p = |t: &str| SessionEvent::Patient { text: t.into() };
    let c = |t: &str| SessionEvent::Coach { text: t.into() };
    vec![
        p("Hi, I want to walk 30 min a day"),
        c("Great. Which days will you walk?"),
        p("Monday and Friday in the park"),
        c("How confident are you, from 1 to 10?"),
        p("8"),
        p("I'm sorry I didn't go to work today I have a massive migraine headache."),
    ]
}

#[test]
fn events_replay_to_the_same_session() {
    let backends = Backends::rule();
    let a = Session::replay("w1", SessionConfig::default(), &events(), &backends, true).unwrap();
    let b = Session::replay("w1", SessionConfig::default(), &events(), &backends, true).unwrap();
    assert_eq!(a.transcript(), b.transcript());

    let backward = a.snapshot_goal(SnapshotPoint::Backward).unwrap();
    assert_eq!(&backward.belief, a.belief());
    assert_eq!(backward.belief.get(SlotName::Activity), ["walk"]);
    assert_eq!(backward.belief.normalized(SlotName::Dayname).len(), 2);
}

#[test]
fn transcript_export_reads_back() {
    let s = Session::replay("w2", SessionConfig::default(), &events(), &Backends::rule(), true).unwrap();
    let mut buf = Vec::new();
    s.write_transcript(&mut buf).unwrap();
    assert_eq!(read_transcript(buf.as_slice()).unwrap(), s.transcript());
}

#[test]
fn closed_sessions_refuse_input() {
    let backends = Backends::rule();
    let mut s = Session::new("w3", SessionConfig::default()).unwrap();
    assert!(matches!(s.snapshot_goal(SnapshotPoint::Backward), Err(CoreError::Precondition(_))));
    s.step("I will swim on Sunday", &backends).unwrap();
    s.close().unwrap();
    assert!(matches!(s.step("more", &backends), Err(CoreError::AlreadyClosed)));
    assert!(matches!(s.close(), Err(CoreError::AlreadyClosed)));
}
