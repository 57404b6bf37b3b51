//! Deterministic toy coaching corpus with full annotations.
//!
//! Weeks follow a fixed arc: activity, measure, days (optionally a time),
//! confidence, summary, confirmation, then implementation check-ins.
//! Collision episodes either confirm the recorded value while mentioning a
//! different one (keep) or revise it (replace). Every patient turn carries
//! its gold belief.

use goalcoach_core::{BeliefState, SlotName, Speaker, Stage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::import::parse_markup;
use crate::record::{AnnotatedUtterance, Corpus, TEST_DATASET, TRAIN_DATASET};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub weeks: usize,
    pub seed: u64,
    /// Share of weeks assigned to the held-out dataset.
    pub test_fraction: f64,
    /// Probability of a collision episode at each opportunity.
    pub collision_rate: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            weeks: 120,
            seed: 17,
            test_fraction: 0.2,
            collision_rate: 0.5,
        }
    }
}

const ACTIVITIES: &[&str] = &["walk", "jog", "swim", "bike", "run", "hike", "dance", "stretch"];
const DURATIONS: &[&str] = &[
    "10 minutes", "15 minutes", "20 minutes", "25 minutes", "30 minutes", "40 minutes", "45 minutes", "an hour",
    "half an hour",
];
const AMOUNTS: &[&str] = &["3000 steps", "4000 steps", "5000 steps", "6000 steps", "8000 steps", "10000 steps"];
const DISTANCES: &[&str] = &["1 mile", "2 miles", "3 miles", "5 km", "4 miles"];
const DAYS: &[&str] = &["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"];
const DAY_COUNTS: &[&str] = &["2 days a week", "3 days a week", "4 days a week", "5 days a week"];
const TIMES: &[&str] = &["in the morning", "after work", "in the evening", "before breakfast", "at night", "after lunch"];
const SCORES: &[&str] = &["5", "6", "7", "8", "9", "10"];

struct Builder {
    week_id: String,
    dataset: String,
    utterances: Vec<AnnotatedUtterance>,
    goal: BeliefState,
    stage: Stage,
}

fn mark(slot: SlotName, value: &str) -> String {
    format!("[{value}]({})", slot.as_str())
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty pool")
}

fn pick_other<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str], not: &str) -> &'a str {
    let pool: Vec<&str> = xs.iter().copied().filter(|x| *x != not).collect();
    pick(rng, &pool)
}

impl Builder {
    fn push(&mut self, speaker: Speaker, marked: &str) {
        let (text, spans) = parse_markup(marked).unwrap_or_else(|e| panic!("toy template `{marked}`: {e}"));
        let mut u = AnnotatedUtterance::from_spans(
            &self.week_id,
            self.utterances.len() as u32,
            speaker,
            &text,
            self.stage,
            &spans,
        )
        .unwrap_or_else(|e| panic!("toy template `{marked}`: {e}"));
        u.dataset = Some(self.dataset.clone());
        if speaker == Speaker::Patient {
            u.belief = Some(self.goal.clone());
        }
        self.utterances.push(u);
    }

    fn coach(&mut self, marked: &str) {
        self.push(Speaker::Coach, marked);
    }

    fn patient(&mut self, marked: &str) {
        self.push(Speaker::Patient, marked);
    }

    fn set(&mut self, slot: SlotName, values: &[&str]) {
        self.goal.set(slot, values.iter().map(|v| v.to_string())).expect("toy values are valid");
    }

    fn value(&self, slot: SlotName) -> String {
        self.goal.get(slot).join(" and ")
    }
}

fn measure_pool(slot: SlotName) -> &'static [&'static str] {
    match slot {
        SlotName::Amount => AMOUNTS,
        SlotName::Distance => DISTANCES,
        _ => DURATIONS,
    }
}

fn day_list(days: &[&str]) -> String {
    let marked: Vec<String> = days.iter().map(|d| mark(SlotName::Dayname, d)).collect();
    match marked.len() {
        1 => marked[0].clone(),
        _ => format!("{} and {}", marked[..marked.len() - 1].join(", "), marked[marked.len() - 1]),
    }
}

fn summary(b: &Builder, measure: SlotName) -> String {
    let act = mark(SlotName::Activity, &b.value(SlotName::Activity));
    let m = mark(measure, &b.value(measure));
    let when = if b.goal.is_filled(SlotName::Dayname) {
        let days: Vec<&str> = b.goal.get(SlotName::Dayname).iter().map(String::as_str).collect();
        format!("on {}", day_list(&days))
    } else {
        mark(SlotName::Daynumber, &b.value(SlotName::Daynumber))
    };
    let time = if b.goal.is_filled(SlotName::Time) {
        format!(" {}", mark(SlotName::Time, &b.value(SlotName::Time)))
    } else {
        String::new()
    };
    let connector = if measure == SlotName::Duration { "for " } else { "" };
    format!("Great! So your goal is to {act} {connector}{m} {when}{time}. Does that sound right?")
}

fn keep_episode(b: &mut Builder, rng: &mut ChaCha8Rng, slot: SlotName, pool: &[&str]) {
    let prev = b.value(slot);
    let new = pick_other(rng, pool, &prev);
    let (p, n) = (mark(slot, &prev), mark(slot, new));
    let coach = [
        format!("Just to check, you said {p}?"),
        format!("So that's {p}, right?"),
        format!("Okay, {p} then?"),
    ];
    b.coach(coach.choose(rng).expect("templates"));
    let patient = [
        format!("Yes, {p}. Last week I only did {n}."),
        format!("Right, {p}. I usually only manage {n}."),
        format!("Yes. I did {n} before but {p} is the plan."),
    ];
    b.patient(patient.choose(rng).expect("templates"));
}

fn replace_episode(b: &mut Builder, rng: &mut ChaCha8Rng, slot: SlotName, pool: &[&str]) {
    let prev = b.value(slot);
    let new = pick_other(rng, pool, &prev);
    let (p, n) = (mark(slot, &prev), mark(slot, new));
    let coach = [
        format!("Is {p} still okay for you?"),
        format!("Does {p} feel doable?"),
        format!("How do you feel about {p}?"),
    ];
    b.coach(coach.choose(rng).expect("templates"));
    b.set(slot, &[new]);
    let patient = [
        format!("Actually, let's do {n} instead."),
        format!("Hmm, can we change it to {n}?"),
        format!("I'd prefer {n} instead."),
    ];
    b.patient(patient.choose(rng).expect("templates"));
}

fn week(id: usize, dataset: &str, cfg: &ToyConfig, rng: &mut ChaCha8Rng) -> Vec<AnnotatedUtterance> {
    use SlotName::*;
    let mut b = Builder {
        week_id: format!("toy-{id:04}"),
        dataset: dataset.to_string(),
        utterances: Vec::new(),
        goal: BeliefState::new(),
        stage: Stage::GoalSetting,
    };

    let opener = ["Hi! What activity would you like to do this week?", "Hello! What would you like to work on this week?"];
    b.coach(opener.choose(rng).expect("templates"));
    let act = pick(rng, ACTIVITIES);
    b.set(Activity, &[act]);
    let a = mark(Activity, act);
    let replies = [format!("I'd like to {a}."), format!("Maybe {a} this week."), format!("I want to {a} more.")];
    b.patient(replies.choose(rng).expect("templates"));

    let measure = match rng.gen_range(0..4) {
        0 if act == "walk" || act == "run" => Amount,
        1 if act != "swim" && act != "dance" && act != "stretch" => Distance,
        _ => Duration,
    };
    let ask = match measure {
        Amount => format!("How many steps would you like to {a}?"),
        Distance => format!("How far would you like to {a} each time?"),
        _ => format!("How long would you like to {a} each time?"),
    };
    b.coach(&ask);
    let m = pick(rng, measure_pool(measure));
    b.set(measure, &[m]);
    let mm = mark(measure, m);
    let replies = [format!("About {mm}."), format!("{mm} sounds good."), format!("I think {mm}.")];
    b.patient(replies.choose(rng).expect("templates"));

    if rng.gen_bool(cfg.collision_rate) {
        if rng.gen_bool(0.5) {
            keep_episode(&mut b, rng, measure, measure_pool(measure));
        } else {
            replace_episode(&mut b, rng, measure, measure_pool(measure));
        }
    }

    b.coach(&format!("Which days would you like to {a}?"));
    let with_time = rng.gen_bool(0.4);
    let time = pick(rng, TIMES);
    if with_time {
        b.set(Time, &[time]);
    }
    let tail = if with_time { format!(" {}", mark(Time, time)) } else { String::new() };
    if rng.gen_bool(0.25) {
        let n = pick(rng, DAY_COUNTS);
        b.set(Daynumber, &[n]);
        b.patient(&format!("Maybe {}{tail}.", mark(Daynumber, n)));
    } else {
        let k = rng.gen_range(1..=3);
        let mut days: Vec<&str> = DAYS.choose_multiple(rng, k).copied().collect();
        days.sort_by_key(|d| DAYS.iter().position(|x| x == d));
        b.set(Dayname, &days);
        b.patient(&format!("On {}{tail}.", day_list(&days)));
    }

    b.coach("On a scale of 1 to 10, how confident are you that you can do this?");
    let s = pick(rng, SCORES);
    b.set(Score, &[s]);
    let sm = mark(Score, s);
    let replies = [format!("I'd say {sm}."), format!("{sm}."), format!("Maybe {sm}.")];
    b.patient(replies.choose(rng).expect("templates"));

    b.coach(&summary(&b, measure));
    if rng.gen_bool(cfg.collision_rate * 0.5) {
        // revision at the summary stays in goal setting
        if b.goal.is_filled(Dayname) {
            let prev: Vec<String> = b.goal.get(Dayname).to_vec();
            let pool: Vec<&str> = DAYS.iter().copied().filter(|d| !prev.iter().any(|p| p == d)).collect();
            let new = pick(rng, &pool);
            b.set(Dayname, &[new]);
            b.patient(&format!("Actually, can we do {} instead?", mark(Dayname, new)));
        } else {
            let pool = measure_pool(measure);
            let new = pick_other(rng, pool, &b.value(measure));
            b.set(measure, &[new]);
            b.patient(&format!("Actually, make it {} instead.", mark(measure, new)));
        }
        b.coach(&summary(&b, measure));
    }

    b.stage = Stage::GoalImplementation;
    let yes = ["Yes, that sounds right.", "Yes!", "Sounds good, thanks.", "That's right."];
    b.patient(yes.choose(rng).expect("templates"));
    b.coach(&format!("Great, good luck with your goal to {a} this week! I'll check in with you soon."));

    for _ in 0..rng.gen_range(1..=2) {
        b.coach(&format!("How is your goal to {a} going so far?"));
        match rng.gen_range(0..4) {
            0 => b.patient("It's going well so far!"),
            1 => b.patient("Not great, I was sick this week."),
            2 if rng.gen_bool(cfg.collision_rate) => {
                let new = pick_other(rng, measure_pool(measure), &b.value(measure));
                b.patient(&format!("So far I only managed {} at a time.", mark(measure, new)));
            }
            _ => b.patient("Pretty good, I stuck to the plan."),
        }
        b.coach("Keep it up! You are doing great.");
    }
    b.utterances
}

/// Generate a corpus. The last `test_fraction` of weeks form the held-out
/// dataset.
pub fn generate(cfg: &ToyConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_test = (cfg.weeks as f64 * cfg.test_fraction).round() as usize;
    let mut utterances = Vec::new();
    for i in 0..cfg.weeks {
        let dataset = if i >= cfg.weeks - n_test { TEST_DATASET } else { TRAIN_DATASET };
        utterances.extend(week(i, dataset, cfg, &mut rng));
    }
    Corpus::from_utterances(utterances)
}
