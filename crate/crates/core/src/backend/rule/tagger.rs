//! Pattern slot tagger over the ten-slot schema.
//!
//! Patterns are tried in priority order over the lowercased token stream;
//! a match must start and end on token boundaries and may only claim tokens
//! no earlier pattern has claimed.

use regex::Regex;

use crate::backend::{Backend, BackendKind, BackendResult, BackendSpec, SlotTagger};
use crate::bio::BioLabel;
use crate::slot::SlotName;

const NUM: &str = r"(?:\d+(?:[.,]\d+)?|a few|a couple(?: of)?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|fifteen|twenty|thirty|forty|forty-five|fifty|sixty|ninety|hundred)";
const SMALL: &str = r"(?:10|[1-9]|one|two|three|four|five|six|seven|eight|nine|ten)";
const CLOCK: &str = r"(?:\d{1,2}(?::\d{2})?(?: ?[ap]m)|noon|midnight)";

pub const ACTIVITIES: &[&str] = &[
    "walk", "walks", "walking", "run", "runs", "running", "jog", "jogs", "jogging", "swim",
    "swimming", "bike", "biking", "cycle", "cycling", "ride my bike", "yoga", "stretch",
    "stretching", "dance", "dancing", "hike", "hiking", "lift weights", "weight lifting",
    "strength training", "exercise", "exercises", "exercising", "work out", "workout",
    "pilates", "zumba", "tennis", "basketball", "take the stairs", "climb stairs", "gardening",
    "aerobics", "push-ups", "pushups", "sit-ups", "squats", "elliptical", "rowing",
];

const PLACES: &str = r"(?:park|gym|office|track|pool|neighborhood|block|beach|mall|trail|treadmill|yard|backyard|ymca|campus|lake|river|church|school|street|field|center)";

const DAYS: &str = r"(?:mondays?|tuesdays?|wednesdays?|thursdays?|fridays?|saturdays?|sundays?|mon|tue|tues|wed|thu|thur|thurs|fri|weekends?|weekdays)";

struct Pattern {
    /// `None` marks a blocker: matched tokens are claimed but stay `O`.
    slot: Option<SlotName>,
    re: Regex,
}

impl Pattern {
    fn new(slot: Option<SlotName>, body: &str) -> Self {
        // group `v` is the span; the trailing group enforces a token boundary
        let re = Regex::new(&format!(r"^(?P<v>{body})(?: |$)")).expect("static pattern");
        Self { slot, re }
    }
}

pub struct RegexSlotTagger {
    patterns: Vec<Pattern>,
}

impl RegexSlotTagger {
    pub const IDENTITY: &'static str = "regex-slot-tagger";

    pub fn new() -> Self {
        use SlotName::*;
        let activities = {
            let mut a: Vec<&str> = ACTIVITIES.to_vec();
            a.sort_by_key(|s| std::cmp::Reverse(s.len()));
            a.iter().map(|s| regex::escape(s)).collect::<Vec<_>>().join("|")
        };
        let patterns = vec![
            Pattern::new(None, &format!(r"(?:a )?scale of {SMALL} (?:to|-) {SMALL}|{SMALL} (?:to|-) 10 scale|from {SMALL} to {SMALL}")),
            Pattern::new(
                Some(Time),
                &format!(
                    r"{CLOCK}(?: (?:to|-|until|and) {CLOCK})?|in the (?:early |late )?(?:morning|afternoon|evening)s?|(?:after|before) (?:work|lunch|dinner|breakfast|school)|at night|tonight|at (?:1[0-2]|[1-9])(?::\d{{2}})?"
                ),
            ),
            Pattern::new(Some(Daynumber), &format!(r"{NUM} days?(?: (?:a|per|each|this) week)?")),
            Pattern::new(
                Some(Amount),
                &format!(r"{NUM} (?:steps|flights(?: of stairs)?|laps|reps|sets|push-?ups|sit-?ups|squats|glasses(?: of water)?|servings|calories)"),
            ),
            Pattern::new(
                Some(Duration),
                &format!(r"{NUM} (?:minutes?|mins?|hours?|hrs?)|half an hour|an hour|a half hour"),
            ),
            Pattern::new(
                Some(Distance),
                &format!(r"{NUM} (?:miles?|mi|km|kilometers?|blocks|meters)"),
            ),
            Pattern::new(
                Some(Repeatation),
                &format!(r"(?:once|twice|{NUM} times?)(?: (?:a|per|each) (?:day|week))?|(?:a|per|each) day|every (?:other )?day|daily|everyday"),
            ),
            Pattern::new(
                Some(Location),
                &format!(r"(?:at|around|in|to|on) (?:the|my) {PLACES}|(?:at|from) (?:home|work)"),
            ),
            Pattern::new(Some(Dayname), DAYS),
            Pattern::new(Some(Activity), &activities),
            Pattern::new(Some(Score), &format!(r"{SMALL}(?: ?/ ?10| out of (?:10|ten))?")),
        ];
        Self { patterns }
    }

    /// Tag tokens; always returns a well-formed sequence of `tokens.len()` labels.
    pub fn tag_tokens(&self, tokens: &[String]) -> Vec<BioLabel> {
        let n = tokens.len();
        let mut labels = vec![BioLabel::O; n];
        let mut claimed = vec![false; n];
        let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut offsets = Vec::with_capacity(n);
        let mut joined = String::new();
        for t in &lowered {
            if !joined.is_empty() {
                joined.push(' ');
            }
            offsets.push(joined.len());
            joined.push_str(t);
        }
        let ends: Vec<usize> = offsets.iter().zip(&lowered).map(|(o, t)| o + t.len()).collect();

        for pattern in &self.patterns {
            let mut i = 0;
            while i < n {
                if claimed[i] {
                    i += 1;
                    continue;
                }
                let Some(cap) = pattern.re.captures(&joined[offsets[i]..]) else {
                    i += 1;
                    continue;
                };
                let end = offsets[i] + cap.name("v").expect("group v").end();
                let Some(j) = ends.iter().position(|&e| e == end) else {
                    i += 1;
                    continue;
                };
                if claimed[i..=j].iter().any(|&c| c) {
                    i += 1;
                    continue;
                }
                for k in i..=j {
                    claimed[k] = true;
                    if let Some(slot) = pattern.slot {
                        labels[k] = if k == i { BioLabel::B(slot) } else { BioLabel::I(slot) };
                    }
                }
                i = j + 1;
            }
        }
        labels
    }
}

impl Default for RegexSlotTagger {
    fn default() -> Self {
        Self::new()
    }
}

impl Backend for RegexSlotTagger {
    fn spec(&self) -> BackendSpec {
        BackendSpec {
            kind: BackendKind::SlotTagger,
            identity: Self::IDENTITY.into(),
            config: Default::default(),
        }
    }
}

impl SlotTagger for RegexSlotTagger {
    fn tag(&self, tokens: &[String]) -> BackendResult<Vec<BioLabel>> {
        Ok(self.tag_tokens(tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::{decode_word_spans, validate_labels};
    use crate::text::tokenize_words;
    use proptest::prelude::*;
    use SlotName::*;

    fn spans(text: &str) -> Vec<(SlotName, String)> {
        let words = tokenize_words(text);
        let labels = RegexSlotTagger::new().tag_tokens(&words);
        decode_word_spans(&words, &labels)
            .unwrap()
            .into_iter()
            .map(|s| (s.slot, s.value))
            .collect()
    }

    fn pairs(p: &[(SlotName, &str)]) -> Vec<(SlotName, String)> {
        p.iter().map(|(s, v)| (*s, v.to_string())).collect()
    }

    #[test]
    fn schedule_phrases() {
        assert_eq!(
            spans("I can jog 3 days a week on Monday, Wednesday and Friday"),
            pairs(&[(Activity, "jog"), (Daynumber, "3 days a week"), (Dayname, "Monday"), (Dayname, "Wednesday"), (Dayname, "Friday")])
        );
    }

    #[test]
    fn amounts_and_scores() {
        assert_eq!(spans("walk 3000 steps"), pairs(&[(Activity, "walk"), (Amount, "3000 steps")]));
        assert_eq!(spans("I'd say 8"), pairs(&[(Score, "8")]));
        assert_eq!(spans("maybe 7/10"), pairs(&[(Score, "7/10")]));
        assert_eq!(spans("probably 9 out of 10"), pairs(&[(Score, "9 out of 10")]));
    }

    #[test]
    fn coach_scale_question_not_a_score() {
        assert_eq!(
            spans("On a scale of 1 to 10, how confident are you that you can swim this week?"),
            pairs(&[(Activity, "swim")])
        );
    }

    #[test]
    fn time_and_location() {
        assert_eq!(
            spans("I'll do yoga at home in the morning"),
            pairs(&[(Activity, "yoga"), (Location, "at home"), (Time, "in the morning")])
        );
        assert_eq!(spans("twice a day after lunch"), pairs(&[(Repeatation, "twice a day"), (Time, "after lunch")]));
    }

    #[test]
    fn multiword_activity() {
        assert_eq!(spans("I want to lift weights"), pairs(&[(Activity, "lift weights")]));
    }

    proptest! {
        #[test]
        fn output_is_well_formed(words in prop::collection::vec("[a-z0-9:]{1,8}|monday|walk|steps|min|3|a|day", 0..20)) {
            let labels = RegexSlotTagger::new().tag_tokens(&words);
            prop_assert_eq!(labels.len(), words.len());
            validate_labels(&labels).unwrap();
        }
    }
}
