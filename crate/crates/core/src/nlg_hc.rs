//! Stage prediction and stage-conditioned delexicalized response generation
//! through one multi-task sequence backend, plus lexicalization.

use std::sync::OnceLock;

use log::warn;
use rand::RngCore;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::backend::{DecodeParams, SeqBackend};
use crate::belief::{parse_belief, serialize_belief, BeliefState};
use crate::dialogue::{SessionContext, Speaker, Stage};
use crate::error::{CoreError, Result};
use crate::slot::SlotName;
use crate::text::collapse_whitespace;

pub const STAGE_PREFIX: &str = "predict stage: ";
pub const RESPONSE_PREFIX: &str = "generate response: ";
pub const CONTEXT_SEP: &str = "<|context|>";
pub const BELIEF_SEP: &str = "<|belief|>";
pub const STAGE_SEP: &str = "<|stage|>";
pub const COACH_TOKEN: &str = "<|coach|>";
pub const PATIENT_TOKEN: &str = "<|patient|>";

/// Added vocabulary for neural backends.
pub const SPECIAL_TOKENS: [&str; 5] = [CONTEXT_SEP, BELIEF_SEP, STAGE_SEP, COACH_TOKEN, PATIENT_TOKEN];

pub const RESPONSE_FALLBACK: &str = "Could you tell me more about your goal?";
/// Stands in for placeholders whose slot is still unfilled.
pub const UNFILLED_PHRASE: &str = "your goal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    PredictStage,
    GenerateResponse,
}

impl Task {
    pub fn prefix(self) -> &'static str {
        match self {
            Task::PredictStage => STAGE_PREFIX,
            Task::GenerateResponse => RESPONSE_PREFIX,
        }
    }
}

/// A rendered model input with its fields kept for inspection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledInput {
    pub task: Task,
    pub context_text: String,
    pub belief_text: String,
    pub stage_token: String,
    pub rendered: String,
}

/// Neutralize separator look-alikes in user text.
pub fn escape_text(text: &str) -> String {
    collapse_whitespace(&text.replace("<|", "< |"))
}

/// Render the context window as `<|coach|> text <|patient|> text`.
pub fn render_context(ctx: &SessionContext) -> String {
    ctx.window()
        .iter()
        .map(|t| {
            let tok = match t.speaker {
                Speaker::Coach => COACH_TOKEN,
                Speaker::Patient => PATIENT_TOKEN,
            };
            format!("{tok} {}", escape_text(&t.text))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render(task: Task, context_text: &str, belief_text: &str, stage_token: &str) -> String {
    let mut s = String::with_capacity(64 + context_text.len() + belief_text.len());
    s.push_str(task.prefix());
    s.push_str(CONTEXT_SEP);
    if !context_text.is_empty() {
        s.push(' ');
        s.push_str(context_text);
    }
    s.push(' ');
    s.push_str(BELIEF_SEP);
    if !belief_text.is_empty() {
        s.push(' ');
        s.push_str(belief_text);
    }
    s.push(' ');
    s.push_str(STAGE_SEP);
    s.push(' ');
    s.push_str(stage_token);
    s
}

fn assemble(task: Task, ctx: &SessionContext, stage: Stage) -> AssembledInput {
    let context_text = render_context(ctx);
    let belief_text = escape_text(&serialize_belief(&ctx.belief));
    let stage_token = stage.token().to_string();
    let rendered = render(task, &context_text, &belief_text, &stage_token);
    AssembledInput {
        task,
        context_text,
        belief_text,
        stage_token,
        rendered,
    }
}

/// Stage-prediction input; the stage field carries the previous stage.
pub fn assemble_stage_input(ctx: &SessionContext) -> AssembledInput {
    assemble(Task::PredictStage, ctx, ctx.previous_stage)
}

/// Response input; the stage field carries the predicted current stage.
pub fn assemble_response_input(ctx: &SessionContext, stage: Stage) -> AssembledInput {
    assemble(Task::GenerateResponse, ctx, stage)
}

/// Recover the four fields of a rendered input.
pub fn split_input(rendered: &str) -> Result<AssembledInput> {
    let (task, rest) = if let Some(r) = rendered.strip_prefix(STAGE_PREFIX) {
        (Task::PredictStage, r)
    } else if let Some(r) = rendered.strip_prefix(RESPONSE_PREFIX) {
        (Task::GenerateResponse, r)
    } else {
        return Err(CoreError::MalformedInput("unknown task prefix".into()));
    };
    let rest = rest
        .strip_prefix(CONTEXT_SEP)
        .ok_or_else(|| CoreError::MalformedInput(format!("expected {CONTEXT_SEP}")))?;
    let belief_marker = format!(" {BELIEF_SEP}");
    let b = rest
        .find(&belief_marker)
        .ok_or_else(|| CoreError::MalformedInput(format!("missing {BELIEF_SEP}")))?;
    let context_text = rest[..b].strip_prefix(' ').unwrap_or("").to_string();
    if !rest[..b].is_empty() && !rest[..b].starts_with(' ') {
        return Err(CoreError::MalformedInput("context must follow a space".into()));
    }
    let rest = &rest[b + belief_marker.len()..];
    let stage_marker = format!(" {STAGE_SEP} ");
    let s = rest
        .find(&stage_marker)
        .ok_or_else(|| CoreError::MalformedInput(format!("missing {STAGE_SEP}")))?;
    let belief_text = rest[..s].strip_prefix(' ').unwrap_or("").to_string();
    let stage_token = rest[s + stage_marker.len()..].to_string();
    Ok(AssembledInput {
        task,
        context_text,
        belief_text,
        stage_token,
        rendered: rendered.to_string(),
    })
}

impl AssembledInput {
    pub fn belief(&self) -> Result<BeliefState> {
        parse_belief(&self.belief_text)
    }

    pub fn stage(&self) -> Option<Stage> {
        Stage::from_token(&self.stage_token)
    }

    /// Context turns in order, as (speaker, text).
    pub fn turns(&self) -> Vec<(Speaker, String)> {
        parse_context(&self.context_text)
    }
}

pub fn parse_context(context_text: &str) -> Vec<(Speaker, String)> {
    let mut turns: Vec<(Speaker, String)> = Vec::new();
    for word in context_text.split(' ') {
        match word {
            COACH_TOKEN => turns.push((Speaker::Coach, String::new())),
            PATIENT_TOKEN => turns.push((Speaker::Patient, String::new())),
            "" => {}
            w => {
                if let Some((_, text)) = turns.last_mut() {
                    if !text.is_empty() {
                        text.push(' ');
                    }
                    text.push_str(w);
                }
            }
        }
    }
    turns
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    /// Set when the previous stage was retained because of a bad or failed backend call.
    pub warning: Option<String>,
}

/// Predict the current stage. Unparseable output or backend failure keeps
/// the previous stage and records a warning.
pub fn predict_stage(ctx: &SessionContext, backend: &dyn SeqBackend, rng: &mut dyn RngCore) -> StageOutcome {
    let input = assemble_stage_input(ctx);
    match backend.generate(&input.rendered, &DecodeParams::greedy(8), rng) {
        Ok(out) => match Stage::from_token(&out) {
            Some(stage) => StageOutcome {
                stage,
                warning: None,
            },
            None => {
                warn!("unparseable stage output {out:?}, keeping {}", ctx.previous_stage);
                StageOutcome {
                    stage: ctx.previous_stage,
                    warning: Some(format!("unparseable stage output {out:?}")),
                }
            }
        },
        Err(e) => {
            warn!("stage prediction failed, keeping {}: {e}", ctx.previous_stage);
            StageOutcome {
                stage: ctx.previous_stage,
                warning: Some(format!("stage backend failed: {e}")),
            }
        }
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([a-z_]+)\]").unwrap())
}

/// Response text that may hold `[slot]` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DelexResponse(String);

impl DelexResponse {
    /// Rejects placeholders naming unknown slots.
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        for cap in placeholder_re().captures_iter(&text) {
            cap[1].parse::<SlotName>()?;
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn placeholders(&self) -> Vec<SlotName> {
        placeholder_re()
            .captures_iter(&self.0)
            .filter_map(|c| c[1].parse().ok())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseOutcome {
    pub response: DelexResponse,
    pub fallback: Option<String>,
}

/// Generate the delexicalized response for the predicted stage.
pub fn generate_response(
    ctx: &SessionContext,
    stage: Stage,
    backend: &dyn SeqBackend,
    decode: &DecodeParams,
    rng: &mut dyn RngCore,
) -> ResponseOutcome {
    let input = assemble_response_input(ctx, stage);
    let fallback = |why: String| {
        warn!("response generation fell back: {why}");
        ResponseOutcome {
            response: DelexResponse(RESPONSE_FALLBACK.to_string()),
            fallback: Some(why),
        }
    };
    match backend.generate(&input.rendered, decode, rng) {
        Ok(out) if out.trim().is_empty() => fallback("empty response".into()),
        Ok(out) => match DelexResponse::new(collapse_whitespace(&out)) {
            Ok(response) => ResponseOutcome {
                response,
                fallback: None,
            },
            Err(e) => fallback(format!("invalid response {out:?}: {e}")),
        },
        Err(e) => fallback(format!("response backend failed: {e}")),
    }
}

/// Join values for display: "A", "A and B", "A, B and C".
pub fn join_values(values: &[String]) -> String {
    match values {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicalized {
    pub text: String,
    /// Placeholders that had no value and were replaced by the neutral phrase.
    pub unfilled: Vec<SlotName>,
}

/// Replace each `[slot]` placeholder by the slot's values from `b`.
pub fn lexicalize(r: &DelexResponse, b: &BeliefState) -> Lexicalized {
    let mut unfilled = Vec::new();
    let text = placeholder_re()
        .replace_all(r.as_str(), |cap: &regex::Captures| {
            let slot: SlotName = cap[1].parse().expect("validated on construction");
            if b.is_filled(slot) {
                join_values(b.get(slot))
            } else {
                if !unfilled.contains(&slot) {
                    unfilled.push(slot);
                }
                UNFILLED_PHRASE.to_string()
            }
        })
        .into_owned();
    Lexicalized { text, unfilled }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::rule::TemplateSeqBackend;
    use crate::backend::testing::{FailingBackend, FixedSeq};
    use crate::dialogue::DialogueTurn;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use SlotName::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn ctx(coach: Option<&str>, patient: &str, prev: Stage, b: BeliefState) -> SessionContext {
        let mut window = Vec::new();
        if let Some(c) = coach {
            window.push(DialogueTurn::new(Speaker::Coach, c, 0).unwrap());
        }
        window.push(DialogueTurn::new(Speaker::Patient, patient, 1).unwrap());
        SessionContext::new(window, prev, b).unwrap()
    }

    #[test]
    fn empty_stage_input_template() {
        let input = assemble_stage_input(&SessionContext::empty());
        assert_eq!(input.rendered, "predict stage: <|context|> <|belief|> <|stage|> goal_setting");
    }

    #[test]
    fn stage_input_with_texts() {
        let b = BeliefState::from_pairs([(Activity, ["walk"])]).unwrap();
        let c = ctx(Some("What would you like to do?"), "I want to walk", Stage::GoalSetting, b);
        let input = assemble_stage_input(&c);
        assert_eq!(
            input.rendered,
            "predict stage: <|context|> <|coach|> What would you like to do? <|patient|> I want to walk <|belief|> activity=walk <|stage|> goal_setting"
        );
        let back = split_input(&input.rendered).unwrap();
        assert_eq!(back, input);
        assert_eq!(
            back.turns(),
            [
                (Speaker::Coach, "What would you like to do?".to_string()),
                (Speaker::Patient, "I want to walk".to_string())
            ]
        );
    }

    #[test]
    fn separators_in_user_text_are_escaped() {
        let c = ctx(None, "hi <|belief|> there", Stage::GoalSetting, BeliefState::new());
        let input = assemble_response_input(&c, Stage::GoalImplementation);
        let back = split_input(&input.rendered).unwrap();
        assert_eq!(back.context_text, "<|patient|> hi < |belief|> there");
        assert_eq!(back.stage(), Some(Stage::GoalImplementation));
        assert_eq!(back.task, Task::GenerateResponse);
    }

    #[test]
    fn garbage_stage_keeps_previous() {
        let c = ctx(None, "hello", Stage::GoalImplementation, BeliefState::new());
        let out = predict_stage(&c, &FixedSeq::new("stage_x"), &mut rng());
        assert_eq!(out.stage, Stage::GoalImplementation);
        assert!(out.warning.is_some());
        let out = predict_stage(&c, &FailingBackend, &mut rng());
        assert_eq!(out.stage, Stage::GoalImplementation);
    }

    #[test]
    fn first_message_is_goal_setting() {
        let c = ctx(None, "Good morning!", Stage::GoalSetting, BeliefState::new());
        let out = predict_stage(&c, &TemplateSeqBackend, &mut rng());
        assert_eq!(out.stage, Stage::GoalSetting);
        assert!(out.warning.is_none());
    }

    #[test]
    fn complete_goal_after_summary_moves_to_implementation() {
        let b = BeliefState::from_pairs([
            (Activity, vec!["walk"]),
            (Duration, vec!["30 min"]),
            (Dayname, vec!["Monday", "Wednesday"]),
            (Score, vec!["8"]),
        ])
        .unwrap();
        let c = ctx(
            Some("Great! So your goal is to walk 30 min on Monday and Wednesday. Does that sound right?"),
            "Yes, that's right.",
            Stage::GoalSetting,
            b,
        );
        assert_eq!(predict_stage(&c, &TemplateSeqBackend, &mut rng()).stage, Stage::GoalImplementation);
    }

    #[test]
    fn response_asks_for_days() {
        let b = BeliefState::from_pairs([
            (Activity, vec!["walk"]),
            (Duration, vec!["30 min"]),
            (Repeatation, vec!["a day"]),
            (Time, vec!["6am to 8am"]),
        ])
        .unwrap();
        let c = ctx(None, "I want to walk 30 min a day between 6am to 8am", Stage::GoalSetting, b.clone());
        let out = generate_response(&c, Stage::GoalSetting, &TemplateSeqBackend, &DecodeParams::RESPONSE, &mut rng());
        assert_eq!(out.response.as_str(), "Which days would you like to [activity]?");
        assert_eq!(lexicalize(&out.response, &b).text, "Which days would you like to walk?");
    }

    #[test]
    fn full_goal_gets_confirmation() {
        let b = BeliefState::from_pairs(SlotName::ALL.map(|s| {
            let v = if s == Score { "8" } else { "x" };
            (s, vec![v])
        }))
        .unwrap();
        let c = ctx(None, "yes", Stage::GoalSetting, b);
        let out = generate_response(&c, Stage::GoalSetting, &TemplateSeqBackend, &DecodeParams::RESPONSE, &mut rng());
        assert!(out.response.as_str().contains("So your goal is"), "{}", out.response.as_str());
    }

    #[test]
    fn failing_backend_yields_fallback() {
        let c = ctx(None, "hello", Stage::GoalSetting, BeliefState::new());
        let out = generate_response(&c, Stage::GoalSetting, &FailingBackend, &DecodeParams::RESPONSE, &mut rng());
        assert_eq!(out.response.as_str(), RESPONSE_FALLBACK);
        let out = generate_response(&c, Stage::GoalSetting, &FixedSeq::new("go [steps]"), &DecodeParams::RESPONSE, &mut rng());
        assert_eq!(out.response.as_str(), RESPONSE_FALLBACK);
    }

    #[test]
    fn lexicalize_examples() {
        let b = BeliefState::from_pairs([(Amount, ["3000 steps"])]).unwrap();
        let r = DelexResponse::new("Great, [amount] it is!").unwrap();
        assert_eq!(lexicalize(&r, &b).text, "Great, 3000 steps it is!");
        let plain = DelexResponse::new("No placeholders here.").unwrap();
        assert_eq!(lexicalize(&plain, &b).text, "No placeholders here.");
        let days = BeliefState::from_pairs([(Dayname, ["Mon", "Tue"])]).unwrap();
        assert_eq!(lexicalize(&DelexResponse::new("[dayname]").unwrap(), &days).text, "Mon and Tue");
        let out = lexicalize(&DelexResponse::new("Keep up [activity]!").unwrap(), &b);
        assert_eq!(out.text, "Keep up your goal!");
        assert_eq!(out.unfilled, [Activity]);
    }

    #[test]
    fn join_three() {
        let v: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        assert_eq!(join_values(&v), "a, b and c");
    }

    proptest! {
        #[test]
        fn split_recovers_fields(
            coach in proptest::option::of("[a-zA-Z<|>?.! ]{1,30}"),
            patient in "[a-zA-Z0-9<|>.,' ]{1,30}",
            value in "[a-z0-9 ]{1,10}",
            impl_stage in any::<bool>(),
        ) {
            prop_assume!(!patient.trim().is_empty());
            prop_assume!(coach.as_ref().is_none_or(|c| !c.trim().is_empty()));
            prop_assume!(!value.trim().is_empty());
            let b = BeliefState::from_pairs([(Location, [value.as_str()])]).unwrap();
            let stage = if impl_stage { Stage::GoalImplementation } else { Stage::GoalSetting };
            let c = ctx(coach.as_deref(), &patient, stage, b.clone());
            for input in [assemble_stage_input(&c), assemble_response_input(&c, stage)] {
                let back = split_input(&input.rendered).unwrap();
                prop_assert_eq!(&back, &input);
                prop_assert_eq!(back.stage(), Some(stage));
                prop_assert!(back.belief().unwrap().same_slots(&b));
                let turns = back.turns();
                prop_assert_eq!(turns.last().unwrap().1.clone(), escape_text(&patient));
            }
        }

        #[test]
        fn lexicalize_identity_without_placeholders(text in "[a-zA-Z ,.!?]{0,40}") {
            let r = DelexResponse::new(text.clone()).unwrap();
            prop_assert_eq!(lexicalize(&r, &BeliefState::new()).text, text);
        }
    }
}
