//! Replace annotated slot values with `[slot]` placeholders.

use goalcoach_core::text::tokenize;
use goalcoach_core::SlotSpan;

use crate::error::{CorpusError, Result};
use crate::record::AnnotatedUtterance;

/// Delexicalize `text` given token-indexed spans. Spans must not overlap.
pub fn delexicalize_text(text: &str, spans: &[SlotSpan]) -> Result<String> {
    let tokens = tokenize(text);
    let mut sorted: Vec<&SlotSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| s.token_start);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for s in sorted {
        if s.token_start >= s.token_end || s.token_end > tokens.len() {
            return Err(CorpusError::Invalid(format!(
                "span {}..{} out of range for {} tokens",
                s.token_start,
                s.token_end,
                tokens.len()
            )));
        }
        let start = tokens[s.token_start].start;
        let end = tokens[s.token_end - 1].end;
        if start < cursor {
            return Err(CorpusError::Invalid(format!(
                "span {}..{} overlaps the previous span",
                s.token_start, s.token_end
            )));
        }
        out.push_str(&text[cursor..start]);
        out.push_str(&s.slot.placeholder());
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

pub fn delexicalize(u: &AnnotatedUtterance) -> String {
    delexicalize_text(&u.text, &u.spans()).expect("validated utterance spans never overlap")
}
