//! Pipeline-level tokenization and value normalization.
//!
//! Tokens are whitespace-separated chunks with sentence punctuation split
//! off. Apostrophes, hyphens and digit-internal `.`/`:` stay inside the
//! token so "I'm", "6:30pm" and "2.5" survive as single tokens.

use serde::{Deserialize, Serialize};

/// A token with its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_split_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | '!' | '?' | ';' | ':' | '"' | '(' | ')' | '[' | ']' | '{' | '}' | '…'
    )
}

/// Tokenize `text`, keeping byte offsets.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut current: Option<usize> = None;

    let flush = |tokens: &mut Vec<Token>, start: usize, end: usize| {
        if end > start {
            tokens.push(Token {
                text: text[start..end].to_string(),
                start,
                end,
            });
        }
    };

    for (i, &(pos, c)) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if let Some(start) = current.take() {
                flush(&mut tokens, start, pos);
            }
            continue;
        }
        if is_split_punct(c) {
            // keep "2.5" and "6:30" intact
            let prev_digit = i > 0 && chars[i - 1].1.is_ascii_digit();
            let next_digit = chars.get(i + 1).is_some_and(|&(_, n)| n.is_ascii_digit());
            if (c == '.' || c == ':' || c == ',') && prev_digit && next_digit && current.is_some() {
                continue;
            }
            if let Some(start) = current.take() {
                flush(&mut tokens, start, pos);
            }
            flush(&mut tokens, pos, pos + c.len_utf8());
            continue;
        }
        if current.is_none() {
            current = Some(pos);
        }
    }
    if let Some(start) = current {
        flush(&mut tokens, start, text.len());
    }
    tokens
}

/// Token strings only.
pub fn tokenize_words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

/// Collapse internal whitespace and trim.
pub fn collapse_whitespace(value: &str) -> String {
    value.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Comparison key for slot values: case-insensitive after whitespace collapse.
pub fn normalize_value(value: &str) -> String {
    collapse_whitespace(value).to_lowercase()
}

/// Normalized token sequence, used for locating values inside other text.
pub fn normalized_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_keeps_contractions() {
        assert_eq!(
            tokenize_words("I'm sorry, I didn't go."),
            ["I'm", "sorry", ",", "I", "didn't", "go", "."]
        );
    }

    #[test]
    fn keeps_times_and_decimals() {
        assert_eq!(
            tokenize_words("walk 2.5 miles at 6:30pm!"),
            ["walk", "2.5", "miles", "at", "6:30pm", "!"]
        );
    }

    #[test]
    fn offsets_slice_back_to_source() {
        let text = "  Good   morning!  ";
        for t in tokenize(text) {
            assert_eq!(&text[t.start..t.end], t.text);
        }
        assert_eq!(tokenize_words(text), ["Good", "morning", "!"]);
    }

    #[test]
    fn normalization_is_case_and_space_insensitive() {
        assert_eq!(normalize_value("  3000   Steps "), "3000 steps");
        assert_eq!(normalize_value("Walk"), normalize_value("walk"));
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   ").is_empty());
    }
}
