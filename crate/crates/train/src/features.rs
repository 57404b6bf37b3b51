//! String feature templates and their index.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

/// Sorted feature names with a lookup table. Unknown features are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureIndex {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl From<Vec<String>> for FeatureIndex {
    fn from(names: Vec<String>) -> Self {
        let lookup = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        FeatureIndex { names, lookup }
    }
}

impl From<FeatureIndex> for Vec<String> {
    fn from(f: FeatureIndex) -> Self {
        f.names
    }
}

impl FeatureIndex {
    /// Keep features occurring at least `min_count` times.
    pub fn build<'a, I>(feature_lists: I, min_count: u32) -> Self
    where
        I: IntoIterator<Item = &'a Vec<String>>,
    {
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for list in feature_lists {
            for f in list {
                *counts.entry(f.as_str()).or_default() += 1;
            }
        }
        let names: Vec<String> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count.max(1))
            .map(|(n, _)| n.to_string())
            .collect();
        names.into()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn encode(&self, features: &[String]) -> Vec<u32> {
        features.iter().filter_map(|f| self.get(f)).collect()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

pub fn shape(word: &str) -> String {
    let mut out = String::new();
    for c in word.chars() {
        let s = if c.is_ascii_digit() {
            'd'
        } else if c.is_uppercase() {
            'X'
        } else if c.is_alphabetic() {
            'x'
        } else {
            c
        };
        if !out.ends_with(s) {
            out.push(s);
        }
    }
    out
}

fn affix(word: &str, n: usize, prefix: bool) -> String {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() <= n {
        return word.to_string();
    }
    if prefix {
        chars[..n].iter().collect()
    } else {
        chars[chars.len() - n..].iter().collect()
    }
}

/// Per-token features for sequence labelling, over lowercased tokens.
pub fn token_features(tokens: &[String], i: usize) -> Vec<String> {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let at = |j: isize| -> &str {
        if j < 0 {
            "<s>"
        } else {
            lower.get(j as usize).map(String::as_str).unwrap_or("</s>")
        }
    };
    let i = i as isize;
    let w = at(i);
    let mut f = vec![
        "bias".to_string(),
        format!("w={w}"),
        format!("shape={}", shape(&tokens[i as usize])),
        format!("pre3={}", affix(w, 3, true)),
        format!("suf3={}", affix(w, 3, false)),
        format!("suf2={}", affix(w, 2, false)),
        format!("w-1={}", at(i - 1)),
        format!("w+1={}", at(i + 1)),
        format!("w-2={}", at(i - 2)),
        format!("w+2={}", at(i + 2)),
        format!("w-1w={}|{w}", at(i - 1)),
        format!("ww+1={w}|{}", at(i + 1)),
        format!("shape-1={}", shape(at(i - 1))),
        format!("shape+1={}", shape(at(i + 1))),
    ];
    if w.chars().any(|c| c.is_ascii_digit()) {
        f.push("has_digit".into());
    }
    if i == 0 {
        f.push("first".into());
    }
    f
}

/// Unigram and bigram features with a namespace prefix.
pub fn bag_of_ngrams(ns: &str, words: &[String], out: &mut Vec<String>) {
    for (i, w) in words.iter().enumerate() {
        out.push(format!("{ns}:{w}"));
        if let Some(next) = words.get(i + 1) {
            out.push(format!("{ns}:{w}_{next}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_sorted_and_filtered() {
        let lists = vec![
            vec!["b".to_string(), "a".to_string()],
            vec!["b".to_string(), "c".to_string()],
        ];
        let idx = FeatureIndex::build(&lists, 1);
        assert_eq!(idx.names(), ["a", "b", "c"]);
        assert_eq!(FeatureIndex::build(&lists, 2).names(), ["b"]);
        assert_eq!(idx.encode(&["c".into(), "zzz".into()]), vec![2]);
        let json = serde_json::to_string(&idx).unwrap();
        assert_eq!(serde_json::from_str::<FeatureIndex>(&json).unwrap(), idx);
    }

    #[test]
    fn shapes() {
        assert_eq!(shape("3000"), "d");
        assert_eq!(shape("Monday"), "Xx");
        assert_eq!(shape("6:30pm"), "d:dx");
    }
}
