//! One-way import of raw annotated transcripts into corpus records.
//!
//! Raw layout: one directory per dataset, one `.tsv` file per week (the file
//! stem is the week id). Each non-empty, non-`#` line is
//! `speaker<TAB>stage<TAB>phase<TAB>text[<TAB>belief]`, where `text` marks
//! slot values inline as `[value](slot)` and `phase` may be `-`.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use goalcoach_core::belief::parse_belief;
use goalcoach_core::text::tokenize;
use goalcoach_core::{SlotName, Speaker, Stage};
use regex::Regex;

use crate::error::{CorpusError, Result};
use crate::record::{write_records, CorpusRecord, SpanRecord};

fn markup() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([^\[\]]+)\]\(([a-z_]+)\)").expect("valid regex"))
}

/// Strip `[value](slot)` markup, returning plain text and token spans.
pub fn parse_markup(marked: &str) -> std::result::Result<(String, Vec<SpanRecord>), String> {
    let mut text = String::with_capacity(marked.len());
    let mut ranges = Vec::new();
    let mut cursor = 0;
    for cap in markup().captures_iter(marked) {
        let whole = cap.get(0).expect("match");
        let slot: SlotName = cap[2].parse().map_err(|e| format!("{e}"))?;
        text.push_str(&marked[cursor..whole.start()]);
        let start = text.len();
        text.push_str(&cap[1]);
        ranges.push((slot, start, text.len()));
        cursor = whole.end();
    }
    text.push_str(&marked[cursor..]);
    let tokens = tokenize(&text);
    let spans = ranges
        .into_iter()
        .map(|(slot, a, b)| {
            let start = tokens.iter().position(|t| t.start == a);
            let end = tokens.iter().position(|t| t.end == b);
            match (start, end) {
                (Some(s), Some(e)) if s <= e => Ok(SpanRecord { slot, start: s, end: e + 1 }),
                _ => Err(format!("value `{}` does not align with token boundaries", &text[a..b])),
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((text, spans))
}

fn parse_line(line: &str) -> std::result::Result<(Speaker, Stage, Option<String>, String, Vec<SpanRecord>, Option<String>), String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if !(4..=5).contains(&cols.len()) {
        return Err(format!("expected 4 or 5 tab-separated columns, found {}", cols.len()));
    }
    let speaker: Speaker = cols[0].trim().parse().map_err(|e| format!("{e}"))?;
    let stage: Stage = cols[1].trim().parse().map_err(|e| format!("{e}"))?;
    let phase = match cols[2].trim() {
        "" | "-" => None,
        p => Some(p.to_string()),
    };
    let (text, spans) = parse_markup(cols[3])?;
    if text.trim().is_empty() {
        return Err("empty utterance".into());
    }
    let belief = match cols.get(4).map(|b| b.trim()) {
        Some(b) => Some(parse_belief(b).map_err(|e| e.to_string())?.serialize()),
        None => None,
    };
    Ok((speaker, stage, phase, text, spans, belief))
}

/// Convert every `.tsv` week file in `dir` (sorted by name).
pub fn import_dataset(dir: &Path, dataset: &str) -> Result<Vec<CorpusRecord>> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| CorpusError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for file in files {
        let week_id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let raw = fs::read_to_string(&file).map_err(|e| CorpusError::io(&file, e))?;
        let mut turn_index = 0;
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (speaker, stage, phase, text, spans, belief) =
                parse_line(line).map_err(|reason| CorpusError::schema(&file, i + 1, reason))?;
            out.push(CorpusRecord {
                week_id: week_id.clone(),
                dataset: Some(dataset.to_string()),
                turn_index,
                speaker,
                text,
                stage,
                phase,
                acts: Vec::new(),
                spans,
                belief,
            });
            turn_index += 1;
        }
    }
    Ok(out)
}

/// Import both datasets into `out/dataset1.jsonl` and `out/dataset2.jsonl`.
/// Returns the record count per dataset.
pub fn import(dataset1: &Path, dataset2: &Path, out: &Path) -> Result<(usize, usize)> {
    let d1 = import_dataset(dataset1, crate::record::TRAIN_DATASET)?;
    let d2 = import_dataset(dataset2, crate::record::TEST_DATASET)?;
    write_records(out.join("dataset1.jsonl"), &d1)?;
    write_records(out.join("dataset2.jsonl"), &d2)?;
    Ok((d1.len(), d2.len()))
}
