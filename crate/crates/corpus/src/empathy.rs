//! External empathy corpora: dialogue pairs with emotion labels, response
//! mechanism levels, and silver mechanism labelling.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use goalcoach_core::backend::MechanismLabeler;
use goalcoach_core::empathy::{encode_training_sequence, EmpathySample};
use goalcoach_core::{Mechanism, Speaker};
use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};
use crate::record::Corpus;

/// A speaker utterance and the listener's reply from an emotion-grounded
/// dialogue corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialoguePair {
    pub conv_id: String,
    pub emotion: String,
    pub utterance: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionExample {
    pub text: String,
    pub label: String,
}

fn unescape(s: &str) -> String {
    s.replace("_comma_", ",").trim().to_string()
}

#[derive(Debug, Deserialize)]
struct EdRow {
    conv_id: String,
    utterance_idx: u32,
    context: String,
    #[allow(dead_code)]
    prompt: String,
    #[allow(dead_code)]
    speaker_idx: String,
    utterance: String,
}

fn read_ed_rows(path: &Path) -> Result<Vec<EdRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| CorpusError::io(path, std::io::Error::other(e)))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CorpusError::schema(path, i + 2, e.to_string()))?;
        // Trailing columns vary between releases; only the first six matter.
        if rec.len() < 6 {
            return Err(CorpusError::schema(path, i + 2, format!("expected at least 6 columns, found {}", rec.len())));
        }
        let idx = rec[1]
            .trim()
            .parse()
            .map_err(|_| CorpusError::schema(path, i + 2, format!("bad utterance_idx `{}`", &rec[1])))?;
        rows.push(EdRow {
            conv_id: rec[0].to_string(),
            utterance_idx: idx,
            context: rec[2].trim().to_string(),
            prompt: unescape(&rec[3]),
            speaker_idx: rec[4].to_string(),
            utterance: unescape(&rec[5]),
        });
    }
    Ok(rows)
}

/// Speaker/listener pairs: utterance `2k-1` answered by `2k` in the same
/// conversation.
pub fn load_dialogue_pairs(path: &Path) -> Result<Vec<DialoguePair>> {
    let rows = read_ed_rows(path)?;
    let mut out = Vec::new();
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.conv_id == b.conv_id && a.utterance_idx % 2 == 1 && b.utterance_idx == a.utterance_idx + 1 {
            if a.utterance.is_empty() || b.utterance.is_empty() {
                continue;
            }
            out.push(DialoguePair {
                conv_id: a.conv_id.clone(),
                emotion: a.context.clone(),
                utterance: a.utterance.clone(),
                response: b.utterance.clone(),
            });
        }
    }
    Ok(out)
}

/// Speaker utterances labelled with the conversation's emotion.
pub fn load_emotion_examples(path: &Path) -> Result<Vec<EmotionExample>> {
    Ok(read_ed_rows(path)?
        .into_iter()
        .filter(|r| r.utterance_idx % 2 == 1 && !r.utterance.is_empty())
        .map(|r| EmotionExample {
            text: r.utterance,
            label: r.context,
        })
        .collect())
}

/// Mechanism levels (0 to 2) for one seeker post / response post pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismRating {
    pub sp_id: String,
    pub rp_id: String,
    pub seeker_post: String,
    pub response_post: String,
    pub levels: BTreeMap<Mechanism, u8>,
}

impl MechanismRating {
    /// Regression target: mean level over the mechanisms rated.
    pub fn empathy_target(&self) -> f64 {
        if self.levels.is_empty() {
            return 0.0;
        }
        self.levels.values().map(|&l| l as f64).sum::<f64>() / self.levels.len() as f64
    }
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    sp_id: String,
    rp_id: String,
    seeker_post: String,
    response_post: String,
    level: String,
}

pub const RATING_FILES: [(Mechanism, &str); 3] = [
    (Mechanism::EmotionalReaction, "emotional-reactions-reddit.csv"),
    (Mechanism::Interpretation, "interpretations-reddit.csv"),
    (Mechanism::Exploration, "explorations-reddit.csv"),
];

/// Merge the per-mechanism rating files found in `dir` into one rating per
/// (seeker, response) id pair, in first-seen order.
pub fn load_mechanism_ratings(dir: &Path) -> Result<Vec<MechanismRating>> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut by_key: BTreeMap<(String, String), MechanismRating> = BTreeMap::new();
    let mut found = 0;
    for (mechanism, name) in RATING_FILES {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        found += 1;
        let mut reader = csv::Reader::from_path(&path).map_err(|e| CorpusError::io(&path, std::io::Error::other(e)))?;
        for (i, row) in reader.deserialize::<RatingRow>().enumerate() {
            let row = row.map_err(|e| CorpusError::schema(&path, i + 2, e.to_string()))?;
            let level: u8 = row
                .level
                .trim()
                .parse()
                .ok()
                .filter(|l| *l <= 2)
                .ok_or_else(|| CorpusError::schema(&path, i + 2, format!("level `{}` not in 0..=2", row.level)))?;
            let key = (row.sp_id.clone(), row.rp_id.clone());
            let entry = by_key.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                MechanismRating {
                    sp_id: row.sp_id,
                    rp_id: row.rp_id,
                    seeker_post: row.seeker_post.trim().to_string(),
                    response_post: row.response_post.trim().to_string(),
                    levels: BTreeMap::new(),
                }
            });
            entry.levels.insert(mechanism, level);
        }
    }
    if found == 0 {
        return Err(CorpusError::Precondition(format!("no mechanism rating files in {}", dir.display())));
    }
    Ok(order.into_iter().filter_map(|k| by_key.remove(&k)).collect())
}

/// Label each reply with the mechanisms it expresses; pairs with no
/// mechanism, a failed labeller call, or an unencodable payload are dropped.
pub fn silver_label<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    labeler: &dyn MechanismLabeler,
) -> Vec<EmpathySample> {
    let mut out = Vec::new();
    for (utterance, response) in pairs {
        let mechanisms = match labeler.label(response) {
            Ok(m) => m,
            Err(e) => {
                warn!("mechanism labelling failed: {e}");
                continue;
            }
        };
        if let Ok(sample) = EmpathySample::new(utterance.trim(), response.trim(), mechanisms) {
            out.push(sample);
        }
    }
    out
}

/// Patient utterances with the coach reply that follows, silver-labelled,
/// shuffled by `seed`, truncated to `n`.
pub fn few_shot_set(corpus: &Corpus, labeler: &dyn MechanismLabeler, n: usize, seed: u64) -> Vec<EmpathySample> {
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    for week in &corpus.weeks {
        for w in week.utterances.windows(2) {
            if w[0].speaker == Speaker::Patient && w[1].speaker == Speaker::Coach {
                pairs.push((&w[0].text, &w[1].text));
            }
        }
    }
    let mut samples = silver_label(pairs, labeler);
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    samples.truncate(n);
    samples
}

/// Silver-labelled dialogue pairs per released split plus the mechanism
/// ratings used to fit the empathy scorer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpathyCorpus {
    pub train: Vec<EmpathySample>,
    pub valid: Vec<EmpathySample>,
    pub test: Vec<EmpathySample>,
    pub ratings: Vec<MechanismRating>,
}

pub const ED_SPLITS: [&str; 3] = ["train.csv", "valid.csv", "test.csv"];

/// Build from a directory holding the dialogue corpus splits and a directory
/// holding the rating files. Missing split files yield empty splits.
pub fn build_empathy_corpus(ed_dir: &Path, ratings_dir: &Path, labeler: &dyn MechanismLabeler) -> Result<EmpathyCorpus> {
    let mut splits: Vec<Vec<EmpathySample>> = Vec::with_capacity(3);
    for name in ED_SPLITS {
        let path = ed_dir.join(name);
        let pairs = if path.exists() { load_dialogue_pairs(&path)? } else { Vec::new() };
        splits.push(silver_label(
            pairs.iter().map(|p| (p.utterance.as_str(), p.response.as_str())),
            labeler,
        ));
    }
    let ratings = match load_mechanism_ratings(ratings_dir) {
        Ok(r) => r,
        Err(CorpusError::Precondition(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let test = splits.pop().unwrap_or_default();
    let valid = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    Ok(EmpathyCorpus { train, valid, test, ratings })
}

/// Write one encoded training sequence per line.
pub fn write_sequences(path: &Path, samples: &[EmpathySample]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path).map_err(|e| CorpusError::io(path, e))?);
    for s in samples {
        writeln!(f, "{}", encode_training_sequence(s)?).map_err(|e| CorpusError::io(path, e))?;
    }
    f.flush().map_err(|e| CorpusError::io(path, e))
}
