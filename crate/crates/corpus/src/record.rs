//! Canonical line-delimited corpus records and the validated in-memory form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use goalcoach_core::belief::parse_belief;
use goalcoach_core::bio::{decode_spans, encode_spans, validate_labels};
use goalcoach_core::dialogue::DialogueTurn;
use goalcoach_core::nlu::rule_update;
use goalcoach_core::text::tokenize;
use goalcoach_core::{BeliefState, BioLabel, SlotName, SlotSpan, Speaker, Stage};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};

/// A slot annotation over pipeline tokens; `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub slot: SlotName,
    pub start: usize,
    pub end: usize,
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub week_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub turn_index: u32,
    pub speaker: Speaker,
    pub text: String,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub acts: Vec<String>,
    #[serde(default)]
    pub spans: Vec<SpanRecord>,
    /// Annotated belief state after this turn, in `slot=v1|v2; ...` form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedUtterance {
    pub week_id: String,
    pub dataset: Option<String>,
    pub turn_index: u32,
    pub speaker: Speaker,
    pub text: String,
    pub tokens: Vec<String>,
    pub bio_labels: Vec<BioLabel>,
    pub stage: Stage,
    pub phase: Option<String>,
    pub acts: Vec<String>,
    pub belief: Option<BeliefState>,
}

impl AnnotatedUtterance {
    /// Build from raw text and token-level spans, tokenizing with the pipeline tokenizer.
    pub fn from_spans(
        week_id: &str,
        turn_index: u32,
        speaker: Speaker,
        text: &str,
        stage: Stage,
        spans: &[SpanRecord],
    ) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(CorpusError::Invalid("utterance text is empty".into()));
        }
        let tokens: Vec<String> = tokenize(text).into_iter().map(|t| t.text).collect();
        let slot_spans: Vec<SlotSpan> = spans
            .iter()
            .map(|s| SlotSpan {
                slot: s.slot,
                value: String::new(),
                token_start: s.start,
                token_end: s.end,
            })
            .collect();
        let bio_labels = encode_spans(tokens.len(), &slot_spans).map_err(|e| CorpusError::Invalid(e.to_string()))?;
        Ok(Self {
            week_id: week_id.to_string(),
            dataset: None,
            turn_index,
            speaker,
            text: text.to_string(),
            tokens,
            bio_labels,
            stage,
            phase: None,
            acts: Vec::new(),
            belief: None,
        })
    }

    pub fn from_record(r: &CorpusRecord) -> Result<Self> {
        let mut u = Self::from_spans(&r.week_id, r.turn_index, r.speaker, &r.text, r.stage, &r.spans)?;
        u.dataset = r.dataset.clone();
        u.phase = r.phase.clone();
        u.acts = r.acts.clone();
        u.belief = match &r.belief {
            Some(b) => Some(parse_belief(b).map_err(|e| CorpusError::Invalid(e.to_string()))?),
            None => None,
        };
        Ok(u)
    }

    pub fn to_record(&self) -> CorpusRecord {
        CorpusRecord {
            week_id: self.week_id.clone(),
            dataset: self.dataset.clone(),
            turn_index: self.turn_index,
            speaker: self.speaker,
            text: self.text.clone(),
            stage: self.stage,
            phase: self.phase.clone(),
            acts: self.acts.clone(),
            spans: self
                .spans()
                .into_iter()
                .map(|s| SpanRecord {
                    slot: s.slot,
                    start: s.token_start,
                    end: s.token_end,
                })
                .collect(),
            belief: self.belief.as_ref().map(|b| b.serialize()),
        }
    }

    /// Decoded spans with values sliced from the text.
    pub fn spans(&self) -> Vec<SlotSpan> {
        let tokens = tokenize(&self.text);
        decode_spans(&self.text, &tokens, &self.bio_labels).expect("labels validated against tokens")
    }

    pub fn has_slots(&self) -> bool {
        self.bio_labels.iter().any(|l| *l != BioLabel::O)
    }

    pub fn validate(&self) -> Result<()> {
        let tokens: Vec<String> = tokenize(&self.text).into_iter().map(|t| t.text).collect();
        if tokens != self.tokens {
            return Err(CorpusError::Invalid("tokens do not match the text".into()));
        }
        if self.tokens.len() != self.bio_labels.len() {
            return Err(CorpusError::Invalid(format!(
                "{} tokens but {} labels",
                self.tokens.len(),
                self.bio_labels.len()
            )));
        }
        validate_labels(&self.bio_labels).map_err(|e| CorpusError::Invalid(e.to_string()))
    }

    pub fn turn(&self) -> DialogueTurn {
        DialogueTurn {
            speaker: self.speaker,
            text: self.text.clone(),
            turn_index: self.turn_index,
            stage: Some(self.stage),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Week {
    pub week_id: String,
    pub dataset: Option<String>,
    pub utterances: Vec<AnnotatedUtterance>,
}

impl Week {
    pub fn turns(&self) -> Vec<DialogueTurn> {
        self.utterances.iter().map(AnnotatedUtterance::turn).collect()
    }

    /// Gold belief after each utterance: the annotation where present,
    /// otherwise last-mention tracking over the patient's gold spans.
    pub fn gold_beliefs(&self) -> Vec<BeliefState> {
        let mut out = Vec::with_capacity(self.utterances.len());
        let mut running = BeliefState::new();
        for u in &self.utterances {
            running = match &u.belief {
                Some(b) => {
                    let mut b = b.clone();
                    b.turn_index = running.turn_index + 1;
                    b
                }
                None if u.speaker == Speaker::Patient => rule_update(&running, &u.spans()),
                None => running,
            };
            out.push(running.clone());
        }
        out
    }

    /// Gold goal at the end of goal setting (first implementation-stage
    /// utterance) or `None` if the week never gets there.
    pub fn gold_forward(&self) -> Option<BeliefState> {
        let i = self.utterances.iter().position(|u| u.stage == Stage::GoalImplementation)?;
        self.gold_beliefs().into_iter().nth(i)
    }

    pub fn gold_backward(&self) -> BeliefState {
        self.gold_beliefs().pop().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub weeks: Vec<Week>,
}

pub const TRAIN_DATASET: &str = "dataset1";
pub const TEST_DATASET: &str = "dataset2";

/// Slot-bearing utterances partitioned for tagger training.
#[derive(Debug, Clone, Default)]
pub struct TaggerSplit {
    pub train: Vec<AnnotatedUtterance>,
    pub dev: Vec<AnnotatedUtterance>,
    pub test: Vec<AnnotatedUtterance>,
}

impl Corpus {
    pub fn from_utterances(utterances: Vec<AnnotatedUtterance>) -> Self {
        let mut order: Vec<String> = Vec::new();
        let mut by_week: BTreeMap<String, Week> = BTreeMap::new();
        for u in utterances {
            let week = by_week.entry(u.week_id.clone()).or_insert_with(|| {
                order.push(u.week_id.clone());
                Week {
                    week_id: u.week_id.clone(),
                    dataset: u.dataset.clone(),
                    utterances: Vec::new(),
                }
            });
            week.utterances.push(u);
        }
        let weeks = order
            .into_iter()
            .map(|id| {
                let mut w = by_week.remove(&id).expect("week registered");
                w.utterances.sort_by_key(|u| u.turn_index);
                w
            })
            .collect();
        Corpus { weeks }
    }

    pub fn utterances(&self) -> impl Iterator<Item = &AnnotatedUtterance> {
        self.weeks.iter().flat_map(|w| w.utterances.iter())
    }

    pub fn len(&self) -> usize {
        self.weeks.iter().map(|w| w.utterances.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }

    pub fn weeks_in(&self, dataset: &str) -> Vec<&Week> {
        self.weeks.iter().filter(|w| w.dataset.as_deref() == Some(dataset)).collect()
    }

    /// Sub-corpus of the named dataset.
    pub fn subset(&self, dataset: &str) -> Corpus {
        Corpus {
            weeks: self.weeks_in(dataset).into_iter().cloned().collect(),
        }
    }

    /// Weeks without a dataset tag count as training data.
    pub fn train_weeks(&self) -> Vec<&Week> {
        self.weeks
            .iter()
            .filter(|w| w.dataset.as_deref() != Some(TEST_DATASET))
            .collect()
    }

    /// Slot-bearing utterances: dataset 1 shuffled into train/dev by `seed`
    /// (`dev_fraction` of it, rounded down, goes to dev), dataset 2 is test.
    pub fn tagger_split(&self, dev_fraction: f64, seed: u64) -> TaggerSplit {
        let mut pool: Vec<AnnotatedUtterance> = self
            .train_weeks()
            .into_iter()
            .flat_map(|w| w.utterances.iter())
            .filter(|u| u.has_slots())
            .cloned()
            .collect();
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_dev = (pool.len() as f64 * dev_fraction).floor() as usize;
        let train = pool.split_off(n_dev);
        let test = self
            .weeks_in(TEST_DATASET)
            .into_iter()
            .flat_map(|w| w.utterances.iter())
            .filter(|u| u.has_slots())
            .cloned()
            .collect();
        TaggerSplit { train, dev: pool, test }
    }

    /// Observed values per slot, in first-seen order.
    pub fn slot_values(&self) -> BTreeMap<SlotName, Vec<String>> {
        let mut values: BTreeMap<SlotName, Vec<String>> = BTreeMap::new();
        for u in self.utterances() {
            for span in u.spans() {
                let entry = values.entry(span.slot).or_default();
                let key = goalcoach_core::text::normalize_value(&span.value);
                if !entry.iter().any(|v| goalcoach_core::text::normalize_value(v) == key) {
                    entry.push(span.value);
                }
            }
        }
        values
    }
}

fn corpus_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| CorpusError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Read records from a `.jsonl` file or every `.jsonl` file in a directory.
pub fn read_records(path: &Path) -> Result<Vec<(PathBuf, usize, CorpusRecord)>> {
    let mut out = Vec::new();
    for file in corpus_files(path)? {
        let reader = BufReader::new(File::open(&file).map_err(|e| CorpusError::io(&file, e))?);
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| CorpusError::io(&file, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CorpusRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::schema(&file, i + 1, e.to_string()))?;
            out.push((file.clone(), i + 1, record));
        }
    }
    Ok(out)
}

/// Load and validate a corpus, grouped by week in file order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let mut utterances = Vec::new();
    let mut last_index: BTreeMap<String, u32> = BTreeMap::new();
    for (file, line, record) in read_records(path.as_ref())? {
        let u = AnnotatedUtterance::from_record(&record).map_err(|e| CorpusError::schema(&file, line, e.to_string()))?;
        if let Some(prev) = last_index.insert(u.week_id.clone(), u.turn_index) {
            if u.turn_index <= prev {
                return Err(CorpusError::schema(
                    &file,
                    line,
                    format!("turn index {} does not follow {prev} in week {}", u.turn_index, u.week_id),
                ));
            }
        }
        utterances.push(u);
    }
    Ok(Corpus::from_utterances(utterances))
}

pub fn write_records<'a, I>(path: impl AsRef<Path>, records: I) -> Result<()>
where
    I: IntoIterator<Item = &'a CorpusRecord>,
{
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    let mut f = std::io::BufWriter::new(File::create(path).map_err(|e| CorpusError::io(path, e))?);
    for r in records {
        serde_json::to_writer(&mut f, r).map_err(|e| CorpusError::Invalid(e.to_string()))?;
        f.write_all(b"\n").map_err(|e| CorpusError::io(path, e))?;
    }
    f.flush().map_err(|e| CorpusError::io(path, e))
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let records: Vec<CorpusRecord> = corpus.utterances().map(AnnotatedUtterance::to_record).collect();
    write_records(path, &records)
}
