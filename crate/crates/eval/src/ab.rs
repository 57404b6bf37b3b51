//! Blinded A/B export for human comparison of two systems.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

pub const QUESTIONS: [&str; 2] = [
    "Which response is more empathetic?",
    "Which response is more coherent with the conversation?",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbItem {
    pub input: String,
    /// Output of the system under test.
    pub output_a: String,
    /// Output of the comparison system.
    pub output_b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindRecord {
    pub item_id: usize,
    pub input: String,
    pub first: String,
    pub second: String,
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRecord {
    pub item_id: usize,
    /// Index into the caller's item list.
    pub source_index: usize,
    /// `true` when the first shown output is `output_a`.
    pub a_first: bool,
}

/// Shuffle item order and A/B position under `seed`.
pub fn blind(items: &[AbItem], seed: u64) -> (Vec<BlindRecord>, Vec<KeyRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng);
    let mut records = Vec::with_capacity(items.len());
    let mut keys = Vec::with_capacity(items.len());
    for (item_id, &i) in order.iter().enumerate() {
        let it = &items[i];
        let a_first = rng.gen_bool(0.5);
        let (first, second) = if a_first {
            (it.output_a.clone(), it.output_b.clone())
        } else {
            (it.output_b.clone(), it.output_a.clone())
        };
        records.push(BlindRecord {
            item_id,
            input: it.input.clone(),
            first,
            second,
            questions: QUESTIONS.iter().map(|q| q.to_string()).collect(),
        });
        keys.push(KeyRecord {
            item_id,
            source_index: i,
            a_first,
        });
    }
    (records, keys)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| EvalError::io(path, e))?);
    for r in rows {
        serde_json::to_writer(&mut f, r).map_err(|e| EvalError::io(path, e.into()))?;
        f.write_all(b"\n").map_err(|e| EvalError::io(path, e))?;
    }
    f.flush().map_err(|e| EvalError::io(path, e))
}

/// Write the blinded records to `path` and the unblinding key to `key_path`.
pub fn export_ab(items: &[AbItem], seed: u64, path: &Path, key_path: &Path) -> Result<()> {
    let (records, keys) = blind(items, seed);
    write_jsonl(path, &records)?;
    write_jsonl(key_path, &keys)
}

/// Recover which system each answer favoured: `true` for `output_a`.
pub fn unblind(key: &KeyRecord, chose_first: bool) -> bool {
    key.a_first == chose_first
}
