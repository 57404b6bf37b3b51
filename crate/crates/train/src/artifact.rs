//! On-disk artifacts: `manifest.json`, `model.json` and `weights.bin`
//! (little-endian f32).

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use goalcoach_core::backend::{BackendKind, BackendSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, TrainError};
use crate::recipe::TrainRecipe;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.json";
pub const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub spec: BackendSpec,
    /// Version of the training code that produced the artifact.
    pub backend_version: String,
    pub recipe: TrainRecipe,
    pub corpus_hash: String,
    pub metrics: BTreeMap<String, f64>,
    /// sha256 of each stored file.
    pub files: BTreeMap<String, String>,
}

/// A trainable backend that can be split into structure and weights.
pub trait Model: Sized {
    const KIND: BackendKind;
    const IDENTITY: &'static str;
    type Meta: Serialize + DeserializeOwned;

    fn to_parts(&self) -> (Self::Meta, Vec<f32>);
    fn from_parts(meta: Self::Meta, weights: Vec<f32>) -> std::result::Result<Self, String>;
}

/// A freshly trained model and the manifest that will accompany it.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub manifest: Manifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the JSON-lines serialization of `items`, in order.
pub fn hash_records<'a, T: Serialize + 'a>(items: impl IntoIterator<Item = &'a T>) -> String {
    let mut h = Sha256::new();
    for item in items {
        h.update(serde_json::to_vec(item).expect("training records serialize"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub fn encode_weights(w: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(w.len() * 4);
    for x in w {
        out.write_f32::<LittleEndian>(*x).expect("writing to a Vec");
    }
    out
}

pub fn decode_weights(bytes: &[u8]) -> Option<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return None;
    }
    let mut r = Cursor::new(bytes);
    (0..bytes.len() / 4).map(|_| r.read_f32::<LittleEndian>().ok()).collect()
}

impl<M: Model> Trained<M> {
    pub fn new(model: M, spec: BackendSpec, recipe: &TrainRecipe, corpus_hash: String, metrics: BTreeMap<String, f64>) -> Self {
        Trained {
            model,
            manifest: Manifest {
                manifest_version: MANIFEST_VERSION,
                spec,
                backend_version: env!("CARGO_PKG_VERSION").to_string(),
                recipe: recipe.without_sweep(),
                corpus_hash,
                metrics,
                files: BTreeMap::new(),
            },
        }
    }

    /// Write the artifact into `dir` (created if missing) and return the
    /// manifest as written.
    pub fn save(&self, dir: &Path) -> Result<Manifest> {
        fs::create_dir_all(dir).map_err(|e| TrainError::io(dir, e))?;
        let (meta, weights) = self.model.to_parts();
        let model_json = serde_json::to_vec(&meta).map_err(|e| TrainError::artifact(dir, e.to_string()))?;
        let weight_bytes = encode_weights(&weights);
        let mut manifest = self.manifest.clone();
        manifest.files.insert(MODEL_FILE.into(), sha256_hex(&model_json));
        manifest.files.insert(WEIGHTS_FILE.into(), sha256_hex(&weight_bytes));
        let write = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| TrainError::io(p, e))
        };
        write(MODEL_FILE, &model_json)?;
        write(WEIGHTS_FILE, &weight_bytes)?;
        let mut m = serde_json::to_vec_pretty(&manifest).map_err(|e| TrainError::artifact(dir, e.to_string()))?;
        m.push(b'\n');
        write(MANIFEST_FILE, &m)?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let p = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&p).map_err(|e| TrainError::io(&p, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| TrainError::artifact(&p, e.to_string()))?;
    if m.manifest_version != MANIFEST_VERSION {
        return Err(TrainError::artifact(
            &p,
            format!("manifest version {} is not supported (expected {MANIFEST_VERSION})", m.manifest_version),
        ));
    }
    Ok(m)
}

fn read_checked(dir: &Path, name: &str, manifest: &Manifest) -> Result<Vec<u8>> {
    let p = dir.join(name);
    let bytes = fs::read(&p).map_err(|e| TrainError::io(&p, e))?;
    match manifest.files.get(name) {
        Some(h) if *h == sha256_hex(&bytes) => Ok(bytes),
        Some(_) => Err(TrainError::artifact(&p, "checksum does not match the manifest")),
        None => Err(TrainError::artifact(&p, "file is not listed in the manifest")),
    }
}

/// Load a model of type `M`, verifying kind, identity and checksums.
pub fn load_model<M: Model>(dir: &Path) -> Result<(M, Manifest)> {
    let manifest = read_manifest(dir)?;
    if manifest.spec.kind != M::KIND || manifest.spec.identity != M::IDENTITY {
        return Err(TrainError::artifact(
            dir,
            format!(
                "holds {}:{}, expected {}:{}",
                manifest.spec.kind,
                manifest.spec.identity,
                M::KIND,
                M::IDENTITY
            ),
        ));
    }
    let meta_bytes = read_checked(dir, MODEL_FILE, &manifest)?;
    let weight_bytes = read_checked(dir, WEIGHTS_FILE, &manifest)?;
    let meta: M::Meta = serde_json::from_slice(&meta_bytes).map_err(|e| TrainError::artifact(dir.join(MODEL_FILE), e.to_string()))?;
    let weights = decode_weights(&weight_bytes).ok_or_else(|| TrainError::artifact(dir.join(WEIGHTS_FILE), "truncated weights"))?;
    let model = M::from_parts(meta, weights).map_err(|e| TrainError::artifact(dir, e))?;
    Ok((model, manifest))
}
