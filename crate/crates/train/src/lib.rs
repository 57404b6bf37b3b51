//! Trainable backends, their recipes and artifacts.

pub mod artifact;
pub mod backends;
pub mod conformance;
pub mod crf;
pub mod data;
pub mod error;
pub mod features;
pub mod linear;
pub mod models;
pub mod optim;
pub mod recipe;
pub mod sample;

pub use artifact::{load_model, read_manifest, Manifest, Model, Trained};
pub use backends::{install_artifact, load_backends, train, BackendsManifest};
pub use error::{Result, TrainError};
pub use recipe::TrainRecipe;
