//! Corpus records, import, augmentation and example mining.

pub mod augment;
pub mod delex;
pub mod empathy;
pub mod error;
pub mod examples;
pub mod import;
pub mod record;
pub mod toy;

pub use augment::{augment, augment_all, AugmentationRecipe};
pub use delex::{delexicalize, delexicalize_text};
pub use error::{CorpusError, Result};
pub use examples::{CarryoverExample, SeqExample};
pub use record::{load_corpus, write_corpus, AnnotatedUtterance, Corpus, CorpusRecord, SpanRecord, TaggerSplit, Week};
pub use toy::{generate as generate_toy, ToyConfig};
