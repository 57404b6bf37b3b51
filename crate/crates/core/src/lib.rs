//! Goal-coaching dialogue engine: belief tracking over goal attributes,
//! stage-conditioned response generation, and gated empathetic replies.

pub mod backend;
pub mod belief;
pub mod bio;
pub mod dialogue;
pub mod emotion;
pub mod empathy;
pub mod error;
pub mod mechanism;
pub mod nlg_hc;
pub mod nlu;
pub mod orchestrator;
pub mod slot;
pub mod text;

pub use backend::{BackendError, Backends};
pub use belief::{parse_belief, serialize_belief, BeliefState};
pub use bio::{BioLabel, BioSequence, SlotSpan};
pub use dialogue::{DialogueTurn, SessionContext, Speaker, Stage};
pub use emotion::{EmotionPrediction, EmotionVocab};
pub use empathy::{EmpathySample, GateConfig};
pub use error::{CoreError, Result};
pub use mechanism::{Mechanism, MechanismSet};
pub use orchestrator::{GoalSnapshot, Session, SessionConfig, SnapshotPoint, TurnResult};
pub use slot::SlotName;
