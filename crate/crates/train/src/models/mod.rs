pub mod affect;
pub mod carryover;
pub mod lm;
pub mod paraphrase;
pub mod seq;
pub mod tagger;

pub use affect::{
    emotion_accuracy, hamming_loss, rmse, train_emotion, train_mechanisms, train_regressor, LinearEmpathyRegressor,
    LogisticMechanisms, SoftmaxEmotion,
};
pub use carryover::{carryover_f1, train_carryover, LogisticCarryover};
pub use lm::{train_bigram, train_empathy_lm, BigramLm, ConditionalNgramLm};
pub use paraphrase::{train_paraphraser, SubstitutionParaphraser};
pub use seq::{seq_scores, train_seq_multitask, MultitaskSeq};
pub use tagger::{tagger_f1, train_slot_tagger, CrfTagger};
