//! Models: LSTM encoders, attention pooling, the word and trigram
//! classifiers, the language model, the linear baseline, and checkpoint persistence.

mod checkpoint;
mod layers;
mod linear;
mod model;

pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use layers::{
    attention_pool, classify, init_lstm, lstm_direction, lstm_forward, lstm_step, AttentionVars, EncoderSpec, LstmVars,
};
pub use linear::{LinearConfig, LinearModel};
pub use model::{Classifier, ClassifierOutput, LanguageModel, LmConfig, ModelConfig};
