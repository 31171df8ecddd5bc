//! Tweet normalization, word and `$`-delimited trigram tokenization,
//! vocabularies, TSV datasets and padded batches.

mod batch;
mod dataset;
mod normalize;
mod vocab;

pub use batch::{make_batches, Batch, Granularity};
pub use dataset::{LabeledDataset, LabeledExample};
pub use normalize::{
    char_trigrams, is_atomic, normalize_tweet, tokenize_words, tweet_to_trigram_sequence, URL_TOKEN, USER_TOKEN,
};
pub use vocab::{Vocabulary, BOS, BOS_ID, EOS, EOS_ID, PAD, PAD_ID, UNK, UNK_ID};
