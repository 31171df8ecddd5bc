use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normalize_tweet, tokenize_words, tweet_to_trigram_sequence, LabeledDataset, Vocabulary, PAD_ID};
use crate::error::{Error, Result};

/// Input unit a model reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Words,
    Trigrams,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Words => "words",
            Granularity::Trigrams => "trigrams",
        }
    }

    /// Normalizes raw text and splits it into tokens of this granularity.
    pub fn tokens(self, raw: &str) -> Vec<String> {
        let norm = normalize_tweet(raw);
        match self {
            Granularity::Words => tokenize_words(&norm),
            Granularity::Trigrams => tweet_to_trigram_sequence(&norm),
        }
    }

    /// Token ids for raw text. Word sequences are wrapped in `<bos>`/`<eos>`
    /// to match the language-model stream; an input with no tokens encodes
    /// to an empty sequence either way.
    pub fn encode(self, raw: &str, vocab: &Vocabulary) -> Vec<u32> {
        let toks = self.tokens(raw);
        if toks.is_empty() {
            return Vec::new();
        }
        vocab.encode(&toks, self == Granularity::Words)
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "words" | "word" => Ok(Granularity::Words),
            "trigrams" | "trigram" => Ok(Granularity::Trigrams),
            other => Err(Error::Data(format!("unknown granularity `{other}`"))),
        }
    }
}

/// Padded id matrix for a group of examples.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// `[batch, max_len]`, padded with `<pad>`.
    pub token_ids: Vec<Vec<u32>>,
    pub lengths: Vec<usize>,
    pub labels: Vec<usize>,
    /// 1.0 on real tokens, 0.0 on padding.
    pub mask: Vec<Vec<f64>>,
    /// Positions of the rows in the source dataset.
    pub indices: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn width(&self) -> usize {
        self.token_ids.first().map_or(0, Vec::len)
    }

    /// Unpadded ids of row `i`.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.token_ids[i][..self.lengths[i]]
    }

    fn from_rows(rows: Vec<(usize, Vec<u32>, usize)>) -> Batch {
        let width = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        let mut b = Batch {
            token_ids: Vec::with_capacity(rows.len()),
            lengths: Vec::with_capacity(rows.len()),
            labels: Vec::with_capacity(rows.len()),
            mask: Vec::with_capacity(rows.len()),
            indices: Vec::with_capacity(rows.len()),
        };
        for (idx, mut ids, label) in rows {
            let len = ids.len();
            ids.resize(width, PAD_ID);
            b.mask
                .push((0..width).map(|t| if t < len { 1.0 } else { 0.0 }).collect());
            b.token_ids.push(ids);
            b.lengths.push(len);
            b.labels.push(label);
            b.indices.push(idx);
        }
        b
    }
}

/// Encodes every example and groups them into padded batches in an order
/// fixed by `seed`. Examples that encode to nothing are left out.
///
/// With `sort_by_length`, the shuffled examples are stably sorted by length
/// before chunking and the resulting batches are shuffled again, so each
/// batch holds examples of similar length.
pub fn make_batches(
    dataset: &LabeledDataset,
    vocab: &Vocabulary,
    granularity: Granularity,
    batch_size: usize,
    seed: u64,
    sort_by_length: bool,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Param("batch_size must be >= 1".into()));
    }
    let encoded: Vec<Vec<u32>> = dataset
        .examples
        .iter()
        .map(|e| granularity.encode(&e.text, vocab))
        .collect();
    let mut order: Vec<usize> = (0..dataset.len()).filter(|&i| !encoded[i].is_empty()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    if sort_by_length {
        order.sort_by_key(|&i| encoded[i].len());
    }
    let mut batches: Vec<Batch> = order
        .chunks(batch_size)
        .map(|chunk| {
            Batch::from_rows(
                chunk
                    .iter()
                    .map(|&i| (i, encoded[i].clone(), dataset.examples[i].label))
                    .collect(),
            )
        })
        .collect();
    if sort_by_length {
        batches.shuffle(&mut rng);
    }
    Ok(batches)
}
