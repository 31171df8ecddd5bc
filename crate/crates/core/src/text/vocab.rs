use std::collections::HashMap;

use sha2::{Digest, Sha256};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;

const SPECIALS: [&str; 4] = [PAD, UNK, BOS, EOS];

/// Bidirectional token/id map. Ids 0..4 are always `<pad>`, `<unk>`, `<bos>`, `<eos>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    to_id: HashMap<String, u32>,
    tokens: Vec<String>,
    min_freq: usize,
    max_size: Option<usize>,
}

impl Vocabulary {
    /// Keeps tokens seen at least `min_freq` times, ordered by frequency
    /// (descending) then token text (ascending), capped at `max_size`
    /// non-special entries.
    pub fn build<I, S>(sequences: I, min_freq: usize, max_size: Option<usize>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let seqs: Vec<S> = sequences.into_iter().collect();
        for seq in &seqs {
            for tok in seq.as_ref() {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let min_freq = min_freq.max(1);
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_freq && !SPECIALS.contains(t))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if let Some(max) = max_size {
            ranked.truncate(max);
        }
        let mut v = Self::from_tokens(ranked.into_iter().map(|(t, _)| t.to_string()));
        v.min_freq = min_freq;
        v.max_size = max_size;
        v
    }

    /// Rebuilds a vocabulary from its non-special tokens in id order.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut all: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        all.extend(tokens.into_iter().filter(|t| !SPECIALS.contains(&t.as_str())));
        let to_id = all.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary {
            to_id,
            tokens: all,
            min_freq: 1,
            max_size: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn max_size(&self) -> Option<usize> {
        self.max_size
    }

    pub fn id(&self, token: &str) -> u32 {
        self.to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Non-special tokens in id order.
    pub fn regular_tokens(&self) -> &[String] {
        &self.tokens[SPECIALS.len()..]
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S], add_bos_eos: bool) -> Vec<u32> {
        let mut out = Vec::with_capacity(tokens.len() + 2);
        if add_bos_eos {
            out.push(BOS_ID);
        }
        out.extend(tokens.iter().map(|t| self.id(t.as_ref())));
        if add_bos_eos {
            out.push(EOS_ID);
        }
        out
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).unwrap_or(UNK).to_string()).collect()
    }

    /// Stable hex digest of the id-ordered token list.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
