use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::model::{fill_params, get_vocab, put_vocab};
use crate::error::{Error, Result};
use crate::tensor::{Init, ParamStore, Tensor};
use crate::text::{Granularity, LabeledDataset, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub epochs: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            epochs: 20,
            lambda: 1e-4,
            seed: 42,
        }
    }
}

/// One-vs-rest linear SVM over L2-normalised bag-of-words + bag-of-trigrams
/// counts, trained with Pegasos-style subgradient steps on the hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    word_vocab: Vocabulary,
    trigram_vocab: Vocabulary,
    labels: Vec<String>,
    /// `[n_classes, n_features + 1]`, bias in the last column.
    weights: Tensor,
}

type Sparse = Vec<(usize, f64)>;

fn featurize(word_vocab: &Vocabulary, trigram_vocab: &Vocabulary, text: &str) -> Sparse {
    let mut counts = std::collections::BTreeMap::<usize, f64>::new();
    for t in Granularity::Words.tokens(text) {
        *counts.entry(word_vocab.id(&t) as usize).or_default() += 1.0;
    }
    let offset = word_vocab.len();
    for t in Granularity::Trigrams.tokens(text) {
        *counts.entry(offset + trigram_vocab.id(&t) as usize).or_default() += 1.0;
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    let mut x: Sparse = counts.into_iter().map(|(i, c)| (i, c / norm.max(1.0))).collect();
    x.push((offset + trigram_vocab.len(), 1.0));
    x
}

fn dot(w: &[f64], x: &Sparse) -> f64 {
    x.iter().map(|&(i, v)| w[i] * v).sum()
}

impl LinearModel {
    pub fn train(data: &LabeledDataset, cfg: &LinearConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Data(
                "linear baseline needs at least one training example".into(),
            ));
        }
        if cfg.lambda <= 0.0 || cfg.epochs == 0 {
            return Err(Error::Param("linear baseline needs lambda > 0 and epochs >= 1".into()));
        }
        let word_vocab = Vocabulary::build(
            data.examples.iter().map(|e| Granularity::Words.tokens(&e.text)),
            1,
            None,
        );
        let trigram_vocab = Vocabulary::build(
            data.examples.iter().map(|e| Granularity::Trigrams.tokens(&e.text)),
            1,
            None,
        );
        let xs: Vec<Sparse> = data
            .examples
            .iter()
            .map(|e| featurize(&word_vocab, &trigram_vocab, &e.text))
            .collect();
        let dim = word_vocab.len() + trigram_vocab.len() + 1;
        let n_classes = data.n_classes();

        let mut weights = Vec::with_capacity(n_classes * dim);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        for c in 0..n_classes {
            // w = scale * v keeps the per-step shrinkage O(1).
            let mut v = vec![0.0; dim];
            let mut scale = 1.0;
            let mut t = 0usize;
            for _ in 0..cfg.epochs {
                order.shuffle(&mut rng);
                for &i in &order {
                    t += 1;
                    let eta = 1.0 / (cfg.lambda * t as f64);
                    let y = if data.examples[i].label == c { 1.0 } else { -1.0 };
                    let margin = y * scale * dot(&v, &xs[i]);
                    scale *= 1.0 - eta * cfg.lambda;
                    if scale <= 1e-12 {
                        v.iter_mut().for_each(|w| *w = 0.0);
                        scale = 1.0;
                    }
                    if margin < 1.0 {
                        for &(j, x) in &xs[i] {
                            v[j] += eta * y * x / scale;
                        }
                    }
                }
            }
            weights.extend(v.iter().map(|w| w * scale));
        }
        Ok(LinearModel {
            word_vocab,
            trigram_vocab,
            labels: data.labels.clone(),
            weights: Tensor::from_vec(&[n_classes, dim], weights)?,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn scores(&self, text: &str) -> Vec<f64> {
        let x = featurize(&self.word_vocab, &self.trigram_vocab, text);
        let dim = self.weights.shape()[1];
        self.weights.values().chunks(dim).map(|w| dot(w, &x)).collect()
    }

    /// Softmax over the class scores.
    pub fn predict_proba(&self, text: &str) -> Vec<f64> {
        let mut s = self.scores(text);
        crate::tensor::softmax_in_place(&mut s);
        s
    }

    pub fn predict(&self, text: &str) -> usize {
        crate::eval::predict_class(&self.scores(text))
    }

    fn manifest(n_classes: usize, dim: usize) -> Result<ParamStore> {
        let mut store = ParamStore::new();
        store.insert("linear.w", 0, Tensor::new(&[n_classes, dim], Init::Zeros)?)?;
        Ok(store)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        ck.set("kind", "linear");
        put_vocab(&mut ck, "vocab", &self.word_vocab);
        put_vocab(&mut ck, "trigram_vocab", &self.trigram_vocab);
        ck.set("labels", self.labels.join("\t"));
        ck.tensors.push(("linear.w".into(), self.weights.clone()));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let kind = ck.get("kind")?;
        if kind != "linear" {
            return Err(Error::Checkpoint(format!(
                "expected a linear checkpoint, found `{kind}`"
            )));
        }
        let word_vocab = get_vocab(ck, "vocab")?;
        let trigram_vocab = get_vocab(ck, "trigram_vocab")?;
        let labels: Vec<String> = ck.get("labels")?.split('\t').map(str::to_string).collect();
        let mut store = Self::manifest(labels.len(), word_vocab.len() + trigram_vocab.len() + 1)?;
        fill_params(&mut store, ck)?;
        let weights = store.tensor(store.id("linear.w")?).clone().with_requires_grad(false);
        Ok(LinearModel {
            word_vocab,
            trigram_vocab,
            labels,
            weights,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
