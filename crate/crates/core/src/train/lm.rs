use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, EpochRecord, LrPlan, LrSchedule, Optimizer, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::LanguageModel;
use crate::tensor::{Gradients, ParamStore, Tape};
use crate::text::{Granularity, Vocabulary};

/// Word vocabulary over a set of plain-text documents.
pub fn build_lm_vocab(documents: &[String], min_freq: usize, max_size: Option<usize>) -> Vocabulary {
    Vocabulary::build(
        documents.iter().map(|d| Granularity::Words.tokens(d)),
        min_freq,
        max_size,
    )
}

/// Token-id streams for language-model training, tied to one vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LmCorpus {
    pub fingerprint: String,
    pub train: Vec<u32>,
    pub val: Vec<u32>,
}

impl LmCorpus {
    /// Each document becomes `<bos> words <eos>`; documents with no tokens
    /// are dropped. The last tenth of the documents (at least one) is held
    /// out for validation; a single document serves as both splits.
    pub fn from_documents(documents: &[String], vocab: &Vocabulary) -> Result<Self> {
        let docs: Vec<Vec<u32>> = documents
            .iter()
            .map(|d| Granularity::Words.encode(d, vocab))
            .filter(|ids| !ids.is_empty())
            .collect();
        if docs.is_empty() {
            return Err(Error::Data("corpus has no tokens".into()));
        }
        let n_val = if docs.len() < 2 { 0 } else { (docs.len() / 10).max(1) };
        let cut = docs.len() - n_val;
        let train: Vec<u32> = docs[..cut].concat();
        let val: Vec<u32> = if n_val == 0 {
            train.clone()
        } else {
            docs[cut..].concat()
        };
        Ok(LmCorpus {
            fingerprint: vocab.fingerprint(),
            train,
            val,
        })
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Consecutive windows of `bptt + 1` tokens that overlap by one, so every
/// token after the first is predicted exactly once. The tail window may be
/// shorter; windows under two tokens are dropped.
pub fn lm_windows(stream: &[u32], bptt: usize) -> Vec<Vec<u32>> {
    let bptt = bptt.max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start + 1 < stream.len() {
        let end = (start + bptt + 1).min(stream.len());
        out.push(stream[start..end].to_vec());
        start += bptt;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub log: Vec<EpochRecord>,
    pub init_val_perplexity: f64,
    pub best_val_perplexity: f64,
    /// `None` when no epoch beat the starting weights.
    pub best_epoch: Option<usize>,
    /// Head learning rate at every optimizer step.
    pub lr_trace: Vec<f64>,
    pub train_tokens: usize,
}

fn train_lm(
    lm: &mut LanguageModel,
    corpus: &LmCorpus,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<LmReport> {
    cfg.validate()?;
    if lm.vocab().fingerprint() != corpus.fingerprint {
        return Err(Error::Checkpoint(format!(
            "vocabulary fingerprint mismatch: language model {} vs corpus {}",
            lm.vocab().fingerprint(),
            corpus.fingerprint
        )));
    }
    if corpus.train.len() < 2 || corpus.val.len() < 2 {
        return Err(Error::Data(format!(
            "corpus too small: {} training and {} validation tokens (need at least 2 each)",
            corpus.train.len(),
            corpus.val.len()
        )));
    }
    let windows = lm_windows(&corpus.train, cfg.bptt);
    let val_windows = lm_windows(&corpus.val, cfg.bptt);
    let steps_per_epoch = windows.len().div_ceil(cfg.batch_size);
    let plan = LrPlan::new(cfg, steps_per_epoch * cfg.epochs, lm.params().n_groups())?;
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.clip);

    let init = lm.perplexity(&val_windows)?;
    let mut best: (Option<usize>, f64, ParamStore) = (None, init, lm.params().clone());
    let mut log = Vec::new();
    let mut lr_trace = Vec::new();
    let mut step = 0usize;
    let mut bad_epochs = 0;
    let mut order: Vec<usize> = (0..windows.len()).collect();

    for epoch in 0..cfg.epochs {
        if cfg.unfreeze {
            lm.params_mut().set_trainable_groups(|g| g <= epoch);
        }
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64, 0x1a)));
        let (mut nll, mut tokens) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let model: &LanguageModel = lm;
            let seed = cfg.seed;
            let results = crate::par::map(chunk, |&w| -> Result<(f64, Gradients)> {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, step as u64, w as u64));
                let mut tape = Tape::new(model.params());
                let loss = model.loss(&mut tape, &windows[w], true, &mut rng)?;
                let l = tape.scalar(loss);
                Ok((l, tape.backward(loss)?))
            });
            let mut total = Gradients::new(model.params().len());
            for (&w, r) in chunk.iter().zip(results) {
                let (l, g) = r?;
                let n = windows[w].len() - 1;
                nll += l * n as f64;
                tokens += n;
                total.merge(&g);
            }
            total.scale(1.0 / chunk.len() as f64);
            let lrs = plan.rates(step)?;
            lr_trace.push(lrs[0]);
            let store = lm.params_mut();
            store.zero_grads();
            store.accumulate(&total);
            optimizer.step(store, &lrs)?;
            store.zero_grads();
            step += 1;
        }
        let train_loss = nll / tokens as f64;
        if !train_loss.is_finite() {
            return Err(Error::Training(format!(
                "language-model loss became {train_loss} at epoch {epoch}"
            )));
        }
        let val_ppl = lm.perplexity(&val_windows)?;
        for rec in [
            EpochRecord {
                epoch,
                split: "train",
                loss: train_loss,
                metric_name: "perplexity",
                metric_value: train_loss.exp(),
            },
            EpochRecord {
                epoch,
                split: "val",
                loss: val_ppl.ln(),
                metric_name: "perplexity",
                metric_value: val_ppl,
            },
        ] {
            on_epoch(&rec);
            log.push(rec);
        }
        if val_ppl < best.1 {
            best = (Some(epoch), val_ppl, lm.params().clone());
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs >= cfg.patience {
                break;
            }
        }
    }
    lm.params_mut().set_trainable_groups(|_| true);
    for ((_, d), (_, s)) in lm.params_mut().iter_mut().zip(best.2.iter()) {
        d.tensor.values_mut().copy_from_slice(s.tensor.values());
    }
    Ok(LmReport {
        log,
        init_val_perplexity: init,
        best_val_perplexity: best.1,
        best_epoch: best.0,
        lr_trace,
        train_tokens: corpus.train.len(),
    })
}

/// Trains from the current weights and keeps the checkpoint with the lowest
/// validation perplexity (the starting weights count as a candidate).
pub fn pretrain_lm(
    lm: &mut LanguageModel,
    corpus: &LmCorpus,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<LmReport> {
    train_lm(lm, corpus, cfg, &mut on_epoch)
}

/// Continues training with slanted triangular rates and discriminative
/// per-group rates regardless of what `cfg` says about either.
pub fn finetune_lm(
    lm: &mut LanguageModel,
    corpus: &LmCorpus,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<LmReport> {
    let cfg = TrainConfig {
        schedule: LrSchedule::Stlr,
        discriminative: true,
        ..cfg.clone()
    };
    train_lm(lm, corpus, &cfg, &mut on_epoch)
}
