use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, EpochRecord, LrPlan, Metric, Optimizer, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, predict_class};
use crate::nn::Classifier;
use crate::tensor::{Gradients, ParamStore, Tape};
use crate::text::{make_batches, Batch, LabeledDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_metric: f64,
    pub epochs_run: usize,
    pub stopped_early: bool,
    /// Head learning rate at every optimizer step.
    pub lr_trace: Vec<f64>,
}

/// Owns the optimizer state and step counter for one classifier run.
pub struct ClassifierTrainer<'a> {
    model: &'a mut Classifier,
    train: &'a LabeledDataset,
    cfg: TrainConfig,
    optimizer: Optimizer,
    plan: LrPlan,
    step: usize,
    lr_trace: Vec<f64>,
}

fn batches_for(model: &Classifier, data: &LabeledDataset, cfg: &TrainConfig, epoch: usize) -> Result<Vec<Batch>> {
    make_batches(
        data,
        model.vocab(),
        model.granularity(),
        cfg.batch_size,
        mix_seed(cfg.seed, epoch as u64, 0x5eed),
        cfg.sort_by_length,
    )
}

impl<'a> ClassifierTrainer<'a> {
    pub fn new(model: &'a mut Classifier, train: &'a LabeledDataset, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if train.labels.as_slice() != model.labels() {
            return Err(Error::Data(format!(
                "training labels {:?} differ from model labels {:?}",
                train.labels,
                model.labels()
            )));
        }
        let steps_per_epoch = batches_for(model, train, &cfg, 0)?.len();
        if steps_per_epoch == 0 {
            return Err(Error::Data("no training example has any tokens".into()));
        }
        let plan = LrPlan::new(&cfg, steps_per_epoch * cfg.epochs, model.params().n_groups())?;
        Ok(ClassifierTrainer {
            model,
            train,
            optimizer: Optimizer::new(cfg.optimizer, cfg.clip),
            cfg,
            plan,
            step: 0,
            lr_trace: Vec::new(),
        })
    }

    pub fn model(&self) -> &Classifier {
        self.model
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// One pass over the training set. With unfreezing on, epoch `e` trains
    /// groups `0..=e` only. Returns mean loss and the metric of the
    /// training-mode predictions.
    pub fn run_epoch(&mut self, epoch: usize) -> Result<(f64, f64)> {
        if self.cfg.unfreeze {
            self.model.params_mut().set_trainable_groups(|g| g <= epoch);
        } else {
            self.model.params_mut().set_trainable_groups(|_| true);
        }
        let batches = batches_for(self.model, self.train, &self.cfg, epoch)?;
        let (mut loss_sum, mut preds, mut golds) = (0.0, Vec::new(), Vec::new());
        for batch in &batches {
            let model: &Classifier = self.model;
            let rows: Vec<usize> = (0..batch.len()).collect();
            let step = self.step as u64;
            let seed = self.cfg.seed;
            let results = crate::par::map(&rows, |&i| -> Result<(f64, usize, Gradients)> {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, step, i as u64));
                let mut tape = Tape::new(model.params());
                let out = model.forward(&mut tape, batch.row(i), true, &mut rng)?;
                let pred = predict_class(tape.value(out.probs));
                let loss = tape.cross_entropy(out.probs, batch.labels[i])?;
                let l = tape.scalar(loss);
                Ok((l, pred, tape.backward(loss)?))
            });
            let mut total = Gradients::new(model.params().len());
            for (i, r) in results.into_iter().enumerate() {
                let (l, pred, g) = r?;
                loss_sum += l;
                preds.push(pred);
                golds.push(batch.labels[i]);
                total.merge(&g);
            }
            total.scale(1.0 / batch.len() as f64);
            let lrs = self.plan.rates(self.step)?;
            self.lr_trace.push(lrs[0]);
            let store = self.model.params_mut();
            store.zero_grads();
            store.accumulate(&total);
            self.optimizer.step(store, &lrs)?;
            store.zero_grads();
            self.step += 1;
        }
        let report = compute_metrics(&preds, &golds, self.model.labels().len())?;
        Ok((loss_sum / preds.len() as f64, self.cfg.metric.of(&report)))
    }

    fn finish(self) -> Vec<f64> {
        self.model.params_mut().set_trainable_groups(|_| true);
        self.lr_trace
    }
}

/// Mean cross-entropy and `metric` with dropout off. Examples with no tokens
/// count as a uniform prediction.
pub fn evaluate_classifier(model: &Classifier, data: &LabeledDataset, metric: Metric) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let n = model.labels().len();
    let scored = crate::par::map(&data.examples, |ex| {
        let ids = model.encode_text(&ex.text);
        if ids.is_empty() {
            Ok(vec![1.0 / n as f64; n])
        } else {
            model.predict_ids(&ids)
        }
    });
    let (mut loss, mut preds) = (0.0, Vec::with_capacity(data.len()));
    for (ex, p) in data.examples.iter().zip(scored) {
        let p = p?;
        loss -= p[ex.label].max(1e-12).ln();
        preds.push(predict_class(&p));
    }
    let report = compute_metrics(&preds, &data.golds(), n)?;
    Ok((loss / data.len() as f64, metric.of(&report)))
}

fn copy_values(dst: &mut ParamStore, src: &ParamStore) {
    for ((_, d), (_, s)) in dst.iter_mut().zip(src.iter()) {
        d.tensor.values_mut().copy_from_slice(s.tensor.values());
    }
}

/// Trains with early stopping on the validation metric and leaves the
/// best-scoring weights in `model`. `on_epoch` sees each log line as it is
/// produced.
pub fn train_classifier(
    model: &mut Classifier,
    train: &LabeledDataset,
    val: &LabeledDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    if train.labels != val.labels {
        return Err(Error::Data(format!(
            "train labels {:?} differ from validation labels {:?}",
            train.labels, val.labels
        )));
    }
    let metric = cfg.metric;
    let mut trainer = ClassifierTrainer::new(model, train, cfg.clone())?;
    let mut log = Vec::new();
    let mut best: Option<(usize, f64, ParamStore)> = None;
    let mut bad_epochs = 0;
    let mut stopped_early = false;
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        let (train_loss, train_metric) = trainer.run_epoch(epoch)?;
        let (val_loss, val_metric) = evaluate_classifier(trainer.model(), val, metric)?;
        epochs_run += 1;
        for rec in [
            EpochRecord {
                epoch,
                split: "train",
                loss: train_loss,
                metric_name: metric.name(),
                metric_value: train_metric,
            },
            EpochRecord {
                epoch,
                split: "val",
                loss: val_loss,
                metric_name: metric.name(),
                metric_value: val_metric,
            },
        ] {
            on_epoch(&rec);
            log.push(rec);
        }
        if !train_loss.is_finite() {
            return Err(Error::Training(format!(
                "training loss became {train_loss} at epoch {epoch}"
            )));
        }
        if best.as_ref().is_none_or(|(_, b, _)| val_metric > *b) {
            best = Some((epoch, val_metric, trainer.model().params().clone()));
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
        }
        if cfg.target.is_some_and(|t| val_metric >= t) {
            break;
        }
        if bad_epochs >= cfg.patience {
            stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }
    let lr_trace = trainer.finish();
    let (best_epoch, best_metric, snapshot) = best.expect("at least one epoch runs");
    copy_values(model.params_mut(), &snapshot);
    Ok(TrainReport {
        log,
        best_epoch,
        best_metric,
        epochs_run,
        stopped_early,
        lr_trace,
    })
}
