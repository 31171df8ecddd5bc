use std::fmt::Write as _;

use super::metrics::{compute_metrics, render_table, MetricsReport};
use crate::error::{Error, Result};
use crate::nn::{Classifier, LinearModel};
use crate::text::LabeledDataset;

/// Probabilities over a label catalog: nonnegative, summing to 1.
pub type PredictionDistribution = Vec<f64>;

/// Anything that maps raw text to a class distribution.
pub trait Predictor: Sync {
    fn labels(&self) -> &[String];
    fn predict_proba(&self, text: &str) -> Result<PredictionDistribution>;
}

impl Predictor for Classifier {
    fn labels(&self) -> &[String] {
        Classifier::labels(self)
    }

    /// Dropout off; an input with no tokens at this granularity is a
    /// prediction error.
    fn predict_proba(&self, text: &str) -> Result<PredictionDistribution> {
        let ids = self.encode_text(text);
        if ids.is_empty() {
            return Err(Error::Prediction(format!(
                "no {} tokens after preprocessing `{text}`",
                self.granularity()
            )));
        }
        self.predict_ids(&ids)
    }
}

impl Predictor for LinearModel {
    fn labels(&self) -> &[String] {
        LinearModel::labels(self)
    }

    fn predict_proba(&self, text: &str) -> Result<PredictionDistribution> {
        Ok(LinearModel::predict_proba(self, text))
    }
}

pub fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::contract(format!("not a distribution: {p:?}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-6 {
        return Err(Error::contract(format!("distribution sums to {s}")));
    }
    Ok(())
}

/// Element-wise `(p1 + p2) / 2`.
pub fn ensemble_mean(p1: &[f64], p2: &[f64]) -> Result<PredictionDistribution> {
    if p1.len() != p2.len() {
        return Err(Error::contract(format!(
            "label catalogs differ: {} vs {} classes",
            p1.len(),
            p2.len()
        )));
    }
    Ok(p1.iter().zip(p2).map(|(a, b)| (a + b) / 2.0).collect())
}

/// Argmax; the lowest index wins ties.
pub fn predict_class(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpRow {
    pub id: String,
    pub gold: usize,
    pub word: usize,
    pub trigram: usize,
    pub ensemble: usize,
    pub probs: PredictionDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fallback {
    pub id: String,
    pub branch: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct EnsembleEvaluation {
    pub labels: Vec<String>,
    pub rows: Vec<DumpRow>,
    pub word: MetricsReport,
    pub trigram: MetricsReport,
    pub ensemble: MetricsReport,
    /// Examples a branch could not score; that branch contributed a uniform
    /// distribution instead.
    pub fallbacks: Vec<Fallback>,
}

impl EnsembleEvaluation {
    /// `id gold pred_word pred_trigram pred_ensemble p_ensemble` with label
    /// names and comma-joined probabilities.
    pub fn dump_tsv(&self) -> String {
        let mut out = String::from("id\tgold\tpred_word\tpred_trigram\tpred_ensemble\tp_ensemble\n");
        for r in &self.rows {
            let probs: Vec<String> = r.probs.iter().map(|p| format!("{p:.6}")).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.id,
                self.labels[r.gold],
                self.labels[r.word],
                self.labels[r.trigram],
                self.labels[r.ensemble],
                probs.join(",")
            );
        }
        out
    }

    pub fn table(&self, word_name: &str, trigram_name: &str, ensemble_name: &str) -> String {
        render_table(&[
            (word_name.to_string(), self.word.clone()),
            (trigram_name.to_string(), self.trigram.clone()),
            (ensemble_name.to_string(), self.ensemble.clone()),
        ])
    }
}

fn uniform(n: usize) -> PredictionDistribution {
    vec![1.0 / n as f64; n]
}

pub fn evaluate_ensemble(
    word: &dyn Predictor,
    trigram: &dyn Predictor,
    data: &LabeledDataset,
) -> Result<EnsembleEvaluation> {
    if word.labels() != data.labels.as_slice() || trigram.labels() != data.labels.as_slice() {
        return Err(Error::Data(format!(
            "label catalogs differ: word {:?}, trigram {:?}, data {:?}",
            word.labels(),
            trigram.labels(),
            data.labels
        )));
    }
    if data.is_empty() {
        return Err(Error::Data("no examples to evaluate".into()));
    }
    let n = data.n_classes();
    let scored = crate::par::map(&data.examples, |ex| {
        let w = word.predict_proba(&ex.text);
        let t = trigram.predict_proba(&ex.text);
        (w, t)
    });

    let mut rows = Vec::with_capacity(data.len());
    let mut fallbacks = Vec::new();
    for (ex, (w, t)) in data.examples.iter().zip(scored) {
        let mut settle = |r: Result<PredictionDistribution>, branch: &'static str| match r {
            Ok(p) => p,
            Err(e) => {
                fallbacks.push(Fallback {
                    id: ex.id.clone(),
                    branch,
                    reason: e.to_string(),
                });
                uniform(n)
            }
        };
        let pw = settle(w, "word");
        let pt = settle(t, "trigram");
        let pe = ensemble_mean(&pw, &pt)?;
        rows.push(DumpRow {
            id: ex.id.clone(),
            gold: ex.label,
            word: predict_class(&pw),
            trigram: predict_class(&pt),
            ensemble: predict_class(&pe),
            probs: pe,
        });
    }
    let golds = data.golds();
    let col = |f: fn(&DumpRow) -> usize| rows.iter().map(f).collect::<Vec<_>>();
    Ok(EnsembleEvaluation {
        labels: data.labels.clone(),
        word: compute_metrics(&col(|r| r.word), &golds, n)?,
        trigram: compute_metrics(&col(|r| r.trigram), &golds, n)?,
        ensemble: compute_metrics(&col(|r| r.ensemble), &golds, n)?,
        rows,
        fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::text::LabeledExample;

    #[test]
    fn mean_rule() {
        let p = ensemble_mean(&[0.2, 0.8], &[0.6, 0.4]).unwrap();
        assert!((p[0] - 0.4).abs() < 1e-15 && (p[1] - 0.6).abs() < 1e-15);
        assert_eq!(ensemble_mean(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);
        assert!(matches!(ensemble_mean(&[1.0], &[0.5, 0.5]), Err(Error::Contract(_))));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(predict_class(&[0.4, 0.6]), 1);
        assert_eq!(predict_class(&[0.5, 0.5]), 0);
        assert_eq!(predict_class(&[0.2, 0.4, 0.4]), 1);
    }

    struct Fixed(Vec<String>, Vec<f64>);

    impl Predictor for Fixed {
        fn labels(&self) -> &[String] {
            &self.0
        }
        fn predict_proba(&self, text: &str) -> Result<PredictionDistribution> {
            if text.is_empty() {
                return Err(Error::Prediction("empty".into()));
            }
            Ok(self.1.clone())
        }
    }

    fn data() -> LabeledDataset {
        let labels = vec!["a".to_string(), "b".to_string()];
        let examples = (0..4)
            .map(|i| LabeledExample {
                id: format!("x{i}"),
                text: if i == 3 { String::new() } else { "t".into() },
                label: i % 2,
            })
            .collect();
        LabeledDataset::new(examples, labels).unwrap()
    }

    #[test]
    fn self_ensemble_matches_single_model() {
        let d = data();
        let m = Fixed(d.labels.clone(), vec![0.3, 0.7]);
        let ev = evaluate_ensemble(&m, &m, &d).unwrap();
        assert_eq!(ev.ensemble, ev.word);
        assert_eq!(ev.rows.len(), d.len());
        assert_eq!(ev.fallbacks.len(), 2);
        assert_eq!(ev.dump_tsv().lines().count(), d.len() + 1);
        let last = ev.dump_tsv().lines().last().unwrap().to_string();
        assert_eq!(last, "x3\tb\ta\ta\ta\t0.500000,0.500000");
    }

    #[test]
    fn catalog_mismatch_is_data_error() {
        let d = data();
        let m = Fixed(vec!["a".into(), "c".into()], vec![0.5, 0.5]);
        assert!(matches!(evaluate_ensemble(&m, &m, &d), Err(Error::Data(_))));
    }

    fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-9;
            v.iter().map(|x| (x + 1e-9 / v.len() as f64) / s).collect()
        })
    }

    proptest! {
        #[test]
        fn mean_is_valid_and_commutative(a in dist(3), b in dist(3)) {
            let m = ensemble_mean(&a, &b).unwrap();
            prop_assert_eq!(&m, &ensemble_mean(&b, &a).unwrap());
            validate_distribution(&m).unwrap();
        }

        #[test]
        fn agreement_is_preserved(a in dist(4), b in dist(4)) {
            let (ka, kb) = (predict_class(&a), predict_class(&b));
            if ka == kb {
                prop_assert_eq!(predict_class(&ensemble_mean(&a, &b).unwrap()), ka);
            }
        }
    }
}
