use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Zero whenever a denominator is zero.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub prf: Prf,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub micro: Prf,
    pub macro_avg: Prf,
    /// `confusion[gold][pred]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Accuracy, per-class P/R/F1, micro and macro averages, and the confusion matrix.
pub fn compute_metrics(predictions: &[usize], golds: &[usize], n_classes: usize) -> Result<MetricsReport> {
    if predictions.len() != golds.len() {
        return Err(Error::contract(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::contract("metrics over zero examples"));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &g) in predictions.iter().zip(golds) {
        if p >= n_classes || g >= n_classes {
            return Err(Error::Index {
                index: p.max(g),
                len: n_classes,
            });
        }
        confusion[g][p] += 1;
    }
    let n = golds.len();
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();

    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let per_class: Vec<ClassMetrics> = (0..n_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let fp: usize = (0..n_classes).map(|g| confusion[g][c]).sum::<usize>() - tp;
            let support: usize = confusion[c].iter().sum();
            let fn_ = support - tp;
            tp_all += tp;
            fp_all += fp;
            fn_all += fn_;
            ClassMetrics {
                prf: Prf::from_counts(tp, fp, fn_),
                support,
            }
        })
        .collect();
    let k = n_classes as f64;
    let macro_avg = Prf {
        precision: per_class.iter().map(|c| c.prf.precision).sum::<f64>() / k,
        recall: per_class.iter().map(|c| c.prf.recall).sum::<f64>() / k,
        f1: per_class.iter().map(|c| c.prf.f1).sum::<f64>() / k,
    };
    Ok(MetricsReport {
        n,
        accuracy: correct as f64 / n as f64,
        per_class,
        micro: Prf::from_counts(tp_all, fp_all, fn_all),
        macro_avg,
        confusion,
    })
}

/// Aligned plain-text table with the columns
/// `System | Accuracy | Precision | Recall | F1-score` (macro averages).
pub fn render_table(rows: &[(String, MetricsReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("System".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>9}  {:>6}  {:>8}",
        "System", "Accuracy", "Precision", "Recall", "F1-score"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 2 + 8 + 2 + 9 + 2 + 6 + 2 + 8));
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.3}  {:>9.3}  {:>6.3}  {:>8.3}",
            name, m.accuracy, m.macro_avg.precision, m.macro_avg.recall, m.macro_avg.f1
        );
    }
    out
}

/// Per-class breakdown plus the confusion matrix.
pub fn render_details(m: &MetricsReport, labels: &[String]) -> String {
    let width = labels.iter().map(String::len).max().unwrap_or(0).max("class".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>6}  {:>8}  {:>7}",
        "class", "Precision", "Recall", "F1-score", "support"
    );
    for (label, c) in labels.iter().zip(&m.per_class) {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.3}  {:>6.3}  {:>8.3}  {:>7}",
            label, c.prf.precision, c.prf.recall, c.prf.f1, c.support
        );
    }
    let _ = writeln!(
        out,
        "{:<width$}  {:>9.3}  {:>6.3}  {:>8.3}  {:>7}",
        "micro", m.micro.precision, m.micro.recall, m.micro.f1, m.n
    );
    let _ = writeln!(
        out,
        "{:<width$}  {:>9.3}  {:>6.3}  {:>8.3}  {:>7}",
        "macro", m.macro_avg.precision, m.macro_avg.recall, m.macro_avg.f1, m.n
    );
    let _ = writeln!(out, "\nconfusion (rows = gold, columns = predicted)");
    for (label, row) in labels.iter().zip(&m.confusion) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
        let _ = writeln!(out, "{:<width$}  {}", label, cells.join(""));
    }
    out
}
