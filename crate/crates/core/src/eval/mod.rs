//! Mean-probability ensembling and classification metrics.

mod ensemble;
mod metrics;

pub use ensemble::{
    ensemble_mean, evaluate_ensemble, predict_class, validate_distribution, DumpRow, EnsembleEvaluation, Fallback,
    PredictionDistribution, Predictor,
};
pub use metrics::{compute_metrics, render_details, render_table, ClassMetrics, MetricsReport, Prf};
