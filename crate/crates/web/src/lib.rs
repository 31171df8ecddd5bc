//! WebAssembly bindings for the browser demo in `www/`.

use drugnet::eval::{ensemble_mean, predict_class};
use drugnet::text::{normalize_tweet, Granularity};
use drugnet::train::{discriminative_lrs, StlrSchedule};
use wasm_bindgen::prelude::*;

/// Learning rate at every step `0..=total` of a slanted triangular schedule.
#[wasm_bindgen]
pub fn stlr_curve(total: usize, cut_frac: f64, ratio: f64, lr_max: f64) -> Result<Vec<f64>, String> {
    let s = StlrSchedule::new(total, cut_frac, ratio, lr_max).map_err(|e| e.to_string())?;
    (0..=total).map(|t| s.lr(t).map_err(|e| e.to_string())).collect()
}

/// Per-group rates, head first.
#[wasm_bindgen]
pub fn group_rates(base: f64, n_groups: usize, decay: f64) -> Result<Vec<f64>, String> {
    discriminative_lrs(base, n_groups, decay).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn normalize(text: &str) -> String {
    normalize_tweet(text)
}

/// Space-joined trigram stream of a raw tweet.
#[wasm_bindgen]
pub fn trigrams(text: &str) -> String {
    Granularity::Trigrams.tokens(text).join(" ")
}

#[wasm_bindgen]
pub fn ensemble(p_word: Vec<f64>, p_trigram: Vec<f64>) -> Result<Vec<f64>, String> {
    ensemble_mean(&p_word, &p_trigram).map_err(|e| e.to_string())
}

/// Index of the largest probability; ties go to the lowest index.
#[wasm_bindgen]
pub fn argmax(p: Vec<f64>) -> usize {
    predict_class(&p)
}
