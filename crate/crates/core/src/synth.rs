//! Deterministic synthetic corpora and labelled sets standing in for
//! encyclopedia text and medication tweets.
//!
//! Drug names are invented words built from random syllables plus one of a
//! few shared endings, so unseen names still carry a recognisable suffix.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::text::{LabeledDataset, LabeledExample};

const CONSONANTS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "o", "u"];

pub const DRUG_SUFFIXES: &[&str] = &["in", "ol", "ex"];
const OTHER_SUFFIXES: &[&str] = &["ton", "ley", "ford", "man"];
const CONTROL_SUFFIXES: &[&str] = &["ol", "ex", "um", "ar", "ot"];

pub const BENCHMARK_LABELS: [&str; 3] = ["intake", "possible", "none"];

const TIMES: &[&str] = &[
    "this morning",
    "last night",
    "today",
    "before work",
    "an hour ago",
    "again",
    "tonight",
    "after lunch",
];

const INTAKE: &[&str] = &[
    "just took my {d} {t}",
    "took two {d} {t} and feel better",
    "finally took the {d} {t}",
    "the {d} i took {t} is kicking in",
    "popped a {d} {t} lol",
    "been on {d} since monday and it works",
    "had to take my {d} {t}",
    "took {d} {t} for my headache",
];

const POSSIBLE: &[&str] = &[
    "should i take {d} {t}",
    "thinking about asking my doctor for {d}",
    "might need some {d} {t}",
    "my sister takes {d} every day",
    "does {d} actually help with sleep",
    "maybe i will try {d} {t}",
    "my friend said {d} works for pain",
    "wondering if {d} is safe to take",
];

const NEWS: &[&str] = &[
    "new study on {d} side effects",
    "the price of {d} went up again",
    "saw an ad for {d} on tv",
    "{d} recall announced by the company",
    "article about {d} shortages in hospitals",
    "report says {d} sales doubled",
];

const WIKI: &[&str] = &[
    "{d} is a medication used to treat {c} .",
    "{d} was first approved in {y} for {c} .",
    "common side effects of {d} include {s} .",
    "{d} belongs to a class of drugs used for {c} .",
    "the town of {o} lies on the river {r} .",
    "{o} is a small village known for its {n} .",
    "the {n} of {o} was built in {y} .",
    "{o} was founded in {y} by settlers from {r} .",
    "the river {r} flows through {o} and {o2} .",
    "patients with {c} are often given {d} .",
];

const CONDITIONS: &[&str] = &[
    "pain",
    "insomnia",
    "anxiety",
    "fever",
    "migraine",
    "allergies",
    "infection",
];
const SYMPTOMS: &[&str] = &["nausea", "dizziness", "headache", "fatigue", "dry mouth"];
const NOUNS: &[&str] = &["church", "bridge", "market", "castle", "mill", "school", "harbour"];
const YEARS: &[&str] = &["1901", "1954", "1987", "2003", "2011", "1876"];

/// `n` distinct invented words ending in one of `suffixes`, none of which
/// appear in `exclude`.
pub fn invented_words(rng: &mut ChaCha8Rng, n: usize, suffixes: &[&str], exclude: &BTreeSet<String>) -> Vec<String> {
    let mut seen = exclude.clone();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(CONSONANTS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        w.push_str(suffixes.choose(rng).unwrap());
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn fill(template: &str, drug: &str, rng: &mut ChaCha8Rng) -> String {
    template.replace("{d}", drug).replace("{t}", TIMES.choose(rng).unwrap())
}

fn dataset(rows: Vec<(String, usize)>, prefix: &str, labels: &[&str]) -> LabeledDataset {
    let examples = rows
        .into_iter()
        .enumerate()
        .map(|(i, (text, label))| LabeledExample {
            id: format!("{prefix}{i:05}"),
            text,
            label,
        })
        .collect();
    LabeledDataset::new(examples, labels.iter().map(|s| s.to_string()).collect()).expect("generated labels are valid")
}

struct Lexicon {
    seen_drugs: Vec<String>,
    unseen_drugs: Vec<String>,
    seen_other: Vec<String>,
    unseen_other: Vec<String>,
}

impl Lexicon {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1e71c0);
        let drugs = invented_words(&mut rng, 60, DRUG_SUFFIXES, &BTreeSet::new());
        let taken: BTreeSet<String> = drugs.iter().cloned().collect();
        let other = invented_words(&mut rng, 60, OTHER_SUFFIXES, &taken);
        Lexicon {
            seen_drugs: drugs[..30].to_vec(),
            unseen_drugs: drugs[30..].to_vec(),
            seen_other: other[..30].to_vec(),
            unseen_other: other[30..].to_vec(),
        }
    }
}

/// One tweet for the three-way intake benchmark. Roughly: 35% intake,
/// 25% possible, 40% none, where half of the "none" tweets reuse an intake or
/// possible template around a word that is not a drug.
fn benchmark_tweet(rng: &mut ChaCha8Rng, drugs: &[String], other: &[String]) -> (String, usize) {
    let r: f64 = rng.gen();
    let drug = drugs.choose(rng).unwrap();
    let thing = other.choose(rng).unwrap();
    if r < 0.35 {
        (fill(INTAKE.choose(rng).unwrap(), drug, rng), 0)
    } else if r < 0.60 {
        (fill(POSSIBLE.choose(rng).unwrap(), drug, rng), 1)
    } else if r < 0.80 {
        (fill(NEWS.choose(rng).unwrap(), drug, rng), 2)
    } else if r < 0.90 {
        (fill(INTAKE.choose(rng).unwrap(), thing, rng), 2)
    } else {
        (fill(POSSIBLE.choose(rng).unwrap(), thing, rng), 2)
    }
}

/// Train/test split of the three-class benchmark. Half of the test tweets
/// mention drug or non-drug words never used in training; `noise` is the
/// fraction of training labels replaced at random.
pub fn drug_benchmark(seed: u64, n_train: usize, n_test: usize, noise: f64) -> (LabeledDataset, LabeledDataset) {
    let lex = Lexicon::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe7c);
    let train = (0..n_train)
        .map(|_| {
            let (text, mut label) = benchmark_tweet(&mut rng, &lex.seen_drugs, &lex.seen_other);
            if rng.gen::<f64>() < noise {
                label = rng.gen_range(0..BENCHMARK_LABELS.len());
            }
            (text, label)
        })
        .collect();
    let test = (0..n_test)
        .map(|i| {
            if i % 2 == 0 {
                benchmark_tweet(&mut rng, &lex.seen_drugs, &lex.seen_other)
            } else {
                benchmark_tweet(&mut rng, &lex.unseen_drugs, &lex.unseen_other)
            }
        })
        .collect();
    (
        dataset(train, "tr", &BENCHMARK_LABELS),
        dataset(test, "te", &BENCHMARK_LABELS),
    )
}

/// Unlabelled tweets drawn from the benchmark templates, all drug names
/// included. Different `stream` values give independent samples over the
/// same lexicon.
pub fn unlabeled_tweets(seed: u64, stream: u64, n: usize) -> Vec<String> {
    let lex = Lexicon::new(seed);
    let drugs: Vec<String> = lex.seen_drugs.iter().chain(&lex.unseen_drugs).cloned().collect();
    let other: Vec<String> = lex.seen_other.iter().chain(&lex.unseen_other).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7ee7 ^ stream.wrapping_mul(0x9e37_79b9));
    (0..n).map(|_| benchmark_tweet(&mut rng, &drugs, &other).0).collect()
}

/// Encyclopedia-style sentences about invented drugs and places.
pub fn lm_corpus(seed: u64, n: usize) -> Vec<String> {
    let lex = Lexicon::new(seed);
    let drugs: Vec<String> = lex.seen_drugs.iter().chain(&lex.unseen_drugs).cloned().collect();
    let places: Vec<String> = lex.seen_other.iter().chain(&lex.unseen_other).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3141);
    (0..n)
        .map(|_| {
            WIKI.choose(&mut rng)
                .unwrap()
                .replace("{d}", drugs.choose(&mut rng).unwrap())
                .replace("{c}", CONDITIONS.choose(&mut rng).unwrap())
                .replace("{s}", SYMPTOMS.choose(&mut rng).unwrap())
                .replace("{n}", NOUNS.choose(&mut rng).unwrap())
                .replace("{y}", YEARS.choose(&mut rng).unwrap())
                .replace("{o2}", places.choose(&mut rng).unwrap())
                .replace("{o}", places.choose(&mut rng).unwrap())
                .replace("{r}", places.choose(&mut rng).unwrap())
        })
        .collect()
}

/// The same short sentence `n` times.
pub fn repetitive_corpus(n: usize) -> Vec<String> {
    vec!["the cat sat on the mat".to_string(); n]
}

/// Words ending in `-in` (positive) against words with other endings, in
/// shared sentence frames. Test words of both classes never occur in
/// training.
pub fn suffix_dataset(seed: u64, n_train: usize, n_test: usize) -> (LabeledDataset, LabeledDataset) {
    const FRAMES: &[&str] = &["{w}", "took {w} today", "got some {w}", "{w} twice", "need more {w}"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5f);
    let pos = invented_words(&mut rng, n_train / 2 + n_test / 2 + 1, &["in"], &BTreeSet::new());
    let taken: BTreeSet<String> = pos.iter().cloned().collect();
    let neg = invented_words(&mut rng, n_train / 2 + n_test / 2 + 1, CONTROL_SUFFIXES, &taken);
    let mut make = |words_pos: &[String], words_neg: &[String], n: usize| {
        let mut rows: Vec<(String, usize)> = (0..n)
            .map(|i| {
                let (w, label) = if i % 2 == 0 {
                    (&words_pos[(i / 2) % words_pos.len()], 1)
                } else {
                    (&words_neg[(i / 2) % words_neg.len()], 0)
                };
                (FRAMES.choose(&mut rng).unwrap().replace("{w}", w), label)
            })
            .collect();
        rows.shuffle(&mut rng);
        rows
    };
    let k = n_train / 2 + 1;
    let train = make(&pos[..k], &neg[..k], n_train);
    let test = make(&pos[k..], &neg[k..], n_test);
    (
        dataset(train, "tr", &["other", "in"]),
        dataset(test, "te", &["other", "in"]),
    )
}

/// 32 short texts, perfectly separable by vocabulary.
pub fn separable_toy() -> LabeledDataset {
    const THINGS: &[&str] = &[
        "aspirin",
        "ibuprofen",
        "tylenol",
        "advil",
        "xanax",
        "adderall",
        "codeine",
        "zoloft",
        "valium",
        "prozac",
        "melatonin",
        "benadryl",
        "claritin",
        "nyquil",
        "motrin",
        "aleve",
    ];
    let mut rows = Vec::new();
    for (i, t) in THINGS.iter().enumerate() {
        rows.push((format!("just took my {t}"), 1));
        rows.push((
            format!(
                "{} weather outside {}",
                ["nice", "bad", "cold", "warm"][i % 4],
                TIMES[i % TIMES.len()]
            ),
            0,
        ));
    }
    dataset(rows, "toy", &["no", "yes"])
}
