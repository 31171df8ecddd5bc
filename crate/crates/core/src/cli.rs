//! The `drugnet` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{ensemble_mean, evaluate_ensemble, predict_class, render_details, Predictor};
use crate::nn::{Checkpoint, Classifier, LanguageModel, LinearModel};
use crate::synth;
use crate::text::{Granularity, LabeledDataset, Vocabulary};
use crate::train::{build_lm_vocab, finetune_lm, pretrain_lm, train_classifier, EpochRecord, LmCorpus};

#[derive(Debug, Parser)]
#[command(
    name = "drugnet",
    version,
    about = "Word-LSTM + trigram attention-LSTM ensemble text classifier"
)]
struct Cli {
    /// Overrides the `seed` key of any config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Branch {
    Word,
    Trigram,
    Linear,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a language model on a plain-text corpus (one document per line).
    PretrainLm {
        #[arg(long)]
        corpus: PathBuf,
        /// Extra documents whose words join the vocabulary without being
        /// trained on (typically the tweets used later for fine-tuning).
        #[arg(long)]
        vocab_from: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the epoch log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Continue language-model training on tweets, optionally with an extra corpus.
    FinetuneLm {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Plain text, or a labelled `.tsv` whose text column is used.
        #[arg(long)]
        tweets: PathBuf,
        #[arg(long)]
        extra_corpus: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train one classifier branch on `id<TAB>label<TAB>text` data (4:1 train/validation split).
    Train {
        #[arg(long, value_enum)]
        branch: Branch,
        /// Language model whose vocabulary and encoder initialise the word branch.
        #[arg(long)]
        lm_checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score both branches and their mean on a labelled set.
    EnsembleEval {
        #[arg(long)]
        word: PathBuf,
        #[arg(long)]
        trigram: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_metrics: PathBuf,
        #[arg(long)]
        out_dump: PathBuf,
    },
    /// Classify one text with the ensemble.
    Predict {
        #[arg(long)]
        word: PathBuf,
        #[arg(long)]
        trigram: PathBuf,
        #[arg(long)]
        text: String,
    },
    /// Write the synthetic corpora and labelled sets.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        /// Shrinks every file by this factor.
        #[arg(long, default_value_t = 1)]
        scale_down: usize,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on runtime or data errors, 2 on usage
/// errors.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    cfg.train.validate()?;
    eprintln!("# effective config");
    for line in cfg.render().lines() {
        eprintln!("#   {line}");
    }
    Ok(cfg)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "tsv") {
        let data = LabeledDataset::parse_tsv(&content, None)?;
        return Ok(data.examples.into_iter().map(|e| e.text).collect());
    }
    Ok(content
        .lines()
        .map(str::to_string)
        .filter(|l| !l.trim().is_empty())
        .collect())
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

/// Prints each record to stdout and collects them for the optional log file.
struct EpochLog {
    lines: String,
}

impl EpochLog {
    fn new() -> Self {
        println!("epoch\tsplit\tloss\tmetric_name\tmetric_value");
        EpochLog {
            lines: String::from("epoch\tsplit\tloss\tmetric_name\tmetric_value\n"),
        }
    }

    fn record(&mut self, rec: &EpochRecord) {
        let line = rec.to_line();
        println!("{line}");
        let _ = std::io::stdout().flush();
        self.lines.push_str(&line);
        self.lines.push('\n');
    }

    fn save(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => write(p, &self.lines),
            None => Ok(()),
        }
    }
}

/// The loaded model and its row name for results tables.
fn load_predictor(path: &Path, expect: Granularity) -> Result<(Box<dyn Predictor>, String)> {
    let ck = Checkpoint::load(path)?;
    if ck.get("kind")? == "linear" {
        return Ok((Box::new(LinearModel::from_checkpoint(&ck)?), "linear SVM".into()));
    }
    let model = Classifier::from_checkpoint(&ck, Some(expect))?;
    let attention = if model.config().attention { " attention" } else { "" };
    let name = format!(
        "{}{attention} LSTM",
        if expect == Granularity::Words {
            "word"
        } else {
            "trigram"
        }
    );
    Ok((Box::new(model), name))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PretrainLm {
            corpus,
            vocab_from,
            config,
            out,
            log,
        } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let docs = read_lines(&corpus)?;
            let mut vocab_docs = docs.clone();
            for p in &vocab_from {
                vocab_docs.extend(read_lines(p)?);
            }
            let vocab = build_lm_vocab(&vocab_docs, cfg.min_freq, cfg.max_vocab);
            let data = LmCorpus::from_documents(&docs, &vocab)?;
            eprintln!(
                "# corpus: {} documents, {} training tokens, {} validation tokens, vocabulary {}",
                docs.len(),
                data.train.len(),
                data.val.len(),
                vocab.len()
            );
            let mut lm = LanguageModel::new(cfg.lm_config(vocab.len()), vocab, cfg.train.seed)?;
            let mut epochs = EpochLog::new();
            let report = pretrain_lm(&mut lm, &data, &cfg.train, |r| epochs.record(r))?;
            eprintln!(
                "# validation perplexity {:.4} -> {:.4}",
                report.init_val_perplexity, report.best_val_perplexity
            );
            epochs.save(log.as_deref())?;
            lm.save(&out)
        }
        Command::FinetuneLm {
            checkpoint,
            tweets,
            extra_corpus,
            config,
            out,
            log,
        } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let mut lm = LanguageModel::load(&checkpoint)?;
            let mut docs = read_lines(&tweets)?;
            if let Some(extra) = extra_corpus {
                docs.extend(read_lines(&extra)?);
            }
            let data = LmCorpus::from_documents(&docs, lm.vocab())?;
            eprintln!(
                "# corpus: {} documents, {} training tokens, {} validation tokens",
                docs.len(),
                data.train.len(),
                data.val.len()
            );
            let mut epochs = EpochLog::new();
            let report = finetune_lm(&mut lm, &data, &cfg.train, |r| epochs.record(r))?;
            eprintln!(
                "# validation perplexity {:.4} -> {:.4}",
                report.init_val_perplexity, report.best_val_perplexity
            );
            epochs.save(log.as_deref())?;
            lm.save(&out)
        }
        Command::Train {
            branch,
            lm_checkpoint,
            data,
            config,
            out,
            log,
        } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let all = LabeledDataset::load(&data, None)?;
            let (train, val) = all.split_train_val(cfg.train.seed)?;
            eprintln!("# data: {} training, {} validation examples", train.len(), val.len());
            let mut epochs = EpochLog::new();
            match branch {
                Branch::Linear => {
                    if lm_checkpoint.is_some() {
                        return Err(Error::Data("--lm-checkpoint only applies to the word branch".into()));
                    }
                    let model = LinearModel::train(&train, &cfg.linear_config())?;
                    for (split, set) in [("train", &train), ("val", &val)] {
                        let preds: Vec<usize> = set.examples.iter().map(|e| model.predict(&e.text)).collect();
                        let report = crate::eval::compute_metrics(&preds, &set.golds(), set.n_classes())?;
                        let loss = set
                            .examples
                            .iter()
                            .map(|e| -model.predict_proba(&e.text)[e.label].max(1e-12).ln())
                            .sum::<f64>()
                            / set.len() as f64;
                        epochs.record(&EpochRecord {
                            epoch: cfg.train.epochs - 1,
                            split,
                            loss,
                            metric_name: cfg.train.metric.name(),
                            metric_value: cfg.train.metric.of(&report),
                        });
                    }
                    epochs.save(log.as_deref())?;
                    model.save(&out)
                }
                Branch::Word | Branch::Trigram => {
                    let mut tcfg = cfg.train.clone();
                    let mut model = if branch == Branch::Word {
                        match lm_checkpoint {
                            Some(p) => {
                                let lm = LanguageModel::load(&p)?;
                                let mut mc = cfg.model_config(Granularity::Words, lm.vocab().len(), train.n_classes());
                                let lc = lm.config();
                                if (mc.embed_dim, mc.hidden_dim, mc.n_layers, mc.bidirectional)
                                    != (lc.embed_dim, lc.hidden_dim, lc.n_layers, false)
                                {
                                    eprintln!("# encoder shape taken from the language model");
                                }
                                mc.embed_dim = lc.embed_dim;
                                mc.hidden_dim = lc.hidden_dim;
                                mc.n_layers = lc.n_layers;
                                mc.bidirectional = false;
                                Classifier::build_word_model(
                                    mc,
                                    lm.vocab().clone(),
                                    train.labels.clone(),
                                    Some(&lm),
                                    tcfg.seed,
                                )?
                            }
                            None => {
                                let vocab = Vocabulary::build(
                                    train.examples.iter().map(|e| Granularity::Words.tokens(&e.text)),
                                    cfg.min_freq,
                                    cfg.max_vocab,
                                );
                                let mc = cfg.model_config(Granularity::Words, vocab.len(), train.n_classes());
                                Classifier::build_word_model(mc, vocab, train.labels.clone(), None, tcfg.seed)?
                            }
                        }
                    } else {
                        if lm_checkpoint.is_some() {
                            return Err(Error::Data("--lm-checkpoint only applies to the word branch".into()));
                        }
                        tcfg.discriminative = false;
                        tcfg.unfreeze = false;
                        let vocab = Vocabulary::build(
                            train.examples.iter().map(|e| Granularity::Trigrams.tokens(&e.text)),
                            cfg.min_freq,
                            cfg.max_vocab,
                        );
                        let mut mc = cfg.model_config(Granularity::Trigrams, vocab.len(), train.n_classes());
                        mc.attention = true;
                        Classifier::build_trigram_model(mc, vocab, train.labels.clone(), tcfg.seed)?
                    };
                    let report = train_classifier(&mut model, &train, &val, &tcfg, |r| epochs.record(r))?;
                    eprintln!(
                        "# best validation {} {:.4} at epoch {}",
                        tcfg.metric, report.best_metric, report.best_epoch
                    );
                    epochs.save(log.as_deref())?;
                    model.save(&out)
                }
            }
        }
        Command::EnsembleEval {
            word,
            trigram,
            data,
            out_metrics,
            out_dump,
        } => {
            let (w, w_name) = load_predictor(&word, Granularity::Words)?;
            let (t, t_name) = load_predictor(&trigram, Granularity::Trigrams)?;
            let data = LabeledDataset::load(&data, Some(w.labels()))?;
            let ev = evaluate_ensemble(w.as_ref(), t.as_ref(), &data)?;
            for f in &ev.fallbacks {
                eprintln!(
                    "warning: {} branch could not score `{}` ({}); used uniform",
                    f.branch, f.id, f.reason
                );
            }
            let table = ev.table(&w_name, &t_name, "ensemble");
            print!("{table}");
            let mut metrics = table;
            for (name, m) in [
                (&w_name, &ev.word),
                (&t_name, &ev.trigram),
                (&"ensemble".to_string(), &ev.ensemble),
            ] {
                metrics.push_str(&format!("\n## {name}\n"));
                metrics.push_str(&render_details(m, &ev.labels));
            }
            metrics.push_str(&format!("\nfallbacks\t{}\n", ev.fallbacks.len()));
            write(&out_metrics, &metrics)?;
            write(&out_dump, &ev.dump_tsv())
        }
        Command::Predict { word, trigram, text } => {
            let (w, _) = load_predictor(&word, Granularity::Words)?;
            let (t, _) = load_predictor(&trigram, Granularity::Trigrams)?;
            if w.labels() != t.labels() {
                return Err(Error::Data("the two models use different label catalogs".into()));
            }
            let n = w.labels().len();
            let (pw, pt) = match (w.predict_proba(&text), t.predict_proba(&text)) {
                (Err(e), Err(_)) => return Err(e),
                (pw, pt) => (
                    pw.unwrap_or_else(|e| {
                        eprintln!("warning: word branch: {e}; used uniform");
                        vec![1.0 / n as f64; n]
                    }),
                    pt.unwrap_or_else(|e| {
                        eprintln!("warning: trigram branch: {e}; used uniform");
                        vec![1.0 / n as f64; n]
                    }),
                ),
            };
            let p = ensemble_mean(&pw, &pt)?;
            let labels = w.labels();
            println!("{}", labels[predict_class(&p)]);
            for (label, prob) in labels.iter().zip(&p) {
                println!("{label}\t{prob:.6}");
            }
            Ok(())
        }
        Command::Synth { out_dir, scale_down } => {
            let seed = cli.seed.unwrap_or(42);
            let k = scale_down.max(1);
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            let lines = |v: Vec<String>| v.join("\n") + "\n";
            let (bench_train, bench_test) = synth::drug_benchmark(seed, 600 / k, 300 / k, 0.05);
            let (suffix_train, suffix_test) = synth::suffix_dataset(seed, 300 / k, 200 / k);
            let files = [
                ("lm_corpus.txt", lines(synth::lm_corpus(seed, 1500 / k))),
                ("tweets.txt", lines(synth::unlabeled_tweets(seed, 0, 800 / k))),
                ("extra_corpus.txt", lines(synth::unlabeled_tweets(seed, 1, 800 / k))),
                ("benchmark_train.tsv", bench_train.to_tsv()),
                ("benchmark_test.tsv", bench_test.to_tsv()),
                ("suffix_train.tsv", suffix_train.to_tsv()),
                ("suffix_test.tsv", suffix_test.to_tsv()),
                ("toy.tsv", synth::separable_toy().to_tsv()),
            ];
            for (name, content) in files {
                write(&out_dir.join(name), &content)?;
                println!("{}", out_dir.join(name).display());
            }
            Ok(())
        }
    }
}
