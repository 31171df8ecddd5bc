//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use drugnet::eval::{compute_metrics, ensemble_mean, evaluate_ensemble, predict_class, render_table, Prf};
use drugnet::nn::{
    attention_pool, classify, init_lstm, lstm_forward, AttentionVars, Checkpoint, Classifier, LanguageModel,
    LinearConfig, LinearModel, LmConfig, LstmVars, ModelConfig,
};
use drugnet::synth;
use drugnet::tensor::{finite_diff_check, ParamStore, Tensor};
use drugnet::text::{char_trigrams, Granularity, LabeledDataset, Vocabulary};
use drugnet::train::{
    build_lm_vocab, discriminative_lrs, evaluate_classifier, finetune_lm, pretrain_lm, stlr, train_classifier,
    unfreeze_schedule, ClassifierTrainer, LmCorpus, Metric, OptimizerKind, StlrSchedule, TrainConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome, Duration);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: drugnet::Error) -> String {
    e.to_string()
}

fn jitter(store: &mut ParamStore, rng: &mut ChaCha8Rng) {
    for (_, p) in store.iter_mut() {
        for v in p.tensor.values_mut() {
            *v = rng.gen_range(-0.9..0.9);
        }
    }
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-0.9..0.9)).collect()).unwrap()
}

fn tiny_vocab(n: usize) -> Vocabulary {
    Vocabulary::from_tokens((0..n).map(|i| format!("t{i}")))
}

fn random_ids(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(1..vocab as u32)).collect()
}

fn fd_classifier(rng: &mut ChaCha8Rng, variant: usize) -> Result<(String, f64), String> {
    let v = tiny_vocab(rng.gen_range(2..5));
    let granularity = if variant == 4 {
        Granularity::Trigrams
    } else {
        Granularity::Words
    };
    let cfg = ModelConfig {
        granularity,
        embed_dim: rng.gen_range(2..5),
        hidden_dim: rng.gen_range(2..4),
        n_layers: 1,
        bidirectional: variant == 2 || variant == 3 || (variant == 4 && rng.gen()),
        attention: variant == 1 || variant == 3 || variant == 4,
        attention_dim: rng.gen_range(2..4),
        n_classes: rng.gen_range(2..5),
        dropout: 0.0,
        vocab_size: v.len(),
    };
    let name = format!(
        "{} bi={} attn={} e={} h={} c={}",
        cfg.granularity, cfg.bidirectional, cfg.attention, cfg.embed_dim, cfg.hidden_dim, cfg.n_classes
    );
    let labels: Vec<String> = (0..cfg.n_classes).map(|i| format!("c{i}")).collect();
    let n_classes = cfg.n_classes;
    let mut m = if granularity == Granularity::Trigrams {
        Classifier::build_trigram_model(cfg, v.clone(), labels, rng.gen()).map_err(err)?
    } else {
        Classifier::build_word_model(cfg, v.clone(), labels, None, rng.gen()).map_err(err)?
    };
    jitter(m.params_mut(), rng);
    let rows: Vec<(Vec<u32>, usize)> = (0..2)
        .map(|_| {
            let len = rng.gen_range(1..5);
            (random_ids(rng, v.len(), len), rng.gen_range(0..n_classes))
        })
        .collect();
    let model = m.clone();
    let e = finite_diff_check(m.params_mut(), 1e-5, |t| {
        let mut r = ChaCha8Rng::seed_from_u64(0);
        let mut losses = Vec::new();
        for (ids, y) in &rows {
            let out = model.forward(t, ids, false, &mut r)?;
            losses.push(t.cross_entropy(out.probs, *y)?);
        }
        t.mean(&losses)
    })
    .map_err(err)?;
    Ok((name, e))
}

fn fd_lm(rng: &mut ChaCha8Rng) -> Result<(String, f64), String> {
    let v = tiny_vocab(rng.gen_range(2..5));
    let cfg = LmConfig {
        embed_dim: rng.gen_range(2..5),
        hidden_dim: rng.gen_range(2..4),
        n_layers: 1,
        dropout: 0.0,
        vocab_size: v.len(),
    };
    let name = format!("lm e={} h={}", cfg.embed_dim, cfg.hidden_dim);
    let mut lm = LanguageModel::new(cfg, v.clone(), rng.gen()).map_err(err)?;
    jitter(lm.params_mut(), rng);
    let len = rng.gen_range(2..7);
    let ids = random_ids(rng, v.len(), len);
    let model = lm.clone();
    let e = finite_diff_check(lm.params_mut(), 1e-5, |t| {
        model.loss(t, &ids, false, &mut ChaCha8Rng::seed_from_u64(0))
    })
    .map_err(err)?;
    Ok((name, e))
}

/// LSTM rollout, attention pooling and the softmax head checked in isolation.
fn fd_layers(rng: &mut ChaCha8Rng) -> Result<Vec<(String, f64)>, String> {
    let (d, h, steps) = (rng.gen_range(2..4), rng.gen_range(2..4), rng.gen_range(2..5));
    let mut out = Vec::new();

    let mut s = ParamStore::new();
    init_lstm(&mut s, "f", 0, d, h, rng.gen()).map_err(err)?;
    init_lstm(&mut s, "b", 0, d, h, rng.gen()).map_err(err)?;
    s.insert("xs", 0, random_tensor(&[steps, d], rng)).map_err(err)?;
    jitter(&mut s, rng);
    let e = finite_diff_check(&mut s, 1e-5, |t| {
        let (f, b) = (LstmVars::load(t, "f")?, LstmVars::load(t, "b")?);
        let xs = t.param_by_name("xs")?;
        let inputs = (0..steps)
            .map(|i| t.gather_row(xs, i))
            .collect::<drugnet::Result<Vec<_>>>()?;
        let hs = lstm_forward(t, &inputs, &f, Some(&b))?;
        let all = t.concat(&hs)?;
        let sq = t.mul(all, all)?;
        Ok(t.sum(sq))
    })
    .map_err(err)?;
    out.push((format!("bilstm d={d} h={h} T={steps}"), e));

    let a = rng.gen_range(2..4);
    let mut s = ParamStore::new();
    s.insert("a.w", 0, random_tensor(&[a, h], rng)).map_err(err)?;
    s.insert("a.v", 0, random_tensor(&[a], rng)).map_err(err)?;
    s.insert("hs", 0, random_tensor(&[steps, h], rng)).map_err(err)?;
    let mut mask = vec![1.0; steps];
    mask[steps - 1] = 0.0;
    let e = finite_diff_check(&mut s, 1e-5, |t| {
        let p = AttentionVars::load(t, "a")?;
        let hs = t.param_by_name("hs")?;
        let (ctx, _) = attention_pool(t, hs, &p, &mask)?;
        let sq = t.mul(ctx, ctx)?;
        Ok(t.sum(sq))
    })
    .map_err(err)?;
    out.push((format!("attention a={a} h={h} T={steps}"), e));

    let c = rng.gen_range(2..5);
    let mut s = ParamStore::new();
    s.insert("w", 0, random_tensor(&[c, h], rng)).map_err(err)?;
    s.insert("b", 0, random_tensor(&[c], rng)).map_err(err)?;
    s.insert("f", 0, random_tensor(&[h], rng)).map_err(err)?;
    let y = rng.gen_range(0..c);
    let e = finite_diff_check(&mut s, 1e-5, |t| {
        let (w, b, f) = (t.param_by_name("w")?, t.param_by_name("b")?, t.param_by_name("f")?);
        let p = classify(t, f, w, b)?;
        t.cross_entropy(p, y)
    })
    .map_err(err)?;
    out.push((format!("softmax head c={c} h={h}"), e));
    Ok(out)
}

fn ac1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut results = Vec::new();
    for trial in 0..24 {
        let variant = trial % 6;
        results.push(if variant == 5 {
            fd_lm(&mut rng)?
        } else {
            fd_classifier(&mut rng, variant)?
        });
    }
    for _ in 0..3 {
        results.extend(fd_layers(&mut rng)?);
    }
    let (worst_name, worst) = results.iter().max_by(|a, b| a.1.total_cmp(&b.1)).cloned().unwrap();
    check(worst < 1e-4, format!("{worst_name}: relative error {worst:.3e}"))?;
    Ok(format!(
        "{} checks, worst relative error {worst:.2e} ({worst_name})",
        results.len()
    ))
}

fn ac2() -> Outcome {
    let got = char_trigrams("ram").map_err(err)?;
    check(got == ["$ra", "ram", "am$"], format!("ram -> {got:?}"))?;
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz0123456789éüñ".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let len = rng.gen_range(1..16);
        let word: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        let tri = char_trigrams(&word).map_err(err)?;
        check(tri.len() == len, format!("{word}: {} trigrams", tri.len()))?;
        check(tri.iter().all(|t| t.chars().count() == 3), format!("{word}: {tri:?}"))?;
        check(
            tri[0].starts_with('$') && tri[len - 1].ends_with('$'),
            format!("{word}: {tri:?}"),
        )?;
        let middle: String = tri.iter().map(|t| t.chars().nth(1).unwrap()).collect();
        check(middle == word, format!("{word}: centres spell {middle}"))?;
    }
    Ok("ram -> [$ra, ram, am$]; 1000 random words give L trigrams each".into())
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-6..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn ac3() -> Outcome {
    let m = ensemble_mean(&[0.2, 0.8], &[0.6, 0.4]).map_err(err)?;
    check(
        (m[0] - 0.4).abs() < 1e-12 && (m[1] - 0.6).abs() < 1e-12,
        format!("mean gave {m:?}"),
    )?;
    check(predict_class(&[0.5, 0.5]) == 0, "tie (0.5, 0.5) not broken to 0")?;
    check(
        predict_class(&[0.25, 0.375, 0.375]) == 1,
        "three-way tie not broken to lowest index",
    )?;
    check(
        ensemble_mean(&[0.5, 0.5], &[1.0 / 3.0; 3]).is_err(),
        "catalog mismatch accepted",
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..10_000 {
        let n = rng.gen_range(2..6);
        let p1 = random_distribution(&mut rng, n);
        let mut p2 = random_distribution(&mut rng, n);
        let k = predict_class(&p1);
        let j = predict_class(&p2);
        p2.swap(j, k);
        check(predict_class(&p2) == k, format!("pair {i}: setup failed"))?;
        let m = ensemble_mean(&p1, &p2).map_err(err)?;
        check(predict_class(&m) == k, format!("pair {i}: {p1:?} + {p2:?} -> {m:?}"))?;
        check(
            (m.iter().sum::<f64>() - 1.0).abs() < 1e-9,
            format!("pair {i}: mean not normalised"),
        )?;
        check(
            m == ensemble_mean(&p2, &p1).map_err(err)?,
            format!("pair {i}: not commutative"),
        )?;
    }
    Ok("(0.2,0.8)+(0.6,0.4) -> (0.4,0.6); 10000 agreeing pairs kept their argmax; ties go to index 0".into())
}

fn group_values(model: &Classifier, group: usize) -> Vec<f64> {
    model
        .params()
        .iter()
        .filter(|(_, p)| p.group == group)
        .flat_map(|(_, p)| p.tensor.values().to_vec())
        .collect()
}

fn toy_word_model(data: &LabeledDataset, seed: u64) -> Classifier {
    let v = Vocabulary::build(
        data.examples.iter().map(|e| Granularity::Words.tokens(&e.text)),
        1,
        None,
    );
    let cfg = ModelConfig {
        embed_dim: 16,
        hidden_dim: 24,
        n_classes: data.n_classes(),
        vocab_size: v.len(),
        ..ModelConfig::default()
    };
    Classifier::new(cfg, v, data.labels.clone(), seed).unwrap()
}

fn ac4() -> Outcome {
    let s = StlrSchedule::new(1000, 0.1, 32.0, 0.01).map_err(err)?;
    for (t, want) in [(0, 3.125e-4), (100, 0.01), (1000, 3.125e-4)] {
        let got = stlr(t, &s).map_err(err)?;
        check((got - want).abs() <= 1e-12, format!("stlr({t}) = {got}, want {want}"))?;
    }
    let peak = (0..=1000).map(|t| stlr(t, &s).unwrap()).fold(0.0, f64::max);
    check((peak - 0.01).abs() <= 1e-12, format!("peak {peak}"))?;

    let lrs = discriminative_lrs(0.01, 4, 2.6).map_err(err)?;
    for (k, pair) in lrs.windows(2).enumerate() {
        check(
            (pair[0] / pair[1] - 2.6).abs() < 1e-12,
            format!("group {k}->{}: ratio {}", k + 1, pair[0] / pair[1]),
        )?;
    }
    check(
        unfreeze_schedule(1, 3) == [true, true, false],
        "unfreeze_schedule(1, 3)",
    )?;

    let data = synth::separable_toy();
    let mut model = toy_word_model(&data, 5);
    check(model.params().n_groups() == 3, "toy model should have 3 groups")?;
    let cfg = TrainConfig {
        epochs: 4,
        batch_size: 8,
        unfreeze: true,
        discriminative: true,
        optimizer: OptimizerKind::Sgd,
        lr: 0.5,
        ..TrainConfig::default()
    };
    let mut snaps = vec![(0..3).map(|g| group_values(&model, g)).collect::<Vec<_>>()];
    let mut trainer = ClassifierTrainer::new(&mut model, &data, cfg).map_err(err)?;
    for epoch in 0..4 {
        trainer.run_epoch(epoch).map_err(err)?;
        snaps.push((0..3).map(|g| group_values(trainer.model(), g)).collect());
    }
    for g in 0..3 {
        let first = (1..snaps.len())
            .find(|&e| snaps[e][g] != snaps[e - 1][g])
            .map(|e| e - 1);
        check(first == Some(g), format!("group {g} first changed at epoch {first:?}"))?;
    }
    Ok("stlr 3.125e-4 / 0.01 / 3.125e-4; discriminative ratio 2.6; group k first moves at epoch k".into())
}

fn ac5() -> Outcome {
    let data = synth::separable_toy();
    let mut model = toy_word_model(&data, 3);
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 8,
        patience: 300,
        target: Some(1.0),
        ..TrainConfig::default()
    };
    let report = train_classifier(&mut model, &data, &data, &cfg, |_| {}).map_err(err)?;
    let (_, acc) = evaluate_classifier(&model, &data, Metric::Accuracy).map_err(err)?;
    check(
        acc == 1.0,
        format!("train accuracy {acc} after {} epochs", report.epochs_run),
    )?;

    let docs = synth::repetitive_corpus(40);
    let v = build_lm_vocab(&docs, 1, None);
    let corpus = LmCorpus::from_documents(&docs, &v).map_err(err)?;
    let lcfg = LmConfig {
        embed_dim: 16,
        hidden_dim: 24,
        n_layers: 1,
        dropout: 0.0,
        vocab_size: v.len(),
    };
    let mut lm = LanguageModel::new(lcfg, v, 2).map_err(err)?;
    let tcfg = TrainConfig {
        epochs: 30,
        batch_size: 4,
        bptt: 16,
        patience: 30,
        ..TrainConfig::default()
    };
    let r = pretrain_lm(&mut lm, &corpus, &tcfg, |_| {}).map_err(err)?;
    check(
        r.best_val_perplexity < 1.1,
        format!("perplexity {}", r.best_val_perplexity),
    )?;
    Ok(format!(
        "toy train accuracy 1.0 after {} epochs; repetitive-corpus perplexity {:.4}",
        report.epochs_run, r.best_val_perplexity
    ))
}

fn dataset_vocab(data: &LabeledDataset, g: Granularity) -> Vocabulary {
    Vocabulary::build(data.examples.iter().map(|e| g.tokens(&e.text)), 1, None)
}

fn ac6() -> Outcome {
    let (train, test) = synth::suffix_dataset(1, 300, 200);
    let train_words: std::collections::BTreeSet<String> = train
        .examples
        .iter()
        .flat_map(|e| Granularity::Words.tokens(&e.text))
        .collect();
    let positive = test.labels.iter().position(|l| l == "in").unwrap();
    let unseen = test.examples.iter().filter(|e| e.label == positive).all(|e| {
        Granularity::Words
            .tokens(&e.text)
            .iter()
            .any(|w| w.ends_with("in") && !train_words.contains(w))
    });
    check(unseen, "a positive test example has no unseen -in word")?;

    let (tr, val) = train.split_train_val(1).map_err(err)?;
    let mut acc = Vec::new();
    for g in [Granularity::Words, Granularity::Trigrams] {
        let v = dataset_vocab(&tr, g);
        let cfg = ModelConfig {
            granularity: g,
            embed_dim: 16,
            hidden_dim: 32,
            attention: g == Granularity::Trigrams,
            attention_dim: 16,
            n_classes: 2,
            vocab_size: v.len(),
            ..ModelConfig::default()
        };
        let mut m = Classifier::new(cfg, v, tr.labels.clone(), 1).map_err(err)?;
        let tc = TrainConfig {
            epochs: 15,
            batch_size: 16,
            patience: 5,
            ..TrainConfig::default()
        };
        train_classifier(&mut m, &tr, &val, &tc, |_| {}).map_err(err)?;
        acc.push(evaluate_classifier(&m, &test, Metric::Accuracy).map_err(err)?.1);
    }
    let (word, tri) = (acc[0], acc[1]);
    let msg = format!("unseen-suffix test accuracy: trigram {tri:.3}, word {word:.3}");
    check(tri >= 0.90 && tri > word, msg.clone())?;
    Ok(msg)
}

struct BenchResult {
    table: String,
    word: f64,
    trigram: f64,
    ensemble: f64,
}

fn bench(seed: u64) -> Result<BenchResult, String> {
    let (train, test) = synth::drug_benchmark(seed, 600, 300, 0.05);
    let (tr, val) = train.split_train_val(seed).map_err(err)?;

    let lm_docs = synth::lm_corpus(seed, 1500);
    let tweets = synth::unlabeled_tweets(seed, 0, 800);
    let lv = build_lm_vocab(&[lm_docs.clone(), tweets.clone()].concat(), 1, None);
    let lcfg = LmConfig {
        embed_dim: 24,
        hidden_dim: 48,
        n_layers: 1,
        dropout: 0.0,
        vocab_size: lv.len(),
    };
    let mut lm = LanguageModel::new(lcfg, lv.clone(), seed).map_err(err)?;
    let lm_train = TrainConfig {
        epochs: 3,
        batch_size: 16,
        bptt: 20,
        seed,
        ..TrainConfig::default()
    };
    pretrain_lm(
        &mut lm,
        &LmCorpus::from_documents(&lm_docs, &lv).map_err(err)?,
        &lm_train,
        |_| {},
    )
    .map_err(err)?;
    finetune_lm(
        &mut lm,
        &LmCorpus::from_documents(&tweets, &lv).map_err(err)?,
        &lm_train,
        |_| {},
    )
    .map_err(err)?;

    let word_cfg = ModelConfig {
        embed_dim: 24,
        hidden_dim: 48,
        n_classes: tr.n_classes(),
        vocab_size: lv.len(),
        ..ModelConfig::default()
    };
    let mut word = Classifier::build_word_model(word_cfg, lv, tr.labels.clone(), Some(&lm), seed).map_err(err)?;
    let word_train = TrainConfig {
        epochs: 8,
        batch_size: 16,
        patience: 3,
        discriminative: true,
        unfreeze: true,
        seed,
        ..TrainConfig::default()
    };
    train_classifier(&mut word, &tr, &val, &word_train, |_| {}).map_err(err)?;

    let tv = dataset_vocab(&tr, Granularity::Trigrams);
    let tri_cfg = ModelConfig {
        granularity: Granularity::Trigrams,
        embed_dim: 16,
        hidden_dim: 32,
        attention: true,
        attention_dim: 16,
        n_classes: tr.n_classes(),
        vocab_size: tv.len(),
        ..ModelConfig::default()
    };
    let mut tri = Classifier::build_trigram_model(tri_cfg, tv, tr.labels.clone(), seed).map_err(err)?;
    let tri_train = TrainConfig {
        epochs: 8,
        batch_size: 16,
        patience: 3,
        seed,
        ..TrainConfig::default()
    };
    train_classifier(&mut tri, &tr, &val, &tri_train, |_| {}).map_err(err)?;

    let svm = LinearModel::train(
        &tr,
        &LinearConfig {
            seed,
            ..LinearConfig::default()
        },
    )
    .map_err(err)?;
    let svm_preds: Vec<usize> = test.examples.iter().map(|e| svm.predict(&e.text)).collect();
    let svm_report = compute_metrics(&svm_preds, &test.golds(), test.n_classes()).map_err(err)?;

    let ev = evaluate_ensemble(&word, &tri, &test).map_err(err)?;
    let table = render_table(&[
        ("SVM (linear kernel)".to_string(), svm_report),
        ("LSTM with encoder from language model".to_string(), ev.word.clone()),
        (
            "LSTM with attention (trigrams as input)".to_string(),
            ev.trigram.clone(),
        ),
        ("Ensemble".to_string(), ev.ensemble.clone()),
    ]);
    Ok(BenchResult {
        table,
        word: ev.word.accuracy,
        trigram: ev.trigram.accuracy,
        ensemble: ev.ensemble.accuracy,
    })
}

fn ac7() -> Outcome {
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for seed in [1, 2, 3] {
        let r = bench(seed)?;
        println!("  seed {seed}:");
        for line in r.table.lines() {
            println!("    {line}");
        }
        let best = r.word.max(r.trigram);
        summary.push(format!("seed {seed} ensemble {:.3} vs best {best:.3}", r.ensemble));
        if r.ensemble < best - 0.02 {
            failures.push(format!(
                "seed {seed}: ensemble {:.3} < best single {best:.3} - 0.02",
                r.ensemble
            ));
        }
    }
    check(failures.is_empty(), failures.join("; "))?;
    Ok(summary.join("; "))
}

fn brute_prf(preds: &[usize], golds: &[usize], c: usize) -> (Prf, usize, usize, usize) {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&p, &g) in preds.iter().zip(golds) {
        match (p == c, g == c) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    (prf(tp, fp, fn_), tp, fp, fn_)
}

fn prf(tp: usize, fp: usize, fn_: usize) -> Prf {
    let p = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let r = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Prf {
        precision: p,
        recall: r,
        f1,
    }
}

fn ac8() -> Outcome {
    let m = compute_metrics(&[1, 0, 0, 0], &[1, 1, 0, 0], 2).map_err(err)?;
    check(
        m.accuracy == 0.75 && m.per_class[1].prf.precision == 1.0 && m.per_class[1].prf.recall == 0.5,
        format!("hand example gave {m:?}"),
    )?;
    check((m.per_class[1].prf.f1 - 2.0 / 3.0).abs() < 1e-12, "hand example F1")?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for set in 0..1000 {
        let c = rng.gen_range(2..6);
        let n = rng.gen_range(1..201);
        let golds: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let got = compute_metrics(&preds, &golds, c).map_err(err)?;
        let correct = preds.iter().zip(&golds).filter(|(p, g)| p == g).count();
        check(
            got.accuracy == correct as f64 / n as f64,
            format!("set {set}: accuracy"),
        )?;
        let (mut tps, mut fps, mut fns) = (0, 0, 0);
        let mut per = Vec::new();
        for class in 0..c {
            let (p, tp, fp, fn_) = brute_prf(&preds, &golds, class);
            check(
                got.per_class[class].prf == p,
                format!("set {set} class {class}: {:?} vs {p:?}", got.per_class[class].prf),
            )?;
            check(
                got.per_class[class].support == tp + fn_,
                format!("set {set} class {class}: support"),
            )?;
            tps += tp;
            fps += fp;
            fns += fn_;
            per.push(p);
        }
        check(got.micro == prf(tps, fps, fns), format!("set {set}: micro"))?;
        let k = c as f64;
        let mac = Prf {
            precision: per.iter().map(|p| p.precision).sum::<f64>() / k,
            recall: per.iter().map(|p| p.recall).sum::<f64>() / k,
            f1: per.iter().map(|p| p.f1).sum::<f64>() / k,
        };
        check(got.macro_avg == mac, format!("set {set}: macro"))?;
        if c == 2 {
            check(
                (got.micro.f1 - got.accuracy).abs() < 1e-12,
                format!("set {set}: binary micro-F1 != accuracy"),
            )?;
        }
    }
    Ok("1000 random sets match brute-force counts exactly; binary micro-F1 equals accuracy".into())
}

const LM_CONF: &str = "embed_dim = 8\nhidden_dim = 12\nepochs = 1\nbptt = 12\n";
const WORD_CONF: &str = "epochs = 2\nbatch_size = 8\ndiscriminative = true\nunfreeze = true\n";
const TRI_CONF: &str = "embed_dim = 8\nhidden_dim = 12\nattention_dim = 8\nepochs = 2\nbatch_size = 8\n";
const OUTPUTS: [&str; 6] = ["lm.ckpt", "ft.ckpt", "word.ckpt", "tri.ckpt", "metrics.txt", "dump.tsv"];

fn pipeline(dir: &Path) -> Result<(), String> {
    fs::write(dir.join("lm.conf"), LM_CONF).map_err(|e| e.to_string())?;
    fs::write(dir.join("word.conf"), WORD_CONF).map_err(|e| e.to_string())?;
    fs::write(dir.join("tri.conf"), TRI_CONF).map_err(|e| e.to_string())?;
    let steps: [&[&str]; 6] = [
        &["synth", "--out-dir", "data", "--scale-down", "20"],
        &[
            "pretrain-lm",
            "--corpus",
            "data/lm_corpus.txt",
            "--vocab-from",
            "data/benchmark_train.tsv",
            "--config",
            "lm.conf",
            "--out",
            "lm.ckpt",
        ],
        &[
            "finetune-lm",
            "--checkpoint",
            "lm.ckpt",
            "--tweets",
            "data/tweets.txt",
            "--config",
            "lm.conf",
            "--out",
            "ft.ckpt",
        ],
        &[
            "train",
            "--branch",
            "word",
            "--lm-checkpoint",
            "ft.ckpt",
            "--data",
            "data/benchmark_train.tsv",
            "--config",
            "word.conf",
            "--out",
            "word.ckpt",
        ],
        &[
            "train",
            "--branch",
            "trigram",
            "--data",
            "data/benchmark_train.tsv",
            "--config",
            "tri.conf",
            "--out",
            "tri.ckpt",
        ],
        &[
            "ensemble-eval",
            "--word",
            "word.ckpt",
            "--trigram",
            "tri.ckpt",
            "--data",
            "data/benchmark_test.tsv",
            "--out-metrics",
            "metrics.txt",
            "--out-dump",
            "dump.tsv",
        ],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_drugnet"))
            .current_dir(dir)
            .args(["--seed", "7"])
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{} failed: {}",
                args[0],
                String::from_utf8_lossy(&out.stderr).trim()
            ));
        }
    }
    Ok(())
}

fn ac9() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    for f in OUTPUTS {
        let x = fs::read(a.path().join(f)).map_err(|e| e.to_string())?;
        let y = fs::read(b.path().join(f)).map_err(|e| e.to_string())?;
        check(!x.is_empty() && x == y, format!("{f} differs between runs"))?;
    }

    let mut tested = 0;
    for f in ["lm.ckpt", "word.ckpt", "tri.ckpt"] {
        let bytes = fs::read(a.path().join(f)).map_err(|e| e.to_string())?;
        let ck = Checkpoint::from_bytes(&bytes).map_err(err)?;
        check(
            ck.to_bytes().map_err(err)? == bytes,
            format!("{f}: re-serialisation differs"),
        )?;
        for cut in (0..bytes.len())
            .step_by((bytes.len() / 200).max(1))
            .chain([bytes.len() - 1])
        {
            check(
                Checkpoint::from_bytes(&bytes[..cut]).is_err(),
                format!("{f}: truncated at {cut} accepted"),
            )?;
            tested += 1;
        }
    }
    let word = Classifier::load(&a.path().join("word.ckpt"), Some(Granularity::Words)).map_err(err)?;
    let again = Classifier::from_checkpoint(
        &Checkpoint::from_bytes(&word.to_checkpoint().to_bytes().map_err(err)?).map_err(err)?,
        Some(Granularity::Words),
    )
    .map_err(err)?;
    for ((_, p), (_, q)) in word.params().iter().zip(again.params().iter()) {
        let same = p
            .tensor
            .values()
            .iter()
            .zip(q.tensor.values())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        check(
            p.name == q.name && same,
            format!("{} not bit-exact after round trip", p.name),
        )?;
    }
    Ok(format!(
        "two pipeline runs byte-identical ({} files); round trip bit-exact; {tested} truncations rejected",
        OUTPUTS.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1", "gradient correctness", ac1, Duration::from_secs(60)),
        ("AC2", "trigram fidelity", ac2, Duration::from_secs(1)),
        ("AC3", "ensemble semantics", ac3, Duration::from_secs(5)),
        ("AC4", "schedule oracles", ac4, Duration::MAX),
        ("AC5", "overfit oracle", ac5, Duration::from_secs(300)),
        ("AC6", "suffix generalisation", ac6, Duration::from_secs(300)),
        ("AC7", "ablation shape", ac7, Duration::MAX),
        ("AC8", "metrics oracle", ac8, Duration::MAX),
        ("AC9", "determinism and persistence", ac9, Duration::MAX),
    ];
    let mut failed = 0;
    for (id, name, f, budget) in criteria {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > budget => Err(format!("{msg}; took {took:.1?}, budget {budget:?}")),
            r => r,
        };
        match result {
            Ok(msg) => println!("PASS {id} {name}: {msg} [{took:.1?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id} {name}: {msg} [{took:.1?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
