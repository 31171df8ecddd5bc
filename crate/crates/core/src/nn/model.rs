use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::layers::{attention_pool, classify, init_range, AttentionVars, EncoderSpec};
use crate::error::{Error, Result};
use crate::tensor::{Init, ParamStore, Tape, Tensor, Var};
use crate::text::{Granularity, Vocabulary};

/// Architecture of a sequence classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub granularity: Granularity,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub bidirectional: bool,
    pub attention: bool,
    pub attention_dim: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub vocab_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            granularity: Granularity::Words,
            embed_dim: 32,
            hidden_dim: 64,
            n_layers: 1,
            bidirectional: false,
            attention: false,
            attention_dim: 32,
            n_classes: 2,
            dropout: 0.0,
            vocab_size: 4,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("n_layers", self.n_layers),
            ("attention_dim", self.attention_dim),
            ("vocab_size", self.vocab_size),
        ];
        if let Some((k, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Param(format!("{k} must be >= 1")));
        }
        if self.n_classes < 2 {
            return Err(Error::Param(format!("n_classes must be >= 2, got {}", self.n_classes)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Param(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn encoder(&self) -> EncoderSpec {
        EncoderSpec {
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            n_layers: self.n_layers,
            bidirectional: self.bidirectional,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder().output_dim()
    }
}

/// Forward result for one sequence.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierOutput {
    pub probs: Var,
    pub attention: Option<Var>,
}

/// Embedding + LSTM encoder + optional attention pooling + dense softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    config: ModelConfig,
    params: ParamStore,
    vocab: Vocabulary,
    labels: Vec<String>,
}

fn check_sizes(config: &ModelConfig, vocab: &Vocabulary, labels: &[String]) -> Result<()> {
    config.validate()?;
    if config.vocab_size != vocab.len() {
        return Err(Error::Param(format!(
            "config vocab_size {} but vocabulary has {} entries",
            config.vocab_size,
            vocab.len()
        )));
    }
    if config.n_classes != labels.len() {
        return Err(Error::Param(format!(
            "config n_classes {} but {} labels given",
            config.n_classes,
            labels.len()
        )));
    }
    Ok(())
}

impl Classifier {
    /// Fresh weights: uniform in `±1/sqrt(H)`, zero biases, forget bias 1.
    pub fn new(config: ModelConfig, vocab: Vocabulary, labels: Vec<String>, seed: u64) -> Result<Self> {
        check_sizes(&config, &vocab, &labels)?;
        let enc = config.encoder();
        let mut params = ParamStore::new();
        enc.init(&mut params, config.vocab_size, seed)?;
        let r = init_range(config.hidden_dim);
        let feat = config.feature_dim();
        if config.attention {
            params.insert(
                "attn.w",
                0,
                Tensor::new(
                    &[config.attention_dim, feat],
                    Init::Uniform {
                        lo: -r,
                        hi: r,
                        seed: seed ^ 0xa77e,
                    },
                )?,
            )?;
            params.insert(
                "attn.v",
                0,
                Tensor::new(
                    &[config.attention_dim],
                    Init::Uniform {
                        lo: -r,
                        hi: r,
                        seed: seed ^ 0xa77f,
                    },
                )?,
            )?;
        }
        params.insert(
            "head.w",
            0,
            Tensor::new(
                &[config.n_classes, feat],
                Init::Uniform {
                    lo: -r,
                    hi: r,
                    seed: seed ^ 0x4ead,
                },
            )?,
        )?;
        params.insert("head.b", 0, Tensor::new(&[config.n_classes], Init::Zeros)?)?;
        Ok(Classifier {
            config,
            params,
            vocab,
            labels,
        })
    }

    /// Word-input classifier. With a language model, the embedding and LSTM
    /// tensors are copied from it and only the head starts fresh.
    pub fn build_word_model(
        config: ModelConfig,
        vocab: Vocabulary,
        labels: Vec<String>,
        lm: Option<&LanguageModel>,
        seed: u64,
    ) -> Result<Self> {
        if config.granularity != Granularity::Words {
            return Err(Error::contract("word model needs granularity = words"));
        }
        let mut model = Self::new(config, vocab, labels, seed)?;
        if let Some(lm) = lm {
            if lm.vocab.fingerprint() != model.vocab.fingerprint() {
                return Err(Error::Checkpoint(format!(
                    "vocabulary fingerprint mismatch: language model {} vs classifier {}",
                    lm.vocab.fingerprint(),
                    model.vocab.fingerprint()
                )));
            }
            let want = model.config.encoder();
            if lm.config.encoder() != want {
                return Err(Error::Checkpoint(format!(
                    "encoder shape mismatch: language model {:?} vs classifier {:?}",
                    lm.config.encoder(),
                    want
                )));
            }
            for (_, p) in lm.params.iter() {
                if p.name.starts_with("embedding") || p.name.starts_with("lstm.") {
                    let id = model.params.id(&p.name)?;
                    *model.params.tensor_mut(id) = p.tensor.clone().with_requires_grad(true);
                }
            }
        }
        Ok(model)
    }

    /// Trigram-input classifier with attention pooling, always trained from scratch.
    pub fn build_trigram_model(config: ModelConfig, vocab: Vocabulary, labels: Vec<String>, seed: u64) -> Result<Self> {
        if config.granularity != Granularity::Trigrams {
            return Err(Error::contract("trigram model needs granularity = trigrams"));
        }
        if !config.attention {
            return Err(Error::contract("trigram model needs attention enabled"));
        }
        Self::new(config, vocab, labels, seed)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn granularity(&self) -> Granularity {
        self.config.granularity
    }

    /// Records the forward pass for one unpadded id sequence.
    pub fn forward<R: rand::Rng>(
        &self,
        tape: &mut Tape,
        ids: &[u32],
        train: bool,
        rng: &mut R,
    ) -> Result<ClassifierOutput> {
        let enc = self.config.encoder();
        let p = self.config.dropout;
        let states = enc.forward(tape, ids, p, train, rng)?;
        let (features, attention) = if self.config.attention {
            let attn = AttentionVars::load(tape, "attn")?;
            let m = tape.stack(&states)?;
            let (ctx, w) = attention_pool(tape, m, &attn, &vec![1.0; states.len()])?;
            (ctx, Some(w))
        } else if enc.bidirectional {
            let h = enc.hidden_dim;
            let last = *states.last().unwrap();
            let fwd = tape.slice(last, 0, h)?;
            let bwd = tape.slice(states[0], h, h)?;
            (tape.concat(&[fwd, bwd])?, None)
        } else {
            (*states.last().unwrap(), None)
        };
        let features = tape.dropout(features, p, train, rng)?;
        let w = tape.param_by_name("head.w")?;
        let b = tape.param_by_name("head.b")?;
        let probs = classify(tape, features, w, b)?;
        Ok(ClassifierOutput { probs, attention })
    }

    /// Forward pass over a padded batch row; only the leading unmasked
    /// positions are read.
    pub fn forward_masked<R: rand::Rng>(
        &self,
        tape: &mut Tape,
        padded: &[u32],
        mask: &[f64],
        train: bool,
        rng: &mut R,
    ) -> Result<ClassifierOutput> {
        let len = mask.iter().take_while(|&&m| m > 0.0).count();
        self.forward(tape, &padded[..len], train, rng)
    }

    /// Class probabilities with dropout off.
    pub fn predict_ids(&self, ids: &[u32]) -> Result<Vec<f64>> {
        Ok(self.predict_with_attention(ids)?.0)
    }

    /// Class probabilities and, for attention models, the pooling weights.
    pub fn predict_with_attention(&self, ids: &[u32]) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        if ids.is_empty() {
            return Err(Error::Prediction("no tokens to classify".into()));
        }
        let mut tape = Tape::new(&self.params);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = self.forward(&mut tape, ids, false, &mut rng)?;
        Ok((
            tape.value(out.probs).to_vec(),
            out.attention.map(|w| tape.value(w).to_vec()),
        ))
    }

    pub fn encode_text(&self, text: &str) -> Vec<u32> {
        self.config.granularity.encode(text, &self.vocab)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        let c = &self.config;
        ck.set("kind", "classifier");
        ck.set("granularity", c.granularity);
        ck.set("embed_dim", c.embed_dim);
        ck.set("hidden_dim", c.hidden_dim);
        ck.set("n_layers", c.n_layers);
        ck.set("bidirectional", c.bidirectional);
        ck.set("attention", c.attention);
        ck.set("attention_dim", c.attention_dim);
        ck.set("n_classes", c.n_classes);
        ck.set("dropout", c.dropout);
        ck.set("vocab_size", c.vocab_size);
        put_vocab(&mut ck, "vocab", &self.vocab);
        ck.set("labels", self.labels.join("\t"));
        ck.tensors = self
            .params
            .iter()
            .map(|(_, p)| (p.name.clone(), p.tensor.clone()))
            .collect();
        ck
    }

    /// Rebuilds a classifier, checking the tensor table against the manifest
    /// implied by the stored config. `expect` rejects checkpoints of the
    /// other granularity.
    pub fn from_checkpoint(ck: &Checkpoint, expect: Option<Granularity>) -> Result<Self> {
        let kind = ck.get("kind")?;
        if kind != "classifier" {
            return Err(Error::Checkpoint(format!(
                "expected a classifier checkpoint, found `{kind}`"
            )));
        }
        let granularity: Granularity = ck
            .get("granularity")?
            .parse()
            .map_err(|_| Error::Checkpoint("bad granularity".into()))?;
        if let Some(want) = expect {
            if want != granularity {
                return Err(Error::Checkpoint(format!(
                    "config mismatch: checkpoint holds a {granularity} model, expected {want}"
                )));
            }
        }
        let config = ModelConfig {
            granularity,
            embed_dim: ck.parse("embed_dim")?,
            hidden_dim: ck.parse("hidden_dim")?,
            n_layers: ck.parse("n_layers")?,
            bidirectional: ck.parse("bidirectional")?,
            attention: ck.parse("attention")?,
            attention_dim: ck.parse("attention_dim")?,
            n_classes: ck.parse("n_classes")?,
            dropout: ck.parse("dropout")?,
            vocab_size: ck.parse("vocab_size")?,
        };
        let vocab = get_vocab(ck, "vocab")?;
        let labels: Vec<String> = ck.get("labels")?.split('\t').map(str::to_string).collect();
        let mut model = Self::new(config, vocab, labels, 0).map_err(|e| Error::Checkpoint(e.to_string()))?;
        fill_params(&mut model.params, ck)?;
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &std::path::Path, expect: Option<Granularity>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?, expect)
    }
}

pub(crate) fn put_vocab(ck: &mut Checkpoint, key: &str, vocab: &Vocabulary) {
    ck.set(key, vocab.regular_tokens().join("\t"));
    ck.set(&format!("{key}_fingerprint"), vocab.fingerprint());
    ck.set(&format!("{key}_min_freq"), vocab.min_freq());
}

pub(crate) fn get_vocab(ck: &Checkpoint, key: &str) -> Result<Vocabulary> {
    let raw = ck.get(key)?;
    let tokens = raw.split('\t').filter(|t| !t.is_empty()).map(str::to_string);
    let vocab = Vocabulary::from_tokens(tokens);
    let fp = ck.get(&format!("{key}_fingerprint"))?;
    if vocab.fingerprint() != fp {
        return Err(Error::Checkpoint(format!(
            "vocabulary fingerprint mismatch: stored {fp}, recomputed {}",
            vocab.fingerprint()
        )));
    }
    Ok(vocab)
}

/// Copies checkpoint tensors into a freshly built store; every manifest name
/// must appear exactly once with the right shape, and nothing else may.
pub(crate) fn fill_params(store: &mut ParamStore, ck: &Checkpoint) -> Result<()> {
    let mut seen = vec![false; store.len()];
    for (name, t) in &ck.tensors {
        let id = store
            .id(name)
            .map_err(|_| Error::Checkpoint(format!("unexpected tensor `{name}` for this architecture")))?;
        if std::mem::replace(&mut seen[id.index()], true) {
            return Err(Error::Checkpoint(format!("tensor `{name}` appears twice")));
        }
        let slot = store.tensor_mut(id);
        if slot.shape() != t.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor `{name}` has shape {:?}, architecture expects {:?}",
                t.shape(),
                slot.shape()
            )));
        }
        slot.values_mut().copy_from_slice(t.values());
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let name = &store.iter().nth(i).unwrap().1.name;
        return Err(Error::Checkpoint(format!("missing tensor `{name}`")));
    }
    Ok(())
}

/// Architecture of a next-token language model.
#[derive(Debug, Clone, PartialEq)]
pub struct LmConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub dropout: f64,
    pub vocab_size: usize,
}

impl LmConfig {
    pub fn encoder(&self) -> EncoderSpec {
        EncoderSpec {
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            n_layers: self.n_layers,
            bidirectional: false,
        }
    }
}

/// Embedding + unidirectional LSTM stack + softmax projection over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageModel {
    config: LmConfig,
    params: ParamStore,
    vocab: Vocabulary,
}

impl LanguageModel {
    pub fn new(config: LmConfig, vocab: Vocabulary, seed: u64) -> Result<Self> {
        if config.embed_dim == 0 || config.hidden_dim == 0 || config.n_layers == 0 {
            return Err(Error::Param("language model dims must be >= 1".into()));
        }
        if config.vocab_size != vocab.len() {
            return Err(Error::Param(format!(
                "config vocab_size {} but vocabulary has {} entries",
                config.vocab_size,
                vocab.len()
            )));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::Param(format!("dropout {} outside [0, 1)", config.dropout)));
        }
        let mut params = ParamStore::new();
        config.encoder().init(&mut params, config.vocab_size, seed)?;
        let r = init_range(config.hidden_dim);
        params.insert(
            "proj.w",
            0,
            Tensor::new(
                &[config.vocab_size, config.hidden_dim],
                Init::Uniform {
                    lo: -r,
                    hi: r,
                    seed: seed ^ 0x9e0,
                },
            )?,
        )?;
        params.insert("proj.b", 0, Tensor::new(&[config.vocab_size], Init::Zeros)?)?;
        Ok(LanguageModel { config, params, vocab })
    }

    pub fn config(&self) -> &LmConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn position_probs<R: rand::Rng>(
        &self,
        tape: &mut Tape,
        ids: &[u32],
        upto: usize,
        train: bool,
        rng: &mut R,
    ) -> Result<Vec<Var>> {
        let states = self
            .config
            .encoder()
            .forward(tape, ids, self.config.dropout, train, rng)?;
        let w = tape.param_by_name("proj.w")?;
        let b = tape.param_by_name("proj.b")?;
        states[..upto]
            .iter()
            .map(|&h| {
                let h = tape.dropout(h, self.config.dropout, train, rng)?;
                classify(tape, h, w, b)
            })
            .collect()
    }

    /// Next-token distributions `[T, V]`; row `t` predicts token `t + 1`.
    pub fn forward<R: rand::Rng>(&self, tape: &mut Tape, ids: &[u32], train: bool, rng: &mut R) -> Result<Var> {
        let rows = self.position_probs(tape, ids, ids.len(), train, rng)?;
        tape.stack(&rows)
    }

    /// Mean cross-entropy of predicting `ids[t + 1]` from `ids[..=t]`.
    pub fn loss<R: rand::Rng>(&self, tape: &mut Tape, ids: &[u32], train: bool, rng: &mut R) -> Result<Var> {
        if ids.len() < 2 {
            return Err(Error::contract("language-model loss needs at least 2 tokens"));
        }
        let rows = self.position_probs(tape, ids, ids.len() - 1, train, rng)?;
        let losses: Vec<Var> = rows
            .iter()
            .zip(&ids[1..])
            .map(|(&p, &next)| tape.cross_entropy(p, next as usize))
            .collect::<Result<_>>()?;
        tape.mean(&losses)
    }

    /// `exp` of the token-weighted mean loss over `windows` (dropout off).
    pub fn perplexity(&self, windows: &[Vec<u32>]) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for w in windows.iter().filter(|w| w.len() >= 2) {
            let mut tape = Tape::new(&self.params);
            let l = self.loss(&mut tape, w, false, &mut rng)?;
            total += tape.scalar(l) * (w.len() - 1) as f64;
            count += w.len() - 1;
        }
        if count == 0 {
            return Err(Error::Data("no windows with at least 2 tokens".into()));
        }
        Ok((total / count as f64).exp())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        let c = &self.config;
        ck.set("kind", "lm");
        ck.set("embed_dim", c.embed_dim);
        ck.set("hidden_dim", c.hidden_dim);
        ck.set("n_layers", c.n_layers);
        ck.set("dropout", c.dropout);
        ck.set("vocab_size", c.vocab_size);
        put_vocab(&mut ck, "vocab", &self.vocab);
        ck.tensors = self
            .params
            .iter()
            .map(|(_, p)| (p.name.clone(), p.tensor.clone()))
            .collect();
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let kind = ck.get("kind")?;
        if kind != "lm" {
            return Err(Error::Checkpoint(format!(
                "expected a language-model checkpoint, found `{kind}`"
            )));
        }
        let config = LmConfig {
            embed_dim: ck.parse("embed_dim")?,
            hidden_dim: ck.parse("hidden_dim")?,
            n_layers: ck.parse("n_layers")?,
            dropout: ck.parse("dropout")?,
            vocab_size: ck.parse("vocab_size")?,
        };
        let vocab = get_vocab(ck, "vocab")?;
        let mut lm = Self::new(config, vocab, 0).map_err(|e| Error::Checkpoint(e.to_string()))?;
        fill_params(&mut lm.params, ck)?;
        Ok(lm)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
