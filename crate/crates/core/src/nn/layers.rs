//! Building blocks recorded on a [`Tape`]: LSTM cells and layers, additive
//! attention pooling and the softmax classifier head.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{Init, ParamStore, Tape, Tensor, Var};

/// Tape handles for one LSTM direction. Gate order in the stacked weights is
/// input, forget, cell, output.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w: Var,
    pub u: Var,
    pub b: Var,
    pub hidden: usize,
}

impl LstmVars {
    pub fn load(tape: &mut Tape, prefix: &str) -> Result<Self> {
        let w = tape.param_by_name(&format!("{prefix}.w"))?;
        let u = tape.param_by_name(&format!("{prefix}.u"))?;
        let b = tape.param_by_name(&format!("{prefix}.b"))?;
        let hidden = tape.shape(u)[1];
        Ok(LstmVars { w, u, b, hidden })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub w: Var,
    pub v: Var,
}

impl AttentionVars {
    pub fn load(tape: &mut Tape, prefix: &str) -> Result<Self> {
        Ok(AttentionVars {
            w: tape.param_by_name(&format!("{prefix}.w"))?,
            v: tape.param_by_name(&format!("{prefix}.v"))?,
        })
    }
}

pub(crate) fn init_range(hidden: usize) -> f64 {
    1.0 / (hidden as f64).sqrt()
}

/// Registers `{prefix}.w [4H, D]`, `{prefix}.u [4H, H]` and `{prefix}.b [4H]`.
/// Weights are uniform in `±1/sqrt(H)`; the forget-gate bias starts at 1.
pub fn init_lstm(
    store: &mut ParamStore,
    prefix: &str,
    group: usize,
    input: usize,
    hidden: usize,
    seed: u64,
) -> Result<()> {
    let r = init_range(hidden);
    let uni = |s: u64| Init::Uniform { lo: -r, hi: r, seed: s };
    store.insert(
        &format!("{prefix}.w"),
        group,
        Tensor::new(&[4 * hidden, input], uni(seed))?,
    )?;
    store.insert(
        &format!("{prefix}.u"),
        group,
        Tensor::new(&[4 * hidden, hidden], uni(seed.wrapping_add(1)))?,
    )?;
    let mut b = vec![0.0; 4 * hidden];
    b[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
    store.insert(&format!("{prefix}.b"), group, Tensor::from_vec(&[4 * hidden], b)?)?;
    Ok(())
}

/// One LSTM step:
/// `i, f, o = sigmoid(.)`, `g = tanh(.)`, `c' = f*c + i*g`, `h' = o*tanh(c')`.
pub fn lstm_step(tape: &mut Tape, x: Var, h: Var, c: Var, p: &LstmVars) -> Result<(Var, Var)> {
    let hd = p.hidden;
    if tape.shape(h) != [hd] || tape.shape(c) != [hd] {
        return Err(Error::shape(format!(
            "lstm state {:?}/{:?} does not match hidden size {hd}",
            tape.shape(h),
            tape.shape(c)
        )));
    }
    let wx = tape.matvec(p.w, x)?;
    let uh = tape.matvec(p.u, h)?;
    let pre = tape.add_n(&[wx, uh, p.b])?;
    let i = tape.slice(pre, 0, hd)?;
    let f = tape.slice(pre, hd, hd)?;
    let g = tape.slice(pre, 2 * hd, hd)?;
    let o = tape.slice(pre, 3 * hd, hd)?;
    let i = tape.sigmoid(i);
    let f = tape.sigmoid(f);
    let g = tape.tanh(g);
    let o = tape.sigmoid(o);
    let fc = tape.mul(f, c)?;
    let ig = tape.mul(i, g)?;
    let c_next = tape.add(fc, ig)?;
    let tc = tape.tanh(c_next);
    let h_next = tape.mul(o, tc)?;
    Ok((h_next, c_next))
}

/// Runs one direction over `inputs` from a zero state. Returns the hidden
/// state at every position, in input order.
pub fn lstm_direction(tape: &mut Tape, inputs: &[Var], p: &LstmVars, reverse: bool) -> Result<Vec<Var>> {
    if inputs.is_empty() {
        return Err(Error::contract("lstm over an empty sequence"));
    }
    let mut h = tape.constant(&[p.hidden], vec![0.0; p.hidden])?;
    let mut c = h;
    let mut out = vec![h; inputs.len()];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..inputs.len()).rev())
    } else {
        Box::new(0..inputs.len())
    };
    for t in order {
        (h, c) = lstm_step(tape, inputs[t], h, c, p)?;
        out[t] = h;
    }
    Ok(out)
}

/// Unidirectional or bidirectional layer. Bidirectional outputs are
/// `[forward_t ; backward_t]` of width `2H`.
pub fn lstm_forward(tape: &mut Tape, inputs: &[Var], fwd: &LstmVars, bwd: Option<&LstmVars>) -> Result<Vec<Var>> {
    let f = lstm_direction(tape, inputs, fwd, false)?;
    match bwd {
        None => Ok(f),
        Some(b) => {
            let r = lstm_direction(tape, inputs, b, true)?;
            f.iter().zip(&r).map(|(&x, &y)| tape.concat(&[x, y])).collect()
        }
    }
}

/// Additive attention: `score_t = v . tanh(W h_t)`, weights are the softmax
/// of the scores over unmasked positions, and the context is `sum_t w_t h_t`.
///
/// `states` is the `[T, H']` matrix of hidden states. Returns `(context, weights)`.
pub fn attention_pool(tape: &mut Tape, states: Var, p: &AttentionVars, mask: &[f64]) -> Result<(Var, Var)> {
    let shape = tape.shape(states).to_vec();
    if shape.len() != 2 || shape[0] != mask.len() {
        return Err(Error::shape(format!(
            "attention over states {shape:?} with mask of length {}",
            mask.len()
        )));
    }
    let (t, width) = (shape[0], shape[1]);
    let wt = tape.transpose(p.w)?; // [H', A]
    let proj = tape.matmul(states, wt)?; // [T, A]
    let act = tape.tanh(proj);
    let scores = tape.matvec(act, p.v)?; // [T]
    let weights = tape.masked_softmax(scores, mask)?;
    let row = tape.reshape(weights, &[1, t])?;
    let ctx = tape.matmul(row, states)?;
    let ctx = tape.reshape(ctx, &[width])?;
    Ok((ctx, weights))
}

/// `softmax(W features + b)`.
pub fn classify(tape: &mut Tape, features: Var, w: Var, b: Var) -> Result<Var> {
    let logits = tape.matvec(w, features)?;
    let logits = tape.add(logits, b)?;
    if tape.shape(logits) != tape.shape(b) {
        return Err(Error::shape("classifier bias does not match the number of classes"));
    }
    tape.softmax(logits)
}

/// Shape of an encoder stack shared by the classifiers and the language model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderSpec {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub bidirectional: bool,
}

impl EncoderSpec {
    pub fn output_dim(&self) -> usize {
        if self.bidirectional {
            2 * self.hidden_dim
        } else {
            self.hidden_dim
        }
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embed_dim
        } else {
            self.output_dim()
        }
    }

    /// Layer group of LSTM layer `layer`: the top layer sits right under the head.
    pub fn layer_group(&self, layer: usize) -> usize {
        self.n_layers - layer
    }

    pub fn embedding_group(&self) -> usize {
        self.n_layers + 1
    }

    /// Registers `embedding` and every `lstm.{l}.{fwd,bwd}.*` tensor.
    pub fn init(&self, store: &mut ParamStore, vocab_size: usize, seed: u64) -> Result<()> {
        let r = init_range(self.hidden_dim);
        store.insert(
            "embedding",
            self.embedding_group(),
            Tensor::new(&[vocab_size, self.embed_dim], Init::Uniform { lo: -r, hi: r, seed })?,
        )?;
        for l in 0..self.n_layers {
            let s = seed.wrapping_add(100 * (l as u64 + 1));
            let g = self.layer_group(l);
            init_lstm(
                store,
                &format!("lstm.{l}.fwd"),
                g,
                self.layer_input(l),
                self.hidden_dim,
                s,
            )?;
            if self.bidirectional {
                init_lstm(
                    store,
                    &format!("lstm.{l}.bwd"),
                    g,
                    self.layer_input(l),
                    self.hidden_dim,
                    s + 50,
                )?;
            }
        }
        Ok(())
    }

    /// Embeds `ids` and runs the LSTM stack, with dropout after the embedding
    /// and between layers. Returns the top layer's state at every position.
    pub fn forward<R: Rng>(
        &self,
        tape: &mut Tape,
        ids: &[u32],
        dropout: f64,
        train: bool,
        rng: &mut R,
    ) -> Result<Vec<Var>> {
        if ids.is_empty() {
            return Err(Error::contract("encoder input is empty"));
        }
        let emb = tape.param_by_name("embedding")?;
        let mut xs = Vec::with_capacity(ids.len());
        for &id in ids {
            let x = tape.gather_row(emb, id as usize)?;
            xs.push(tape.dropout(x, dropout, train, rng)?);
        }
        for l in 0..self.n_layers {
            let fwd = LstmVars::load(tape, &format!("lstm.{l}.fwd"))?;
            let bwd = if self.bidirectional {
                Some(LstmVars::load(tape, &format!("lstm.{l}.bwd"))?)
            } else {
                None
            };
            xs = lstm_forward(tape, &xs, &fwd, bwd.as_ref())?;
            if l + 1 < self.n_layers {
                xs = xs
                    .into_iter()
                    .map(|x| tape.dropout(x, dropout, train, rng))
                    .collect::<Result<_>>()?;
            }
        }
        Ok(xs)
    }
}
