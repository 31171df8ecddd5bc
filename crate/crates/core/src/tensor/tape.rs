use rand::Rng;

use super::{check_shape, matmul_raw, Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
enum Broadcast {
    None,
    Lhs,
    Rhs,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var, usize, usize, usize),
    Add(Var, Var, Broadcast),
    Sub(Var, Var, Broadcast),
    Mul(Var, Var, Broadcast),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Dropout(Var, Vec<f64>),
    Softmax(Var, usize),
    MaskedSoftmax(Var),
    CrossEntropy(Var, usize),
    Sum(Var),
    AddN(Vec<Var>),
    Slice(Var, usize),
    Concat(Vec<Var>),
    Reshape(Var),
    Transpose(Var, usize, usize),
    GatherRow(Var, usize),
}

#[derive(Debug)]
enum Data {
    Param(ParamId),
    Owned(Vec<f64>),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    data: Data,
    op: Op,
    needs_grad: bool,
}

/// Records forward operations against a parameter table and replays them in
/// reverse to produce parameter gradients.
///
/// Parameter leaves borrow their values from the store; every other node owns
/// its output buffer. Nodes that cannot reach a trainable parameter are never
/// visited during the backward sweep.
pub struct Tape<'a> {
    store: &'a ParamStore,
    nodes: Vec<Node>,
}

impl<'a> Tape<'a> {
    pub fn new(store: &'a ParamStore) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'a ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match &self.nodes[v.0].data {
            Data::Param(id) => self.store.tensor(*id).values(),
            Data::Owned(x) => x,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    fn numel(&self, v: Var) -> usize {
        self.value(v).len()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            shape,
            data: Data::Owned(data),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a parameter leaf. Gradients reach the parameter only when it
    /// currently requires them.
    pub fn param(&mut self, id: ParamId) -> Var {
        let t = self.store.tensor(id);
        self.nodes.push(Node {
            shape: t.shape().to_vec(),
            data: Data::Param(id),
            op: Op::Leaf,
            needs_grad: t.requires_grad(),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param_by_name(&mut self, name: &str) -> Result<Var> {
        let id = self.store.id(name)?;
        Ok(self.param(id))
    }

    /// Records a constant (non-differentiable) input.
    pub fn constant(&mut self, shape: &[usize], values: Vec<f64>) -> Result<Var> {
        let n = check_shape(shape)?;
        if n != values.len() {
            return Err(Error::shape(format!(
                "constant of shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(self.push(shape.to_vec(), values, Op::Leaf, &[]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape(format!("matmul {sa:?} x {sb:?}")));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = matmul_raw(self.value(a), self.value(b), m, k, n);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b, m, k, n), &[a, b]))
    }

    /// Matrix-vector product `[m,k] x [k] -> [m]`.
    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (sa, sx) = (self.shape(a).to_vec(), self.shape(x).to_vec());
        if sa.len() != 2 || sx.len() != 1 || sa[1] != sx[0] {
            return Err(Error::shape(format!("matvec {sa:?} x {sx:?}")));
        }
        let col = self.reshape(x, &[sx[0], 1])?;
        let prod = self.matmul(a, col)?;
        self.reshape(prod, &[sa[0]])
    }

    fn broadcast_kind(&self, a: Var, b: Var, what: &str) -> Result<Broadcast> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa == sb {
            Ok(Broadcast::None)
        } else if self.numel(a) == 1 {
            Ok(Broadcast::Lhs)
        } else if self.numel(b) == 1 {
            Ok(Broadcast::Rhs)
        } else {
            Err(Error::shape(format!("{what} {sa:?} vs {sb:?}")))
        }
    }

    fn binary(&mut self, a: Var, b: Var, what: &str, f: fn(f64, f64) -> f64) -> Result<(Var, Broadcast)> {
        let kind = self.broadcast_kind(a, b, what)?;
        let (va, vb) = (self.value(a), self.value(b));
        let (shape, out) = match kind {
            Broadcast::None => (
                self.shape(a).to_vec(),
                va.iter().zip(vb).map(|(x, y)| f(*x, *y)).collect(),
            ),
            Broadcast::Lhs => (self.shape(b).to_vec(), vb.iter().map(|y| f(va[0], *y)).collect()),
            Broadcast::Rhs => (self.shape(a).to_vec(), va.iter().map(|x| f(*x, vb[0])).collect()),
        };
        let op = match what {
            "add" => Op::Add(a, b, kind),
            "sub" => Op::Sub(a, b, kind),
            _ => Op::Mul(a, b, kind),
        };
        Ok((self.push(shape, out, op, &[a, b]), kind))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", |x, y| x + y).map(|r| r.0)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", |x, y| x - y).map(|r| r.0)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", |x, y| x * y).map(|r| r.0)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).iter().map(|x| x * c).collect();
        self.push(self.shape(a).to_vec(), out, Op::Scale(a, c), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(self.shape(a).to_vec(), out, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(self.shape(a).to_vec(), out, Op::Sigmoid(a), &[a])
    }

    /// Inverted dropout. Identity when `train` is false or `p == 0`.
    pub fn dropout<R: Rng>(&mut self, a: Var, p: f64, train: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Param(format!("dropout probability {p} outside [0, 1)")));
        }
        if !train || p == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.numel(a))
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
            .collect();
        let out = self.value(a).iter().zip(&mask).map(|(x, m)| x * m).collect();
        Ok(self.push(self.shape(a).to_vec(), out, Op::Dropout(a, mask), &[a]))
    }

    /// Softmax along the last axis, with max subtraction.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let c = *shape.last().unwrap();
        let mut out = self.value(a).to_vec();
        for row in out.chunks_mut(c) {
            softmax_in_place(row);
        }
        Ok(self.push(shape, out, Op::Softmax(a, c), &[a]))
    }

    /// Softmax over a vector restricted to positions with `mask[t] > 0`;
    /// masked positions get exactly zero weight.
    pub fn masked_softmax(&mut self, a: Var, mask: &[f64]) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if shape.len() != 1 || shape[0] != mask.len() {
            return Err(Error::shape(format!(
                "masked softmax over {shape:?} with mask of length {}",
                mask.len()
            )));
        }
        if !mask.iter().any(|&m| m > 0.0) {
            return Err(Error::contract("masked softmax needs at least one unmasked position"));
        }
        let x = self.value(a);
        let max = x
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m > 0.0)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out: Vec<f64> = x
            .iter()
            .zip(mask)
            .map(|(v, &m)| if m > 0.0 { (v - max).exp() } else { 0.0 })
            .collect();
        let z: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= z);
        Ok(self.push(shape, out, Op::MaskedSoftmax(a), &[a]))
    }

    /// `-ln(max(probs[target], 1e-12))` for a probability vector.
    pub fn cross_entropy(&mut self, probs: Var, target: usize) -> Result<Var> {
        let shape = self.shape(probs);
        if shape.len() != 1 {
            return Err(Error::shape(format!("cross entropy expects a vector, got {shape:?}")));
        }
        let c = shape[0];
        if target >= c {
            return Err(Error::Index { index: target, len: c });
        }
        let p = self.value(probs)[target].max(LOG_FLOOR);
        Ok(self.push(vec![1], vec![-p.ln()], Op::CrossEntropy(probs, target), &[probs]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(vec![1], vec![s], Op::Sum(a), &[a])
    }

    /// Sum of equally shaped values.
    pub fn add_n(&mut self, xs: &[Var]) -> Result<Var> {
        let first = *xs.first().ok_or_else(|| Error::contract("add_n of nothing"))?;
        let shape = self.shape(first).to_vec();
        let mut out = vec![0.0; self.numel(first)];
        for &x in xs {
            if self.shape(x) != shape.as_slice() {
                return Err(Error::shape(format!("add_n {shape:?} vs {:?}", self.shape(x))));
            }
            out.iter_mut().zip(self.value(x)).for_each(|(o, v)| *o += v);
        }
        Ok(self.push(shape, out, Op::AddN(xs.to_vec()), xs))
    }

    pub fn mean(&mut self, xs: &[Var]) -> Result<Var> {
        let s = self.add_n(xs)?;
        Ok(self.scale(s, 1.0 / xs.len() as f64))
    }

    /// Contiguous sub-vector `a[start..start+len]`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let shape = self.shape(a);
        if shape.len() != 1 || len == 0 || start + len > shape[0] {
            return Err(Error::shape(format!("slice {start}..{} of {shape:?}", start + len)));
        }
        let out = self.value(a)[start..start + len].to_vec();
        Ok(self.push(vec![len], out, Op::Slice(a, start), &[a]))
    }

    pub fn concat(&mut self, xs: &[Var]) -> Result<Var> {
        if xs.is_empty() {
            return Err(Error::contract("concat of nothing"));
        }
        let mut out = Vec::new();
        for &x in xs {
            if self.shape(x).len() != 1 {
                return Err(Error::shape(format!("concat expects vectors, got {:?}", self.shape(x))));
            }
            out.extend_from_slice(self.value(x));
        }
        let n = out.len();
        Ok(self.push(vec![n], out, Op::Concat(xs.to_vec()), xs))
    }

    /// Stacks equally sized vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let first = *rows.first().ok_or_else(|| Error::contract("stack of nothing"))?;
        let width = self.numel(first);
        if rows.iter().any(|&r| self.shape(r) != [width]) {
            return Err(Error::shape("stack expects vectors of equal length"));
        }
        let flat = self.concat(rows)?;
        self.reshape(flat, &[rows.len(), width])
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let n = check_shape(shape)?;
        if n != self.numel(a) {
            return Err(Error::shape(format!("reshape {:?} -> {shape:?}", self.shape(a))));
        }
        let out = self.value(a).to_vec();
        Ok(self.push(shape.to_vec(), out, Op::Reshape(a), &[a]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(Error::shape(format!("transpose expects a matrix, got {s:?}")));
        }
        let (m, n) = (s[0], s[1]);
        let v = self.value(a);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = v[i * n + j];
            }
        }
        Ok(self.push(vec![n, m], out, Op::Transpose(a, m, n), &[a]))
    }

    /// Row `row` of a matrix as a vector (embedding lookup).
    pub fn gather_row(&mut self, a: Var, row: usize) -> Result<Var> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(Error::shape(format!("gather_row expects a matrix, got {s:?}")));
        }
        if row >= s[0] {
            return Err(Error::Index { index: row, len: s[0] });
        }
        let w = s[1];
        let out = self.value(a)[row * w..(row + 1) * w].to_vec();
        Ok(self.push(vec![w], out, Op::GatherRow(a, row), &[a]))
    }

    /// Reverse sweep from a scalar `loss`. Consumes the tape and returns the
    /// gradient of every trainable parameter that the loss depends on.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        if self.numel(loss) != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::new(self.store.len());

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads);
            if let (Op::Leaf, Data::Param(id)) = (&node.op, &node.data) {
                out.add_slice(*id, &g);
            }
        }
        Ok(out)
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        let y = match &node.data {
            Data::Owned(v) => v.as_slice(),
            Data::Param(_) => &[],
        };
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            let n = self.numel(v);
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; n]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b, m, k, n) => {
                let (m, k, n) = (*m, *k, *n);
                let (va, vb) = (self.value(*a), self.value(*b));
                // dA = dC . B^T
                acc(*a, &mut |ga| {
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[i * n + j] * vb[p * n + j];
                            }
                            ga[i * k + p] += s;
                        }
                    }
                });
                // dB = A^T . dC
                acc(*b, &mut |gb| {
                    for i in 0..m {
                        for p in 0..k {
                            let av = va[i * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                gb[p * n + j] += av * g[i * n + j];
                            }
                        }
                    }
                });
            }
            Op::Add(a, b, kind) | Op::Sub(a, b, kind) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                let total: f64 = g.iter().sum();
                match kind {
                    Broadcast::Lhs => acc(*a, &mut |ga| ga[0] += total),
                    _ => acc(*a, &mut |ga| ga.iter_mut().zip(g).for_each(|(x, d)| *x += d)),
                }
                match kind {
                    Broadcast::Rhs => acc(*b, &mut |gb| gb[0] += sign * total),
                    _ => acc(*b, &mut |gb| gb.iter_mut().zip(g).for_each(|(x, d)| *x += sign * d)),
                }
            }
            Op::Mul(a, b, kind) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                match kind {
                    Broadcast::None => {
                        acc(*a, &mut |ga| {
                            for i in 0..g.len() {
                                ga[i] += g[i] * vb[i];
                            }
                        });
                        acc(*b, &mut |gb| {
                            for i in 0..g.len() {
                                gb[i] += g[i] * va[i];
                            }
                        });
                    }
                    Broadcast::Lhs => {
                        acc(*a, &mut |ga| ga[0] += g.iter().zip(vb).map(|(d, y)| d * y).sum::<f64>());
                        acc(*b, &mut |gb| gb.iter_mut().zip(g).for_each(|(x, d)| *x += d * va[0]));
                    }
                    Broadcast::Rhs => {
                        acc(*a, &mut |ga| ga.iter_mut().zip(g).for_each(|(x, d)| *x += d * vb[0]));
                        acc(*b, &mut |gb| gb[0] += g.iter().zip(va).map(|(d, x)| d * x).sum::<f64>());
                    }
                }
            }
            Op::Scale(a, c) => acc(*a, &mut |ga| ga.iter_mut().zip(g).for_each(|(x, d)| *x += c * d)),
            Op::Tanh(a) => acc(*a, &mut |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * (1.0 - y[i] * y[i]);
                }
            }),
            Op::Sigmoid(a) => acc(*a, &mut |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * y[i] * (1.0 - y[i]);
                }
            }),
            Op::Dropout(a, mask) => acc(*a, &mut |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * mask[i];
                }
            }),
            Op::Softmax(a, c) => acc(*a, &mut |ga| {
                for (row, (yr, gr)) in ga.chunks_mut(*c).zip(y.chunks(*c).zip(g.chunks(*c))) {
                    let dot: f64 = yr.iter().zip(gr).map(|(p, d)| p * d).sum();
                    for i in 0..*c {
                        row[i] += yr[i] * (gr[i] - dot);
                    }
                }
            }),
            Op::MaskedSoftmax(a) => acc(*a, &mut |ga| {
                // masked entries have y = 0 and therefore receive nothing
                let dot: f64 = y.iter().zip(g).map(|(p, d)| p * d).sum();
                for i in 0..g.len() {
                    ga[i] += y[i] * (g[i] - dot);
                }
            }),
            Op::CrossEntropy(p, target) => {
                let pt = self.value(*p)[*target];
                if pt >= LOG_FLOOR {
                    acc(*p, &mut |gp| gp[*target] -= g[0] / pt);
                }
            }
            Op::Sum(a) => acc(*a, &mut |ga| ga.iter_mut().for_each(|x| *x += g[0])),
            Op::AddN(xs) => {
                for &x in xs {
                    acc(x, &mut |gx| gx.iter_mut().zip(g).for_each(|(a, d)| *a += d));
                }
            }
            Op::Slice(a, start) => acc(*a, &mut |ga| {
                ga[*start..*start + g.len()]
                    .iter_mut()
                    .zip(g)
                    .for_each(|(a, d)| *a += d)
            }),
            Op::Concat(xs) => {
                let mut off = 0;
                for &x in xs {
                    let n = self.numel(x);
                    acc(x, &mut |gx| {
                        gx.iter_mut().zip(&g[off..off + n]).for_each(|(a, d)| *a += d)
                    });
                    off += n;
                }
            }
            Op::Reshape(a) => acc(*a, &mut |ga| ga.iter_mut().zip(g).for_each(|(x, d)| *x += d)),
            Op::Transpose(a, m, n) => acc(*a, &mut |ga| {
                for i in 0..*m {
                    for j in 0..*n {
                        ga[i * n + j] += g[j * m + i];
                    }
                }
            }),
            Op::GatherRow(a, row) => {
                let w = g.len();
                acc(*a, &mut |ga| {
                    ga[row * w..(row + 1) * w].iter_mut().zip(g).for_each(|(x, d)| *x += d)
                })
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        z += *v;
    }
    row.iter_mut().for_each(|v| *v /= z);
}

/// Worst-case disagreement between tape gradients and central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    /// Largest `|a - n| / max(|a|, |n|, 1e-8)`.
    pub max_relative: f64,
    /// Largest `|a - n|`.
    pub max_absolute: f64,
}

/// Compares tape gradients of `f` against central differences for every
/// element of every trainable parameter in `store`. Returns the worst
/// relative error, with denominator `max(|analytic|, |numeric|, 1e-8)`.
///
/// `f` must be deterministic (dropout off, fixed seeds).
pub fn finite_diff_check<F>(store: &mut ParamStore, eps: f64, f: F) -> Result<f64>
where
    F: for<'t> Fn(&mut Tape<'t>) -> Result<Var>,
{
    finite_diff_report(store, eps, f).map(|r| r.max_relative)
}

/// [`finite_diff_check`] with the absolute error reported as well.
pub fn finite_diff_report<F>(store: &mut ParamStore, eps: f64, f: F) -> Result<FdReport>
where
    F: for<'t> Fn(&mut Tape<'t>) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(store);
        let loss = f(&mut tape)?;
        tape.backward(loss)?
    };
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(store);
        let loss = f(&mut tape)?;
        Ok(tape.scalar(loss))
    };

    let ids: Vec<ParamId> = store
        .iter()
        .filter(|(_, p)| p.tensor.requires_grad())
        .map(|(id, _)| id)
        .collect();
    let mut report = FdReport {
        max_relative: 0.0,
        max_absolute: 0.0,
    };
    for id in ids {
        for i in 0..store.tensor(id).numel() {
            let orig = store.tensor(id).values()[i];
            store.tensor_mut(id).values_mut()[i] = orig + eps;
            let plus = eval(store)?;
            store.tensor_mut(id).values_mut()[i] = orig - eps;
            let minus = eval(store)?;
            store.tensor_mut(id).values_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.get(id).map_or(0.0, |g| g[i]);
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            let abs = (a - numeric).abs();
            report.max_absolute = report.max_absolute.max(abs);
            report.max_relative = report.max_relative.max(abs / denom);
        }
    }
    Ok(report)
}
