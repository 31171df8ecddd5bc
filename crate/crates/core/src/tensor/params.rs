use std::collections::BTreeMap;

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named trainable tensor together with its layer group
/// (group 0 is the output head, higher groups sit closer to the input).
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub group: usize,
    pub tensor: Tensor,
}

/// Ordered table of named parameters. Insertion order is the manifest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<Param>,
    index: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, group: usize, mut tensor: Tensor) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::Param(format!("duplicate parameter `{name}`")));
        }
        tensor.set_requires_grad(true);
        let id = self.entries.len();
        self.entries.push(Param {
            name: name.to_string(),
            group,
            tensor,
        });
        self.index.insert(name.to_string(), id);
        Ok(ParamId(id))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index
            .get(name)
            .map(|&i| ParamId(i))
            .ok_or_else(|| Error::Param(format!("unknown parameter `{name}`")))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.entries[i].tensor)
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].tensor
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].tensor
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.entries[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.entries.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &mut Param)> {
        self.entries.iter_mut().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    /// Number of layer groups (max group index + 1).
    pub fn n_groups(&self) -> usize {
        self.entries.iter().map(|p| p.group + 1).max().unwrap_or(0)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.entries {
            p.tensor.zero_grad();
        }
    }

    /// Marks every parameter whose group is in `trainable` as requiring
    /// gradients and freezes the rest.
    pub fn set_trainable_groups(&mut self, trainable: impl Fn(usize) -> bool) {
        for p in &mut self.entries {
            p.tensor.set_requires_grad(trainable(p.group));
        }
    }

    /// Adds a batch of tape gradients into the per-tensor gradient slots.
    /// Frozen tensors are skipped.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (i, g) in grads.per_param.iter().enumerate() {
            if let Some(g) = g {
                let t = &mut self.entries[i].tensor;
                if t.requires_grad() {
                    t.accumulate_grad(g);
                }
            }
        }
    }
}

/// Gradients produced by one backward pass, indexed by [`ParamId`].
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub(crate) per_param: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn new(n_params: usize) -> Self {
        Gradients {
            per_param: vec![None; n_params],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.per_param.get(id.0).and_then(|g| g.as_deref())
    }

    pub(crate) fn add_slice(&mut self, id: ParamId, delta: &[f64]) {
        if self.per_param.len() <= id.0 {
            self.per_param.resize(id.0 + 1, None);
        }
        match &mut self.per_param[id.0] {
            Some(g) => g.iter_mut().zip(delta).for_each(|(a, d)| *a += d),
            slot @ None => *slot = Some(delta.to_vec()),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.per_param.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Element-wise sum; used to reduce per-example gradients in a fixed order.
    pub fn merge(&mut self, other: &Gradients) {
        for (i, g) in other.per_param.iter().enumerate() {
            if let Some(g) = g {
                self.add_slice(ParamId(i), g);
            }
        }
    }
}
