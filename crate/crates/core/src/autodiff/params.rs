use sha2::{Digest, Sha256};

use super::tensor::Tensor;
use crate::error::{ensure, Result};
use crate::scalar::Scalar;

/// Index of a parameter inside its owning [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn from_index(i: usize) -> Self {
        Self(i)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// Ordered collection of named trainable tensors.
#[derive(Debug, Clone, Default)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { names: Vec::new(), tensors: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter name {name}");
        self.names.push(name);
        self.tensors.push(tensor.into_param());
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn zero_grad(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    /// Overwrites values from `(name, shape, data)` blocks; every parameter must be supplied.
    pub fn load_values<'b>(&mut self, blocks: impl IntoIterator<Item = (&'b str, &'b [usize], &'b [T])>) -> Result<()> {
        let mut seen = vec![false; self.tensors.len()];
        for (name, shape, data) in blocks {
            let Some(i) = self.names.iter().position(|n| n == name) else {
                return Err(crate::Error::Checkpoint(format!("unknown parameter block {name}")));
            };
            ensure!(
                self.tensors[i].shape() == shape,
                Checkpoint,
                "shape mismatch for {name}: expected {:?}, found {:?}",
                self.tensors[i].shape(),
                shape
            );
            self.tensors[i].data_mut().copy_from_slice(data);
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(crate::Error::Checkpoint(format!("missing parameter block {}", self.names[i])));
        }
        Ok(())
    }

    /// SHA-256 over names, shapes and exact values.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (name, t) in self.iter() {
            h.update(name.as_bytes());
            for &d in t.shape() {
                h.update((d as u64).to_le_bytes());
            }
            for v in t.data() {
                h.update(v.to_f64().unwrap_or(f64::NAN).to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }

    /// Same parameters in another scalar type (grads reset).
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| t.cast::<U>().into_param()).collect(),
        }
    }
}
