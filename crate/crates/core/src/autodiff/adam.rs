use super::params::ParamStore;
use crate::error::{ensure, Result};
use crate::scalar::Scalar;

/// Adam moments for one [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamStore<T>) -> Self {
        let zeros = || params.iter().map(|(_, p)| vec![T::zero(); p.numel()]).collect::<Vec<_>>();
        Self { m: zeros(), v: zeros(), t: 0, beta1: T::lit(0.9), beta2: T::lit(0.999), eps: T::lit(1e-8) }
    }

    /// One bias-corrected Adam update. Gradients are read, not cleared.
    pub fn step(&mut self, params: &mut ParamStore<T>, lr: T) -> Result<()> {
        ensure!(self.m.len() == params.len(), Contract, "optimizer built for {} params, store has {}", self.m.len(), params.len());
        for p in params.tensors_mut().iter() {
            ensure!(p.grad().is_some(), Contract, "parameter has no grad buffer");
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        for (i, p) in params.tensors_mut().iter_mut().enumerate() {
            let (data, grad) = p.data_and_grad_mut();
            let grad = grad.expect("checked above");
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            ensure!(m.len() == data.len(), Dimension, "moment buffer shape mismatch");
            for j in 0..data.len() {
                let g = grad[j];
                m[j] = self.beta1 * m[j] + (T::one() - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (T::one() - self.beta2) * g * g;
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                data[j] -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
