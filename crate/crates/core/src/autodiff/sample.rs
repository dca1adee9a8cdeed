use crate::error::{ensure, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Numerically stable `log softmax(logits)` in `f64`.
pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<f64> {
    let l: Vec<f64> = logits.iter().map(|v| v.to_f64().unwrap()).collect();
    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + l.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    l.iter().map(|v| v - lse).collect()
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Draws an index from `softmax(logits)`; returns it with its log-probability.
pub fn categorical_sample<T: Scalar>(logits: &[T], rng: &mut RngStream) -> Result<(usize, f64)> {
    ensure!(!logits.is_empty(), Contract, "categorical over zero categories");
    ensure!(logits.iter().all(|v| v.is_finite()), Contract, "non-finite logits {:?}", logits);
    let logp = log_softmax(logits);
    let u = rng.uniform();
    let mut cum = 0.0;
    let mut pick = logp.len() - 1;
    for (i, lp) in logp.iter().enumerate() {
        cum += lp.exp();
        if u < cum {
            pick = i;
            break;
        }
    }
    Ok((pick, logp[pick]))
}

/// Index of the largest logit (first on ties).
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
