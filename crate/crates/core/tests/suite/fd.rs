//! Central finite-difference oracle shared by gradient-check tests.
//!
//! Everything here works on plain `f64` buffers and re-evaluates the loss from
//! scratch, so it never touches the backward code it is checking.

pub const FD_STEP: f64 = 1e-3;
pub const REL_TOL: f64 = 1e-3;

/// Central differences of `loss` with respect to every entry of `x`.
pub fn numeric_grad(x: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    (0..x.len())
        .map(|i| {
            buf[i] = x[i] + FD_STEP;
            let up = loss(&buf);
            buf[i] = x[i] - FD_STEP;
            let down = loss(&buf);
            buf[i] = x[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Relative error with a floor so components that are both ~0 compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-2)
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(&a, &n)| rel_err(a, n)).fold(0.0, f64::max)
}
