//! Central finite differences for verifying analytic gradients.

use super::tensor::Tensor;

/// Relative error between an analytic and a numeric derivative:
/// |a − n| / max(|a|, |n|, 1e-8).
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Numeric gradient of `loss` with respect to `value` by central
/// differences; `loss` must be a pure, deterministic function of the tensor
/// contents (dropout disabled).
pub fn finite_diff_grad(loss: &mut dyn FnMut(&Tensor) -> f64, value: &Tensor, eps: f64) -> Tensor {
    let mut work = value.clone();
    let mut grad = Tensor::zeros(value.shape());
    for c in 0..value.len() {
        let orig = work.data()[c];
        work.data_mut()[c] = orig + eps;
        let f_plus = loss(&work);
        work.data_mut()[c] = orig - eps;
        let f_minus = loss(&work);
        work.data_mut()[c] = orig;
        grad.data_mut()[c] = (f_plus - f_minus) / (2.0 * eps);
    }
    grad
}

/// Maximum per-coordinate relative error between two gradients.
pub fn max_rel_err(analytic: &Tensor, numeric: &Tensor) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}
