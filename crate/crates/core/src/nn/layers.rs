//! Linear projection, inverted dropout and the L2 penalty.

use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, ParamKind, Parameter, Tensor};
use super::NnError;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub w: Parameter, // out × in
    pub b: Parameter, // out
}

impl LinearParams {
    pub fn new(name: &str, d_in: usize, d_out: usize, rng: &mut ChaCha8Rng) -> Self {
        LinearParams {
            w: Parameter::weight(
                format!("{name}.w"),
                Tensor::uniform_init(&[d_out, d_in], rng),
            ),
            b: Parameter::other(format!("{name}.b"), Tensor::zeros(&[d_out])),
        }
    }
}

/// y = W x + b.
pub fn linear(x: &[f64], p: &LinearParams) -> Result<Vec<f64>, NnError> {
    if x.len() != p.w.value.shape()[1] {
        return Err(NnError::ShapeMismatch(format!(
            "linear input {} vs weight cols {}",
            x.len(),
            p.w.value.shape()[1]
        )));
    }
    let mut y = p.b.value.data().to_vec();
    matvec_acc(&p.w.value, x, &mut y);
    Ok(y)
}

/// Accumulate parameter gradients for `dy` and add the input gradient to `dx`.
pub fn linear_backward(x: &[f64], dy: &[f64], p: &mut LinearParams, dx: &mut [f64]) {
    outer_acc(&mut p.w.grad, dy, x);
    for (g, d) in p.b.grad.data_mut().iter_mut().zip(dy) {
        *g += d;
    }
    matvec_t_acc(&p.w.value, dy, dx);
}

/// Inverted dropout: kept activations are scaled by 1/(1-rate) so the
/// expected output equals the input; identity at eval time.
pub fn dropout(x: &[f64], rate: f64, rng: &mut ChaCha8Rng, train: bool) -> (Vec<f64>, Vec<f64>) {
    debug_assert!((0.0..1.0).contains(&rate));
    if !train || rate == 0.0 {
        return (x.to_vec(), vec![1.0; x.len()]);
    }
    let keep = 1.0 - rate;
    let mask: Vec<f64> = (0..x.len())
        .map(|_| {
            if rng.gen::<f64>() < rate {
                0.0
            } else {
                1.0 / keep
            }
        })
        .collect();
    let y = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
    (y, mask)
}

pub fn dropout_backward(dy: &[f64], mask: &[f64]) -> Vec<f64> {
    dy.iter().zip(mask).map(|(d, m)| d * m).collect()
}

/// λ · Σ‖W‖² over weight-matrix parameters only (biases, embeddings and
/// transition scores are excluded).
pub fn l2_penalty(params: &[&Parameter], lambda: f64) -> f64 {
    lambda
        * params
            .iter()
            .filter(|p| p.kind == ParamKind::Weight)
            .map(|p| p.value.sq_norm())
            .sum::<f64>()
}

/// Add the L2 gradient 2λW to every weight parameter's gradient.
pub fn l2_grad_accumulate(params: &mut [&mut Parameter], lambda: f64) {
    for p in params.iter_mut().filter(|p| p.kind == ParamKind::Weight) {
        let (value, grad) = (&p.value, &mut p.grad);
        for (g, w) in grad.data_mut().iter_mut().zip(value.data()) {
            *g += 2.0 * lambda * w;
        }
    }
}

/// Create a deterministic RNG for a given purpose from a base seed; keeps
/// independent random streams reproducible.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
