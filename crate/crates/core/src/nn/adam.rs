//! Adam optimizer with bias-corrected moments.

use super::tensor::{Parameter, Tensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first/second moments plus the shared step counter. Moment
/// tensors are aligned with the parameter list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn for_params(params: &[&Parameter]) -> Self {
        AdamState {
            m: params
                .iter()
                .map(|p| Tensor::zeros(p.value.shape()))
                .collect(),
            v: params
                .iter()
                .map(|p| Tensor::zeros(p.value.shape()))
                .collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One in-place update over all parameters from their accumulated gradients.
pub fn adam_step(params: &mut [&mut Parameter], state: &mut AdamState, cfg: &AdamConfig) {
    assert_eq!(params.len(), state.m.len(), "state/params mismatch");
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);
    for (i, p) in params.iter_mut().enumerate() {
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let g = p.grad.data();
        let w = p.value.data_mut();
        for j in 0..w.len() {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            w[j] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}
