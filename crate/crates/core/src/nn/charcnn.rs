//! Width-3 convolution over character embeddings with max-pooling.

#![allow(clippy::needless_range_loop)] // indexed DP/linear-algebra kernels

use super::tensor::{Parameter, Tensor};
use super::NnError;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharCnnParams {
    /// Filters with shape [d_f, 3, d_c].
    pub filters: Parameter,
    pub bias: Parameter, // d_f
}

impl CharCnnParams {
    pub fn new(name: &str, d_c: usize, d_f: usize, rng: &mut ChaCha8Rng) -> Self {
        CharCnnParams {
            filters: Parameter::weight(
                format!("{name}.filters"),
                Tensor::uniform_init(&[d_f, 3, d_c], rng),
            ),
            bias: Parameter::other(format!("{name}.bias"), Tensor::zeros(&[d_f])),
        }
    }

    pub fn num_filters(&self) -> usize {
        self.filters.value.shape()[0]
    }

    pub fn char_dim(&self) -> usize {
        self.filters.value.shape()[2]
    }
}

#[derive(Debug, Clone)]
pub struct CharCnnCache {
    emb: Vec<Vec<f64>>,
    /// Winning convolution position per filter; ties take the first index.
    argmax: Vec<usize>,
}

/// Convolve the L×d_c character matrix with every width-3 filter and
/// max-pool over positions. L must be at least 3 (callers pad with the
/// reserved pad character).
pub fn char_cnn(emb: &[Vec<f64>], p: &CharCnnParams) -> Result<(Vec<f64>, CharCnnCache), NnError> {
    let l = emb.len();
    let d_c = p.char_dim();
    let d_f = p.num_filters();
    if l < 3 {
        return Err(NnError::ShapeMismatch(format!(
            "char_cnn needs length >= 3, got {l}"
        )));
    }
    if emb.iter().any(|row| row.len() != d_c) {
        return Err(NnError::ShapeMismatch("char embedding width".into()));
    }

    let mut out = vec![0.0; d_f];
    let mut argmax = vec![0usize; d_f];
    for f in 0..d_f {
        let mut best = f64::NEG_INFINITY;
        let mut best_p = 0;
        for pos in 0..=(l - 3) {
            let mut acc = p.bias.value.data()[f];
            for o in 0..3 {
                let row = &emb[pos + o];
                for c in 0..d_c {
                    acc += p.filters.value.at3(f, o, c) * row[c];
                }
            }
            if acc > best {
                best = acc;
                best_p = pos;
            }
        }
        out[f] = best;
        argmax[f] = best_p;
    }

    Ok((
        out,
        CharCnnCache {
            emb: emb.to_vec(),
            argmax,
        },
    ))
}

/// Backward through conv + max-pool: the gradient flows only through each
/// filter's winning position. Adds into `d_emb` (same shape as the input).
pub fn char_cnn_backward(
    dy: &[f64],
    cache: &CharCnnCache,
    p: &mut CharCnnParams,
    d_emb: &mut [Vec<f64>],
) {
    let d_c = p.char_dim();
    let d_f = p.num_filters();
    for f in 0..d_f {
        let g = dy[f];
        if g == 0.0 {
            continue;
        }
        let pos = cache.argmax[f];
        p.bias.grad.data_mut()[f] += g;
        for o in 0..3 {
            let row = &cache.emb[pos + o];
            for c in 0..d_c {
                let idx = p.filters.value.idx3(f, o, c);
                p.filters.grad.data_mut()[idx] += g * row[c];
                d_emb[pos + o][c] += g * p.filters.value.at3(f, o, c);
            }
        }
    }
}
