//! Row-major f64 tensors and named trainable parameters.

#![allow(clippy::needless_range_loop)] // indexed DP/linear-algebra kernels

use super::NnError;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NnError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NnError::ShapeMismatch(format!(
                "shape {:?} wants {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Uniform init in (-bound, bound) with bound = sqrt(3 / fan_in), where
    /// fan_in is the product of all dimensions after the first.
    pub fn uniform_init(shape: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let fan_in: usize = shape.iter().skip(1).product::<usize>().max(1);
        let bound = (3.0 / fan_in as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// 2-D element access.
    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[i * self.shape[1] + j]
    }

    /// Row slice of a 2-D tensor.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let w = self.shape[1];
        &self.data[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let w = self.shape[1];
        &mut self.data[i * w..(i + 1) * w]
    }

    /// 3-D element access.
    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 3);
        self.data[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    #[inline]
    pub fn idx3(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Squared Frobenius norm.
    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Whether a parameter participates in the L2 penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    /// Weight matrix: included in the L2 penalty.
    Weight,
    /// Bias, embedding table or transition score: excluded from L2.
    Other,
}

/// A trainable tensor paired with its gradient accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub kind: ParamKind,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor, kind: ParamKind) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
            kind,
        }
    }

    pub fn weight(name: impl Into<String>, value: Tensor) -> Self {
        Self::new(name, value, ParamKind::Weight)
    }

    pub fn other(name: impl Into<String>, value: Tensor) -> Self {
        Self::new(name, value, ParamKind::Other)
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// y += M x for a 2-D tensor M (rows × cols).
pub(crate) fn matvec_acc(m: &Tensor, x: &[f64], y: &mut [f64]) {
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(y.len(), rows);
    for i in 0..rows {
        let row = m.row(i);
        let mut acc = 0.0;
        for j in 0..cols {
            acc += row[j] * x[j];
        }
        y[i] += acc;
    }
}

/// y += Mᵀ x (x has `rows` entries, y has `cols`).
pub(crate) fn matvec_t_acc(m: &Tensor, x: &[f64], y: &mut [f64]) {
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    debug_assert_eq!(x.len(), rows);
    debug_assert_eq!(y.len(), cols);
    for i in 0..rows {
        let row = m.row(i);
        let xi = x[i];
        for j in 0..cols {
            y[j] += row[j] * xi;
        }
    }
}

/// G += a ⊗ b (outer product into a rows × cols gradient).
pub(crate) fn outer_acc(g: &mut Tensor, a: &[f64], b: &[f64]) {
    let (rows, cols) = (g.shape()[0], g.shape()[1]);
    debug_assert_eq!(a.len(), rows);
    debug_assert_eq!(b.len(), cols);
    for i in 0..rows {
        let ai = a[i];
        let row = g.row_mut(i);
        for j in 0..cols {
            row[j] += ai * b[j];
        }
    }
}
