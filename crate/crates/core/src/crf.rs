//! Linear-chain CRF over the IOB label set: sequence scoring, log-partition
//! via the forward algorithm, negative log-likelihood with exact gradients,
//! Viterbi decoding, and a brute-force enumeration oracle for tests.
//!
//! Structurally invalid IOB transitions are masked with a large negative
//! constant rather than -inf, which keeps log-sum-exp free of NaN while
//! bounding the leak at e^(-1e4).

#![allow(clippy::needless_range_loop)] // indexed DP/linear-algebra kernels

use crate::annotation::{valid_iob_start, valid_iob_transition, Tag};
use crate::nn::{Parameter, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Score assigned to structurally masked transitions.
pub const MASKED_SCORE: f64 = -1e4;

#[derive(Debug, Error, PartialEq)]
pub enum CrfError {
    #[error("tag sequence length {tags} does not match emission length {emissions}")]
    LengthMismatch { tags: usize, emissions: usize },
    #[error("empty emission sequence")]
    EmptyInput,
    #[error("instance too large for brute force: K^T = {0} exceeds 1e6")]
    InstanceTooLarge(f64),
}

/// Transition parameters: K×K pairwise scores plus start/stop scores, with a
/// trainability mask (false = structurally fixed at [`MASKED_SCORE`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transitions {
    pub k: usize,
    pub start: Parameter,
    pub trans: Parameter, // K×K, row = from, col = to
    pub stop: Parameter,
    start_mask: Vec<bool>,
    trans_mask: Vec<bool>,
}

impl Transitions {
    /// All-zero, fully trainable transitions (no structural mask).
    pub fn zeros(k: usize) -> Self {
        Transitions {
            k,
            start: Parameter::other("crf.start", Tensor::zeros(&[k])),
            trans: Parameter::other("crf.trans", Tensor::zeros(&[k, k])),
            stop: Parameter::other("crf.stop", Tensor::zeros(&[k])),
            start_mask: vec![true; k],
            trans_mask: vec![true; k * k],
        }
    }

    /// Zero transitions with the IOB structural mask for `num_types` entity
    /// types applied: sequences can never start at I-t or move into I-t from
    /// anything but B-t/I-t of the same type.
    pub fn iob_masked(num_types: usize) -> Self {
        let k = 2 * num_types + 1;
        let mut tr = Self::zeros(k);
        for to in 0..k {
            let to_tag = Tag::from_label_index(to);
            if !valid_iob_start(to_tag) {
                tr.start_mask[to] = false;
                tr.start.value.data_mut()[to] = MASKED_SCORE;
            }
            for from in 0..k {
                let from_tag = Tag::from_label_index(from);
                if !valid_iob_transition(from_tag, to_tag) {
                    tr.trans_mask[from * k + to] = false;
                    tr.trans.value.data_mut()[from * k + to] = MASKED_SCORE;
                }
            }
        }
        tr
    }

    #[inline]
    pub fn t(&self, from: usize, to: usize) -> f64 {
        self.trans.value.data()[from * self.k + to]
    }

    /// Zero the gradients of masked entries so optimization never moves them.
    pub fn clamp_masked_grads(&mut self) {
        for (g, &m) in self.start.grad.data_mut().iter_mut().zip(&self.start_mask) {
            if !m {
                *g = 0.0;
            }
        }
        for (g, &m) in self.trans.grad.data_mut().iter_mut().zip(&self.trans_mask) {
            if !m {
                *g = 0.0;
            }
        }
    }

    pub fn params(&self) -> Vec<&Parameter> {
        vec![&self.start, &self.trans, &self.stop]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.start, &mut self.trans, &mut self.stop]
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_lengths(emissions: &[Vec<f64>], tags: &[usize]) -> Result<(), CrfError> {
    if emissions.is_empty() {
        return Err(CrfError::EmptyInput);
    }
    if emissions.len() != tags.len() {
        return Err(CrfError::LengthMismatch {
            tags: tags.len(),
            emissions: emissions.len(),
        });
    }
    Ok(())
}

/// Score of one tag sequence:
/// start[y₁] + Σ E[t][yₜ] + Σ T[yₜ₋₁][yₜ] + stop[y_T].
pub fn score_sequence(
    emissions: &[Vec<f64>],
    tr: &Transitions,
    tags: &[usize],
) -> Result<f64, CrfError> {
    check_lengths(emissions, tags)?;
    let mut score = tr.start.value.data()[tags[0]] + emissions[0][tags[0]];
    for t in 1..tags.len() {
        score += tr.t(tags[t - 1], tags[t]) + emissions[t][tags[t]];
    }
    score += tr.stop.value.data()[tags[tags.len() - 1]];
    Ok(score)
}

/// Log of the partition function, computed by the forward algorithm in log
/// space.
pub fn log_partition(emissions: &[Vec<f64>], tr: &Transitions) -> Result<f64, CrfError> {
    if emissions.is_empty() {
        return Err(CrfError::EmptyInput);
    }
    let k = tr.k;
    let mut alpha: Vec<f64> = (0..k)
        .map(|j| tr.start.value.data()[j] + emissions[0][j])
        .collect();
    let mut scratch = vec![0.0; k];
    for e in emissions.iter().skip(1) {
        let mut next = vec![0.0; k];
        for (j, nj) in next.iter_mut().enumerate() {
            for i in 0..k {
                scratch[i] = alpha[i] + tr.t(i, j);
            }
            *nj = log_sum_exp(&scratch) + e[j];
        }
        alpha = next;
    }
    for (i, s) in scratch.iter_mut().enumerate() {
        *s = alpha[i] + tr.stop.value.data()[i];
    }
    Ok(log_sum_exp(&scratch))
}

/// Loss and emission gradient of the negative log-likelihood
/// `log Z − score(gold)`. Transition gradients are accumulated into `tr`
/// (masked entries zeroed).
pub struct NllResult {
    pub loss: f64,
    pub d_emissions: Vec<Vec<f64>>,
}

pub fn crf_nll(
    emissions: &[Vec<f64>],
    tr: &mut Transitions,
    gold: &[usize],
) -> Result<NllResult, CrfError> {
    check_lengths(emissions, gold)?;
    let k = tr.k;
    let n = emissions.len();

    // Forward pass (log alpha).
    let mut alphas = Vec::with_capacity(n);
    let mut alpha: Vec<f64> = (0..k)
        .map(|j| tr.start.value.data()[j] + emissions[0][j])
        .collect();
    alphas.push(alpha.clone());
    let mut scratch = vec![0.0; k];
    for e in emissions.iter().skip(1) {
        let mut next = vec![0.0; k];
        for (j, nj) in next.iter_mut().enumerate() {
            for i in 0..k {
                scratch[i] = alpha[i] + tr.t(i, j);
            }
            *nj = log_sum_exp(&scratch) + e[j];
        }
        alpha = next;
        alphas.push(alpha.clone());
    }
    for (i, s) in scratch.iter_mut().enumerate() {
        *s = alpha[i] + tr.stop.value.data()[i];
    }
    let log_z = log_sum_exp(&scratch);

    // Backward pass (log beta).
    let mut betas = vec![vec![0.0; k]; n];
    betas[n - 1] = tr.stop.value.data().to_vec();
    for t in (0..n - 1).rev() {
        let (head, tail) = betas.split_at_mut(t + 1);
        let beta_next = &tail[0];
        for (i, bi) in head[t].iter_mut().enumerate() {
            for j in 0..k {
                scratch[j] = tr.t(i, j) + emissions[t + 1][j] + beta_next[j];
            }
            *bi = log_sum_exp(&scratch);
        }
    }

    // Gradients: marginals minus gold indicators.
    let mut d_emissions = vec![vec![0.0; k]; n];
    for t in 0..n {
        for j in 0..k {
            d_emissions[t][j] = (alphas[t][j] + betas[t][j] - log_z).exp();
        }
        d_emissions[t][gold[t]] -= 1.0;
    }

    {
        let dstart = tr.start.grad.data_mut();
        for j in 0..k {
            dstart[j] += (tr.start.value.data()[j] + emissions[0][j] + betas[0][j] - log_z).exp();
        }
        dstart[gold[0]] -= 1.0;
    }
    {
        let dstop = tr.stop.grad.data_mut();
        for i in 0..k {
            dstop[i] += (alphas[n - 1][i] + tr.stop.value.data()[i] - log_z).exp();
        }
        dstop[gold[n - 1]] -= 1.0;
    }
    for t in 1..n {
        for i in 0..k {
            for j in 0..k {
                let p =
                    (alphas[t - 1][i] + tr.t(i, j) + emissions[t][j] + betas[t][j] - log_z).exp();
                tr.trans.grad.data_mut()[i * k + j] += p;
            }
        }
        tr.trans.grad.data_mut()[gold[t - 1] * k + gold[t]] -= 1.0;
    }
    tr.clamp_masked_grads();

    let gold_score = score_sequence(emissions, tr, gold)?;
    Ok(NllResult {
        loss: log_z - gold_score,
        d_emissions,
    })
}

/// Maximum-score sequence and its score. Ties break toward the smallest
/// label index at every backpointer.
pub fn viterbi_decode(
    emissions: &[Vec<f64>],
    tr: &Transitions,
) -> Result<(Vec<usize>, f64), CrfError> {
    if emissions.is_empty() {
        return Err(CrfError::EmptyInput);
    }
    let k = tr.k;
    let n = emissions.len();
    let mut delta: Vec<f64> = (0..k)
        .map(|j| tr.start.value.data()[j] + emissions[0][j])
        .collect();
    let mut backptr = vec![vec![0usize; k]; n];
    for t in 1..n {
        let mut next = vec![f64::NEG_INFINITY; k];
        for j in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0;
            for i in 0..k {
                let s = delta[i] + tr.t(i, j);
                if s > best {
                    best = s;
                    best_i = i;
                }
            }
            next[j] = best + emissions[t][j];
            backptr[t][j] = best_i;
        }
        delta = next;
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_j = 0;
    for j in 0..k {
        let s = delta[j] + tr.stop.value.data()[j];
        if s > best {
            best = s;
            best_j = j;
        }
    }
    let mut tags = vec![0usize; n];
    tags[n - 1] = best_j;
    for t in (1..n).rev() {
        tags[t - 1] = backptr[t][tags[t]];
    }
    Ok((tags, best))
}

/// Exact enumeration over all K^T sequences; the test oracle.
#[derive(Debug)]
pub struct BruteForceResult {
    pub log_z: f64,
    pub best_tags: Vec<usize>,
    pub best_score: f64,
}

pub fn brute_force(emissions: &[Vec<f64>], tr: &Transitions) -> Result<BruteForceResult, CrfError> {
    if emissions.is_empty() {
        return Err(CrfError::EmptyInput);
    }
    let k = tr.k;
    let n = emissions.len();
    let total = (k as f64).powi(n as i32);
    if total > 1e6 {
        return Err(CrfError::InstanceTooLarge(total));
    }

    let mut scores = Vec::with_capacity(total as usize);
    let mut best_score = f64::NEG_INFINITY;
    let mut best_tags = vec![0usize; n];
    let mut tags = vec![0usize; n];
    loop {
        let s = score_sequence(emissions, tr, &tags)?;
        scores.push(s);
        if s > best_score {
            best_score = s;
            best_tags = tags.clone();
        }
        // Lexicographic increment (rightmost digit fastest).
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(BruteForceResult {
                    log_z: log_sum_exp(&scores),
                    best_tags,
                    best_score,
                });
            }
            pos -= 1;
            tags[pos] += 1;
            if tags[pos] < k {
                break;
            }
            tags[pos] = 0;
        }
    }
}
