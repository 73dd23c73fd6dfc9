//! GRU cell and bidirectional sequence encoder.
//!
//! Convention: z = σ(W_z x + U_z h + b_z), r = σ(W_r x + U_r h + b_r),
//! ĥ = tanh(W_h x + U_h (r ⊙ h) + b_h), h' = (1−z) ⊙ ĥ + z ⊙ h.

#![allow(clippy::needless_range_loop)] // indexed DP/linear-algebra kernels

use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Parameter, Tensor};
use super::NnError;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub w_z: Parameter,
    pub w_r: Parameter,
    pub w_h: Parameter,
    pub u_z: Parameter,
    pub u_r: Parameter,
    pub u_h: Parameter,
    pub b_z: Parameter,
    pub b_r: Parameter,
    pub b_h: Parameter,
}

impl GruParams {
    pub fn new(name: &str, d_in: usize, d_h: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = |n: &str, rng: &mut ChaCha8Rng| {
            Parameter::weight(
                format!("{name}.{n}"),
                Tensor::uniform_init(&[d_h, d_in], rng),
            )
        };
        let u = |n: &str, rng: &mut ChaCha8Rng| {
            Parameter::weight(
                format!("{name}.{n}"),
                Tensor::uniform_init(&[d_h, d_h], rng),
            )
        };
        let b = |n: &str| Parameter::other(format!("{name}.{n}"), Tensor::zeros(&[d_h]));
        GruParams {
            w_z: w("w_z", rng),
            w_r: w("w_r", rng),
            w_h: w("w_h", rng),
            u_z: u("u_z", rng),
            u_r: u("u_r", rng),
            u_h: u("u_h", rng),
            b_z: b("b_z"),
            b_r: b("b_r"),
            b_h: b("b_h"),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.value.shape()[1]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.value.shape()[0]
    }

    pub fn params(&self) -> Vec<&Parameter> {
        vec![
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r,
            &self.b_h,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediate activations needed by the backward pass.
#[derive(Debug, Clone)]
pub struct GruCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    hcand: Vec<f64>,
}

/// One GRU step. Returns the new hidden state and the cache for backward.
pub fn gru_cell(x: &[f64], h_prev: &[f64], p: &GruParams) -> Result<(Vec<f64>, GruCache), NnError> {
    let (d_in, d_h) = (p.input_dim(), p.hidden_dim());
    if x.len() != d_in || h_prev.len() != d_h {
        return Err(NnError::ShapeMismatch(format!(
            "gru_cell: x {} (want {}), h_prev {} (want {})",
            x.len(),
            d_in,
            h_prev.len(),
            d_h
        )));
    }

    let mut a_z = p.b_z.value.data().to_vec();
    matvec_acc(&p.w_z.value, x, &mut a_z);
    matvec_acc(&p.u_z.value, h_prev, &mut a_z);
    let z: Vec<f64> = a_z.iter().map(|&v| sigmoid(v)).collect();

    let mut a_r = p.b_r.value.data().to_vec();
    matvec_acc(&p.w_r.value, x, &mut a_r);
    matvec_acc(&p.u_r.value, h_prev, &mut a_r);
    let r: Vec<f64> = a_r.iter().map(|&v| sigmoid(v)).collect();

    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(ri, hi)| ri * hi).collect();
    let mut a_h = p.b_h.value.data().to_vec();
    matvec_acc(&p.w_h.value, x, &mut a_h);
    matvec_acc(&p.u_h.value, &rh, &mut a_h);
    let hcand: Vec<f64> = a_h.iter().map(|&v| v.tanh()).collect();

    let h: Vec<f64> = (0..d_h)
        .map(|i| (1.0 - z[i]) * hcand[i] + z[i] * h_prev[i])
        .collect();

    Ok((
        h,
        GruCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            z,
            r,
            hcand,
        },
    ))
}

/// Backward through one GRU step: accumulates parameter gradients and adds
/// the input/previous-state gradients into `dx` and `dh_prev`.
pub fn gru_cell_backward(
    dh: &[f64],
    cache: &GruCache,
    p: &mut GruParams,
    dx: &mut [f64],
    dh_prev: &mut [f64],
) {
    let d_h = cache.z.len();
    let GruCache {
        x,
        h_prev,
        z,
        r,
        hcand,
    } = cache;

    let dz: Vec<f64> = (0..d_h).map(|i| dh[i] * (h_prev[i] - hcand[i])).collect();
    let dhcand: Vec<f64> = (0..d_h).map(|i| dh[i] * (1.0 - z[i])).collect();
    for i in 0..d_h {
        dh_prev[i] += dh[i] * z[i];
    }

    // Candidate path.
    let da_h: Vec<f64> = (0..d_h)
        .map(|i| dhcand[i] * (1.0 - hcand[i] * hcand[i]))
        .collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(ri, hi)| ri * hi).collect();
    outer_acc(&mut p.w_h.grad, &da_h, x);
    outer_acc(&mut p.u_h.grad, &da_h, &rh);
    for (g, d) in p.b_h.grad.data_mut().iter_mut().zip(&da_h) {
        *g += d;
    }
    matvec_t_acc(&p.w_h.value, &da_h, dx);
    let mut drh = vec![0.0; d_h];
    matvec_t_acc(&p.u_h.value, &da_h, &mut drh);
    let dr: Vec<f64> = (0..d_h).map(|i| drh[i] * h_prev[i]).collect();
    for i in 0..d_h {
        dh_prev[i] += drh[i] * r[i];
    }

    // Update gate path.
    let da_z: Vec<f64> = (0..d_h).map(|i| dz[i] * z[i] * (1.0 - z[i])).collect();
    outer_acc(&mut p.w_z.grad, &da_z, x);
    outer_acc(&mut p.u_z.grad, &da_z, h_prev);
    for (g, d) in p.b_z.grad.data_mut().iter_mut().zip(&da_z) {
        *g += d;
    }
    matvec_t_acc(&p.w_z.value, &da_z, dx);
    matvec_t_acc(&p.u_z.value, &da_z, dh_prev);

    // Reset gate path.
    let da_r: Vec<f64> = (0..d_h).map(|i| dr[i] * r[i] * (1.0 - r[i])).collect();
    outer_acc(&mut p.w_r.grad, &da_r, x);
    outer_acc(&mut p.u_r.grad, &da_r, h_prev);
    for (g, d) in p.b_r.grad.data_mut().iter_mut().zip(&da_r) {
        *g += d;
    }
    matvec_t_acc(&p.w_r.value, &da_r, dx);
    matvec_t_acc(&p.u_r.value, &da_r, dh_prev);
}

#[derive(Debug, Clone)]
pub struct BiGruCache {
    fwd_caches: Vec<GruCache>,
    bwd_caches: Vec<GruCache>,
    d_h: usize,
}

/// Bidirectional encoding: position t gets concat(forward state after
/// reading x_1..x_t, backward state after reading x_T..x_t). Initial states
/// are zero.
pub fn bigru(
    xs: &[Vec<f64>],
    fwd: &GruParams,
    bwd: &GruParams,
) -> Result<(Vec<Vec<f64>>, BiGruCache), NnError> {
    if xs.is_empty() {
        return Err(NnError::EmptySequence);
    }
    let d_h = fwd.hidden_dim();
    let n = xs.len();

    let mut fwd_states = Vec::with_capacity(n);
    let mut fwd_caches = Vec::with_capacity(n);
    let mut h = vec![0.0; d_h];
    for x in xs {
        let (h_new, cache) = gru_cell(x, &h, fwd)?;
        fwd_states.push(h_new.clone());
        fwd_caches.push(cache);
        h = h_new;
    }

    let mut bwd_states = vec![Vec::new(); n];
    let mut bwd_caches = Vec::with_capacity(n);
    let mut h = vec![0.0; bwd.hidden_dim()];
    for t in (0..n).rev() {
        let (h_new, cache) = gru_cell(&xs[t], &h, bwd)?;
        bwd_states[t] = h_new.clone();
        bwd_caches.push(cache); // stored in reverse-time order
        h = h_new;
    }

    let outputs = (0..n)
        .map(|t| {
            let mut o = fwd_states[t].clone();
            o.extend_from_slice(&bwd_states[t]);
            o
        })
        .collect();

    Ok((
        outputs,
        BiGruCache {
            fwd_caches,
            bwd_caches,
            d_h,
        },
    ))
}

/// Backward through the bidirectional encoder. `d_out[t]` is the gradient of
/// the concatenated output at position t; returns per-position input
/// gradients.
pub fn bigru_backward(
    d_out: &[Vec<f64>],
    cache: &BiGruCache,
    fwd: &mut GruParams,
    bwd: &mut GruParams,
) -> Vec<Vec<f64>> {
    let n = d_out.len();
    let d_h = cache.d_h;
    let d_in = fwd.input_dim();
    let mut dxs = vec![vec![0.0; d_in]; n];

    // Forward direction: walk time backwards, carrying dh.
    let mut dh = vec![0.0; d_h];
    for t in (0..n).rev() {
        for i in 0..d_h {
            dh[i] += d_out[t][i];
        }
        let mut dh_prev = vec![0.0; d_h];
        gru_cell_backward(&dh, &cache.fwd_caches[t], fwd, &mut dxs[t], &mut dh_prev);
        dh = dh_prev;
    }

    // Backward direction: caches are in reverse-time order (t = n-1 first),
    // so the chain runs forward in time.
    let d_hb = bwd.hidden_dim();
    let mut dh = vec![0.0; d_hb];
    for t in 0..n {
        for i in 0..d_hb {
            dh[i] += d_out[t][d_h + i];
        }
        let cache_idx = n - 1 - t;
        let mut dh_prev = vec![0.0; d_hb];
        gru_cell_backward(
            &dh,
            &cache.bwd_caches[cache_idx],
            bwd,
            &mut dxs[t],
            &mut dh_prev,
        );
        dh = dh_prev;
    }

    dxs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{finite_diff_grad, max_rel_err};
    use crate::nn::layers::derive_rng;
    use rand::Rng;

    fn zero_params(d_in: usize, d_h: usize) -> GruParams {
        let mut rng = derive_rng(0, 0);
        let mut p = GruParams::new("g", d_in, d_h, &mut rng);
        for q in p.params_mut() {
            q.value.fill(0.0);
        }
        p
    }

    #[test]
    fn zero_weights_halve_previous_state() {
        // z = r = σ(0) = 0.5, candidate = tanh(0) = 0, so h = 0.5 · h_prev.
        let p = zero_params(2, 3);
        let h_prev = vec![0.4, -0.8, 1.0];
        let (h, cache) = gru_cell(&[1.0, -1.0], &h_prev, &p).unwrap();
        for (hi, pi) in h.iter().zip(&h_prev) {
            assert!((hi - 0.5 * pi).abs() < 1e-12);
        }
        assert!(cache.z.iter().all(|&v| (v - 0.5).abs() < 1e-12));
        assert!(cache.r.iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn zero_state_and_weights_give_zero() {
        let p = zero_params(2, 3);
        let (h, _) = gru_cell(&[1.0, 2.0], &[0.0; 3], &p).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gate_outputs_stay_in_unit_interval() {
        let mut rng = derive_rng(3, 0);
        let p = GruParams::new("g", 4, 5, &mut rng);
        let x: Vec<f64> = (0..4).map(|i| (i as f64) - 1.5).collect();
        let (_, cache) = gru_cell(&x, &[0.3; 5], &p).unwrap();
        assert!(cache.z.iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(cache.r.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn shape_mismatch_is_error() {
        let p = zero_params(2, 3);
        assert!(gru_cell(&[1.0], &[0.0; 3], &p).is_err());
        assert!(gru_cell(&[1.0, 2.0], &[0.0; 2], &p).is_err());
    }

    #[test]
    fn empty_sequence_is_error() {
        let p = zero_params(2, 2);
        assert_eq!(bigru(&[], &p, &p).unwrap_err(), NnError::EmptySequence);
    }

    #[test]
    fn length_one_sequence_is_both_single_cells() {
        let mut rng = derive_rng(5, 0);
        let fwd = GruParams::new("f", 3, 2, &mut rng);
        let bwd = GruParams::new("b", 3, 2, &mut rng);
        let x = vec![0.2, -0.4, 0.6];
        let (out, _) = bigru(std::slice::from_ref(&x), &fwd, &bwd).unwrap();
        let (hf, _) = gru_cell(&x, &[0.0; 2], &fwd).unwrap();
        let (hb, _) = gru_cell(&x, &[0.0; 2], &bwd).unwrap();
        let mut expect = hf;
        expect.extend(hb);
        assert_eq!(out[0], expect);
    }

    #[test]
    fn reversing_input_swaps_halves_when_params_shared() {
        let mut rng = derive_rng(6, 0);
        let p = GruParams::new("p", 3, 2, &mut rng);
        let xs: Vec<Vec<f64>> = (0..4)
            .map(|t| (0..3).map(|i| ((t * 3 + i) as f64) * 0.1 - 0.5).collect())
            .collect();
        let (out, _) = bigru(&xs, &p, &p).unwrap();
        let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let (out_rev, _) = bigru(&rev, &p, &p).unwrap();
        let d_h = 2;
        for t in 0..4 {
            let mirror = 4 - 1 - t;
            // forward half at t equals backward half at mirrored position.
            for i in 0..d_h {
                assert!((out[t][i] - out_rev[mirror][d_h + i]).abs() < 1e-12);
                assert!((out[t][d_h + i] - out_rev[mirror][i]).abs() < 1e-12);
            }
        }
    }

    /// Scalar loss for gradient checking: fixed random projection of all
    /// outputs.
    fn bigru_loss(xs: &[Vec<f64>], fwd: &GruParams, bwd: &GruParams, probe: &[f64]) -> f64 {
        let (out, _) = bigru(xs, fwd, bwd).unwrap();
        out.iter()
            .flatten()
            .zip(probe.iter().cycle())
            .map(|(o, p)| o * p)
            .sum()
    }

    #[test]
    fn gru_cell_gradients_match_finite_differences() {
        let mut rng = derive_rng(7, 0);
        let fwd = GruParams::new("f", 3, 4, &mut rng);
        let bwd = GruParams::new("b", 3, 4, &mut rng);
        let xs: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let probe: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // Analytic gradients.
        let mut fwd_m = fwd.clone();
        let mut bwd_m = bwd.clone();
        let (out, cache) = bigru(&xs, &fwd_m, &bwd_m).unwrap();
        let d_out: Vec<Vec<f64>> = out
            .iter()
            .map(|o| {
                o.iter()
                    .zip(probe.iter().cycle())
                    .map(|(_, p)| *p)
                    .collect()
            })
            .collect();
        let dxs = bigru_backward(&d_out, &cache, &mut fwd_m, &mut bwd_m);

        // Numeric: every parameter of both directions.
        for (pi, analytic) in fwd_m.params().iter().enumerate() {
            let num = finite_diff_grad(
                &mut |t| {
                    let mut f2 = fwd.clone();
                    f2.params_mut()[pi].value = t.clone();
                    bigru_loss(&xs, &f2, &bwd, &probe)
                },
                &analytic.value,
                1e-5,
            );
            let err = max_rel_err(&analytic.grad, &num);
            assert!(err < 1e-4, "fwd param {pi} rel err {err}");
        }
        for (pi, analytic) in bwd_m.params().iter().enumerate() {
            let num = finite_diff_grad(
                &mut |t| {
                    let mut b2 = bwd.clone();
                    b2.params_mut()[pi].value = t.clone();
                    bigru_loss(&xs, &fwd, &b2, &probe)
                },
                &analytic.value,
                1e-5,
            );
            let err = max_rel_err(&analytic.grad, &num);
            assert!(err < 1e-4, "bwd param {pi} rel err {err}");
        }

        // Input gradients.
        for t in 0..xs.len() {
            let x_t = Tensor::from_vec(&[3], xs[t].clone()).unwrap();
            let num = finite_diff_grad(
                &mut |tens| {
                    let mut xs2 = xs.clone();
                    xs2[t] = tens.data().to_vec();
                    bigru_loss(&xs2, &fwd, &bwd, &probe)
                },
                &x_t,
                1e-5,
            );
            let analytic = Tensor::from_vec(&[3], dxs[t].clone()).unwrap();
            let err = max_rel_err(&analytic, &num);
            assert!(err < 1e-4, "input {t} rel err {err}");
        }
    }
}
