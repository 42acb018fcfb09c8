//! A single LSTM layer: gate equations, sequence unrolling and BPTT.
//!
//! The four gates share one packed weight layout. Column block `k` of `w`, `u`
//! and `b` belongs to gate `k` in the order input, forget, output, candidate.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub n_in: usize,
    pub n_hidden: usize,
    /// `n_in x 4*n_hidden`, row-major.
    pub w: Vec<f64>,
    /// `n_hidden x 4*n_hidden`, row-major.
    pub u: Vec<f64>,
    /// `4*n_hidden`.
    pub b: Vec<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

impl LstmLayerParams {
    pub fn zeros(n_in: usize, n_hidden: usize) -> Self {
        Self {
            n_in,
            n_hidden,
            w: vec![0.0; n_in * 4 * n_hidden],
            u: vec![0.0; n_hidden * 4 * n_hidden],
            b: vec![0.0; 4 * n_hidden],
        }
    }

    /// Uniform(-1/sqrt(n_hidden), 1/sqrt(n_hidden)) weights, forget bias 1.
    pub fn init<R: Rng>(n_in: usize, n_hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / libm::sqrt(n_hidden as f64);
        let mut p = Self::zeros(n_in, n_hidden);
        for v in p.w.iter_mut().chain(p.u.iter_mut()) {
            *v = rng.random_range(-bound..=bound);
        }
        p.gate_bias_mut(Gate::Forget).fill(1.0);
        p
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.n_hidden;
        let k = gate as usize;
        &mut self.b[k * h..(k + 1) * h]
    }

    /// Input weight from input `j` into unit `unit` of `gate`.
    pub fn w_at(&self, gate: Gate, j: usize, unit: usize) -> f64 {
        self.w[j * 4 * self.n_hidden + gate as usize * self.n_hidden + unit]
    }

    pub fn validate(&self) -> Result<()> {
        let g = 4 * self.n_hidden;
        if self.n_hidden == 0 || self.w.len() != self.n_in * g || self.u.len() != self.n_hidden * g || self.b.len() != g
        {
            return Err(Error::Shape(
                "LSTM layer parameter lengths disagree with its sizes".into(),
            ));
        }
        if self.w.iter().chain(&self.u).chain(&self.b).any(|v| !v.is_finite()) {
            return Err(Error::Shape("LSTM layer has non-finite parameters".into()));
        }
        Ok(())
    }
}

/// Activations of one timestep, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Post-activation gates `[i | f | o | g]`.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One step of the cell; returns `(h, c, cache)`.
pub fn lstm_cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    params: &LstmLayerParams,
) -> Result<(Vec<f64>, Vec<f64>, CellCache)> {
    let (n_in, h) = (params.n_in, params.n_hidden);
    if x.len() != n_in || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::Shape("cell input or state has the wrong width".into()));
    }
    let g4 = 4 * h;
    let mut z = params.b.clone();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            let row = &params.w[j * g4..(j + 1) * g4];
            z.iter_mut().zip(row).for_each(|(zk, wk)| *zk += xj * wk);
        }
    }
    for (j, &hj) in h_prev.iter().enumerate() {
        if hj != 0.0 {
            let row = &params.u[j * g4..(j + 1) * g4];
            z.iter_mut().zip(row).for_each(|(zk, uk)| *zk += hj * uk);
        }
    }
    for (k, zk) in z.iter_mut().enumerate() {
        *zk = if k < 3 * h { sigmoid(*zk) } else { libm::tanh(*zk) };
    }
    let mut c = vec![0.0; h];
    let mut tanh_c = vec![0.0; h];
    let mut h_out = vec![0.0; h];
    for u in 0..h {
        let (i, f, o, g) = (z[u], z[h + u], z[2 * h + u], z[3 * h + u]);
        c[u] = f * c_prev[u] + i * g;
        tanh_c[u] = libm::tanh(c[u]);
        h_out[u] = o * tanh_c[u];
    }
    let cache = CellCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates: z,
        c: c.clone(),
        tanh_c,
    };
    Ok((h_out, c, cache))
}

/// Accumulated parameter gradients for one layer, laid out like [`LstmLayerParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

impl LayerGrads {
    pub fn zeros_like(p: &LstmLayerParams) -> Self {
        Self {
            w: vec![0.0; p.w.len()],
            u: vec![0.0; p.u.len()],
            b: vec![0.0; p.b.len()],
        }
    }

    pub fn add(&mut self, other: &LayerGrads) {
        for (a, b) in [
            (&mut self.w, &other.w),
            (&mut self.u, &other.u),
            (&mut self.b, &other.b),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

/// Backward through one step. Adds parameter gradients into `grads` and
/// returns `(dx, dh_prev, dc_prev)`.
pub fn lstm_cell_backward(
    dh: &[f64],
    dc: &[f64],
    cache: &CellCache,
    params: &LstmLayerParams,
    grads: &mut LayerGrads,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = params.n_hidden;
    let g4 = 4 * h;
    let gates = &cache.gates;
    let mut dz = vec![0.0; g4];
    let mut dc_prev = vec![0.0; h];
    for u in 0..h {
        let (i, f, o, g) = (gates[u], gates[h + u], gates[2 * h + u], gates[3 * h + u]);
        let t = cache.tanh_c[u];
        let dc_total = dc[u] + dh[u] * o * (1.0 - t * t);
        dz[u] = dc_total * g * i * (1.0 - i);
        dz[h + u] = dc_total * cache.c_prev[u] * f * (1.0 - f);
        dz[2 * h + u] = dh[u] * t * o * (1.0 - o);
        dz[3 * h + u] = dc_total * i * (1.0 - g * g);
        dc_prev[u] = dc_total * f;
    }
    for (j, &xj) in cache.x.iter().enumerate() {
        if xj != 0.0 {
            let row = &mut grads.w[j * g4..(j + 1) * g4];
            row.iter_mut().zip(&dz).for_each(|(gw, d)| *gw += xj * d);
        }
    }
    for (j, &hj) in cache.h_prev.iter().enumerate() {
        if hj != 0.0 {
            let row = &mut grads.u[j * g4..(j + 1) * g4];
            row.iter_mut().zip(&dz).for_each(|(gu, d)| *gu += hj * d);
        }
    }
    grads.b.iter_mut().zip(&dz).for_each(|(gb, d)| *gb += d);
    let dot = |row: &[f64]| row.iter().zip(&dz).map(|(a, b)| a * b).sum::<f64>();
    let dx = (0..params.n_in).map(|j| dot(&params.w[j * g4..(j + 1) * g4])).collect();
    let dh_prev = (0..h).map(|j| dot(&params.u[j * g4..(j + 1) * g4])).collect();
    (dx, dh_prev, dc_prev)
}

/// Run the layer over `steps` inputs of width `n_in` from a zero state.
/// Returns the hidden state at every step (row-major, `steps x n_hidden`).
pub fn layer_forward(xs: &[f64], steps: usize, params: &LstmLayerParams) -> Result<(Vec<f64>, Vec<CellCache>)> {
    if xs.len() != steps * params.n_in {
        return Err(Error::Shape("sequence length disagrees with layer input width".into()));
    }
    let h = params.n_hidden;
    let mut hs = Vec::with_capacity(steps * h);
    let mut caches = Vec::with_capacity(steps);
    let mut h_t = vec![0.0; h];
    let mut c_t = vec![0.0; h];
    for t in 0..steps {
        let (h_next, c_next, cache) =
            lstm_cell_forward(&xs[t * params.n_in..(t + 1) * params.n_in], &h_t, &c_t, params)?;
        hs.extend_from_slice(&h_next);
        caches.push(cache);
        h_t = h_next;
        c_t = c_next;
    }
    Ok((hs, caches))
}

/// BPTT over a whole sequence given the loss gradient wrt each step's hidden
/// output. Returns the gradient wrt each step's input (`steps x n_in`).
pub fn layer_backward(dhs: &[f64], caches: &[CellCache], params: &LstmLayerParams, grads: &mut LayerGrads) -> Vec<f64> {
    let (h, n_in) = (params.n_hidden, params.n_in);
    let steps = caches.len();
    let mut dxs = vec![0.0; steps * n_in];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    for t in (0..steps).rev() {
        let dh: Vec<f64> = dhs[t * h..(t + 1) * h]
            .iter()
            .zip(&dh_next)
            .map(|(a, b)| a + b)
            .collect();
        let (dx, dh_prev, dc_prev) = lstm_cell_backward(&dh, &dc_next, &caches[t], params, grads);
        dxs[t * n_in..(t + 1) * n_in].copy_from_slice(&dx);
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dxs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_half_open_gates() {
        let p = LstmLayerParams::zeros(2, 3);
        let c_prev = [1.0, -2.0, 0.4];
        let (h, c, cache) = lstm_cell_forward(&[0.7, -0.1], &[0.3, 0.2, 0.1], &c_prev, &p).unwrap();
        assert!(cache.gates[..9].iter().all(|&g| g == 0.5));
        assert!(cache.gates[9..].iter().all(|&g| g == 0.0));
        for u in 0..3 {
            assert_eq!(c[u], 0.5 * c_prev[u]);
            assert_eq!(h[u], 0.5 * libm::tanh(0.5 * c_prev[u]));
        }
    }

    #[test]
    fn saturated_forget_gate_keeps_memory() {
        let mut p = LstmLayerParams::zeros(1, 2);
        p.gate_bias_mut(Gate::Forget).fill(50.0);
        p.gate_bias_mut(Gate::Input).fill(-50.0);
        let (_, c, _) = lstm_cell_forward(&[3.0], &[0.0, 0.0], &[0.8, -1.5], &p).unwrap();
        assert!((c[0] - 0.8).abs() < 1e-12 && (c[1] + 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_input_zero_state_is_zero() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let mut p = LstmLayerParams::init(3, 4, &mut rng);
        p.b.fill(0.0);
        let (h, _, _) = lstm_cell_forward(&[0.0; 3], &[0.0; 4], &[0.0; 4], &p).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_bounds_and_forget_bias() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let p = LstmLayerParams::init(5, 16, &mut rng);
        assert!(p.w.iter().chain(&p.u).all(|v| v.abs() <= 0.25));
        assert!(p.b[16..32].iter().all(|&v| v == 1.0));
        assert!(p.b[..16].iter().chain(&p.b[32..]).all(|&v| v == 0.0));
        p.validate().unwrap();
    }

    #[test]
    fn wrong_width_is_rejected() {
        let p = LstmLayerParams::zeros(2, 3);
        assert!(lstm_cell_forward(&[0.0], &[0.0; 3], &[0.0; 3], &p).is_err());
    }
}
