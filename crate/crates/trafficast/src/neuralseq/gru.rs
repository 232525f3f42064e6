//! Gated recurrent cell. Update gate `z` interpolates between the previous
//! state and the candidate:
//!   z = sig(w_xz x + W_hz h + b_z)
//!   r = sig(w_xr x + W_hr h + b_r)
//!   n = tanh(w_xn x + W_hn (r*h) + b_n)
//!   h' = (1 - z)*h + z*n
//!
//! With this orientation a saturated update gate (z = 1) hands the state to
//! the candidate path, and z = 0 freezes the previous state.

use crate::error::{Error, Result};
use crate::neuralseq::math::{axpy, matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use crate::neuralseq::params::GruParams;

#[derive(Debug, Clone)]
pub(crate) struct GruTrace {
    pub hidden: usize,
    pub steps: usize,
    pub xs: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub n: Vec<f64>,
    pub rh: Vec<f64>, // r * h_prev, reused by the candidate weight gradient
    pub h: Vec<f64>,
    zeros: Vec<f64>, // stands in for the zero initial state
}

impl GruTrace {
    pub fn new(hidden: usize, steps: usize) -> GruTrace {
        let size = hidden * steps;
        GruTrace {
            hidden,
            steps,
            xs: vec![0.0; steps],
            z: vec![0.0; size],
            r: vec![0.0; size],
            n: vec![0.0; size],
            rh: vec![0.0; size],
            h: vec![0.0; size],
            zeros: vec![0.0; hidden],
        }
    }

    pub fn h_at(&self, t: usize) -> &[f64] {
        &self.h[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn final_h(&self) -> &[f64] {
        self.h_at(self.steps - 1)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GruScratch {
    pub dh: Vec<f64>,
    pub da_z: Vec<f64>,
    pub da_r: Vec<f64>,
    pub da_n: Vec<f64>,
    pub drh: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub zeros: Vec<f64>,
}

impl GruScratch {
    pub fn new(hidden: usize) -> GruScratch {
        GruScratch {
            dh: vec![0.0; hidden],
            da_z: vec![0.0; hidden],
            da_r: vec![0.0; hidden],
            da_n: vec![0.0; hidden],
            drh: vec![0.0; hidden],
            dh_prev: vec![0.0; hidden],
            zeros: vec![0.0; hidden],
        }
    }
}

pub(crate) fn gru_forward(params: &GruParams, xs: &[f64], trace: &mut GruTrace) -> Result<()> {
    let hidden = trace.hidden;
    trace.xs.copy_from_slice(xs);
    for (t, &x) in xs.iter().enumerate() {
        let off = t * hidden;
        let range = off..off + hidden;
        let (h_past, h_rest) = trace.h.split_at_mut(off);
        let h_prev: &[f64] = if t == 0 {
            &trace.zeros
        } else {
            &h_past[off - hidden..]
        };

        let z = &mut trace.z[range.clone()];
        z.copy_from_slice(&params.update.b);
        axpy(z, x, &params.update.w_x);
        matvec_acc(z, &params.update.w_h, h_prev);
        for v in z.iter_mut() {
            *v = sigmoid(*v);
        }

        let r = &mut trace.r[range.clone()];
        r.copy_from_slice(&params.reset.b);
        axpy(r, x, &params.reset.w_x);
        matvec_acc(r, &params.reset.w_h, h_prev);
        for v in r.iter_mut() {
            *v = sigmoid(*v);
        }

        let rh = &mut trace.rh[range.clone()];
        for k in 0..hidden {
            rh[k] = r[k] * h_prev[k];
        }

        let n = &mut trace.n[range];
        n.copy_from_slice(&params.cand.b);
        axpy(n, x, &params.cand.w_x);
        matvec_acc(n, &params.cand.w_h, rh);
        for v in n.iter_mut() {
            *v = v.tanh();
        }

        let h = &mut h_rest[..hidden];
        for k in 0..hidden {
            h[k] = (1.0 - z[k]) * h_prev[k] + z[k] * n[k];
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("time step {t}")));
        }
    }
    Ok(())
}

pub(crate) fn gru_backward(
    params: &GruParams,
    grads: &mut GruParams,
    trace: &GruTrace,
    dh_final: &[f64],
    scratch: &mut GruScratch,
) {
    let hidden = trace.hidden;
    scratch.dh.copy_from_slice(dh_final);
    for t in (0..trace.steps).rev() {
        let range = t * hidden..(t + 1) * hidden;
        let z = &trace.z[range.clone()];
        let r = &trace.r[range.clone()];
        let n = &trace.n[range.clone()];
        let rh = &trace.rh[range];
        let h_prev: &[f64] = if t == 0 {
            &scratch.zeros
        } else {
            trace.h_at(t - 1)
        };

        for k in 0..hidden {
            let dh = scratch.dh[k];
            let dz = dh * (n[k] - h_prev[k]);
            let dn = dh * z[k];
            scratch.da_z[k] = dz * z[k] * (1.0 - z[k]);
            scratch.da_n[k] = dn * (1.0 - n[k] * n[k]);
            // Direct interpolation path to the previous state.
            scratch.dh_prev[k] = dh * (1.0 - z[k]);
        }

        // Candidate gate: its recurrent weights see r*h_prev.
        let x = trace.xs[t];
        axpy(&mut grads.cand.b, 1.0, &scratch.da_n);
        axpy(&mut grads.cand.w_x, x, &scratch.da_n);
        outer_acc(&mut grads.cand.w_h, &scratch.da_n, rh);
        scratch.drh.fill(0.0);
        matvec_t_acc(&mut scratch.drh, &params.cand.w_h, &scratch.da_n);
        for k in 0..hidden {
            let dr = scratch.drh[k] * h_prev[k];
            scratch.da_r[k] = dr * r[k] * (1.0 - r[k]);
            scratch.dh_prev[k] += scratch.drh[k] * r[k];
        }

        axpy(&mut grads.update.b, 1.0, &scratch.da_z);
        axpy(&mut grads.update.w_x, x, &scratch.da_z);
        outer_acc(&mut grads.update.w_h, &scratch.da_z, h_prev);
        matvec_t_acc(&mut scratch.dh_prev, &params.update.w_h, &scratch.da_z);

        axpy(&mut grads.reset.b, 1.0, &scratch.da_r);
        axpy(&mut grads.reset.w_x, x, &scratch.da_r);
        outer_acc(&mut grads.reset.w_h, &scratch.da_r, h_prev);
        matvec_t_acc(&mut scratch.dh_prev, &params.reset.w_h, &scratch.da_r);

        scratch.dh.copy_from_slice(&scratch.dh_prev);
    }
}
