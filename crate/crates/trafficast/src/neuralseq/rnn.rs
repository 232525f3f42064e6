//! Vanilla recurrent cell: `h' = tanh(w_x x + W_h h + b)`.

use crate::error::{Error, Result};
use crate::neuralseq::math::{axpy, matvec_acc, matvec_t_acc, outer_acc};
use crate::neuralseq::params::GateParams;

#[derive(Debug, Clone)]
pub(crate) struct RnnTrace {
    pub hidden: usize,
    pub steps: usize,
    pub xs: Vec<f64>,
    pub h: Vec<f64>, // steps x hidden
}

impl RnnTrace {
    pub fn new(hidden: usize, steps: usize) -> RnnTrace {
        RnnTrace {
            hidden,
            steps,
            xs: vec![0.0; steps],
            h: vec![0.0; steps * hidden],
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
pub(crate) struct RnnScratch {
    pub dh: Vec<f64>,
    pub da: Vec<f64>,
    pub dh_prev: Vec<f64>,
}

impl RnnScratch {
    pub fn new(hidden: usize) -> RnnScratch {
        RnnScratch {
            dh: vec![0.0; hidden],
            da: vec![0.0; hidden],
            dh_prev: vec![0.0; hidden],
        }
    }
}

pub(crate) fn rnn_forward(cell: &GateParams, xs: &[f64], trace: &mut RnnTrace) -> Result<()> {
    let hidden = trace.hidden;
    trace.xs.copy_from_slice(xs);
    for (t, &x) in xs.iter().enumerate() {
        let off = t * hidden;
        let (h_past, h_rest) = trace.h.split_at_mut(off);
        let h = &mut h_rest[..hidden];
        h.copy_from_slice(&cell.b);
        axpy(h, x, &cell.w_x);
        if t > 0 {
            matvec_acc(h, &cell.w_h, &h_past[off - hidden..]);
        }
        for v in h.iter_mut() {
            *v = v.tanh();
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("time step {t}")));
        }
    }
    Ok(())
}

/// Backward through time from a gradient `dh_final` on the last hidden
/// state; parameter gradients accumulate into `grads`.
pub(crate) fn rnn_backward(
    cell: &GateParams,
    grads: &mut GateParams,
    trace: &RnnTrace,
    dh_final: &[f64],
    scratch: &mut RnnScratch,
) {
    let hidden = trace.hidden;
    scratch.dh.copy_from_slice(dh_final);
    for t in (0..trace.steps).rev() {
        let h = trace.h_at(t);
        for k in 0..hidden {
            scratch.da[k] = scratch.dh[k] * (1.0 - h[k] * h[k]);
        }
        axpy(&mut grads.b, 1.0, &scratch.da);
        axpy(&mut grads.w_x, trace.xs[t], &scratch.da);
        if t > 0 {
            let h_prev = trace.h_at(t - 1);
            outer_acc(&mut grads.w_h, &scratch.da, h_prev);
            scratch.dh_prev.fill(0.0);
            matvec_t_acc(&mut scratch.dh_prev, &cell.w_h, &scratch.da);
            scratch.dh.copy_from_slice(&scratch.dh_prev);
        }
        // h_0 is the zero vector, so its W_h contribution vanishes.
    }
}
