//! LSTM cell forward/backward over a scalar input sequence. The same cell
//! drives the plain LSTM model and the encoder/decoder halves of the
//! sequence-to-sequence variants.
//!
//! Recurrences per step (sigmoid gates, tanh candidate):
//!   i = sig(w_xi x + W_hi h + b_i)      f = sig(w_xf x + W_hf h + b_f)
//!   g = tanh(w_xg x + W_hg h + b_g)     o = sig(w_xo x + W_ho h + b_o)
//!   c' = f*c + i*g                      h' = o * tanh(c')

use crate::error::{Error, Result};
use crate::neuralseq::math::{axpy, matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use crate::neuralseq::params::LstmCellParams;

/// Per-step activations for a run of the cell, step-major (`steps x hidden`).
#[derive(Debug, Clone)]
pub(crate) struct LstmTrace {
    pub hidden: usize,
    pub steps: usize,
    pub xs: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmTrace {
    pub fn new(hidden: usize, steps: usize) -> LstmTrace {
        let n = hidden * steps;
        LstmTrace {
            hidden,
            steps,
            xs: vec![0.0; steps],
            i: vec![0.0; n],
            f: vec![0.0; n],
            g: vec![0.0; n],
            o: vec![0.0; n],
            c: vec![0.0; n],
            tanh_c: vec![0.0; n],
            h: vec![0.0; n],
        }
    }

    pub fn h_at(&self, t: usize) -> &[f64] {
        &self.h[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn c_at(&self, t: usize) -> &[f64] {
        &self.c[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn final_h(&self) -> &[f64] {
        self.h_at(self.steps - 1)
    }

    pub fn final_c(&self) -> &[f64] {
        self.c_at(self.steps - 1)
    }
}

/// Scratch for one backward pass; reused across samples.
#[derive(Debug, Clone)]
pub(crate) struct LstmScratch {
    pub dh: Vec<f64>,
    pub dc: Vec<f64>,
    pub da_i: Vec<f64>,
    pub da_f: Vec<f64>,
    pub da_g: Vec<f64>,
    pub da_o: Vec<f64>,
    pub dh_prev: Vec<f64>,
}

impl LstmScratch {
    pub fn new(hidden: usize) -> LstmScratch {
        LstmScratch {
            dh: vec![0.0; hidden],
            dc: vec![0.0; hidden],
            da_i: vec![0.0; hidden],
            da_f: vec![0.0; hidden],
            da_g: vec![0.0; hidden],
            da_o: vec![0.0; hidden],
            dh_prev: vec![0.0; hidden],
        }
    }
}

/// Runs the cell over `xs`, starting from `(h0, c0)`, filling `trace`.
/// `step_offset` shifts the step index reported in non-finite errors (the
/// decoder runs after `w` encoder steps).
pub(crate) fn lstm_forward(
    cell: &LstmCellParams,
    xs: &[f64],
    h0: &[f64],
    c0: &[f64],
    trace: &mut LstmTrace,
    step_offset: usize,
) -> Result<()> {
    let hidden = trace.hidden;
    debug_assert_eq!(xs.len(), trace.steps);
    trace.xs.copy_from_slice(xs);

    for (t, &x) in xs.iter().enumerate() {
        let off = t * hidden;
        let range = off..off + hidden;
        let (h_past, h_rest) = trace.h.split_at_mut(off);
        let (c_past, c_rest) = trace.c.split_at_mut(off);
        let h_prev: &[f64] = if t == 0 { h0 } else { &h_past[off - hidden..] };
        let c_prev: &[f64] = if t == 0 { c0 } else { &c_past[off - hidden..] };

        let (i, f, g, o) = (
            &mut trace.i[range.clone()],
            &mut trace.f[range.clone()],
            &mut trace.g[range.clone()],
            &mut trace.o[range.clone()],
        );
        preact(i, &cell.input, x, h_prev);
        preact(f, &cell.forget, x, h_prev);
        preact(g, &cell.cand, x, h_prev);
        preact(o, &cell.output, x, h_prev);
        for v in i.iter_mut() {
            *v = sigmoid(*v);
        }
        for v in f.iter_mut() {
            *v = sigmoid(*v);
        }
        for v in g.iter_mut() {
            *v = v.tanh();
        }
        for v in o.iter_mut() {
            *v = sigmoid(*v);
        }

        let c = &mut c_rest[..hidden];
        for k in 0..hidden {
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
        }
        let tanh_c = &mut trace.tanh_c[range];
        for k in 0..hidden {
            tanh_c[k] = c[k].tanh();
        }
        let h = &mut h_rest[..hidden];
        for k in 0..hidden {
            h[k] = o[k] * tanh_c[k];
        }

        if h.iter().any(|v| !v.is_finite()) || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("time step {}", step_offset + t)));
        }
    }
    Ok(())
}

fn preact(out: &mut [f64], gate: &crate::neuralseq::params::GateParams, x: f64, h_prev: &[f64]) {
    out.copy_from_slice(&gate.b);
    axpy(out, x, &gate.w_x);
    matvec_acc(out, &gate.w_h, h_prev);
}

/// Backpropagates through a traced run.
///
/// `dh_final`/`dc_final` are the gradients flowing into the last step's
/// state from downstream. `extra_dh`, when present, injects an additional
/// per-step gradient on every hidden state (attention over encoder states).
/// Writes the gradients on `(h0, c0)` to `dh0_out`/`dc0_out` and adds
/// parameter gradients into `grads`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lstm_backward(
    cell: &LstmCellParams,
    grads: &mut LstmCellParams,
    trace: &LstmTrace,
    h0: &[f64],
    c0: &[f64],
    dh_final: &[f64],
    dc_final: &[f64],
    extra_dh: Option<&[f64]>,
    dh0_out: &mut [f64],
    dc0_out: &mut [f64],
    scratch: &mut LstmScratch,
) {
    let hidden = trace.hidden;
    scratch.dh.copy_from_slice(dh_final);
    scratch.dc.copy_from_slice(dc_final);

    for t in (0..trace.steps).rev() {
        let range = t * hidden..(t + 1) * hidden;
        if let Some(extra) = extra_dh {
            for (dhk, ek) in scratch.dh.iter_mut().zip(&extra[range.clone()]) {
                *dhk += ek;
            }
        }
        let i = &trace.i[range.clone()];
        let f = &trace.f[range.clone()];
        let g = &trace.g[range.clone()];
        let o = &trace.o[range.clone()];
        let tanh_c = &trace.tanh_c[range.clone()];
        let (h_prev, c_prev): (&[f64], &[f64]) = if t == 0 {
            (h0, c0)
        } else {
            (trace.h_at(t - 1), trace.c_at(t - 1))
        };

        for k in 0..hidden {
            let dh = scratch.dh[k];
            let do_ = dh * tanh_c[k];
            scratch.dc[k] += dh * o[k] * (1.0 - tanh_c[k] * tanh_c[k]);
            let dc = scratch.dc[k];
            let di = dc * g[k];
            let df = dc * c_prev[k];
            let dg = dc * i[k];
            scratch.da_i[k] = di * i[k] * (1.0 - i[k]);
            scratch.da_f[k] = df * f[k] * (1.0 - f[k]);
            scratch.da_g[k] = dg * (1.0 - g[k] * g[k]);
            scratch.da_o[k] = do_ * o[k] * (1.0 - o[k]);
            // Cell-state gradient carried to the previous step.
            scratch.dc[k] = dc * f[k];
        }

        let x = trace.xs[t];
        scratch.dh_prev.fill(0.0);
        for (gate_grads, gate, da) in [
            (&mut grads.input, &cell.input, &scratch.da_i),
            (&mut grads.forget, &cell.forget, &scratch.da_f),
            (&mut grads.cand, &cell.cand, &scratch.da_g),
            (&mut grads.output, &cell.output, &scratch.da_o),
        ] {
            axpy(&mut gate_grads.b, 1.0, da);
            axpy(&mut gate_grads.w_x, x, da);
            outer_acc(&mut gate_grads.w_h, da, h_prev);
            matvec_t_acc(&mut scratch.dh_prev, &gate.w_h, da);
        }
        scratch.dh.copy_from_slice(&scratch.dh_prev);
    }

    dh0_out.copy_from_slice(&scratch.dh);
    dc0_out.copy_from_slice(&scratch.dc);
}
