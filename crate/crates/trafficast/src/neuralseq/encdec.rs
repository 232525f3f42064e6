//! Sequence-to-sequence variants. The encoder LSTM folds the window into a
//! final state; a single decoder LSTM step, fed the last window value and
//! initialized from that state, produces the one-step prediction.
//!
//! The attention variant scores every encoder hidden state against the
//! decoder state with an additive alignment, takes the softmax-weighted sum
//! as context, and feeds `[decoder state; context]` to the output head.

use crate::error::Result;
use crate::neuralseq::lstm::{lstm_backward, lstm_forward, LstmScratch, LstmTrace};
use crate::neuralseq::math::{axpy, dot, matvec_acc, matvec_t_acc, outer_acc, softmax_into};
use crate::neuralseq::params::{AttnParams, LstmCellParams};

#[derive(Debug, Clone)]
pub(crate) struct EncDecWork {
    pub encoder: LstmTrace,
    pub decoder: LstmTrace,
    pub scratch: LstmScratch,
    pub zeros: Vec<f64>,
    dc_zero: Vec<f64>,
    // decoder backward output, feeds the encoder backward
    dh_state: Vec<f64>,
    dc_state: Vec<f64>,
    // initial-state gradients, unused (h0 and c0 are constants)
    dh_sink: Vec<f64>,
    dc_sink: Vec<f64>,
}

impl EncDecWork {
    pub fn new(hidden: usize, steps: usize) -> EncDecWork {
        EncDecWork {
            encoder: LstmTrace::new(hidden, steps),
            decoder: LstmTrace::new(hidden, 1),
            scratch: LstmScratch::new(hidden),
            zeros: vec![0.0; hidden],
            dc_zero: vec![0.0; hidden],
            dh_state: vec![0.0; hidden],
            dc_state: vec![0.0; hidden],
            dh_sink: vec![0.0; hidden],
            dc_sink: vec![0.0; hidden],
        }
    }
}

/// Runs encoder then decoder; the decoder hidden state is left in
/// `work.decoder`.
pub(crate) fn encdec_forward(
    encoder: &LstmCellParams,
    decoder: &LstmCellParams,
    xs: &[f64],
    work: &mut EncDecWork,
) -> Result<()> {
    lstm_forward(encoder, xs, &work.zeros, &work.zeros, &mut work.encoder, 0)?;
    let dec_input = [xs[xs.len() - 1]];
    let (enc_trace, dec_trace) = (&work.encoder, &mut work.decoder);
    lstm_forward(
        decoder,
        &dec_input,
        enc_trace.final_h(),
        enc_trace.final_c(),
        dec_trace,
        xs.len(),
    )
}

/// Backward from a gradient on the decoder hidden state. When `extra_dh`
/// is present it injects per-step gradients on the encoder hidden states
/// (the attention paths).
pub(crate) fn encdec_backward(
    encoder: &LstmCellParams,
    decoder: &LstmCellParams,
    enc_grads: &mut LstmCellParams,
    dec_grads: &mut LstmCellParams,
    work: &mut EncDecWork,
    dh_decoder: &[f64],
    extra_dh: Option<&[f64]>,
) {
    lstm_backward(
        decoder,
        dec_grads,
        &work.decoder,
        work.encoder.final_h(),
        work.encoder.final_c(),
        dh_decoder,
        &work.dc_zero,
        None,
        &mut work.dh_state,
        &mut work.dc_state,
        &mut work.scratch,
    );
    lstm_backward(
        encoder,
        enc_grads,
        &work.encoder,
        &work.zeros,
        &work.dc_zero,
        &work.dh_state,
        &work.dc_state,
        extra_dh,
        &mut work.dh_sink,
        &mut work.dc_sink,
        &mut work.scratch,
    );
}

#[derive(Debug, Clone)]
pub(crate) struct AttnWork {
    pub base: EncDecWork,
    /// tanh(W_enc h_j + W_dec s) per encoder step, step-major.
    pub u: Vec<f64>,
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub context: Vec<f64>,
    /// [decoder state; context]
    pub combined: Vec<f64>,
    extra_dh: Vec<f64>,
    w_dec_s: Vec<f64>,
    dq: Vec<f64>,
    ds: Vec<f64>,
    d_weights: Vec<f64>,
}

impl AttnWork {
    pub fn new(hidden: usize, steps: usize) -> AttnWork {
        AttnWork {
            base: EncDecWork::new(hidden, steps),
            u: vec![0.0; hidden * steps],
            scores: vec![0.0; steps],
            weights: vec![0.0; steps],
            context: vec![0.0; hidden],
            combined: vec![0.0; 2 * hidden],
            extra_dh: vec![0.0; hidden * steps],
            w_dec_s: vec![0.0; hidden],
            dq: vec![0.0; hidden],
            ds: vec![0.0; hidden],
            d_weights: vec![0.0; steps],
        }
    }
}

/// Runs encoder, decoder, and the attention read; leaves the head input in
/// `work.combined` and the alignment weights in `work.weights`.
pub(crate) fn attn_forward(
    encoder: &LstmCellParams,
    decoder: &LstmCellParams,
    attn: &AttnParams,
    xs: &[f64],
    work: &mut AttnWork,
) -> Result<()> {
    let hidden = attn.v.len();
    encdec_forward(encoder, decoder, xs, &mut work.base)?;
    let s = work.base.decoder.final_h();

    // Additive alignment scores over all encoder states.
    work.w_dec_s.fill(0.0);
    matvec_acc(&mut work.w_dec_s, &attn.w_dec, s);
    for t in 0..xs.len() {
        let h_t = work.base.encoder.h_at(t);
        let u = &mut work.u[t * hidden..(t + 1) * hidden];
        u.copy_from_slice(&work.w_dec_s);
        matvec_acc(u, &attn.w_enc, h_t);
        for v in u.iter_mut() {
            *v = v.tanh();
        }
        work.scores[t] = dot(&attn.v, u);
    }
    softmax_into(&mut work.weights, &work.scores);

    work.context.fill(0.0);
    for t in 0..xs.len() {
        axpy(&mut work.context, work.weights[t], work.base.encoder.h_at(t));
    }
    work.combined[..hidden].copy_from_slice(s);
    work.combined[hidden..].copy_from_slice(&work.context);
    Ok(())
}

/// Backward from a gradient on the combined `[state; context]` vector.
#[allow(clippy::too_many_arguments)]
pub(crate) fn attn_backward(
    encoder: &LstmCellParams,
    decoder: &LstmCellParams,
    attn: &AttnParams,
    enc_grads: &mut LstmCellParams,
    dec_grads: &mut LstmCellParams,
    attn_grads: &mut AttnParams,
    work: &mut AttnWork,
    d_combined: &[f64],
) {
    let hidden = attn.v.len();
    let steps = work.scores.len();

    work.ds.copy_from_slice(&d_combined[..hidden]);
    let d_context = &d_combined[hidden..];

    // Through the weighted sum: gradients on the weights and the direct
    // h_j path.
    work.extra_dh.fill(0.0);
    for t in 0..steps {
        let h_t = work.base.encoder.h_at(t);
        work.d_weights[t] = dot(d_context, h_t);
        axpy(
            &mut work.extra_dh[t * hidden..(t + 1) * hidden],
            work.weights[t],
            d_context,
        );
    }

    // Softmax jacobian: de_j = a_j (dw_j - sum_k a_k dw_k).
    let weighted_sum: f64 = work
        .weights
        .iter()
        .zip(&work.d_weights)
        .map(|(a, d)| a * d)
        .sum();
    for t in 0..steps {
        let de = work.weights[t] * (work.d_weights[t] - weighted_sum);
        // Through e = v . tanh(q): dq = de * v * (1 - u^2).
        let u = &work.u[t * hidden..(t + 1) * hidden];
        axpy(&mut attn_grads.v, de, u);
        for k in 0..hidden {
            work.dq[k] = de * attn.v[k] * (1.0 - u[k] * u[k]);
        }
        let h_t = work.base.encoder.h_at(t);
        outer_acc(&mut attn_grads.w_enc, &work.dq, h_t);
        matvec_t_acc(
            &mut work.extra_dh[t * hidden..(t + 1) * hidden],
            &attn.w_enc,
            &work.dq,
        );
        outer_acc(&mut attn_grads.w_dec, &work.dq, work.base.decoder.final_h());
        matvec_t_acc(&mut work.ds, &attn.w_dec, &work.dq);
    }

    let (base, ds, extra_dh) = (&mut work.base, &work.ds, &work.extra_dh);
    encdec_backward(
        encoder,
        decoder,
        enc_grads,
        dec_grads,
        base,
        ds,
        Some(extra_dh),
    );
}
