use super::*;
use crate::window::{Scaler, WindowedDataset};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config(kind: ModelKind) -> ModelConfig {
    ModelConfig {
        hidden_size: 3,
        seed: 42,
        ..ModelConfig::new(kind, 3)
    }
}

fn random_params(config: &ModelConfig, seed: u64) -> CellParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = CellParams::zeros(config.kind, config.hidden_size);
    params.for_each_mut(|_, data| {
        for v in data.iter_mut() {
            *v = rng.gen_range(-0.6..0.6);
        }
    });
    params
}

// ---------------------------------------------------------------------------
// Independent scalar-loop oracle for the LSTM forward pass. Written directly
// from the recurrences, sharing no code with the implementation.
// ---------------------------------------------------------------------------

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn lstm_oracle(p: &LstmParams, xs: &[f64], hidden: usize) -> f64 {
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for &x in xs {
        let mut h_new = vec![0.0; hidden];
        let mut c_new = vec![0.0; hidden];
        for k in 0..hidden {
            let mut ai = p.cell.input.b[k] + p.cell.input.w_x[k] * x;
            let mut af = p.cell.forget.b[k] + p.cell.forget.w_x[k] * x;
            let mut ag = p.cell.cand.b[k] + p.cell.cand.w_x[k] * x;
            let mut ao = p.cell.output.b[k] + p.cell.output.w_x[k] * x;
            for j in 0..hidden {
                ai += p.cell.input.w_h[k * hidden + j] * h[j];
                af += p.cell.forget.w_h[k * hidden + j] * h[j];
                ag += p.cell.cand.w_h[k * hidden + j] * h[j];
                ao += p.cell.output.w_h[k * hidden + j] * h[j];
            }
            let (i, f, g, o) = (sig(ai), sig(af), ag.tanh(), sig(ao));
            c_new[k] = f * c[k] + i * g;
            h_new[k] = o * c_new[k].tanh();
        }
        h = h_new;
        c = c_new;
    }
    let mut y = p.head.b[0];
    for k in 0..hidden {
        y += p.head.w[k] * h[k];
    }
    y
}

#[test]
fn lstm_forward_matches_scalar_oracle() {
    let config = ModelConfig {
        hidden_size: 4,
        seed: 9,
        ..ModelConfig::new(ModelKind::Lstm, 6)
    };
    let params = random_params(&config, 31);
    let xs = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
    let got = forward(&params, &config, &xs).unwrap();
    let CellParams::Lstm(p) = &params else { unreachable!() };
    let expected = lstm_oracle(p, &xs, 4);
    assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
}

#[test]
fn zero_params_predict_zero_for_every_kind() {
    for kind in ModelKind::ALL {
        let config = small_config(kind);
        let params = CellParams::zeros(kind, config.hidden_size);
        let y = forward(&params, &config, &[0.4, 0.9, 0.2]).unwrap();
        assert_eq!(y, 0.0, "{kind:?}");
    }
}

#[test]
fn forward_rejects_wrong_window() {
    let config = small_config(ModelKind::Rnn);
    let params = CellParams::zeros(ModelKind::Rnn, 3);
    assert!(forward(&params, &config, &[0.1, 0.2]).is_err());
}

#[test]
fn forward_reports_nonfinite_step() {
    let config = ModelConfig {
        hidden_size: 2,
        ..ModelConfig::new(ModelKind::Rnn, 3)
    };
    let mut params = CellParams::zeros(ModelKind::Rnn, 2);
    if let CellParams::Rnn(p) = &mut params {
        p.cell.b[0] = f64::NAN;
    }
    let err = forward(&params, &config, &[0.1, 0.2, 0.3]).unwrap_err();
    match err {
        Error::NonFinite(msg) => assert_eq!(msg, "time step 0"),
        other => panic!("unexpected error {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// Gradient checks: the keystone correctness tests for all five kinds.
// ---------------------------------------------------------------------------

#[test]
fn gradients_match_finite_differences_for_all_kinds() {
    for kind in ModelKind::ALL {
        let config = small_config(kind);
        let max_rel = gradient_check(&config, 10).unwrap();
        assert!(
            max_rel < 1e-4,
            "{kind:?}: max relative error {max_rel:.3e}"
        );
    }
}

#[test]
fn gradient_check_epsilon_sweep_is_well_behaved() {
    let config = small_config(ModelKind::Lstm);
    let coarse = gradient_check_with_epsilon(&config, 3, 1e-4).unwrap();
    let mid = gradient_check_with_epsilon(&config, 3, 1e-5).unwrap();
    let fine = gradient_check_with_epsilon(&config, 3, 1e-6).unwrap();
    // Truncation grows toward coarse steps and roundoff toward fine ones,
    // so the interior point never exceeds both ends.
    assert!(
        mid <= coarse.max(fine),
        "sweep not convex-ish: {coarse:.3e} {mid:.3e} {fine:.3e}"
    );
    for err in [coarse, mid, fine] {
        assert!(err < 1e-4, "sweep error {err:.3e}");
    }
}

#[test]
fn gradient_check_rejects_large_configs() {
    let config = ModelConfig {
        hidden_size: 16,
        ..ModelConfig::new(ModelKind::Rnn, 3)
    };
    assert!(gradient_check(&config, 1).is_err());
}

#[test]
fn rnn_hidden_one_single_sample_gradients() {
    let config = ModelConfig {
        hidden_size: 1,
        seed: 3,
        ..ModelConfig::new(ModelKind::Rnn, 2)
    };
    let max_rel = gradient_check_with_epsilon(&config, 5, 1e-5).unwrap();
    assert!(max_rel < 1e-4, "max relative error {max_rel:.3e}");
}

#[test]
fn perfect_prediction_gives_zero_loss_and_gradients() {
    // Zero parameters predict 0; targets of 0 make the batch loss exactly 0.
    let config = small_config(ModelKind::Gru);
    let params = CellParams::zeros(ModelKind::Gru, 3);
    let features = [0.2, 0.4, 0.6, 0.1, 0.3, 0.5];
    let targets = [0.0, 0.0];
    let (loss, grads) = loss_and_gradients(&params, &config, &features, &targets).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.to_flat().iter().all(|&g| g == 0.0));
}

#[test]
fn doubling_targets_moves_only_head_gradients_at_zero_params() {
    // With all-zero parameters every hidden state is zero, so only the
    // output bias sees the target.
    let config = small_config(ModelKind::Lstm);
    let params = CellParams::zeros(ModelKind::Lstm, 3);
    let features = [0.2, 0.4, 0.6];
    let (_, g1) = loss_and_gradients(&params, &config, &features, &[0.5]).unwrap();
    let (_, g2) = loss_and_gradients(&params, &config, &features, &[1.0]).unwrap();
    let (f1, f2) = (g1.to_flat(), g2.to_flat());
    let mut names = Vec::new();
    g1.for_each(|spec, data| names.extend(std::iter::repeat(spec.name).take(data.len())));
    for ((a, b), name) in f1.iter().zip(&f2).zip(&names) {
        if *name == "b_out" {
            assert_abs_diff_eq!(*b, 2.0 * a, epsilon = 1e-15);
            assert!(*a != 0.0);
        } else {
            assert_eq!(*a, 0.0, "{name}");
            assert_eq!(*b, 0.0, "{name}");
        }
    }
}

// ---------------------------------------------------------------------------
// Gating and attention identities.
// ---------------------------------------------------------------------------

#[test]
fn gru_saturated_update_gate_follows_candidate() {
    let config = ModelConfig {
        hidden_size: 2,
        seed: 17,
        ..ModelConfig::new(ModelKind::Gru, 4)
    };
    let mut params = random_params(&config, 5);
    let CellParams::Gru(p) = &mut params else { unreachable!() };
    // sigmoid(40) rounds to exactly 1.0 in f64.
    p.update.b.fill(40.0);
    p.update.w_x.fill(0.0);
    p.update.w_h.fill(0.0);

    // With z = 1 the state is the candidate path output; replicate it.
    let xs = [0.3, 0.8, 0.1, 0.6];
    let hidden = 2;
    let mut h = vec![0.0; hidden];
    for &x in &xs {
        let mut r = vec![0.0; hidden];
        for k in 0..hidden {
            let mut a = p.reset.b[k] + p.reset.w_x[k] * x;
            for j in 0..hidden {
                a += p.reset.w_h[k * hidden + j] * h[j];
            }
            r[k] = sig(a);
        }
        let mut n = vec![0.0; hidden];
        for k in 0..hidden {
            let mut a = p.cand.b[k] + p.cand.w_x[k] * x;
            for j in 0..hidden {
                a += p.cand.w_h[k * hidden + j] * (r[j] * h[j]);
            }
            n[k] = a.tanh();
        }
        h = n; // z = 1: hidden state equals the candidate
    }
    let mut expected = p.head.b[0];
    for k in 0..hidden {
        expected += p.head.w[k] * h[k];
    }
    let got = forward(&params, &config, &xs).unwrap();
    assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
}

#[test]
fn gru_closed_update_gate_freezes_state() {
    let config = ModelConfig {
        hidden_size: 3,
        seed: 23,
        ..ModelConfig::new(ModelKind::Gru, 4)
    };
    let mut params = random_params(&config, 6);
    let expected = {
        let CellParams::Gru(p) = &mut params else { unreachable!() };
        p.update.b.fill(-40.0);
        p.update.w_x.fill(0.0);
        p.update.w_h.fill(0.0);
        p.head.b[0]
    };
    // z ~ 0 keeps h at its initial zero state, so the output is the head bias.
    let got = forward(&params, &config, &[0.9, 0.2, 0.7, 0.4]).unwrap();
    assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
}

#[test]
fn attention_weights_sum_to_one() {
    let config = ModelConfig {
        hidden_size: 3,
        seed: 8,
        ..ModelConfig::new(ModelKind::LstmEncDecAttn, 4)
    };
    let params = random_params(&config, 77);
    let detail = forward_detail(&params, &config, &[0.2, 0.9, 0.4, 0.6]).unwrap();
    let weights = detail.attention_weights.unwrap();
    assert_eq!(weights.len(), 4);
    assert!(weights.iter().all(|&a| a >= 0.0));
    assert_abs_diff_eq!(weights.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
}

#[test]
fn attention_uniform_over_identical_encoder_states() {
    // Zero parameters give identical (zero) encoder states at every step.
    let config = ModelConfig {
        hidden_size: 3,
        ..ModelConfig::new(ModelKind::LstmEncDecAttn, 5)
    };
    let params = CellParams::zeros(ModelKind::LstmEncDecAttn, 3);
    let detail = forward_detail(&params, &config, &[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
    for a in detail.attention_weights.unwrap() {
        assert_abs_diff_eq!(a, 0.2, epsilon = 1e-12);
    }
}

#[test]
fn attention_with_window_one_is_exact() {
    let config = ModelConfig {
        hidden_size: 3,
        seed: 4,
        ..ModelConfig::new(ModelKind::LstmEncDecAttn, 1)
    };
    let params = random_params(&config, 12);
    let detail = forward_detail(&params, &config, &[0.7]).unwrap();
    assert_eq!(detail.attention_weights.unwrap(), vec![1.0]);
}

// ---------------------------------------------------------------------------
// Training behavior.
// ---------------------------------------------------------------------------

fn sine_dataset(n: usize, w: usize) -> WindowedDataset {
    let values: Vec<f64> = (0..n)
        .map(|i| 0.5 + 0.45 * (i as f64 * std::f64::consts::TAU / 50.0).sin())
        .collect();
    WindowedDataset::from_values(&values, w, Scaler::identity()).unwrap()
}

#[test]
fn training_is_deterministic() {
    let dataset = sine_dataset(120, 4);
    let config = ModelConfig {
        hidden_size: 8,
        epochs: 3,
        seed: 11,
        ..ModelConfig::new(ModelKind::Gru, 4)
    };
    let a = train(&dataset, &config).unwrap();
    let b = train(&dataset, &config).unwrap();
    assert_eq!(a.train_loss_history, b.train_loss_history);
    assert_eq!(a.params, b.params);
}

#[test]
fn training_reduces_loss_on_sine() {
    let dataset = sine_dataset(200, 6);
    for kind in ModelKind::ALL {
        let config = ModelConfig {
            hidden_size: 8,
            epochs: 10,
            seed: 2,
            ..ModelConfig::new(kind, 6)
        };
        let model = train(&dataset, &config).unwrap();
        let history = &model.train_loss_history;
        assert_eq!(history.len(), 10);
        assert!(
            history.last().unwrap() < history.first().unwrap(),
            "{kind:?}: {history:?}"
        );
    }
}

#[test]
fn train_rejects_invalid_configs() {
    let dataset = sine_dataset(50, 4);
    let bad_epochs = ModelConfig {
        epochs: 0,
        ..ModelConfig::new(ModelKind::Rnn, 4)
    };
    assert!(train(&dataset, &bad_epochs).is_err());

    let tiny = sine_dataset(12, 4); // 8 samples < default batch of 16
    let config = ModelConfig::new(ModelKind::Rnn, 4);
    assert!(train(&tiny, &config).is_err());
}

#[test]
fn predict_series_alignment() {
    let values: Vec<Option<f64>> = (0..40).map(|i| Some(1.0 + (i % 7) as f64)).collect();
    let series = crate::series::TimeSeries::from_values(0, 300, crate::series::Unit::Gbps, values)
        .unwrap();
    let dataset = sine_dataset(60, 5);
    let config = ModelConfig {
        hidden_size: 4,
        epochs: 1,
        seed: 1,
        ..ModelConfig::new(ModelKind::Rnn, 5)
    };
    let model = train(&dataset, &config).unwrap();
    let preds = predict_series(&model, &series).unwrap();
    assert_eq!(preds.len(), 40 - 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn predictions_are_finite_for_finite_inputs(
        seed in 0u64..1000,
        kind_idx in 0usize..5,
        raw in proptest::collection::vec(-1e3f64..1e3, 4),
    ) {
        let kind = ModelKind::ALL[kind_idx];
        let config = ModelConfig {
            hidden_size: 3,
            seed,
            ..ModelConfig::new(kind, 4)
        };
        let params = random_params(&config, seed);
        let y = forward(&params, &config, &raw).unwrap();
        prop_assert!(y.is_finite());
    }
}
