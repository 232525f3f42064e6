//! Self-describing text checkpoints. Values are written with Rust's
//! shortest-round-trip float formatting, so a reloaded model reproduces
//! predictions bit for bit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::neuralseq::params::{CellParams, ModelConfig, ModelKind};
use crate::neuralseq::TrainedModel;
use crate::window::Scaler;

const MAGIC: &str = "trafficast-checkpoint v1";

pub fn to_string(model: &TrainedModel) -> String {
    let mut out = String::new();
    let c = &model.config;
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("kind {}\n", c.kind.token()));
    out.push_str(&format!("window_w {}\n", c.window_w));
    out.push_str(&format!("hidden_size {}\n", c.hidden_size));
    out.push_str(&format!("epochs {}\n", c.epochs));
    out.push_str(&format!("batch_size {}\n", c.batch_size));
    out.push_str(&format!("learning_rate {}\n", c.learning_rate));
    out.push_str(&format!("seed {}\n", c.seed));
    out.push_str(&format!("grad_clip {}\n", c.grad_clip));
    out.push_str(&format!(
        "scaler minmax {} {}\n",
        model.scaler.lo(),
        model.scaler.hi()
    ));
    out.push_str(&format!(
        "loss_history {}\n{}\n",
        model.train_loss_history.len(),
        join_floats(&model.train_loss_history)
    ));
    let mut arrays = Vec::new();
    model.params.for_each(|spec, data| {
        arrays.push((spec, data));
    });
    out.push_str(&format!("arrays {}\n", arrays.len()));
    for (spec, data) in arrays {
        out.push_str(&format!("array {} {} {}\n", spec.name, spec.rows, spec.cols));
        out.push_str(&join_floats(data));
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn from_str(text: &str) -> Result<TrainedModel> {
    let mut lines = text.lines();
    let magic = lines.next().ok_or_else(|| bad("empty checkpoint"))?;
    if magic != MAGIC {
        return Err(bad(&format!("unrecognized header '{magic}'")));
    }

    let kind_token = field(&mut lines, "kind")?;
    let kind = ModelKind::from_token(&kind_token)
        .ok_or_else(|| bad(&format!("unknown model kind '{kind_token}'")))?;
    let config = ModelConfig {
        kind,
        window_w: field(&mut lines, "window_w")?.parse().map_err(|_| bad("window_w"))?,
        hidden_size: field(&mut lines, "hidden_size")?.parse().map_err(|_| bad("hidden_size"))?,
        epochs: field(&mut lines, "epochs")?.parse().map_err(|_| bad("epochs"))?,
        batch_size: field(&mut lines, "batch_size")?.parse().map_err(|_| bad("batch_size"))?,
        learning_rate: field(&mut lines, "learning_rate")?.parse().map_err(|_| bad("learning_rate"))?,
        seed: field(&mut lines, "seed")?.parse().map_err(|_| bad("seed"))?,
        grad_clip: field(&mut lines, "grad_clip")?.parse().map_err(|_| bad("grad_clip"))?,
    };

    let scaler_line = field(&mut lines, "scaler")?;
    let scaler_parts: Vec<&str> = scaler_line.split_whitespace().collect();
    if scaler_parts.len() != 3 || scaler_parts[0] != "minmax" {
        return Err(bad("scaler line must be 'scaler minmax <lo> <hi>'"));
    }
    let lo: f64 = scaler_parts[1].parse().map_err(|_| bad("scaler lo"))?;
    let hi: f64 = scaler_parts[2].parse().map_err(|_| bad("scaler hi"))?;
    let scaler = Scaler::from_bounds(lo, hi)?;

    let history_len: usize = field(&mut lines, "loss_history")?.parse().map_err(|_| bad("loss_history"))?;
    let history = parse_floats(lines.next().unwrap_or(""), history_len, "loss_history")?;

    let n_arrays: usize = field(&mut lines, "arrays")?.parse().map_err(|_| bad("arrays"))?;
    let mut params = CellParams::zeros(kind, config.hidden_size);
    let mut expected = Vec::new();
    params.for_each(|spec, data| expected.push((spec, data.len())));
    if expected.len() != n_arrays {
        return Err(bad(&format!(
            "expected {} arrays for kind {}, checkpoint lists {n_arrays}",
            expected.len(),
            kind.token()
        )));
    }

    let mut parsed: Vec<Vec<f64>> = Vec::with_capacity(n_arrays);
    for (spec, len) in &expected {
        let header = lines.next().ok_or_else(|| bad("missing array header"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "array" {
            return Err(bad(&format!("malformed array header '{header}'")));
        }
        if parts[1] != spec.name {
            return Err(bad(&format!(
                "array '{}' out of order, expected '{}'",
                parts[1], spec.name
            )));
        }
        let rows: usize = parts[2].parse().map_err(|_| bad("array rows"))?;
        let cols: usize = parts[3].parse().map_err(|_| bad("array cols"))?;
        if rows != spec.rows || cols != spec.cols {
            return Err(bad(&format!(
                "array '{}' has shape {rows}x{cols}, expected {}x{}",
                spec.name, spec.rows, spec.cols
            )));
        }
        let values = parse_floats(lines.next().unwrap_or(""), *len, spec.name)?;
        parsed.push(values);
    }
    match lines.next() {
        Some("end") => {}
        other => return Err(bad(&format!("expected trailing 'end', got {other:?}"))),
    }

    let mut iter = parsed.into_iter();
    params.for_each_mut(|_, data| {
        let values = iter.next().expect("array count verified above");
        data.copy_from_slice(&values);
    });
    if !params.is_finite() {
        return Err(Error::NonFinite("checkpoint parameters".into()));
    }

    Ok(TrainedModel {
        config,
        params,
        train_loss_history: history,
        scaler,
    })
}

fn field(lines: &mut std::str::Lines<'_>, name: &str) -> Result<String> {
    let line = lines
        .next()
        .ok_or_else(|| bad(&format!("missing field '{name}'")))?;
    let rest = line
        .strip_prefix(name)
        .ok_or_else(|| bad(&format!("expected field '{name}', got '{line}'")))?;
    Ok(rest.trim().to_string())
}

fn parse_floats(line: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values: std::result::Result<Vec<f64>, _> =
        line.split_whitespace().map(str::parse).collect();
    let values = values.map_err(|_| bad(&format!("non-numeric value in {what}")))?;
    if values.len() != expected {
        return Err(bad(&format!(
            "{what} holds {} values, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}

fn bad(msg: &str) -> Error {
    Error::Format(format!("checkpoint: {msg}"))
}

pub fn save(model: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<TrainedModel> {
    from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralseq::{predict_series, train};
    use crate::series::{TimeSeries, Unit};
    use crate::window::WindowedDataset;

    fn trained(kind: ModelKind) -> TrainedModel {
        let values: Vec<f64> = (0..80).map(|i| (i as f64 * 0.21).sin() * 0.4 + 0.5).collect();
        let scaler = Scaler::fit(&values).unwrap();
        let scaled = scaler.apply_slice(&values);
        let dataset = WindowedDataset::from_values(&scaled, 4, scaler).unwrap();
        let config = ModelConfig {
            hidden_size: 5,
            epochs: 2,
            seed: 13,
            ..ModelConfig::new(kind, 4)
        };
        train(&dataset, &config).unwrap()
    }

    #[test]
    fn round_trip_reproduces_predictions_bitwise() {
        for kind in ModelKind::ALL {
            let model = trained(kind);
            let text = to_string(&model);
            let reloaded = from_str(&text).unwrap();
            assert_eq!(reloaded.config, model.config);
            assert_eq!(reloaded.train_loss_history, model.train_loss_history);

            let series = TimeSeries::from_values(
                0,
                300,
                Unit::Gbps,
                (0..30).map(|i| Some(0.3 + 0.01 * i as f64)).collect(),
            )
            .unwrap();
            let a = predict_series(&model, &series).unwrap();
            let b = predict_series(&reloaded, &series).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()), "{kind:?}");
        }
    }

    #[test]
    fn rejects_corrupted_header() {
        let model = trained(ModelKind::Rnn);
        let text = to_string(&model).replace(MAGIC, "something else");
        assert!(from_str(&text).is_err());
    }

    #[test]
    fn rejects_wrong_shape() {
        let model = trained(ModelKind::Rnn);
        let text = to_string(&model).replace("array w_hh 5 5", "array w_hh 5 4");
        assert!(from_str(&text).is_err());
    }
}
