//! The with/without-outlier experiment matrix: split, detect and repair
//! outliers on the training portion, fit scaler, window, run rolling-origin
//! cross-validation, retrain, and score the holdout.

use rayon::prelude::*;

use crate::anomaly::{
    backward_fill_outliers, build_isolation_forest, iforest_mask, iforest_scores,
    three_sigma_mask, MaskMethod, OutlierMask,
};
use crate::correlation::{correlogram, suggest_window};
use crate::error::{Error, Result};
use crate::eval::{improvement_pct, mape, rolling_splits};
use crate::neuralseq::{forward, predict_series, train, ModelConfig, ModelKind};
use crate::series::TimeSeries;
use crate::window::{fit_scaler, Scaler, WindowedDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionMethod {
    ThreeSigma,
    IsolationForest,
}

impl DetectionMethod {
    pub fn token(self) -> &'static str {
        match self {
            DetectionMethod::ThreeSigma => "three-sigma",
            DetectionMethod::IsolationForest => "iforest",
        }
    }

    pub fn from_token(token: &str) -> Option<DetectionMethod> {
        match token {
            "three-sigma" => Some(DetectionMethod::ThreeSigma),
            "iforest" => Some(DetectionMethod::IsolationForest),
            _ => None,
        }
    }
}

impl std::fmt::Display for DetectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// Detector choice plus its tunables.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub method: DetectionMethod,
    pub sigma_k: f64,
    pub trees: usize,
    pub subsample: usize,
    pub threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            method: DetectionMethod::ThreeSigma,
            sigma_k: 3.0,
            trees: 100,
            subsample: 256,
            threshold: 0.6,
        }
    }
}

/// Supervised window size: fixed, or chosen from the training series PACF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowChoice {
    Fixed(usize),
    Auto { max_lag: usize },
}

/// Everything the experiment matrix needs beyond the series itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kinds: Vec<ModelKind>,
    pub window: WindowChoice,
    pub hidden_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub folds: usize,
    pub detector: DetectorConfig,
    pub train_days: usize,
    pub holdout_days: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(kinds: Vec<ModelKind>) -> ExperimentConfig {
        ExperimentConfig {
            kinds,
            window: WindowChoice::Auto { max_lag: 48 },
            hidden_size: 32,
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            grad_clip: 1.0,
            folds: 5,
            detector: DetectorConfig::default(),
            train_days: 21,
            holdout_days: 8,
            master_seed: 7,
        }
    }

    /// One master seed fans out through fixed offsets.
    fn detection_seed(&self) -> u64 {
        self.master_seed.wrapping_add(1)
    }

    /// Model seed depends on the kind only, so the raw and adjusted
    /// variants start from identical weights.
    fn model_seed(&self, kind: ModelKind) -> u64 {
        let idx = ModelKind::ALL.iter().position(|k| *k == kind).unwrap() as u64;
        self.master_seed.wrapping_add(100 + 10 * idx)
    }
}

/// One point of the holdout prediction trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub timestamp: i64,
    pub actual_gbps: f64,
    pub predicted_gbps: f64,
}

/// Outcome for one (model kind, detection, adjusted) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model_kind: ModelKind,
    pub detection_method: DetectionMethod,
    pub adjusted: bool,
    pub fold_mapes: Vec<f64>,
    pub holdout_mape: f64,
    pub model_config: ModelConfig,
    pub seed: u64,
    pub holdout_trace: Vec<TracePoint>,
}

/// Runs the configured detector over raw values.
pub fn detect_outliers(
    values: &[f64],
    detector: &DetectorConfig,
    seed: u64,
) -> Result<(OutlierMask, Vec<f64>)> {
    match detector.method {
        DetectionMethod::ThreeSigma => {
            let mask = three_sigma_mask(values, detector.sigma_k)?;
            let scores = crate::anomaly::z_scores(values)?;
            Ok((mask, scores))
        }
        DetectionMethod::IsolationForest => {
            let model = build_isolation_forest(values, detector.trees, detector.subsample, seed)?;
            let scores = iforest_scores(&model, values);
            let mask = iforest_mask(
                &scores,
                detector.threshold,
                MaskMethod::IsolationForest {
                    trees: detector.trees,
                    subsample: model.subsample_size(),
                    threshold: detector.threshold,
                    seed,
                },
            )?;
            Ok((mask, scores))
        }
    }
}

/// Per-variant state shared by every model kind.
struct Prepared {
    train: TimeSeries,
    train_values: Vec<f64>,
    scaler: Scaler,
    dataset: WindowedDataset,
    window_w: usize,
}

fn prepare(train_raw: &TimeSeries, cfg: &ExperimentConfig, adjust: bool) -> Result<Prepared> {
    let train = if adjust {
        let values = train_raw.dense_values()?;
        let (mask, _) = detect_outliers(&values, &cfg.detector, cfg.detection_seed())?;
        backward_fill_outliers(train_raw, &mask)?
    } else {
        train_raw.clone()
    };

    let train_values = train.dense_values()?;
    let scaler = fit_scaler(&train)?;
    let window_w = match cfg.window {
        WindowChoice::Fixed(w) => w,
        WindowChoice::Auto { max_lag } => suggest_window(&correlogram(&train_values, max_lag)?),
    };
    let scaled = scaler.apply_slice(&train_values);
    let dataset = WindowedDataset::from_values(&scaled, window_w, scaler.clone())?;
    Ok(Prepared {
        train,
        train_values,
        scaler,
        dataset,
        window_w,
    })
}

fn eval_one(
    prep: &Prepared,
    holdout: &TimeSeries,
    kind: ModelKind,
    cfg: &ExperimentConfig,
    adjusted: bool,
) -> Result<EvalReport> {
    let model_config = ModelConfig {
        kind,
        window_w: prep.window_w,
        hidden_size: cfg.hidden_size,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        seed: cfg.model_seed(kind),
        grad_clip: cfg.grad_clip,
    };
    let w = prep.window_w;

    // Rolling-origin CV over the training windows, scored in Gbps.
    let plan = rolling_splits(prep.dataset.n_samples(), cfg.folds)?;
    let mut fold_mapes = Vec::with_capacity(plan.folds.len());
    for fold in &plan.folds {
        let fold_train = prep.dataset.slice_rows(fold.train.clone());
        let model = train(&fold_train, &model_config)?;
        let mut predicted = Vec::with_capacity(fold.test.len());
        let mut actual = Vec::with_capacity(fold.test.len());
        for row in fold.test.clone() {
            let pred = forward(&model.params, &model_config, prep.dataset.feature_row(row))?;
            predicted.push(prep.scaler.invert(pred));
            actual.push(prep.train_values[row + w]);
        }
        fold_mapes.push(mape(&actual, &predicted)?);
    }

    // Retrain on all training windows, then score the untouched holdout.
    // The context prepends the training tail so every holdout point gets a
    // prediction.
    let final_model = train(&prep.dataset, &model_config)?;
    let mut context_points = prep.train.points()[prep.train.len() - w..].to_vec();
    context_points.extend_from_slice(holdout.points());
    let context = TimeSeries::new(context_points, holdout.interval_s(), holdout.unit())?;
    let predictions = predict_series(&final_model, &context)?;
    let actual = holdout.dense_values()?;
    let holdout_mape = mape(&actual, &predictions)?;

    let holdout_trace = holdout
        .points()
        .iter()
        .zip(&predictions)
        .map(|(p, &pred)| TracePoint {
            timestamp: p.timestamp,
            actual_gbps: p.value.expect("holdout is complete"),
            predicted_gbps: pred,
        })
        .collect();

    Ok(EvalReport {
        model_kind: kind,
        detection_method: cfg.detector.method,
        adjusted,
        fold_mapes,
        holdout_mape,
        model_config,
        seed: cfg.master_seed,
        holdout_trace,
    })
}

/// Runs the pipeline for every requested kind at one adjustment setting.
/// The holdout is always evaluated raw; adjustment touches training data
/// only.
pub fn run_experiment(
    series: &TimeSeries,
    cfg: &ExperimentConfig,
    adjust: bool,
) -> Result<Vec<EvalReport>> {
    if cfg.kinds.is_empty() {
        return Err(Error::Empty("experiment needs at least one model kind"));
    }
    let (train_raw, holdout) = series.train_holdout_split(cfg.train_days, cfg.holdout_days)?;
    let prep = prepare(&train_raw, cfg, adjust)?;
    cfg.kinds
        .par_iter()
        .map(|&kind| eval_one(&prep, &holdout, kind, cfg, adjust))
        .collect()
}

/// The full matrix: every kind with and without outlier adjustment.
/// Reports come back kind-major, raw before adjusted.
pub fn run_matrix(series: &TimeSeries, cfg: &ExperimentConfig) -> Result<Vec<EvalReport>> {
    if cfg.kinds.is_empty() {
        return Err(Error::Empty("experiment needs at least one model kind"));
    }
    let (train_raw, holdout) = series.train_holdout_split(cfg.train_days, cfg.holdout_days)?;
    let prep_raw = prepare(&train_raw, cfg, false)?;
    let prep_adj = prepare(&train_raw, cfg, true)?;

    let tasks: Vec<(ModelKind, bool)> = cfg
        .kinds
        .iter()
        .flat_map(|&kind| [(kind, false), (kind, true)])
        .collect();
    tasks
        .par_iter()
        .map(|&(kind, adjusted)| {
            let prep = if adjusted { &prep_adj } else { &prep_raw };
            eval_one(prep, &holdout, kind, cfg, adjusted)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Report rendering.
// ---------------------------------------------------------------------------

/// The machine-readable slice of an [`EvalReport`]; what the report CSV
/// stores and re-loads.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: ModelKind,
    pub detection: DetectionMethod,
    pub adjusted: bool,
    pub fold_mapes: Vec<f64>,
    pub holdout_mape: f64,
    pub seed: u64,
}

impl EvalReport {
    pub fn to_row(&self) -> ReportRow {
        ReportRow {
            model: self.model_kind,
            detection: self.detection_method,
            adjusted: self.adjusted,
            fold_mapes: self.fold_mapes.clone(),
            holdout_mape: self.holdout_mape,
            seed: self.seed,
        }
    }
}

/// Machine-readable CSV plus a plain-text comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub csv: String,
    pub table: String,
}

pub fn render_report(rows: &[ReportRow]) -> Result<RenderedReport> {
    if rows.is_empty() {
        return Err(Error::Empty("report needs at least one row"));
    }
    let k = rows[0].fold_mapes.len();
    if rows.iter().any(|r| r.fold_mapes.len() != k) {
        return Err(Error::InvalidParam(
            "report rows disagree on fold count".into(),
        ));
    }

    let mut csv = String::from("model,detection,adjusted");
    for i in 1..=k {
        csv.push_str(&format!(",fold{i}"));
    }
    csv.push_str(",holdout_mape,improvement_pct,seed\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{}",
            row.model.token(),
            row.detection.token(),
            row.adjusted
        ));
        for m in &row.fold_mapes {
            csv.push_str(&format!(",{m}"));
        }
        let improvement = if row.adjusted {
            raw_counterpart(rows, row)
                .map(|raw| improvement_pct(raw.holdout_mape, row.holdout_mape))
                .transpose()?
        } else {
            None
        };
        match improvement {
            Some(v) => csv.push_str(&format!(",{},{v},{}\n", row.holdout_mape, row.seed)),
            None => csv.push_str(&format!(",{},,{}\n", row.holdout_mape, row.seed)),
        }
    }

    let mut table = format!(
        "{:<14} {:>12} {:>15} {:>13}\n",
        "model", "mape_raw_%", "mape_adjusted_%", "improvement_%"
    );
    for kind in ModelKind::ALL {
        let raw = rows.iter().find(|r| r.model == kind && !r.adjusted);
        let adj = rows.iter().find(|r| r.model == kind && r.adjusted);
        if raw.is_none() && adj.is_none() {
            continue;
        }
        let fmt = |r: Option<&&ReportRow>| {
            r.map_or("-".to_string(), |r| format!("{:.2}", r.holdout_mape))
        };
        let improvement = match (raw, adj) {
            (Some(r), Some(a)) => improvement_pct(r.holdout_mape, a.holdout_mape)
                .map(|v| format!("{v:.1}"))
                .unwrap_or_else(|_| "-".to_string()),
            _ => "-".to_string(),
        };
        table.push_str(&format!(
            "{:<14} {:>12} {:>15} {:>13}\n",
            kind.token(),
            fmt(raw.as_ref()),
            fmt(adj.as_ref()),
            improvement
        ));
    }

    Ok(RenderedReport { csv, table })
}

fn raw_counterpart<'a>(rows: &'a [ReportRow], adjusted: &ReportRow) -> Option<&'a ReportRow> {
    rows.iter()
        .find(|r| r.model == adjusted.model && !r.adjusted && r.detection == adjusted.detection)
}

/// Parses a report CSV back into rows (the `report` subcommand re-renders
/// tables from stored runs).
pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Empty("report CSV is empty"))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 6 || columns[0] != "model" {
        return Err(Error::Format(format!("unrecognized report header '{header}'")));
    }
    let k = columns.len() - 6;
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Format(format!(
                "report line {}: {} fields, expected {}",
                lineno + 2,
                fields.len(),
                columns.len()
            )));
        }
        let model = ModelKind::from_token(fields[0])
            .ok_or_else(|| Error::Format(format!("unknown model '{}'", fields[0])))?;
        let detection = DetectionMethod::from_token(fields[1])
            .ok_or_else(|| Error::Format(format!("unknown detector '{}'", fields[1])))?;
        let adjusted: bool = fields[2]
            .parse()
            .map_err(|_| Error::Format(format!("bad adjusted flag '{}'", fields[2])))?;
        let fold_mapes: std::result::Result<Vec<f64>, _> =
            fields[3..3 + k].iter().map(|s| s.parse()).collect();
        let fold_mapes =
            fold_mapes.map_err(|_| Error::Format("non-numeric fold MAPE".into()))?;
        let holdout_mape: f64 = fields[3 + k]
            .parse()
            .map_err(|_| Error::Format("non-numeric holdout MAPE".into()))?;
        let seed: u64 = fields[5 + k]
            .parse()
            .map_err(|_| Error::Format("non-numeric seed".into()))?;
        rows.push(ReportRow {
            model,
            detection,
            adjusted,
            fold_mapes,
            holdout_mape,
            seed,
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("report CSV has no rows"));
    }
    Ok(rows)
}

/// `timestamp,actual_gbps,predicted_gbps` CSV of a holdout trace.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("timestamp,actual_gbps,predicted_gbps\n");
    for p in trace {
        out.push_str(&format!(
            "{},{},{}\n",
            p.timestamp, p.actual_gbps, p.predicted_gbps
        ));
    }
    out
}
