//! Model configuration and parameter containers for the five sequence
//! models. Parameters live in plain `Vec<f64>` arrays; a canonical array
//! order backs flattening (for the optimizer and gradient checks) and the
//! checkpoint format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Rnn,
    Lstm,
    Gru,
    LstmEncDec,
    LstmEncDecAttn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Rnn,
        ModelKind::Lstm,
        ModelKind::Gru,
        ModelKind::LstmEncDec,
        ModelKind::LstmEncDecAttn,
    ];

    /// Stable token used in CLI flags, CSV reports, and checkpoints.
    pub fn token(self) -> &'static str {
        match self {
            ModelKind::Rnn => "rnn",
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
            ModelKind::LstmEncDec => "lstm-ed",
            ModelKind::LstmEncDecAttn => "lstm-ed-attn",
        }
    }

    pub fn from_token(token: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.token() == token)
    }

    /// Kinds whose cells carry an LSTM forget gate (bias-initialized to 1).
    pub fn is_lstm_family(self) -> bool {
        matches!(
            self,
            ModelKind::Lstm | ModelKind::LstmEncDec | ModelKind::LstmEncDecAttn
        )
    }

    /// Width of the linear output head's input.
    pub fn head_width(self, hidden: usize) -> usize {
        match self {
            // Attention feeds the head with [decoder state; context].
            ModelKind::LstmEncDecAttn => 2 * hidden,
            _ => hidden,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// Architecture choice and training hyperparameters for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub window_w: usize,
    pub hidden_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub grad_clip: f64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, window_w: usize) -> ModelConfig {
        ModelConfig {
            kind,
            window_w,
            hidden_size: 32,
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            seed: 0,
            grad_clip: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_w < 1 {
            return Err(Error::InvalidParam("window_w must be at least 1".into()));
        }
        if self.hidden_size < 1 {
            return Err(Error::InvalidParam("hidden_size must be at least 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidParam("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidParam("batch_size must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !self.grad_clip.is_finite() || self.grad_clip <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "grad_clip must be positive, got {}",
                self.grad_clip
            )));
        }
        Ok(())
    }
}

/// One gate: input weight (hidden x 1), recurrent weight (hidden x hidden),
/// bias (hidden).
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub b: Vec<f64>,
}

impl GateParams {
    fn zeros(hidden: usize) -> GateParams {
        GateParams {
            w_x: vec![0.0; hidden],
            w_h: vec![0.0; hidden * hidden],
            b: vec![0.0; hidden],
        }
    }
}

/// Gates of one LSTM cell: input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    pub input: GateParams,
    pub forget: GateParams,
    pub cand: GateParams,
    pub output: GateParams,
}

impl LstmCellParams {
    fn zeros(hidden: usize) -> LstmCellParams {
        LstmCellParams {
            input: GateParams::zeros(hidden),
            forget: GateParams::zeros(hidden),
            cand: GateParams::zeros(hidden),
            output: GateParams::zeros(hidden),
        }
    }
}

/// Linear output head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w: Vec<f64>,
    pub b: Vec<f64>, // single element
}

impl HeadParams {
    fn zeros(width: usize) -> HeadParams {
        HeadParams {
            w: vec![0.0; width],
            b: vec![0.0; 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub cell: GateParams,
    pub head: HeadParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub cell: LstmCellParams,
    pub head: HeadParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub update: GateParams,
    pub reset: GateParams,
    pub cand: GateParams,
    pub head: HeadParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncDecParams {
    pub encoder: LstmCellParams,
    pub decoder: LstmCellParams,
    pub head: HeadParams,
}

/// Additive alignment: score_j = v . tanh(W_enc h_j + W_dec s).
#[derive(Debug, Clone, PartialEq)]
pub struct AttnParams {
    pub w_enc: Vec<f64>,
    pub w_dec: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncDecAttnParams {
    pub encoder: LstmCellParams,
    pub decoder: LstmCellParams,
    pub attn: AttnParams,
    pub head: HeadParams,
}

/// Learned parameters for one model kind.
#[derive(Debug, Clone, PartialEq)]
pub enum CellParams {
    Rnn(RnnParams),
    Lstm(LstmParams),
    Gru(GruParams),
    EncDec(EncDecParams),
    EncDecAttn(EncDecAttnParams),
}

/// Shape descriptor for one named parameter array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArraySpec {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub is_bias: bool,
}

fn gate_specs(
    prefix: [&'static str; 3],
    hidden: usize,
) -> impl Iterator<Item = ArraySpec> {
    [
        ArraySpec { name: prefix[0], rows: hidden, cols: 1, is_bias: false },
        ArraySpec { name: prefix[1], rows: hidden, cols: hidden, is_bias: false },
        ArraySpec { name: prefix[2], rows: hidden, cols: 1, is_bias: true },
    ]
    .into_iter()
}

macro_rules! lstm_cell_arrays {
    ($cell:expr) => {
        [
            (&$cell.input.w_x, &$cell.input.w_h, &$cell.input.b),
            (&$cell.forget.w_x, &$cell.forget.w_h, &$cell.forget.b),
            (&$cell.cand.w_x, &$cell.cand.w_h, &$cell.cand.b),
            (&$cell.output.w_x, &$cell.output.w_h, &$cell.output.b),
        ]
    };
}

macro_rules! lstm_cell_arrays_mut {
    ($cell:expr) => {
        [
            (&mut $cell.input.w_x, &mut $cell.input.w_h, &mut $cell.input.b),
            (&mut $cell.forget.w_x, &mut $cell.forget.w_h, &mut $cell.forget.b),
            (&mut $cell.cand.w_x, &mut $cell.cand.w_h, &mut $cell.cand.b),
            (&mut $cell.output.w_x, &mut $cell.output.w_h, &mut $cell.output.b),
        ]
    };
}

const LSTM_GATE_NAMES: [[&str; 3]; 4] = [
    ["w_xi", "w_hi", "b_i"],
    ["w_xf", "w_hf", "b_f"],
    ["w_xg", "w_hg", "b_g"],
    ["w_xo", "w_ho", "b_o"],
];
const ENC_GATE_NAMES: [[&str; 3]; 4] = [
    ["enc_w_xi", "enc_w_hi", "enc_b_i"],
    ["enc_w_xf", "enc_w_hf", "enc_b_f"],
    ["enc_w_xg", "enc_w_hg", "enc_b_g"],
    ["enc_w_xo", "enc_w_ho", "enc_b_o"],
];
const DEC_GATE_NAMES: [[&str; 3]; 4] = [
    ["dec_w_xi", "dec_w_hi", "dec_b_i"],
    ["dec_w_xf", "dec_w_hf", "dec_b_f"],
    ["dec_w_xg", "dec_w_hg", "dec_b_g"],
    ["dec_w_xo", "dec_w_ho", "dec_b_o"],
];
const GRU_GATE_NAMES: [[&str; 3]; 3] = [
    ["w_xz", "w_hz", "b_z"],
    ["w_xr", "w_hr", "b_r"],
    ["w_xn", "w_hn", "b_n"],
];

impl CellParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            CellParams::Rnn(_) => ModelKind::Rnn,
            CellParams::Lstm(_) => ModelKind::Lstm,
            CellParams::Gru(_) => ModelKind::Gru,
            CellParams::EncDec(_) => ModelKind::LstmEncDec,
            CellParams::EncDecAttn(_) => ModelKind::LstmEncDecAttn,
        }
    }

    pub fn hidden_size(&self) -> usize {
        match self {
            CellParams::Rnn(p) => p.cell.b.len(),
            CellParams::Lstm(p) => p.cell.input.b.len(),
            CellParams::Gru(p) => p.update.b.len(),
            CellParams::EncDec(p) => p.encoder.input.b.len(),
            CellParams::EncDecAttn(p) => p.encoder.input.b.len(),
        }
    }

    /// All-zero parameters of the right shapes for `kind`. Also serves as
    /// the gradient accumulator.
    pub fn zeros(kind: ModelKind, hidden: usize) -> CellParams {
        let head = HeadParams::zeros(kind.head_width(hidden));
        match kind {
            ModelKind::Rnn => CellParams::Rnn(RnnParams {
                cell: GateParams::zeros(hidden),
                head,
            }),
            ModelKind::Lstm => CellParams::Lstm(LstmParams {
                cell: LstmCellParams::zeros(hidden),
                head,
            }),
            ModelKind::Gru => CellParams::Gru(GruParams {
                update: GateParams::zeros(hidden),
                reset: GateParams::zeros(hidden),
                cand: GateParams::zeros(hidden),
                head,
            }),
            ModelKind::LstmEncDec => CellParams::EncDec(EncDecParams {
                encoder: LstmCellParams::zeros(hidden),
                decoder: LstmCellParams::zeros(hidden),
                head,
            }),
            ModelKind::LstmEncDecAttn => CellParams::EncDecAttn(EncDecAttnParams {
                encoder: LstmCellParams::zeros(hidden),
                decoder: LstmCellParams::zeros(hidden),
                attn: AttnParams {
                    w_enc: vec![0.0; hidden * hidden],
                    w_dec: vec![0.0; hidden * hidden],
                    v: vec![0.0; hidden],
                },
                head,
            }),
        }
    }

    /// Seeded initialization: weights uniform in
    /// `[-1/sqrt(hidden), +1/sqrt(hidden)]`, biases zero except LSTM forget
    /// gates, which start at 1 so cells retain state early in training.
    pub fn init(config: &ModelConfig) -> Result<CellParams> {
        config.validate()?;
        let hidden = config.hidden_size;
        let mut params = CellParams::zeros(config.kind, hidden);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        params.for_each_mut(|spec, data| {
            if !spec.is_bias {
                for v in data.iter_mut() {
                    *v = rng.gen_range(-bound..=bound);
                }
            }
        });
        match &mut params {
            CellParams::Lstm(p) => p.cell.forget.b.fill(1.0),
            CellParams::EncDec(p) => {
                p.encoder.forget.b.fill(1.0);
                p.decoder.forget.b.fill(1.0);
            }
            CellParams::EncDecAttn(p) => {
                p.encoder.forget.b.fill(1.0);
                p.decoder.forget.b.fill(1.0);
            }
            _ => {}
        }
        Ok(params)
    }

    /// Visits every parameter array in canonical order.
    pub fn for_each<'a>(&'a self, mut f: impl FnMut(ArraySpec, &'a [f64])) {
        let hidden = self.hidden_size();
        let head_width = self.kind().head_width(hidden);
        match self {
            CellParams::Rnn(p) => {
                for (spec, data) in gate_specs(["w_xh", "w_hh", "b_h"], hidden)
                    .zip([&p.cell.w_x, &p.cell.w_h, &p.cell.b])
                {
                    f(spec, data);
                }
                head_f(&mut f, head_width, &p.head);
            }
            CellParams::Lstm(p) => {
                for (names, (w_x, w_h, b)) in LSTM_GATE_NAMES.iter().zip(lstm_cell_arrays!(p.cell))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                head_f(&mut f, head_width, &p.head);
            }
            CellParams::Gru(p) => {
                let gates = [
                    (&p.update.w_x, &p.update.w_h, &p.update.b),
                    (&p.reset.w_x, &p.reset.w_h, &p.reset.b),
                    (&p.cand.w_x, &p.cand.w_h, &p.cand.b),
                ];
                for (names, (w_x, w_h, b)) in GRU_GATE_NAMES.iter().zip(gates) {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                head_f(&mut f, head_width, &p.head);
            }
            CellParams::EncDec(p) => {
                for (names, (w_x, w_h, b)) in ENC_GATE_NAMES.iter().zip(lstm_cell_arrays!(p.encoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                for (names, (w_x, w_h, b)) in DEC_GATE_NAMES.iter().zip(lstm_cell_arrays!(p.decoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                head_f(&mut f, head_width, &p.head);
            }
            CellParams::EncDecAttn(p) => {
                for (names, (w_x, w_h, b)) in ENC_GATE_NAMES.iter().zip(lstm_cell_arrays!(p.encoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                for (names, (w_x, w_h, b)) in DEC_GATE_NAMES.iter().zip(lstm_cell_arrays!(p.decoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                f(
                    ArraySpec { name: "atn_w_enc", rows: hidden, cols: hidden, is_bias: false },
                    &p.attn.w_enc,
                );
                f(
                    ArraySpec { name: "atn_w_dec", rows: hidden, cols: hidden, is_bias: false },
                    &p.attn.w_dec,
                );
                f(
                    ArraySpec { name: "atn_v", rows: hidden, cols: 1, is_bias: false },
                    &p.attn.v,
                );
                head_f(&mut f, head_width, &p.head);
            }
        }
    }

    /// Mutable visit in the same canonical order as [`CellParams::for_each`].
    pub fn for_each_mut(&mut self, mut f: impl FnMut(ArraySpec, &mut Vec<f64>)) {
        let hidden = self.hidden_size();
        let head_width = self.kind().head_width(hidden);
        match self {
            CellParams::Rnn(p) => {
                for (spec, data) in gate_specs(["w_xh", "w_hh", "b_h"], hidden)
                    .zip([&mut p.cell.w_x, &mut p.cell.w_h, &mut p.cell.b])
                {
                    f(spec, data);
                }
                head_f_mut(&mut f, head_width, &mut p.head);
            }
            CellParams::Lstm(p) => {
                for (names, (w_x, w_h, b)) in
                    LSTM_GATE_NAMES.iter().zip(lstm_cell_arrays_mut!(p.cell))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                head_f_mut(&mut f, head_width, &mut p.head);
            }
            CellParams::Gru(p) => {
                let gates = [
                    (&mut p.update.w_x, &mut p.update.w_h, &mut p.update.b),
                    (&mut p.reset.w_x, &mut p.reset.w_h, &mut p.reset.b),
                    (&mut p.cand.w_x, &mut p.cand.w_h, &mut p.cand.b),
                ];
                for (names, (w_x, w_h, b)) in GRU_GATE_NAMES.iter().zip(gates) {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                head_f_mut(&mut f, head_width, &mut p.head);
            }
            CellParams::EncDec(p) => {
                for (names, (w_x, w_h, b)) in
                    ENC_GATE_NAMES.iter().zip(lstm_cell_arrays_mut!(p.encoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                for (names, (w_x, w_h, b)) in
                    DEC_GATE_NAMES.iter().zip(lstm_cell_arrays_mut!(p.decoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                head_f_mut(&mut f, head_width, &mut p.head);
            }
            CellParams::EncDecAttn(p) => {
                for (names, (w_x, w_h, b)) in
                    ENC_GATE_NAMES.iter().zip(lstm_cell_arrays_mut!(p.encoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                for (names, (w_x, w_h, b)) in
                    DEC_GATE_NAMES.iter().zip(lstm_cell_arrays_mut!(p.decoder))
                {
                    for (spec, data) in gate_specs(*names, hidden).zip([w_x, w_h, b]) {
                        f(spec, data);
                    }
                }
                f(
                    ArraySpec { name: "atn_w_enc", rows: hidden, cols: hidden, is_bias: false },
                    &mut p.attn.w_enc,
                );
                f(
                    ArraySpec { name: "atn_w_dec", rows: hidden, cols: hidden, is_bias: false },
                    &mut p.attn.w_dec,
                );
                f(
                    ArraySpec { name: "atn_v", rows: hidden, cols: 1, is_bias: false },
                    &mut p.attn.v,
                );
                head_f_mut(&mut f, head_width, &mut p.head);
            }
        }
    }

    pub fn flat_len(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, data| n += data.len());
        n
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        self.for_each(|_, data| out.extend_from_slice(data));
        out
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        out.clear();
        self.for_each(|_, data| out.extend_from_slice(data));
    }

    pub fn copy_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.for_each_mut(|_, data| {
            let len = data.len();
            data.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        });
        debug_assert_eq!(offset, flat.len());
    }

    pub fn zero_fill(&mut self) {
        self.for_each_mut(|_, data| data.fill(0.0));
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(|_, data| ok &= data.iter().all(|v| v.is_finite()));
        ok
    }
}

fn head_f<'a>(f: &mut impl FnMut(ArraySpec, &'a [f64]), width: usize, head: &'a HeadParams) {
    f(
        ArraySpec { name: "w_out", rows: 1, cols: width, is_bias: false },
        &head.w,
    );
    f(
        ArraySpec { name: "b_out", rows: 1, cols: 1, is_bias: true },
        &head.b,
    );
}

fn head_f_mut(
    f: &mut impl FnMut(ArraySpec, &mut Vec<f64>),
    width: usize,
    head: &mut HeadParams,
) {
    f(
        ArraySpec { name: "w_out", rows: 1, cols: width, is_bias: false },
        &mut head.w,
    );
    f(
        ArraySpec { name: "b_out", rows: 1, cols: 1, is_bias: true },
        &mut head.b,
    );
}
