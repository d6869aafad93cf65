//! Scalar memory cells.
//!
//! Every evolved node is a single cell of width one. Its aggregated input
//! `e` (the weighted sum over incoming feed-forward edges at `t` and
//! recurrent edges at `t - k`) replaces the input projection of the usual
//! vector formulation, so each gate gets one input coefficient `w_*`, one
//! coefficient `u_*` on the cell's own previous output and a bias `b_*`.
//!
//! Gated forms:
//!
//! - GRU:   `z = σ(w_z e + u_z h + b_z)`, `r = σ(w_r e + u_r h + b_r)`,
//!   `h̃ = tanh(w_h e + u_h (r h) + b_h)`, `s = z h + (1 - z) h̃`
//! - MGU:   `f = σ(w_f e + u_f h + b_f)`, `h̃ = tanh(w_h e + u_h (f h) + b_h)`,
//!   `s = (1 - f) h + f h̃`
//! - UGRNN: `c = tanh(w_c e + u_c h + b_c)`, `g = σ(w_g e + u_g h + b_g)`,
//!   `s = g h + (1 - g) c`
//! - LSTM:  `i, f, o = σ(w_* e + u_* h + b_*)`, `g = tanh(w_c e + u_c h + b_c)`,
//!   `c = f c_prev + i g`, `s = o tanh(c)`
//!
//! The Δ-RNN cell follows its differential-state definition with both
//! squashing functions set to tanh:
//!
//! ```text
//! e_v = m s_prev          d1 = α e_v e       d2 = β1 e_v + β2 e
//! r   = σ(e + b)          s̃  = tanh(d1 + d2)
//! s   = tanh((1 - r) s̃ + r s_prev)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Simple,
    DeltaRnn,
    Gru,
    Lstm,
    Mgu,
    Ugrnn,
}

impl CellKind {
    pub const ALL: [CellKind; 6] = [
        CellKind::Simple,
        CellKind::DeltaRnn,
        CellKind::Gru,
        CellKind::Lstm,
        CellKind::Mgu,
        CellKind::Ugrnn,
    ];

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Simple => &["bias"],
            CellKind::DeltaRnn => &["alpha", "beta1", "beta2", "b", "m"],
            CellKind::Gru => &["w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h"],
            CellKind::Lstm => &[
                "w_i", "u_i", "b_i", "w_f", "u_f", "b_f", "w_o", "u_o", "b_o", "w_c", "u_c", "b_c",
            ],
            CellKind::Mgu => &["w_f", "u_f", "b_f", "w_h", "u_h", "b_h"],
            CellKind::Ugrnn => &["w_c", "u_c", "b_c", "w_g", "u_g", "b_g"],
        }
    }

    pub fn param_count(self) -> usize {
        self.param_names().len()
    }

    /// Index of the forget-gate bias, for kinds that have one.
    pub fn forget_bias_index(self) -> Option<usize> {
        match self {
            CellKind::Lstm => Some(lstm::B_F),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Simple => "simple",
            CellKind::DeltaRnn => "delta",
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
            CellKind::Mgu => "mgu",
            CellKind::Ugrnn => "ugrnn",
        }
    }

    fn code(self) -> u8 {
        match self {
            CellKind::Simple => 0,
            CellKind::DeltaRnn => 1,
            CellKind::Gru => 2,
            CellKind::Lstm => 3,
            CellKind::Mgu => 4,
            CellKind::Ugrnn => 5,
        }
    }

    pub(crate) fn to_code(self) -> u8 {
        self.code()
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        CellKind::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(CellKind::Simple),
            "delta" | "delta_rnn" | "delta-rnn" => Ok(CellKind::DeltaRnn),
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            "mgu" => Ok(CellKind::Mgu),
            "ugrnn" => Ok(CellKind::Ugrnn),
            other => Err(Error::Config(format!("unknown cell kind {other:?}"))),
        }
    }
}

/// Learnable scalar coefficients of one cell, laid out as
/// [`CellKind::param_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellParams(pub Vec<f64>);

impl CellParams {
    pub fn zeros(kind: CellKind) -> Self {
        CellParams(vec![0.0; kind.param_count()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Recurrent state carried by a cell from one step to the next. `c` is only
/// used by the LSTM.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellState {
    pub s: f64,
    pub c: f64,
}

/// Values stored by a forward step and consumed by the matching backward
/// step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeActivationTrace {
    pub e: f64,
    pub prev: CellState,
    pub out: CellState,
    pub aux: [f64; 4],
}

/// Gradient of one backward step with respect to the step's inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellGrad {
    pub de: f64,
    pub prev: CellState,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weighted input of a node: feed-forward values at `t` plus recurrent values
/// at `t - k`. Recurrent values that would come from before the start of the
/// series are zero and should be passed as such.
pub fn aggregate_inputs(
    feed_forward: impl IntoIterator<Item = (f64, f64)>,
    recurrent: impl IntoIterator<Item = (f64, f64)>,
) -> f64 {
    let ff: f64 = feed_forward.into_iter().map(|(w, s)| w * s).sum();
    let rec: f64 = recurrent.into_iter().map(|(v, s)| v * s).sum();
    ff + rec
}

pub fn simple_forward(e: f64, bias: f64) -> f64 {
    (e + bias).tanh()
}

/// One forward step of a cell.
pub fn forward(kind: CellKind, params: &[f64], e: f64, prev: CellState) -> NodeActivationTrace {
    debug_assert_eq!(params.len(), kind.param_count());
    let mut tr = NodeActivationTrace {
        e,
        prev,
        ..Default::default()
    };
    let h = prev.s;
    match kind {
        CellKind::Simple => {
            tr.out.s = simple_forward(e, params[0]);
        }
        CellKind::DeltaRnn => {
            let [alpha, beta1, beta2, b, m] = [params[0], params[1], params[2], params[3], params[4]];
            let ev = m * h;
            let d1 = alpha * ev * e;
            let d2 = beta1 * ev + beta2 * e;
            let r = sigmoid(e + b);
            let st = (d1 + d2).tanh();
            tr.out.s = ((1.0 - r) * st + r * h).tanh();
            tr.aux = [ev, r, st, 0.0];
        }
        CellKind::Gru => {
            use gru::*;
            let z = sigmoid(params[W_Z] * e + params[U_Z] * h + params[B_Z]);
            let r = sigmoid(params[W_R] * e + params[U_R] * h + params[B_R]);
            let ht = (params[W_H] * e + params[U_H] * (r * h) + params[B_H]).tanh();
            tr.out.s = z * h + (1.0 - z) * ht;
            tr.aux = [z, r, ht, 0.0];
        }
        CellKind::Mgu => {
            use mgu::*;
            let f = sigmoid(params[W_F] * e + params[U_F] * h + params[B_F]);
            let ht = (params[W_H] * e + params[U_H] * (f * h) + params[B_H]).tanh();
            tr.out.s = (1.0 - f) * h + f * ht;
            tr.aux = [f, ht, 0.0, 0.0];
        }
        CellKind::Ugrnn => {
            use ugrnn::*;
            let c = (params[W_C] * e + params[U_C] * h + params[B_C]).tanh();
            let g = sigmoid(params[W_G] * e + params[U_G] * h + params[B_G]);
            tr.out.s = g * h + (1.0 - g) * c;
            tr.aux = [c, g, 0.0, 0.0];
        }
        CellKind::Lstm => {
            use lstm::*;
            let i = sigmoid(params[W_I] * e + params[U_I] * h + params[B_I]);
            let f = sigmoid(params[W_F] * e + params[U_F] * h + params[B_F]);
            let o = sigmoid(params[W_O] * e + params[U_O] * h + params[B_O]);
            let g = (params[W_C] * e + params[U_C] * h + params[B_C]).tanh();
            let c = f * prev.c + i * g;
            tr.out.c = c;
            tr.out.s = o * c.tanh();
            tr.aux = [i, f, o, g];
        }
    }
    tr
}

/// Backpropagates `d_out` (the gradient with respect to the step's output
/// state) through one forward step. Parameter gradients are accumulated into
/// `dparams`.
pub fn backward(
    kind: CellKind,
    params: &[f64],
    tr: &NodeActivationTrace,
    d_out: CellState,
    dparams: &mut [f64],
) -> CellGrad {
    let e = tr.e;
    let h = tr.prev.s;
    let ds = d_out.s;
    let mut g = CellGrad::default();
    match kind {
        CellKind::Simple => {
            let s = tr.out.s;
            let a = ds * (1.0 - s * s);
            dparams[0] += a;
            g.de = a;
        }
        CellKind::DeltaRnn => {
            let [alpha, beta1, beta2, _b, m] = [params[0], params[1], params[2], params[3], params[4]];
            let [ev, r, st, _] = tr.aux;
            let s = tr.out.s;
            let dz = ds * (1.0 - s * s);
            let dst = dz * (1.0 - r);
            let dr = dz * (h - st);
            let mut dh = dz * r;
            let da = dst * (1.0 - st * st);
            dparams[0] += da * ev * e;
            dparams[1] += da * ev;
            dparams[2] += da * e;
            let dev = da * (alpha * e + beta1);
            let mut de = da * (alpha * ev + beta2);
            let dr_pre = dr * r * (1.0 - r);
            de += dr_pre;
            dparams[3] += dr_pre;
            dparams[4] += dev * h;
            dh += dev * m;
            g.de = de;
            g.prev.s = dh;
        }
        CellKind::Gru => {
            use gru::*;
            let [z, r, ht, _] = tr.aux;
            let dz = ds * (h - ht);
            let dht = ds * (1.0 - z);
            let mut dh = ds * z;
            let aht = dht * (1.0 - ht * ht);
            dparams[W_H] += aht * e;
            dparams[U_H] += aht * r * h;
            dparams[B_H] += aht;
            let mut de = aht * params[W_H];
            let dr = aht * params[U_H] * h;
            dh += aht * params[U_H] * r;
            let az = dz * z * (1.0 - z);
            dparams[W_Z] += az * e;
            dparams[U_Z] += az * h;
            dparams[B_Z] += az;
            de += az * params[W_Z];
            dh += az * params[U_Z];
            let ar = dr * r * (1.0 - r);
            dparams[W_R] += ar * e;
            dparams[U_R] += ar * h;
            dparams[B_R] += ar;
            de += ar * params[W_R];
            dh += ar * params[U_R];
            g.de = de;
            g.prev.s = dh;
        }
        CellKind::Mgu => {
            use mgu::*;
            let [f, ht, _, _] = tr.aux;
            let dht = ds * f;
            let mut df = ds * (ht - h);
            let mut dh = ds * (1.0 - f);
            let aht = dht * (1.0 - ht * ht);
            dparams[W_H] += aht * e;
            dparams[U_H] += aht * f * h;
            dparams[B_H] += aht;
            let mut de = aht * params[W_H];
            df += aht * params[U_H] * h;
            dh += aht * params[U_H] * f;
            let af = df * f * (1.0 - f);
            dparams[W_F] += af * e;
            dparams[U_F] += af * h;
            dparams[B_F] += af;
            de += af * params[W_F];
            dh += af * params[U_F];
            g.de = de;
            g.prev.s = dh;
        }
        CellKind::Ugrnn => {
            use ugrnn::*;
            let [c, gate, _, _] = tr.aux;
            let dc = ds * (1.0 - gate);
            let dg = ds * (h - c);
            let mut dh = ds * gate;
            let ac = dc * (1.0 - c * c);
            dparams[W_C] += ac * e;
            dparams[U_C] += ac * h;
            dparams[B_C] += ac;
            let ag = dg * gate * (1.0 - gate);
            dparams[W_G] += ag * e;
            dparams[U_G] += ag * h;
            dparams[B_G] += ag;
            let de = ac * params[W_C] + ag * params[W_G];
            dh += ac * params[U_C] + ag * params[U_G];
            g.de = de;
            g.prev.s = dh;
        }
        CellKind::Lstm => {
            use lstm::*;
            let [i, f, o, gc] = tr.aux;
            let c = tr.out.c;
            let tc = c.tanh();
            let d_o = ds * tc;
            let dc = d_out.c + ds * o * (1.0 - tc * tc);
            let df = dc * tr.prev.c;
            let di = dc * gc;
            let dg = dc * i;
            g.prev.c = dc * f;

            let mut de = 0.0;
            let mut dh = 0.0;
            let mut gate = |a: f64, w: usize, u: usize, b: usize, dparams: &mut [f64]| {
                dparams[w] += a * e;
                dparams[u] += a * h;
                dparams[b] += a;
                de += a * params[w];
                dh += a * params[u];
            };
            gate(di * i * (1.0 - i), W_I, U_I, B_I, dparams);
            gate(df * f * (1.0 - f), W_F, U_F, B_F, dparams);
            gate(d_o * o * (1.0 - o), W_O, U_O, B_O, dparams);
            gate(dg * (1.0 - gc * gc), W_C, U_C, B_C, dparams);
            g.de = de;
            g.prev.s = dh;
        }
    }
    g
}

mod gru {
    pub const W_Z: usize = 0;
    pub const U_Z: usize = 1;
    pub const B_Z: usize = 2;
    pub const W_R: usize = 3;
    pub const U_R: usize = 4;
    pub const B_R: usize = 5;
    pub const W_H: usize = 6;
    pub const U_H: usize = 7;
    pub const B_H: usize = 8;
}

mod mgu {
    pub const W_F: usize = 0;
    pub const U_F: usize = 1;
    pub const B_F: usize = 2;
    pub const W_H: usize = 3;
    pub const U_H: usize = 4;
    pub const B_H: usize = 5;
}

mod ugrnn {
    pub const W_C: usize = 0;
    pub const U_C: usize = 1;
    pub const B_C: usize = 2;
    pub const W_G: usize = 3;
    pub const U_G: usize = 4;
    pub const B_G: usize = 5;
}

mod lstm {
    pub const W_I: usize = 0;
    pub const U_I: usize = 1;
    pub const B_I: usize = 2;
    pub const W_F: usize = 3;
    pub const U_F: usize = 4;
    pub const B_F: usize = 5;
    pub const W_O: usize = 6;
    pub const U_O: usize = 7;
    pub const B_O: usize = 8;
    pub const W_C: usize = 9;
    pub const U_C: usize = 10;
    pub const B_C: usize = 11;
}
