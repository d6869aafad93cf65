//! Synthetic benchmark series.
//!
//! - `sine_mix`: two sinusoid drivers and a target that is their weighted sum.
//! - `lagged_echo`: a white-noise driver `x` and a target `y_t = x_{t-L}`;
//!   only networks that look back far enough can predict it.
//! - `spike_process`: a step-wise load level with operator-style spikes in a
//!   flow column that partly follows the load.

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    SineMix,
    LaggedEcho,
    SpikeProcess,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine_mix" => Ok(SynthKind::SineMix),
            "lagged_echo" => Ok(SynthKind::LaggedEcho),
            "spike_process" => Ok(SynthKind::SpikeProcess),
            other => Err(Error::Config(format!("unknown synthetic series kind {other:?}"))),
        }
    }
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::SineMix => "sine_mix",
            SynthKind::LaggedEcho => "lagged_echo",
            SynthKind::SpikeProcess => "spike_process",
        }
    }

    /// Name of the column meant to be predicted.
    pub fn target(self) -> &'static str {
        match self {
            SynthKind::SineMix => "y",
            SynthKind::LaggedEcho => "y",
            SynthKind::SpikeProcess => "flow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub length: usize,
    /// Standard deviation of Gaussian noise added to the target column.
    pub noise: f64,
    pub seed: u64,
    /// Delay of `lagged_echo`.
    pub lag: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { length: 1000, noise: 0.0, seed: 0, lag: 5 }
    }
}

/// Closed-form shape of a `sine_mix` series: `y_t = Σ a_i sin(ω_i t + φ_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineComponents {
    pub amplitude: [f64; 2],
    pub omega: [f64; 2],
    pub phase: [f64; 2],
}

impl SineComponents {
    pub fn draw(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let period: f64 = rng.random_range(12.0..60.0);
            (rng.random_range(0.3..1.0), TAU / period, rng.random_range(0.0..TAU))
        };
        let (a0, w0, p0) = draw();
        let (a1, w1, p1) = draw();
        SineComponents { amplitude: [a0, a1], omega: [w0, w1], phase: [p0, p1] }
    }

    pub fn driver(&self, i: usize, t: usize) -> f64 {
        (self.omega[i] * t as f64 + self.phase[i]).sin()
    }

    pub fn target(&self, t: usize) -> f64 {
        self.amplitude[0] * self.driver(0, t) + self.amplitude[1] * self.driver(1, t)
    }
}

pub fn synth_series(kind: SynthKind, p: &SynthParams) -> Result<TimeSeries> {
    if p.length < 2 {
        return Err(Error::Config("synthetic series need at least 2 steps".into()));
    }
    if !(p.noise >= 0.0) {
        return Err(Error::Config(format!("noise must be non-negative, got {}", p.noise)));
    }
    // separate streams for structure and noise so noise=0 leaves the shape unchanged
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x51);
    let noise = Normal::new(0.0, p.noise).map_err(|e| Error::Config(e.to_string()))?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0xdead_beef);
    let mut jitter = move || if p.noise > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 };
    let name = format!("{}_{}", kind.as_str(), p.seed);

    let (columns, rows): (Vec<&str>, Vec<Vec<f64>>) = match kind {
        SynthKind::SineMix => {
            let c = SineComponents::draw(p.seed);
            let rows = (0..p.length).map(|t| vec![c.driver(0, t), c.driver(1, t), c.target(t) + jitter()]).collect();
            (vec!["a", "b", "y"], rows)
        }
        SynthKind::LaggedEcho => {
            let history: Vec<f64> = (0..p.length + p.lag).map(|_| rng.random_range(0.0..1.0)).collect();
            let rows = (0..p.length)
                .map(|t| vec![history[t + p.lag], history[t] + jitter()])
                .collect();
            (vec!["x", "y"], rows)
        }
        SynthKind::SpikeProcess => {
            let levels = [0.3, 0.6, 0.9];
            let mut level = levels[rng.random_range(0..levels.len())];
            let mut spike = 0.0;
            let mut prev_load = level;
            let mut rows = Vec::with_capacity(p.length);
            for _ in 0..p.length {
                if rng.random_bool(0.01) {
                    level = levels[rng.random_range(0..levels.len())];
                }
                if rng.random_bool(0.02) {
                    spike += rng.random_range(1.0..2.0);
                }
                spike *= 0.8;
                let load: f64 = level + 0.02 * rng.random_range(-1.0..1.0);
                let flow = 0.5 * prev_load + spike + jitter();
                rows.push(vec![load, flow]);
                prev_load = load;
            }
            (vec!["load", "flow"], rows)
        }
    };
    TimeSeries::new(name, columns.into_iter().map(String::from).collect(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_mix_is_exactly_two_sinusoids() {
        let p = SynthParams { length: 300, noise: 0.0, seed: 4, lag: 0 };
        let s = synth_series(SynthKind::SineMix, &p).unwrap();
        let c = SineComponents::draw(4);
        for t in 0..s.len() {
            let closed = c.amplitude[0] * (c.omega[0] * t as f64 + c.phase[0]).sin()
                + c.amplitude[1] * (c.omega[1] * t as f64 + c.phase[1]).sin();
            assert_eq!(s.value(t, 2), closed);
        }
    }

    #[test]
    fn lagged_echo_delays_exactly_without_noise() {
        let p = SynthParams { length: 200, noise: 0.0, seed: 1, lag: 5 };
        let s = synth_series(SynthKind::LaggedEcho, &p).unwrap();
        for t in 5..s.len() {
            assert_eq!(s.value(t, 1), s.value(t - 5, 0));
        }
    }

    #[test]
    fn same_seed_same_series() {
        for kind in [SynthKind::SineMix, SynthKind::LaggedEcho, SynthKind::SpikeProcess] {
            let p = SynthParams { length: 100, noise: 0.05, seed: 7, lag: 3 };
            assert_eq!(synth_series(kind, &p).unwrap(), synth_series(kind, &p).unwrap());
            let q = SynthParams { seed: 8, ..p };
            assert_ne!(synth_series(kind, &p).unwrap(), synth_series(kind, &q).unwrap());
        }
    }

    #[test]
    fn noise_only_touches_target() {
        let clean = synth_series(SynthKind::LaggedEcho, &SynthParams { noise: 0.0, ..Default::default() }).unwrap();
        let noisy = synth_series(SynthKind::LaggedEcho, &SynthParams { noise: 0.05, ..Default::default() }).unwrap();
        assert_eq!(clean.column(0), noisy.column(0));
        assert_ne!(clean.column(1), noisy.column(1));
    }
}
