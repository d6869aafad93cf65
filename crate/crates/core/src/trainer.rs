//! Local training: BPTT gradients, norm re-scaling, Nesterov SGD and fitness.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesSet;
use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::network::{Network, SeriesView};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Mae,
    Mse,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mae" => Ok(Metric::Mae),
            "mse" => Ok(Metric::Mse),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

impl Metric {
    pub fn error(self, predicted: f64, actual: f64) -> f64 {
        let d = predicted - actual;
        match self {
            Metric::Mae => d.abs(),
            Metric::Mse => d * d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub high_threshold: f64,
    pub low_threshold: f64,
    pub metric: Metric,
    /// Added to a new LSTM cell's forget-gate bias when the cell is created.
    pub lstm_forget_bias: f64,
    /// Window length for truncated BPTT; `None` backpropagates through the
    /// whole series.
    pub truncation: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            momentum: 0.9,
            epochs: 10,
            high_threshold: 1.0,
            low_threshold: 0.05,
            metric: Metric::Mae,
            lstm_forget_bias: 1.0,
            truncation: None,
        }
    }
}

impl TrainConfig {
    /// `low_threshold = 0` turns boosting off and `high_threshold = inf`
    /// turns clipping off.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning rate must be finite and >= 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.low_threshold >= 0.0 && self.low_threshold < self.high_threshold) {
            return bad(format!(
                "need 0 <= low threshold < high threshold, got {} and {}",
                self.low_threshold, self.high_threshold
            ));
        }
        if self.truncation == Some(0) {
            return bad("truncation window must be at least 1".into());
        }
        Ok(())
    }
}

/// What [`rescale_gradient`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rescale {
    Clipped,
    Boosted,
    Unchanged,
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Clips the full gradient to norm `high` when above it and boosts it to
/// norm `low` when below it. A zero gradient is left alone.
pub fn rescale_gradient(g: &mut [f64], high: f64, low: f64) -> Rescale {
    let norm = l2_norm(g);
    let factor = if norm > high {
        high / norm
    } else if norm < low && norm > 0.0 {
        low / norm
    } else {
        return Rescale::Unchanged;
    };
    g.iter_mut().for_each(|x| *x *= factor);
    if norm > high {
        Rescale::Clipped
    } else {
        Rescale::Boosted
    }
}

/// Summed-loss gradient over one series, with respect to
/// [`Genome::parameters`].
pub fn bptt_gradient(g: &Genome, view: &SeriesView, config: &TrainConfig) -> (Vec<f64>, f64) {
    Network::compile(g).gradient(view, config.truncation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub genome: Genome,
    /// Mean per-series loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains a copy of `g`: `epochs` passes over the training series in a
/// shuffled order, one Nesterov step per series, the gradient re-scaled
/// before every step. Momentum starts from zero on every call.
pub fn train(g: &Genome, data: &TimeSeriesSet, config: &TrainConfig, rng: &mut impl Rng) -> Result<TrainOutcome> {
    let views = data
        .series
        .iter()
        .map(|s| SeriesView::for_genome(s, g))
        .collect::<Result<Vec<_>>>()?;
    let mut genome = g.clone();
    let mut net = Network::compile(&genome);
    let mut w = genome.parameters();
    let mut v = vec![0.0; w.len()];
    let mut lookahead = vec![0.0; w.len()];
    let mut order: Vec<usize> = (0..views.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for &i in &order {
            for ((la, wi), vi) in lookahead.iter_mut().zip(&w).zip(&v) {
                *la = wi + config.momentum * vi;
            }
            net.set_parameters(&lookahead);
            let (mut grad, loss) = net.gradient(&views[i], config.truncation);
            total += loss;
            if grad.iter().any(|x| !x.is_finite()) {
                break;
            }
            rescale_gradient(&mut grad, config.high_threshold, config.low_threshold);
            for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(&grad) {
                *vi = config.momentum * *vi - config.learning_rate * gi;
                *wi += *vi;
            }
        }
        epoch_losses.push(total / views.len().max(1) as f64);
    }
    genome.set_parameters(&w);
    genome.fitness = f64::INFINITY;
    Ok(TrainOutcome { genome, epoch_losses })
}

/// Mean one-step-ahead error over each series, averaged over series.
pub fn evaluate(g: &Genome, data: &TimeSeriesSet, metric: Metric, exec: Exec) -> Result<f64> {
    let views = data
        .series
        .iter()
        .map(|s| SeriesView::for_genome(s, g))
        .collect::<Result<Vec<_>>>()?;
    let net = Network::compile(g);
    let per_series = exec.map(&views, |view| series_error(&net, view, metric));
    Ok(per_series.iter().sum::<f64>() / per_series.len().max(1) as f64)
}

pub fn series_error(net: &Network, view: &SeriesView, metric: Metric) -> f64 {
    let preds = net.predict(view);
    let mut total = 0.0;
    let mut count = 0usize;
    for (o, p) in preds.iter().enumerate() {
        for (t, &y) in p.iter().enumerate() {
            total += metric.error(y, view.target(t + 1, o));
            count += 1;
        }
    }
    let err = total / count.max(1) as f64;
    if err.is_finite() {
        err
    } else {
        f64::INFINITY
    }
}

/// Central-difference gradient of the summed loss, one parameter per task.
///
/// The loss difference is accumulated step by step as
/// `½(ŷ⁺ − ŷ⁻)(ŷ⁺ + ŷ⁻ − 2y)` rather than as a difference of two totals.
pub fn numerical_gradient(g: &Genome, view: &SeriesView, eps: f64, exec: Exec) -> Vec<f64> {
    let base = g.parameters();
    let net = Network::compile(g);
    exec.map_range(base.len(), |i| {
        let mut net = net.clone();
        let mut p = base.clone();
        p[i] = base[i] + eps;
        net.set_parameters(&p);
        let plus = net.predict(view);
        p[i] = base[i] - eps;
        net.set_parameters(&p);
        let minus = net.predict(view);
        let mut diff = 0.0;
        for (o, (up, down)) in plus.iter().zip(&minus).enumerate() {
            for (t, (a, b)) in up.iter().zip(down).enumerate() {
                diff += 0.5 * (a - b) * (a + b - 2.0 * view.target(t + 1, o));
            }
        }
        diff / (2.0 * eps)
    })
}
