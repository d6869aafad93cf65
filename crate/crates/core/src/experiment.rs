//! Experiment runner: configuration, labels, artifacts, ranking and
//! prediction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cells::CellKind;
use crate::codec;
use crate::data::{self, load_csv, make_folds, normalize_split, NormalizeMode, TimeSeriesSet};
use crate::engine::{self, BpttEvaluator, EngineConfig, MasterState, OperatorRates, RunReport, Scheduling};
use crate::error::{Error, Result};
use crate::genome::{Genome, DEFAULT_MAX_TIME_SKIP};
use crate::network::{Network, SeriesView};
use crate::ops::{default_mutation_weights, OperatorKind, OpsConfig};
use crate::par::Exec;
use crate::trainer::{self, Metric, TrainConfig};

pub const CONFIG_FILE: &str = "config.json";
pub const FITNESS_LOG_FILE: &str = "fitness_log.csv";
pub const EPOCH_LOG_FILE: &str = "epoch_log.csv";
pub const BEST_GENOME_FILE: &str = "best_genome.exmg";
pub const BEST_JSON_FILE: &str = "best_genome.json";
pub const BEST_DOT_FILE: &str = "best_genome.dot";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const REPORT_FILE: &str = "report.json";
pub const RECORD_FILE: &str = "record.json";

/// Experiment name such as `lstm+simple+rec`: a cell family (`simple`,
/// `all` or one memory cell), then optionally `+simple` and `+rec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentLabel {
    pub family: Family,
    pub simple: bool,
    pub rec: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Simple,
    All,
    Cell(CellKind),
}

impl ExperimentLabel {
    /// Cell kinds a new node may take.
    pub fn cell_kinds(&self) -> Vec<CellKind> {
        match self.family {
            Family::Simple => vec![CellKind::Simple],
            Family::All => CellKind::ALL.to_vec(),
            Family::Cell(k) if self.simple => vec![k, CellKind::Simple],
            Family::Cell(k) => vec![k],
        }
    }
}

impl FromStr for ExperimentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad experiment label {s:?}"));
        let mut parts = s.split('+');
        let family = match parts.next().ok_or_else(bad)? {
            "simple" => Family::Simple,
            "all" => Family::All,
            other => match other.parse::<CellKind>() {
                Ok(CellKind::Simple) | Err(_) => return Err(bad()),
                Ok(k) => Family::Cell(k),
            },
        };
        let mut label = ExperimentLabel { family, simple: false, rec: false };
        for p in parts {
            match p {
                "simple" if matches!(family, Family::Cell(_)) && !label.simple && !label.rec => label.simple = true,
                "rec" if !label.rec => label.rec = true,
                _ => return Err(bad()),
            }
        }
        Ok(label)
    }
}

impl fmt::Display for ExperimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Simple => f.write_str("simple")?,
            Family::All => f.write_str("all")?,
            Family::Cell(k) => f.write_str(k.as_str())?,
        }
        if self.simple {
            f.write_str("+simple")?;
        }
        if self.rec {
            f.write_str("+rec")?;
        }
        Ok(())
    }
}

/// Everything a run needs. Serialized next to the results as the effective
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: Vec<PathBuf>,
    /// Explicit test series. When empty, `data` is split into folds.
    pub test_data: Vec<PathBuf>,
    pub inputs: Vec<String>,
    pub output: String,
    pub label: String,
    pub islands: usize,
    pub population_size: usize,
    pub budget: usize,
    pub rates: OperatorRates,
    pub mutation_weights: BTreeMap<OperatorKind, f64>,
    pub mutations_per_child: usize,
    /// Cell kinds besides `simple` that new nodes may take.
    pub cell_kinds: Vec<CellKind>,
    pub allow_simple: bool,
    /// When false, recurrent edges are limited to a time skip of 1.
    pub allow_deep_recurrence: bool,
    /// When false, no recurrent edges are ever added.
    pub recurrent_edges: bool,
    pub max_time_skip: u32,
    pub train: TrainConfig,
    pub normalize: NormalizeMode,
    pub fold_size: usize,
    pub fold: usize,
    pub repeat: usize,
    pub seed: u64,
    pub workers: usize,
    pub scheduling: Scheduling,
    pub record_wallclock: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: Vec::new(),
            test_data: Vec::new(),
            inputs: Vec::new(),
            output: String::new(),
            label: "simple+rec".into(),
            islands: 10,
            population_size: 5,
            budget: 2000,
            rates: OperatorRates::default(),
            mutation_weights: default_mutation_weights(),
            mutations_per_child: 1,
            cell_kinds: Vec::new(),
            allow_simple: true,
            allow_deep_recurrence: true,
            recurrent_edges: true,
            max_time_skip: DEFAULT_MAX_TIME_SKIP,
            train: TrainConfig::default(),
            normalize: NormalizeMode::Train,
            fold_size: 2,
            fold: 0,
            repeat: 0,
            seed: 0,
            workers: 1,
            scheduling: Scheduling::default(),
            record_wallclock: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Sets the cell and recurrence switches from an experiment label.
    pub fn apply_label(&mut self, label: &ExperimentLabel) {
        let kinds = label.cell_kinds();
        self.allow_simple = kinds.contains(&CellKind::Simple);
        self.cell_kinds = kinds.into_iter().filter(|k| *k != CellKind::Simple).collect();
        self.allow_deep_recurrence = label.rec;
        self.label = label.to_string();
    }

    pub fn allowed_cells(&self) -> Vec<CellKind> {
        let mut kinds: BTreeSet<CellKind> = self.cell_kinds.iter().copied().collect();
        if self.allow_simple {
            kinds.insert(CellKind::Simple);
        } else {
            kinds.remove(&CellKind::Simple);
        }
        kinds.into_iter().collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.allowed_cells().is_empty() {
            return Err(Error::Config("no cell kind is allowed".into()));
        }
        if self.inputs.is_empty() || self.output.is_empty() {
            return Err(Error::Config("input and output columns must be set".into()));
        }
        if self.data.is_empty() {
            return Err(Error::Config("no data files given".into()));
        }
        if self.mutation_weights.values().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Config("mutation probabilities must lie in [0, 1]".into()));
        }
        self.train.validate()?;
        self.engine_config().validate()
    }

    pub fn engine_config(&self) -> EngineConfig {
        let mut weights = self.mutation_weights.clone();
        if !self.recurrent_edges {
            weights.remove(&OperatorKind::AddRecurrentEdge);
        }
        EngineConfig {
            islands: self.islands,
            population_size: self.population_size,
            budget: self.budget,
            rates: self.rates,
            ops: OpsConfig {
                cell_kinds: self.allowed_cells(),
                max_time_skip: if self.allow_deep_recurrence { self.max_time_skip } else { 1 },
                lstm_forget_bias: self.train.lstm_forget_bias,
                mutation_weights: weights,
                mutations_per_child: self.mutations_per_child,
            },
            seed: self.seed,
            workers: self.workers,
            scheduling: self.scheduling,
            record_wallclock: self.record_wallclock,
        }
    }

    /// Loads the data and returns the normalized (train, test) pair of the
    /// configured fold.
    pub fn load_split(&self) -> Result<(TimeSeriesSet, TimeSeriesSet)> {
        let load = |paths: &[PathBuf]| -> Result<TimeSeriesSet> {
            let series = paths.iter().map(load_csv).collect::<Result<Vec<_>>>()?;
            TimeSeriesSet::new(series, self.inputs.clone(), self.output.clone())
        };
        let all = load(&self.data)?;
        let (train, test) = if self.test_data.is_empty() {
            let folds = make_folds(all.series.len(), self.fold_size)?;
            let fold = folds.get(self.fold).ok_or_else(|| {
                Error::Config(format!("fold {} out of range (have {})", self.fold, folds.len()))
            })?;
            (all.subset(&fold.train), all.subset(&fold.test))
        } else {
            (all, load(&self.test_data)?)
        };
        normalize_split(&train, &test, self.normalize)
    }

    pub fn fold_count(&self) -> Result<usize> {
        if self.test_data.is_empty() {
            Ok(make_folds(self.data.len(), self.fold_size)?.len())
        } else {
            Ok(1)
        }
    }
}

/// Outcome of one (label, fold, repeat) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub label: String,
    pub fold: usize,
    pub repeat: usize,
    #[serde(with = "crate::genome::unevaluated")]
    pub best_fitness: f64,
    /// Mean over islands of each island's best fitness at the end of the run.
    #[serde(with = "crate::genome::unevaluated")]
    pub mean_island_best: f64,
    pub genomes_trained: usize,
}

pub struct ExperimentOutcome {
    pub record: ExperimentRecord,
    pub report: RunReport,
}

/// Runs the engine on train/test sets already prepared.
pub fn run_on(config: &RunConfig, train: TimeSeriesSet, test: TimeSeriesSet) -> Result<RunReport> {
    let engine_config = config.engine_config();
    let exec = if engine_config.workers > 1 { Exec::Sequential } else { Exec::Parallel };
    let evaluator = BpttEvaluator { train, test, config: config.train.clone(), exec };
    let mut master = MasterState::new(engine_config, config.inputs.clone(), vec![config.output.clone()])?;
    Ok(engine::run(&mut master, &evaluator))
}

/// Runs one experiment and writes every artifact into `config.out_dir`.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let (train, test) = config.load_split()?;
    let mut report = run_on(config, train, test.clone())?;
    if let Some(best) = report.best.as_mut() {
        best.normalization = test.normalization.clone();
    }
    for g in report.island_bests.iter_mut().flatten() {
        g.normalization = test.normalization.clone();
    }

    let out = &config.out_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_FILE), serde_json::to_string_pretty(config)?)?;
    engine::write_fitness_log(out.join(FITNESS_LOG_FILE), &report.log)?;
    engine::write_epoch_log(out.join(EPOCH_LOG_FILE), &report.epoch_losses)?;
    if let Some(best) = &report.best {
        fs::write(out.join(BEST_GENOME_FILE), codec::serialize(best))?;
        fs::write(out.join(BEST_JSON_FILE), codec::to_json(best)?)?;
        fs::write(out.join(BEST_DOT_FILE), codec::export_dot(best))?;
        write_test_predictions(best, &test, &out.join(PREDICTIONS_FILE))?;
    }
    for (i, g) in report.island_bests.iter().enumerate() {
        if let Some(g) = g {
            fs::write(out.join(format!("island_{i}_best.exmg")), codec::serialize(g))?;
        }
    }
    fs::write(out.join(REPORT_FILE), serde_json::to_string_pretty(&report)?)?;

    let finite: Vec<f64> = report.island_bests.iter().flatten().map(|g| g.fitness).collect();
    let record = ExperimentRecord {
        label: config.label.clone(),
        fold: config.fold,
        repeat: config.repeat,
        best_fitness: report.best_fitness(),
        mean_island_best: if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        genomes_trained: report.log.len(),
    };
    fs::write(out.join(RECORD_FILE), serde_json::to_string_pretty(&record)?)?;
    Ok(ExperimentOutcome { record, report })
}

/// Predictions of the first test series, in original units when the data
/// was normalized.
fn write_test_predictions(g: &Genome, test: &TimeSeriesSet, path: &Path) -> Result<()> {
    let Some(series) = test.series.first() else { return Ok(()) };
    let view = SeriesView::for_genome(series, g)?;
    let pred = Network::compile(g).predict(&view).remove(0);
    let actual: Vec<f64> = view.shifted_targets(0);
    let (actual, pred) = denormalize(g, &actual, &pred);
    data::write_predictions(path, &actual, &pred)
}

fn denormalize(g: &Genome, actual: &[f64], pred: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match g.normalization.as_ref().and_then(|n| n.column(&g.output_names[0])) {
        Some(scale) => (
            actual.iter().map(|&y| scale.invert(y)).collect(),
            pred.iter().map(|&y| scale.invert(y)).collect(),
        ),
        None => (actual.to_vec(), pred.to_vec()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictSummary {
    pub steps: usize,
    /// In the genome's working (possibly normalized) units.
    pub mae: f64,
    pub mse: f64,
    /// MAE in original units.
    pub mae_original: f64,
}

/// Runs a stored genome over a CSV series and writes
/// `(t, actual, predicted, abs_error)` in original units.
pub fn predict(genome_path: impl AsRef<Path>, series_path: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<PredictSummary> {
    let g = codec::read_genome(genome_path.as_ref())?;
    let raw = load_csv(series_path)?;
    let series = match &g.normalization {
        Some(norm) => norm.apply(&raw)?,
        None => raw,
    };
    let view = SeriesView::for_genome(&series, &g)?;
    let net = Network::compile(&g);
    let pred = net.predict(&view).remove(0);
    let actual = view.shifted_targets(0);
    let mae = trainer::series_error(&net, &view, Metric::Mae);
    let mse = trainer::series_error(&net, &view, Metric::Mse);
    let (actual, pred) = denormalize(&g, &actual, &pred);
    let mae_original =
        actual.iter().zip(&pred).map(|(a, p)| (a - p).abs()).sum::<f64>() / actual.len().max(1) as f64;
    data::write_predictions(out, &actual, &pred)?;
    Ok(PredictSummary { steps: actual.len(), mae, mse, mae_original })
}

/// Which per-run statistic is aggregated over repeats before ranking.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankStatistic {
    /// Mean of the repeats' best fitness.
    #[default]
    Average,
    /// Minimum of the repeats' best fitness.
    Best,
}

impl FromStr for RankStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" | "avg" | "mean" => Ok(RankStatistic::Average),
            "best" | "min" => Ok(RankStatistic::Best),
            _ => Err(Error::Config(format!("unknown ranking statistic {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub label: String,
    /// Mean over folds of the standardized deviation from the fold mean.
    pub score: f64,
    pub folds: usize,
}

/// Per fold, standardizes each experiment's statistic by the fold's mean and
/// population standard deviation, then averages over folds. Lower is better.
/// A fold whose values are all equal contributes 0.
pub fn rank_experiments(records: &[ExperimentRecord], statistic: RankStatistic) -> Result<Vec<RankRow>> {
    let mut seen = BTreeSet::new();
    let mut grouped: BTreeMap<usize, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in records {
        if !seen.insert((r.label.as_str(), r.fold, r.repeat)) {
            return Err(Error::Config(format!(
                "duplicate record for {} fold {} repeat {}",
                r.label, r.fold, r.repeat
            )));
        }
        grouped.entry(r.fold).or_default().entry(&r.label).or_default().push(r.best_fitness);
    }
    let mut scores: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (fold, by_label) in &grouped {
        if by_label.len() < 2 {
            return Err(Error::Config(format!("fold {fold} has fewer than two experiments")));
        }
        let values: Vec<(&str, f64)> = by_label
            .iter()
            .map(|(label, v)| {
                let x = match statistic {
                    RankStatistic::Average => v.iter().sum::<f64>() / v.len() as f64,
                    RankStatistic::Best => v.iter().copied().fold(f64::INFINITY, f64::min),
                };
                (*label, x)
            })
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().map(|v| v.1).sum::<f64>() / n;
        let std = (values.iter().map(|v| (v.1 - mean).powi(2)).sum::<f64>() / n).sqrt();
        for (label, x) in values {
            let z = if std > 0.0 { (x - mean) / std } else { 0.0 };
            let e = scores.entry(label).or_insert((0.0, 0));
            e.0 += z;
            e.1 += 1;
        }
    }
    let mut rows: Vec<RankRow> = scores
        .into_iter()
        .map(|(label, (sum, folds))| RankRow { label: label.to_string(), score: sum / folds as f64, folds })
        .collect();
    rows.sort_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.label.cmp(&b.label)));
    Ok(rows)
}

/// Reads records from JSON (one record or an array) or CSV with columns
/// `label, fold, repeat, best_fitness[, mean_island_best, genomes_trained]`.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        return Ok(if value.is_array() {
            serde_json::from_value(value)?
        } else {
            vec![serde_json::from_value(value)?]
        });
    }
    #[derive(Deserialize)]
    struct Row {
        label: String,
        fold: usize,
        repeat: usize,
        best_fitness: f64,
        mean_island_best: Option<f64>,
        genomes_trained: Option<usize>,
    }
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize::<Row>()
        .map(|r| {
            let r = r?;
            Ok(ExperimentRecord {
                label: r.label,
                fold: r.fold,
                repeat: r.repeat,
                best_fitness: r.best_fitness,
                mean_island_best: r.mean_island_best.unwrap_or(f64::NAN),
                genomes_trained: r.genomes_trained.unwrap_or(0),
            })
        })
        .collect()
}

pub fn write_records(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label", "fold", "repeat", "best_fitness", "mean_island_best", "genomes_trained"])?;
    for r in records {
        w.write_record([
            r.label.clone(),
            r.fold.to_string(),
            r.repeat.to_string(),
            r.best_fitness.to_string(),
            r.mean_island_best.to_string(),
            r.genomes_trained.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every fold × `repeats` sequentially under `out_dir/fold{f}/repeat{r}`
/// with seeds `seed + repeat`, and writes `records.csv`.
pub fn run_matrix(config: &RunConfig, repeats: usize) -> Result<Vec<ExperimentRecord>> {
    let mut records = Vec::new();
    for fold in 0..config.fold_count()? {
        for repeat in 0..repeats {
            let mut c = config.clone();
            c.fold = fold;
            c.repeat = repeat;
            c.seed = config.seed.wrapping_add(repeat as u64);
            c.out_dir = config.out_dir.join(format!("fold{fold}")).join(format!("repeat{repeat}"));
            records.push(run_experiment(&c)?.record);
        }
    }
    fs::create_dir_all(&config.out_dir)?;
    write_records(config.out_dir.join("records.csv"), &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for s in ["simple", "simple+rec", "all", "all+rec", "lstm", "delta+simple+rec", "gru+rec", "ugrnn+simple"] {
            assert_eq!(s.parse::<ExperimentLabel>().unwrap().to_string(), s);
        }
        for s in ["", "simple+simple", "lstm+rec+simple", "foo", "lstm+rec+rec"] {
            assert!(s.parse::<ExperimentLabel>().is_err(), "{s}");
        }
    }

    #[test]
    fn label_sets_cells_and_recurrence() {
        let mut c = RunConfig::default();
        c.apply_label(&"mgu+simple".parse().unwrap());
        assert_eq!(c.allowed_cells(), vec![CellKind::Simple, CellKind::Mgu]);
        assert_eq!(c.engine_config().ops.max_time_skip, 1);
        c.apply_label(&"lstm+rec".parse().unwrap());
        assert_eq!(c.allowed_cells(), vec![CellKind::Lstm]);
        assert_eq!(c.engine_config().ops.max_time_skip, DEFAULT_MAX_TIME_SKIP);
        c.recurrent_edges = false;
        assert!(!c.engine_config().ops.mutation_weights.contains_key(&OperatorKind::AddRecurrentEdge));
    }

    fn rec(label: &str, fold: usize, repeat: usize, v: f64) -> ExperimentRecord {
        ExperimentRecord {
            label: label.into(),
            fold,
            repeat,
            best_fitness: v,
            mean_island_best: v,
            genomes_trained: 0,
        }
    }

    #[test]
    fn equal_values_rank_zero() {
        let rows = rank_experiments(&[rec("a", 0, 0, 1.0), rec("b", 0, 0, 1.0)], RankStatistic::Best).unwrap();
        assert!(rows.iter().all(|r| r.score == 0.0));
    }

    #[test]
    fn single_experiment_fold_is_an_error() {
        assert!(rank_experiments(&[rec("a", 0, 0, 1.0)], RankStatistic::Best).is_err());
        assert!(rank_experiments(&[rec("a", 0, 0, 1.0), rec("a", 0, 0, 2.0)], RankStatistic::Best).is_err());
    }

    #[test]
    fn repeats_aggregate_before_ranking() {
        // a: mean 2, min 1; b: 3
        let rs = [rec("a", 0, 0, 1.0), rec("a", 0, 1, 3.0), rec("b", 0, 0, 3.0)];
        let avg = rank_experiments(&rs, RankStatistic::Average).unwrap();
        assert_eq!(avg[0].label, "a");
        assert_eq!(avg[0].score, -1.0);
        let best = rank_experiments(&rs, RankStatistic::Best).unwrap();
        assert_eq!(best[0].score, -1.0);
    }
}
