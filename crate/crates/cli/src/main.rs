use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use examm::codec;
use examm::data::{write_csv, NormalizeMode};
use examm::engine::Scheduling;
use examm::experiment::{self, ExperimentLabel, RankStatistic, RunConfig};
use examm::synth::{synth_series, SynthKind, SynthParams};
use examm::trainer::Metric;
use examm::CellKind;

#[derive(Parser)]
#[command(name = "examm", version, about = "Evolve recurrent networks for time-series prediction", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, or the whole fold x repeat grid with --matrix.
    Evolve(Box<EvolveArgs>),
    /// Run a stored genome over a CSV series.
    Predict {
        genome: PathBuf,
        series: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rank experiments by standard deviations from the per-fold mean.
    Rank {
        /// records.csv / record.json files, or directories holding them.
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value = "average")]
        statistic: RankStatistic,
        /// Also write the table to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic series as CSV files.
    Synth {
        kind: SynthKind,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        lag: usize,
        /// Number of series, seeded `seed, seed + 1, ...`.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Print or export a stored genome.
    Inspect {
        genome: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Summary)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Summary,
    Dot,
    Json,
}

#[derive(Args)]
struct EvolveArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    data: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    test_data: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<String>,
    #[arg(long)]
    output: Option<String>,
    /// e.g. simple, simple+rec, lstm+simple+rec, all+rec
    #[arg(long)]
    label: Option<ExperimentLabel>,
    #[arg(long)]
    islands: Option<usize>,
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, env = "EXAMM_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    fold: Option<usize>,
    #[arg(long)]
    fold_size: Option<usize>,
    #[arg(long)]
    repeat: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    max_time_skip: Option<u32>,
    /// Extra cell kinds for new nodes, comma separated.
    #[arg(long, value_delimiter = ',')]
    cells: Vec<CellKind>,
    #[arg(long)]
    no_recurrent_edges: bool,
    #[arg(long)]
    normalize: Option<NormalizeMode>,
    /// Insert results as they arrive instead of in generation order.
    #[arg(long)]
    eager: bool,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    record_wallclock: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every fold with --repeats repeats.
    #[arg(long)]
    matrix: bool,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

impl EvolveArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => RunConfig::default(),
        };
        if !self.data.is_empty() {
            c.data = self.data;
        }
        if !self.test_data.is_empty() {
            c.test_data = self.test_data;
        }
        if !self.inputs.is_empty() {
            c.inputs = self.inputs;
        }
        if let Some(v) = self.label {
            c.apply_label(&v);
        }
        if !self.cells.is_empty() {
            c.cell_kinds = self.cells;
        }
        macro_rules! set {
            ($($field:ident).+ <- $value:expr) => {
                if let Some(v) = $value {
                    c.$($field).+ = v;
                }
            };
        }
        set!(output <- self.output);
        set!(islands <- self.islands);
        set!(population_size <- self.population_size);
        set!(budget <- self.budget);
        set!(seed <- self.seed);
        set!(workers <- self.workers);
        set!(fold <- self.fold);
        set!(fold_size <- self.fold_size);
        set!(repeat <- self.repeat);
        set!(train.epochs <- self.epochs);
        set!(train.learning_rate <- self.learning_rate);
        set!(train.metric <- self.metric);
        set!(max_time_skip <- self.max_time_skip);
        set!(normalize <- self.normalize);
        set!(out_dir <- self.out);
        if self.no_recurrent_edges {
            c.recurrent_edges = false;
        }
        if self.eager {
            c.scheduling = Scheduling::Eager;
        } else if let Some(window) = self.window {
            c.scheduling = Scheduling::Ordered { window };
        }
        if self.record_wallclock {
            c.record_wallclock = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn evolve(args: EvolveArgs) -> Result<()> {
    let (matrix, repeats) = (args.matrix, args.repeats);
    let config = args.into_config()?;
    if matrix {
        let records = experiment::run_matrix(&config, repeats)?;
        for r in &records {
            println!("{} fold {} repeat {}: best {:.6}", r.label, r.fold, r.repeat, r.best_fitness);
        }
        println!("wrote {}", config.out_dir.join("records.csv").display());
        return Ok(());
    }
    let outcome = experiment::run_experiment(&config)?;
    let r = &outcome.report;
    println!(
        "{} fold {} repeat {}: best {:.6} after {} genomes ({} failures)",
        outcome.record.label,
        outcome.record.fold,
        outcome.record.repeat,
        outcome.record.best_fitness,
        r.log.len(),
        r.failures
    );
    println!("wrote {}", config.out_dir.display());
    Ok(())
}

fn rank(paths: Vec<PathBuf>, statistic: RankStatistic, out: Option<PathBuf>) -> Result<()> {
    let mut records = Vec::new();
    for p in paths {
        let file = if p.is_dir() {
            [experiment::RECORD_FILE, "records.csv"]
                .iter()
                .map(|f| p.join(f))
                .find(|f| f.is_file())
                .with_context(|| format!("no records in {}", p.display()))?
        } else {
            p
        };
        records.extend(experiment::read_records(&file).with_context(|| format!("reading {}", file.display()))?);
    }
    let rows = experiment::rank_experiments(&records, statistic)?;
    let mut table = String::from("rank,label,score,folds\n");
    for (i, row) in rows.iter().enumerate() {
        table.push_str(&format!("{},{},{:.6},{}\n", i + 1, row.label, row.score, row.folds));
    }
    print!("{table}");
    if let Some(out) = out {
        fs::write(&out, table).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn inspect(path: PathBuf, format: Format, out: Option<PathBuf>) -> Result<()> {
    let g = codec::read_genome(&path).with_context(|| format!("reading {}", path.display()))?;
    let text = match format {
        Format::Dot => codec::export_dot(&g),
        Format::Json => codec::to_json(&g)?,
        Format::Summary => {
            let (nodes, edges, rec) = g.size();
            let mut cells: Vec<String> = g.nodes.iter().filter(|n| n.is_hidden()).map(|n| n.cell.to_string()).collect();
            cells.sort();
            cells.dedup();
            let max_skip = g.rec_edges.iter().map(|e| e.time_skip).max().unwrap_or(0);
            format!(
                "genome {} (island {}, {})\nfitness {}\nnodes {nodes} ({} enabled), edges {edges} ({} enabled), recurrent {rec} ({} enabled, max skip {max_skip})\nhidden cells: {}\nparameters {}\n",
                g.generation_id,
                g.island,
                g.lineage.operator_name(),
                g.fitness,
                g.enabled_node_count(),
                g.enabled_edge_count(),
                g.enabled_rec_edge_count(),
                if cells.is_empty() { "none".into() } else { cells.join(", ") },
                g.parameter_count()
            )
        }
    };
    match out {
        Some(out) => fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Evolve(args) => evolve(*args),
        Command::Predict { genome, series, out } => {
            fs::create_dir_all(&out)?;
            let path = out.join(experiment::PREDICTIONS_FILE);
            let s = experiment::predict(&genome, &series, &path)?;
            println!("steps {}  mae {:.6}  mse {:.6}  mae (original units) {:.6}", s.steps, s.mae, s.mse, s.mae_original);
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Rank { records, statistic, out } => rank(records, statistic, out),
        Command::Synth { kind, length, noise, seed, lag, count, out } => {
            if count == 0 {
                bail!("--count must be at least 1");
            }
            fs::create_dir_all(&out)?;
            for i in 0..count {
                let s = synth_series(kind, &SynthParams { length, noise, seed: seed + i, lag })?;
                let path = out.join(format!("{}.csv", s.name));
                write_csv(&path, &s)?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Inspect { genome, format, out } => inspect(genome, format, out),
    }
}
