use std::collections::{BTreeMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{EpochLoss, InsertionRecord, LogRecord, RunReport};
use super::MasterState;
use crate::data::TimeSeriesSet;
use crate::error::Result;
use crate::genome::Genome;
use crate::par::Exec;
use crate::trainer::{self, TrainConfig};

/// How results are fed back to the master.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduling {
    /// Results are inserted in generation order and candidate `i` is
    /// generated once exactly the results before `i - window` are in. The
    /// run is then identical for any worker count.
    Ordered { window: usize },
    /// Results are inserted as they complete and a candidate is generated
    /// whenever a worker asks. Depends on timing.
    Eager,
}

impl Default for Scheduling {
    fn default() -> Self {
        Scheduling::Ordered { window: 8 }
    }
}

/// A trained candidate with its fitness set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub genome: Genome,
    pub epoch_losses: Vec<f64>,
}

impl From<Genome> for Evaluated {
    fn from(genome: Genome) -> Self {
        Evaluated { genome, epoch_losses: Vec::new() }
    }
}

/// Trains one candidate and assigns its fitness.
pub trait Evaluator: Sync {
    fn evaluate(&self, candidate: &Genome, rng: &mut ChaCha8Rng) -> Result<Evaluated>;
}

/// Trains on `train` with BPTT and scores on `test`.
pub struct BpttEvaluator {
    pub train: TimeSeriesSet,
    pub test: TimeSeriesSet,
    pub config: TrainConfig,
    pub exec: Exec,
}

impl Evaluator for BpttEvaluator {
    fn evaluate(&self, candidate: &Genome, rng: &mut ChaCha8Rng) -> Result<Evaluated> {
        let trained = trainer::train(candidate, &self.train, &self.config, rng)?;
        let mut genome = trained.genome;
        genome.fitness = trainer::evaluate(&genome, &self.test, self.config.metric, self.exec)?;
        Ok(Evaluated { genome, epoch_losses: trained.epoch_losses })
    }
}

struct WorkItem {
    candidate: Genome,
}

struct WorkResult {
    candidate: Genome,
    outcome: std::result::Result<Evaluated, String>,
    wallclock_ms: u64,
}

enum ToMaster {
    RequestWork(usize),
    SubmitResult(Box<WorkResult>),
}

fn execute(evaluator: &dyn Evaluator, seed: u64, item: WorkItem) -> WorkResult {
    let start = Instant::now();
    let mut rng = MasterState::training_rng(seed, item.candidate.generation_id);
    let outcome = match catch_unwind(AssertUnwindSafe(|| evaluator.evaluate(&item.candidate, &mut rng))) {
        Ok(Ok(g)) => Ok(g),
        Ok(Err(e)) => Err(e.to_string()),
        Err(panic) => Err(panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "worker panicked".into())),
    };
    WorkResult { candidate: item.candidate, outcome, wallclock_ms: start.elapsed().as_millis() as u64 }
}

/// Master-side bookkeeping shared by the inline and threaded loops.
struct Ledger<'a> {
    master: &'a mut MasterState,
    order: Scheduling,
    issued: u64,
    next_insert: u64,
    buffered: BTreeMap<u64, WorkResult>,
    queue: VecDeque<WorkItem>,
    report: RunReport,
}

impl<'a> Ledger<'a> {
    fn new(master: &'a mut MasterState) -> Self {
        let islands = master.islands.len();
        Ledger {
            order: master.config.scheduling,
            master,
            issued: 0,
            next_insert: 0,
            buffered: BTreeMap::new(),
            queue: VecDeque::new(),
            report: RunReport {
                best: None,
                island_bests: vec![None; islands],
                log: Vec::new(),
                epoch_losses: Vec::new(),
                insertions: Vec::new(),
                seeds: 0,
                generated: 0,
                discarded: 0,
                failures: 0,
            },
        }
    }

    /// Generates every candidate whose window is open. Called at start and
    /// after each ordered insertion, so candidate `i` always sees exactly
    /// the results before `i - window`.
    fn top_up(&mut self) {
        let Scheduling::Ordered { window } = self.order else { return };
        while self.issued <= self.next_insert + window as u64 && self.master.ready() {
            let Some(candidate) = self.master.generate_candidate() else { break };
            debug_assert_eq!(candidate.generation_id, self.issued);
            self.issued += 1;
            self.queue.push_back(WorkItem { candidate });
        }
    }

    fn next_item(&mut self) -> Option<WorkItem> {
        match self.order {
            Scheduling::Ordered { .. } => self.queue.pop_front(),
            Scheduling::Eager => {
                if !self.master.ready() {
                    return None;
                }
                let candidate = self.master.generate_candidate()?;
                self.issued += 1;
                Some(WorkItem { candidate })
            }
        }
    }

    fn accept(&mut self, result: WorkResult) {
        match self.order {
            Scheduling::Eager => self.insert(result),
            Scheduling::Ordered { .. } => {
                self.buffered.insert(result.candidate.generation_id, result);
                while let Some(r) = self.buffered.remove(&self.next_insert) {
                    self.insert(r);
                    self.next_insert += 1;
                    self.top_up();
                }
            }
        }
    }

    fn insert(&mut self, r: WorkResult) {
        let ms = if self.master.config.record_wallclock { r.wallclock_ms } else { 0 };
        match r.outcome {
            Ok(Evaluated { genome: mut g, epoch_losses }) => {
                self.report.epoch_losses.extend(epoch_losses.into_iter().enumerate().map(|(epoch, loss)| EpochLoss {
                    genome_id: r.candidate.generation_id,
                    epoch,
                    loss,
                }));
                g.generation_id = r.candidate.generation_id;
                g.island = r.candidate.island;
                g.lineage = r.candidate.lineage.clone();
                if g.lineage.operator.is_none() {
                    self.report.seeds += 1;
                }
                self.report.log.push(LogRecord::new(&g, ms));
                let (id, island) = (g.generation_id, g.island);
                let inserted = self.master.insert_result(g).is_inserted();
                self.report.insertions.push(InsertionRecord {
                    genome_id: id,
                    island,
                    inserted,
                    population: self.master.islands[island].fitnesses(),
                });
            }
            Err(_) => {
                self.report.failures += 1;
                let mut failed = r.candidate.clone();
                failed.fitness = f64::INFINITY;
                self.report.log.push(LogRecord::new(&failed, ms));
                self.master.report_failure(&r.candidate);
            }
        }
    }

    fn finish(mut self) -> RunReport {
        self.report.best = self.master.best().cloned();
        self.report.island_bests = self.master.islands.iter().map(|i| i.best().cloned()).collect();
        self.report.generated = self.master.generated();
        self.report.discarded = self.master.discarded();
        self.report
    }
}

/// Runs the master until its budget is spent and all work has drained.
/// One worker runs inline on the calling thread.
pub fn run(master: &mut MasterState, evaluator: &dyn Evaluator) -> RunReport {
    let workers = master.config.workers.max(1);
    let seed = master.config.seed;
    let mut ledger = Ledger::new(master);
    ledger.top_up();
    if workers == 1 {
        let mut queue = VecDeque::new();
        loop {
            while let Some(item) = ledger.next_item() {
                queue.push_back(item);
            }
            let Some(item) = queue.pop_front() else { break };
            let result = execute(evaluator, seed, item);
            ledger.accept(result);
        }
        return ledger.finish();
    }

    thread::scope(|scope| {
        let (to_master, inbox) = mpsc::channel::<ToMaster>();
        let mut outboxes = Vec::with_capacity(workers);
        for w in 0..workers {
            let (tx, rx) = mpsc::channel::<Option<WorkItem>>();
            outboxes.push(tx);
            let to_master = to_master.clone();
            scope.spawn(move || {
                if to_master.send(ToMaster::RequestWork(w)).is_err() {
                    return;
                }
                while let Ok(Some(item)) = rx.recv() {
                    let result = execute(evaluator, seed, item);
                    if to_master.send(ToMaster::SubmitResult(Box::new(result))).is_err() {
                        return;
                    }
                    if to_master.send(ToMaster::RequestWork(w)).is_err() {
                        return;
                    }
                }
            });
        }
        drop(to_master);

        let mut idle: VecDeque<usize> = VecDeque::new();
        let mut outstanding = 0usize;
        loop {
            while let Some(&w) = idle.front() {
                let Some(item) = ledger.next_item() else { break };
                idle.pop_front();
                outstanding += 1;
                let _ = outboxes[w].send(Some(item));
            }
            if outstanding == 0 && idle.len() == workers {
                break;
            }
            match inbox.recv() {
                Ok(ToMaster::RequestWork(w)) => idle.push_back(w),
                Ok(ToMaster::SubmitResult(result)) => {
                    outstanding -= 1;
                    ledger.accept(*result);
                }
                Err(_) => break,
            }
        }
        for tx in &outboxes {
            let _ = tx.send(None);
        }
    });
    ledger.finish()
}
