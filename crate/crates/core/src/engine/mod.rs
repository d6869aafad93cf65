//! Island-based steady-state evolution. [`MasterState`] owns the islands,
//! the innovation registry and the master RNG; [`run`] drives it against a
//! pool of workers that only train.

mod report;
mod run;

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{Genome, Lineage};
use crate::innovation::InnovationRegistry;
use crate::ops::{self, MutationOutcome, OpContext, OperatorKind, OpsConfig};

pub use report::{write_epoch_log, write_fitness_log, EpochLoss, InsertionRecord, LogRecord, RunReport};
pub use run::{run, BpttEvaluator, Evaluated, Evaluator, Scheduling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorRates {
    pub mutation: f64,
    pub intra_crossover: f64,
    pub inter_crossover: f64,
}

impl Default for OperatorRates {
    fn default() -> Self {
        OperatorRates { mutation: 0.7, intra_crossover: 0.2, inter_crossover: 0.1 }
    }
}

impl OperatorRates {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mutation, self.intra_crossover, self.inter_crossover];
        if all.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config("operator rates must lie in [0, 1]".into()));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("operator rates must sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub islands: usize,
    pub population_size: usize,
    /// Evolved candidates to generate; warm-up seeds are not counted.
    pub budget: usize,
    pub rates: OperatorRates,
    pub ops: OpsConfig,
    pub seed: u64,
    pub workers: usize,
    pub scheduling: Scheduling,
    /// Record training time in the fitness log. Off keeps logs byte-identical
    /// across runs.
    pub record_wallclock: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            islands: 10,
            population_size: 5,
            budget: 2000,
            rates: OperatorRates::default(),
            ops: OpsConfig::default(),
            seed: 0,
            workers: 1,
            scheduling: Scheduling::default(),
            record_wallclock: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.islands < 1 || self.population_size < 1 {
            return Err(Error::Config("need at least one island with capacity of at least one".into()));
        }
        if self.workers < 1 {
            return Err(Error::Config("need at least one worker".into()));
        }
        self.rates.validate()?;
        self.ops.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Island {
    pub id: usize,
    pub capacity: usize,
    /// Sorted by fitness, best first.
    pub population: Vec<Genome>,
}

impl Island {
    pub fn new(id: usize, capacity: usize) -> Self {
        Island { id, capacity, population: Vec::with_capacity(capacity) }
    }

    pub fn len(&self) -> usize {
        self.population.len()
    }

    pub fn is_empty(&self) -> bool {
        self.population.is_empty()
    }

    pub fn best(&self) -> Option<&Genome> {
        self.population.first()
    }

    pub fn worst(&self) -> Option<&Genome> {
        self.population.last()
    }

    pub fn fitnesses(&self) -> Vec<f64> {
        self.population.iter().map(|g| g.fitness).collect()
    }

    /// Steady-state insertion. Equal fitness to the worst is rejected.
    pub fn insert(&mut self, genome: Genome) -> Insertion {
        if !genome.fitness.is_finite() || !genome.outputs_reachable() {
            return Insertion::Rejected;
        }
        let mut evicted = None;
        if self.population.len() >= self.capacity {
            match self.worst() {
                Some(w) if genome.fitness < w.fitness => {
                    evicted = self.population.pop().map(|g| g.generation_id);
                }
                _ => return Insertion::Rejected,
            }
        }
        let at = self.population.partition_point(|g| g.fitness <= genome.fitness);
        self.population.insert(at, genome);
        Insertion::Inserted { evicted }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Insertion {
    Inserted { evicted: Option<u64> },
    Rejected,
}

impl Insertion {
    pub fn is_inserted(self) -> bool {
        matches!(self, Insertion::Inserted { .. })
    }
}

/// Bound on regenerating a child whose outputs became unreachable.
const REGENERATE_ATTEMPTS: usize = 1000;

pub struct MasterState {
    pub config: EngineConfig,
    pub islands: Vec<Island>,
    pub registry: InnovationRegistry,
    input_names: Vec<String>,
    output_names: Vec<String>,
    cursor: usize,
    rng: ChaCha8Rng,
    seeds_issued: Vec<usize>,
    pending_seeds: usize,
    next_id: u64,
    generated: usize,
    discarded: usize,
    /// Islands owed a replacement candidate after a worker failure.
    replacements: VecDeque<usize>,
    best: Option<Genome>,
}

impl MasterState {
    pub fn new(config: EngineConfig, input_names: Vec<String>, output_names: Vec<String>) -> Result<Self> {
        config.validate()?;
        if input_names.is_empty() || output_names.is_empty() {
            return Err(Error::Config("need at least one input and one output column".into()));
        }
        let islands = (0..config.islands).map(|i| Island::new(i, config.population_size)).collect();
        Ok(MasterState {
            registry: InnovationRegistry::new(input_names.len(), output_names.len()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            seeds_issued: vec![0; config.islands],
            pending_seeds: 0,
            islands,
            input_names,
            output_names,
            cursor: 0,
            next_id: 0,
            generated: 0,
            discarded: 0,
            replacements: VecDeque::new(),
            best: None,
            config,
        })
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Evolved candidates generated so far (seeds and replacements excluded).
    pub fn generated(&self) -> usize {
        self.generated
    }

    /// Children thrown away for unreachable outputs and regenerated.
    pub fn discarded(&self) -> usize {
        self.discarded
    }

    pub fn best(&self) -> Option<&Genome> {
        self.best.as_ref()
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    /// Training RNG for a genome, independent of which worker runs it.
    pub fn training_rng(seed: u64, genome_id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(genome_id.wrapping_add(1));
        rng
    }

    fn in_warm_up(&self, island: usize) -> bool {
        self.seeds_issued[island] < self.config.population_size || self.islands[island].is_empty()
    }

    fn next_island(&self) -> usize {
        self.replacements.front().copied().unwrap_or(self.cursor)
    }

    /// False while seed results are outstanding and the next candidate would
    /// need a populated island. Schedulers wait on this so that evolution
    /// never starts from a half-filled population.
    pub fn ready(&self) -> bool {
        self.pending_seeds == 0 || self.seeds_issued[self.next_island()] < self.config.population_size
    }

    /// True once the budget is spent and every island has been seeded.
    pub fn exhausted(&self) -> bool {
        self.replacements.is_empty()
            && self.generated >= self.config.budget
            && self.seeds_issued.iter().all(|&n| n >= self.config.population_size)
    }

    /// Next candidate in round-robin island order, or `None` once
    /// [`exhausted`](Self::exhausted). Warm-up seeds are not counted against
    /// the budget.
    pub fn generate_candidate(&mut self) -> Option<Genome> {
        if self.exhausted() {
            return None;
        }
        let (island, replacement) = match self.replacements.pop_front() {
            Some(i) => (i, true),
            None => loop {
                let i = self.cursor;
                self.cursor = (self.cursor + 1) % self.islands.len();
                if self.in_warm_up(i) || self.generated < self.config.budget {
                    break (i, false);
                }
            },
        };
        let mut g = if self.in_warm_up(island) {
            self.seeds_issued[island] += 1;
            self.pending_seeds += 1;
            ops::seed_genome(&self.input_names, &self.output_names, &mut self.registry, &mut self.rng)
        } else {
            if !replacement {
                self.generated += 1;
            }
            self.evolve(island)
        };
        g.generation_id = self.next_id;
        g.island = island;
        g.fitness = f64::INFINITY;
        self.next_id += 1;
        Some(g)
    }

    fn draw_class(&mut self, island: usize) -> OperatorKind {
        let r = self.config.rates;
        let others = self.islands.iter().any(|i| i.id != island && !i.is_empty());
        loop {
            let u: f64 = self.rng.random();
            let kind = if u < r.mutation {
                OperatorKind::Clone
            } else if u < r.mutation + r.intra_crossover {
                OperatorKind::CrossoverIntra
            } else {
                OperatorKind::CrossoverInter
            };
            let ok = match kind {
                OperatorKind::CrossoverIntra => self.islands[island].len() >= 2,
                OperatorKind::CrossoverInter => self.islands[island].len() >= 2 && others,
                _ => true,
            };
            if ok {
                return kind;
            }
            if self.islands[island].len() < 2 && r.mutation <= 0.0 {
                return OperatorKind::Clone;
            }
        }
    }

    fn evolve(&mut self, island: usize) -> Genome {
        match self.draw_class(island) {
            OperatorKind::CrossoverIntra => {
                let pop = &self.islands[island].population;
                let pair: Vec<&Genome> = pop.choose_multiple(&mut self.rng, 2).collect();
                let (a, b) = if pair[0].fitness <= pair[1].fitness { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
                let mut child = ops::crossover(a, b, &mut self.rng);
                child.lineage.operator = Some(OperatorKind::CrossoverIntra);
                child
            }
            OperatorKind::CrossoverInter => {
                let local = self.islands[island].population.choose(&mut self.rng).unwrap();
                let other = self
                    .islands
                    .iter()
                    .filter(|i| i.id != island)
                    .filter_map(|i| i.best())
                    .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
                    .unwrap();
                let (a, b) = if local.fitness <= other.fitness { (local, other) } else { (other, local) };
                let mut child = ops::crossover(a, b, &mut self.rng);
                child.lineage.operator = Some(OperatorKind::CrossoverInter);
                child
            }
            _ => self.mutate_member(island),
        }
    }

    fn mutate_member(&mut self, island: usize) -> Genome {
        let parent = self.islands[island].population.choose(&mut self.rng).unwrap().clone();
        for _ in 0..REGENERATE_ATTEMPTS {
            let mut ctx = OpContext { rng: &mut self.rng, registry: &mut self.registry, config: &self.config.ops };
            match ops::mutate(&parent, &mut ctx) {
                MutationOutcome::Child { genome, .. } => return genome,
                MutationOutcome::Discarded { .. } => self.discarded += 1,
            }
        }
        let mut g = ops::clone_genome(&parent);
        g.lineage = Lineage { operator: Some(OperatorKind::Clone), parents: vec![parent.generation_id] };
        g
    }

    /// Steady-state insertion into the genome's island of origin.
    pub fn insert_result(&mut self, genome: Genome) -> Insertion {
        let island = genome.island.min(self.islands.len() - 1);
        if genome.lineage.operator.is_none() {
            self.pending_seeds = self.pending_seeds.saturating_sub(1);
        }
        if genome.fitness.is_finite() && self.best.as_ref().is_none_or(|b| genome.fitness < b.fitness) {
            self.best = Some(genome.clone());
        }
        self.islands[island].insert(genome)
    }

    /// A worker failed on `candidate`: the next candidate is a fresh one for
    /// the same island that does not consume budget again.
    pub fn report_failure(&mut self, candidate: &Genome) {
        let island = candidate.island.min(self.islands.len() - 1);
        if candidate.lineage.operator.is_none() {
            self.pending_seeds = self.pending_seeds.saturating_sub(1);
            self.seeds_issued[island] = self.seeds_issued[island].saturating_sub(1);
        }
        self.replacements.push_back(island);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::fixtures::*;
    use crate::genome::NodeKind;

    fn with_fitness(f: f64, id: u64) -> Genome {
        let mut g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)],
            vec![edge(0, 0, 1, 0.1)],
            vec![],
        );
        g.fitness = f;
        g.generation_id = id;
        g
    }

    #[test]
    fn insert_between_members_evicts_worst() {
        let mut island = Island::new(0, 5);
        for (i, f) in [1.0, 2.0, 3.0, 4.0, 5.0].into_iter().enumerate() {
            assert!(island.insert(with_fitness(f, i as u64)).is_inserted());
        }
        assert_eq!(island.insert(with_fitness(6.0, 9)), Insertion::Rejected);
        assert_eq!(island.insert(with_fitness(5.0, 9)), Insertion::Rejected);
        assert_eq!(island.insert(with_fitness(3.5, 7)), Insertion::Inserted { evicted: Some(4) });
        assert_eq!(island.fitnesses(), vec![1.0, 2.0, 3.0, 3.5, 4.0]);
    }

    #[test]
    fn empty_island_always_accepts_finite() {
        let mut island = Island::new(0, 5);
        assert!(island.insert(with_fitness(1e9, 0)).is_inserted());
        assert_eq!(island.insert(with_fitness(f64::INFINITY, 1)), Insertion::Rejected);
    }

    fn master(rates: OperatorRates, budget: usize) -> MasterState {
        let cfg = EngineConfig { islands: 3, population_size: 2, budget, rates, ..Default::default() };
        MasterState::new(cfg, vec!["x".into()], vec!["y".into()]).unwrap()
    }

    #[test]
    fn warm_up_emits_capacity_seeds_per_island_first() {
        let mut m = master(OperatorRates::default(), 5);
        for i in 0..6 {
            let g = m.generate_candidate().unwrap();
            assert_eq!(g.lineage.operator, None);
            assert_eq!(g.island, i % 3);
            let mut g = g;
            g.fitness = 1.0 + i as f64;
            m.insert_result(g);
        }
        let g = m.generate_candidate().unwrap();
        assert!(g.lineage.operator.is_some());
        assert_eq!(m.generated(), 1);
    }

    #[test]
    fn budget_zero_yields_only_seeds() {
        let mut m = master(OperatorRates::default(), 0);
        let mut n = 0;
        while let Some(mut g) = m.generate_candidate() {
            assert!(g.lineage.operator.is_none());
            g.fitness = 0.5;
            m.insert_result(g);
            n += 1;
        }
        assert_eq!(n, 6);
    }

    #[test]
    fn rates_must_sum_to_one() {
        let bad = OperatorRates { mutation: 0.5, intra_crossover: 0.2, inter_crossover: 0.1 };
        assert!(bad.validate().is_err());
        assert!(OperatorRates::default().validate().is_ok());
    }
}
