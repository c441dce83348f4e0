//! The generational loop: ramped initialization, tournament selection,
//! subtree crossover and mutation, elitism.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tree::{crossover, mutate, ExprTree, TreeGen};
use crate::metrics;
use crate::policy::{PolicyMode, UrgencyPolicy};
use crate::sim::{run_scenario, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum GpError {
    #[error("invalid GP configuration: {0}")]
    Config(String),
    #[error("individual {0} has no fitness")]
    Unevaluated(u64),
    #[error("empty population")]
    EmptyPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub population_size: usize,
    pub generations: usize,
    pub init_min_depth: usize,
    pub max_depth: usize,
    pub elitism: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population_size: 100,
            generations: 51,
            init_min_depth: 3,
            max_depth: 6,
            elitism: 1,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        let bad = |m: &str| Err(GpError::Config(m.to_string()));
        if self.population_size == 0 || self.generations == 0 || self.tournament_size == 0 {
            return bad("population_size, generations and tournament_size must be positive");
        }
        if self.max_depth == 0 || self.init_min_depth > self.max_depth {
            return bad("need 0 <= init_min_depth <= max_depth and max_depth > 0");
        }
        if self.elitism > self.population_size {
            return bad("elitism cannot exceed population_size");
        }
        let rates = [self.crossover_rate, self.mutation_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || self.crossover_rate + self.mutation_rate > 1.0 + 1e-12 {
            return bad("crossover_rate and mutation_rate must be in [0,1] with sum <= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub tree: ExprTree,
    /// ATT in seconds; lower is better.
    pub fitness: Option<f64>,
    pub id: u64,
    pub birth: usize,
}

/// Fitness first, then smaller tree, then earlier id.
fn rank(a: &Individual, b: &Individual) -> Ordering {
    let fa = a.fitness.unwrap_or(f64::INFINITY);
    let fb = b.fitness.unwrap_or(f64::INFINITY);
    fa.total_cmp(&fb)
        .then(a.tree.len().cmp(&b.tree.len()))
        .then(a.id.cmp(&b.id))
}

pub fn best_of(population: &[Individual]) -> Option<&Individual> {
    population.iter().min_by(|a, b| rank(a, b))
}

/// Tournament with replacement.
pub fn select_parent<'a, R: Rng + ?Sized>(
    population: &'a [Individual],
    tournament_size: usize,
    rng: &mut R,
) -> Result<&'a Individual, GpError> {
    if population.is_empty() {
        return Err(GpError::EmptyPopulation);
    }
    let mut best: Option<&Individual> = None;
    for _ in 0..tournament_size.max(1) {
        let cand = &population[rng.random_range(0..population.len())];
        if cand.fitness.is_none() {
            return Err(GpError::Unevaluated(cand.id));
        }
        if best.is_none_or(|b| rank(cand, b) == Ordering::Less) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one draw"))
}

/// Named random streams derived from a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Selection = 2,
    Variation = 3,
    Flow = 4,
    Controller = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed for a derived stream, for consumers that take a plain `u64`.
pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    stream_rng(seed, stream).random()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_att: f64,
    pub mean_att: f64,
    pub best_tree_size: usize,
    pub best_tree: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionLog {
    pub generations: Vec<GenerationStats>,
    /// Distinct trees simulated.
    pub evaluations: usize,
}

impl EvolutionLog {
    pub fn initial_best(&self) -> Option<f64> {
        self.generations.first().map(|g| g.best_att)
    }

    pub fn final_best(&self) -> Option<f64> {
        self.generations.last().map(|g| g.best_att)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["generation", "best_att", "mean_att", "best_tree_size", "best_tree"])?;
        for g in &self.generations {
            w.write_record([
                g.generation.to_string(),
                format!("{:.4}", g.best_att),
                format!("{:.4}", g.mean_att),
                g.best_tree_size.to_string(),
                g.best_tree.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> csv::Result<EvolutionLog> {
        let mut r = csv::Reader::from_reader(input);
        let generations = r.deserialize().collect::<csv::Result<Vec<GenerationStats>>>()?;
        Ok(EvolutionLog {
            generations,
            evaluations: 0,
        })
    }
}

/// ATT of one full episode under the tree's policy.
pub fn evaluate_tree(scenario: &Scenario, mode: PolicyMode, tree: &ExprTree) -> f64 {
    let mut policy = UrgencyPolicy::new(mode, tree.clone()).expect("tree terminals fit the mode");
    metrics::compute(&run_scenario(scenario, &mut policy)).att
}

/// Evolves an urgency function on `scenario`.
pub fn evolve(config: &GpConfig, scenario: &Scenario, mode: PolicyMode) -> Result<(Individual, EvolutionLog), GpError> {
    evolve_with(config, mode, |tree| evaluate_tree(scenario, mode, tree))
}

/// The loop with a caller-supplied fitness (lower is better). Fitness must be
/// deterministic; each distinct tree is evaluated once.
pub fn evolve_with<F>(config: &GpConfig, mode: PolicyMode, fitness: F) -> Result<(Individual, EvolutionLog), GpError>
where
    F: Fn(&ExprTree) -> f64 + Sync,
{
    config.validate()?;
    let gen = TreeGen::new(mode.n_vars());
    let mut init_rng = stream_rng(config.seed, Stream::Init);
    let mut sel_rng = stream_rng(config.seed, Stream::Selection);
    let mut var_rng = stream_rng(config.seed, Stream::Variation);

    let mut next_id = 0u64;
    let mut population: Vec<Individual> = gen
        .ramped_half_and_half(config.population_size, config.init_min_depth, config.max_depth, &mut init_rng)
        .into_iter()
        .map(|tree| {
            next_id += 1;
            Individual {
                tree,
                fitness: None,
                id: next_id - 1,
                birth: 0,
            }
        })
        .collect();

    let mut cache: HashMap<String, f64> = HashMap::new();
    let mut log = EvolutionLog::default();

    for g in 0..config.generations {
        evaluate_population(&mut population, &mut cache, &fitness);

        let best = best_of(&population).expect("population is non-empty").clone();
        let mean = population.iter().map(|i| i.fitness.unwrap()).sum::<f64>() / population.len() as f64;
        info!(
            "generation {g}: best {:.3} mean {:.3} size {}",
            best.fitness.unwrap(),
            mean,
            best.tree.len()
        );
        log.generations.push(GenerationStats {
            generation: g,
            best_att: best.fitness.unwrap(),
            mean_att: mean,
            best_tree_size: best.tree.len(),
            best_tree: best.tree.to_sexpr(),
        });
        if g + 1 == config.generations {
            break;
        }

        let mut ranked: Vec<&Individual> = population.iter().collect();
        ranked.sort_by(|a, b| rank(a, b));
        let mut next: Vec<Individual> = ranked[..config.elitism].iter().map(|&i| i.clone()).collect();

        let mut born = Vec::new();
        while next.len() + born.len() < config.population_size {
            let r: f64 = var_rng.random();
            if r < config.crossover_rate {
                let a = select_parent(&population, config.tournament_size, &mut sel_rng)?;
                let b = select_parent(&population, config.tournament_size, &mut sel_rng)?;
                let (c1, c2) = crossover(&a.tree, &b.tree, config.max_depth, &mut var_rng);
                born.push(c1);
                if next.len() + born.len() < config.population_size {
                    born.push(c2);
                }
            } else if r < config.crossover_rate + config.mutation_rate {
                let p = select_parent(&population, config.tournament_size, &mut sel_rng)?;
                born.push(mutate(&p.tree, &gen, config.max_depth, &mut var_rng));
            } else {
                let p = select_parent(&population, config.tournament_size, &mut sel_rng)?;
                born.push(p.tree.clone());
            }
        }
        for tree in born {
            next.push(Individual {
                tree,
                fitness: None,
                id: next_id,
                birth: g + 1,
            });
            next_id += 1;
        }
        population = next;
    }

    log.evaluations = cache.len();
    let best = best_of(&population).expect("population is non-empty").clone();
    Ok((best, log))
}

fn evaluate_population<F>(population: &mut [Individual], cache: &mut HashMap<String, f64>, fitness: &F)
where
    F: Fn(&ExprTree) -> f64 + Sync,
{
    let keys: Vec<String> = population.iter().map(|i| i.tree.to_sexpr()).collect();
    let mut pending: Vec<(&String, &ExprTree)> = Vec::new();
    for (key, ind) in keys.iter().zip(population.iter()) {
        if !cache.contains_key(key) && !pending.iter().any(|(k, _)| *k == key) {
            pending.push((key, &ind.tree));
        }
    }
    debug!("evaluating {} new trees", pending.len());
    let results: Vec<f64> = pending.par_iter().map(|(_, tree)| fitness(tree)).collect();
    for ((key, _), f) in pending.iter().zip(results) {
        cache.insert((*key).clone(), f);
    }
    for (ind, key) in population.iter_mut().zip(&keys) {
        ind.fitness = Some(cache[key]);
    }
}
