//! Set-operator genetic algorithm over the byte values of a message.
//!
//! Individuals are vectors of byte values drawn from the message's
//! `[min, max]` range. Fitness counts how many distinct message values an
//! individual contains (set intersection). Mutation injects "scarce" values:
//! message values missing from every individual in the population (set
//! difference), falling back to values missing from the offspring itself
//! when the population already holds every message value. Each generation the two fittest individuals cross over, the
//! two offspring are mutated and inserted, and the two least fit individuals
//! are discarded.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::keystream::{derive_seed, MasterKey, SplitMix64};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MsgGaError {
    #[error("message is empty")]
    EmptyMessage,
    #[error("{genes} genes per individual cannot hold {distinct} distinct message values")]
    UnreachableOptimum { genes: usize, distinct: usize },
    #[error("population size must be at least 2, got {0}")]
    Population(usize),
    #[error("individuals need at least one gene")]
    NoGenes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageProfile {
    pub values: Vec<u8>,
    pub distinct: BTreeSet<u8>,
    pub min_val: u8,
    pub max_val: u8,
}

pub type Individual = Vec<u8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MsgGaParams {
    /// Defaults to the message length (at least 2).
    pub population_size: Option<usize>,
    /// Defaults to the number of distinct message values.
    pub genes: Option<usize>,
    pub max_generations: usize,
    pub seed: u64,
}

impl Default for MsgGaParams {
    fn default() -> Self {
        Self {
            population_size: None,
            genes: None,
            max_generations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evolution {
    pub best: Individual,
    pub best_fitness: usize,
    pub target_fitness: usize,
    pub generations_used: usize,
    /// Best fitness before the first generation and after each one.
    pub best_history: Vec<usize>,
    pub size_history: Vec<usize>,
}

impl Evolution {
    pub fn reached_optimum(&self) -> bool {
        self.best_fitness == self.target_fitness
    }
}

pub fn profile_message(message: &[u8]) -> Result<MessageProfile, MsgGaError> {
    let min_val = *message.iter().min().ok_or(MsgGaError::EmptyMessage)?;
    let max_val = *message.iter().max().ok_or(MsgGaError::EmptyMessage)?;
    Ok(MessageProfile {
        values: message.to_vec(),
        distinct: message.iter().copied().collect(),
        min_val,
        max_val,
    })
}

pub fn init_population(
    profile: &MessageProfile,
    population_size: usize,
    genes: usize,
    rng: &mut SplitMix64,
) -> Vec<Individual> {
    let span = profile.max_val as u64 - profile.min_val as u64 + 1;
    (0..population_size)
        .map(|_| {
            (0..genes)
                .map(|_| profile.min_val + rng.below(span) as u8)
                .collect()
        })
        .collect()
}

pub fn set_fitness(individual: &[u8], profile: &MessageProfile) -> usize {
    let genes: BTreeSet<u8> = individual.iter().copied().collect();
    genes.intersection(&profile.distinct).count()
}

/// Message values absent from every individual.
pub fn scarce_genes(profile: &MessageProfile, population: &[Individual]) -> BTreeSet<u8> {
    let union: BTreeSet<u8> = population.iter().flatten().copied().collect();
    profile.distinct.difference(&union).copied().collect()
}

fn single_point(a: &[u8], b: &[u8], rng: &mut SplitMix64) -> (Individual, Individual) {
    let n = a.len();
    if n < 2 {
        return (a.to_vec(), b.to_vec());
    }
    let cut = 1 + rng.below(n as u64 - 1) as usize;
    let mut c1 = a[..cut].to_vec();
    c1.extend_from_slice(&b[cut..]);
    let mut c2 = b[..cut].to_vec();
    c2.extend_from_slice(&a[cut..]);
    (c1, c2)
}

/// Overwrites one random gene with a random scarce value.
///
/// When the population as a whole lacks nothing, the difference is taken
/// against the child alone. Without that fallback two parents that differ
/// only at one locus (each missing the value the other holds there) can never
/// produce a fitter child.
fn inject_scarce(child: &mut [u8], scarce: &[u8], profile: &MessageProfile, rng: &mut SplitMix64) {
    if child.is_empty() {
        return;
    }
    let own: Vec<u8>;
    let pool = if scarce.is_empty() {
        let have: BTreeSet<u8> = child.iter().copied().collect();
        own = profile.distinct.difference(&have).copied().collect();
        &own
    } else {
        scarce
    };
    if pool.is_empty() {
        return;
    }
    let pos = rng.below(child.len() as u64) as usize;
    child[pos] = pool[rng.below(pool.len() as u64) as usize];
}

pub fn evolve(message: &[u8], params: &MsgGaParams) -> Result<Evolution, MsgGaError> {
    let profile = profile_message(message)?;
    let target = profile.distinct.len();
    let genes = params.genes.unwrap_or(target);
    let size = params.population_size.unwrap_or(message.len().max(2));
    if genes == 0 {
        return Err(MsgGaError::NoGenes);
    }
    if genes < target {
        return Err(MsgGaError::UnreachableOptimum {
            genes,
            distinct: target,
        });
    }
    if size < 2 {
        return Err(MsgGaError::Population(size));
    }

    let mut rng = SplitMix64::new(params.seed);
    let mut population: Vec<(usize, Individual)> = init_population(&profile, size, genes, &mut rng)
        .into_iter()
        .map(|ind| (set_fitness(&ind, &profile), ind))
        .collect();
    // Stable sort: fitter first, older first among equals.
    population.sort_by_key(|(f, _)| std::cmp::Reverse(*f));

    let mut best_history = vec![population[0].0];
    let mut size_history = vec![population.len()];
    let mut generations_used = 0;

    while population[0].0 < target && generations_used < params.max_generations {
        let individuals: Vec<Individual> = population.iter().map(|(_, i)| i.clone()).collect();
        let scarce: Vec<u8> = scarce_genes(&profile, &individuals).into_iter().collect();

        let (mut c1, mut c2) = single_point(&population[0].1, &population[1].1, &mut rng);
        inject_scarce(&mut c1, &scarce, &profile, &mut rng);
        inject_scarce(&mut c2, &scarce, &profile, &mut rng);

        // Offspring go in ahead of incumbents of equal fitness, so ties evict
        // the older individuals.
        for child in [c1, c2] {
            let f = set_fitness(&child, &profile);
            let at = population.partition_point(|(g, _)| *g > f);
            population.insert(at, (f, child));
        }
        population.truncate(size);

        generations_used += 1;
        best_history.push(population[0].0);
        size_history.push(population.len());
    }

    let (best_fitness, best) = population.swap_remove(0);
    Ok(Evolution {
        best,
        best_fitness,
        target_fitness: target,
        generations_used,
        best_history,
        size_history,
    })
}

/// Folds an individual's genes into a master key through [`derive_seed`].
pub fn master_key_from_genes(base: MasterKey, genes: &[u8]) -> MasterKey {
    let folded = genes.iter().fold(base, |acc, &g| {
        MasterKey(derive_seed(acc, "msg-ga", g as u64))
    });
    MasterKey(derive_seed(folded, "msg-ga", genes.len() as u64))
}
