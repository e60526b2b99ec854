//! Per-sample genetic search for a low-distortion carrier value.
//!
//! A sample is a chromosome and each of its bits is a gene. The target loci
//! are frozen to the payload pattern: every operator repairs them before a
//! chromosome is scored, so no invalid value can ever be returned.
//!
//! Generation 0 holds the repaired original, the altered sample and random
//! valid chromosomes. Each generation the two fittest become parents and
//! crossover plus mutation breed `population_size - elitism_count` offspring.
//! An offspring identical to a chromosome already in the pool is redrawn; once
//! `2 * population_size` draws are spent, a random valid chromosome is used
//! instead. Parents and offspring then compete and the least fit are dropped
//! (duplicates first) until the population is back to its fixed size, so the
//! best chromosome always survives. The search stops after `generations`
//! rounds or as soon as a zero-distance chromosome appears.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitplane::{alter, distance, BitPattern, LayerMask};
use crate::keystream::SplitMix64;
use crate::wav::BitDepth;

/// Offspring draws allowed per generation, as a multiple of the population size.
pub const DRAW_BUDGET_FACTOR: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaParamsError {
    #[error("population size must be at least 2, got {0}")]
    Population(usize),
    #[error("generation budget must be at least 1")]
    Generations,
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("elitism count {elite} must be in 1..{population}")]
    Elitism { elite: usize, population: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub elitism_count: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 16,
            generations: 64,
            crossover_prob: 0.8,
            mutation_prob: 0.05,
            elitism_count: 1,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), GaParamsError> {
        if self.population_size < 2 {
            return Err(GaParamsError::Population(self.population_size));
        }
        if self.generations < 1 {
            return Err(GaParamsError::Generations);
        }
        for (name, value) in [
            ("crossover probability", self.crossover_prob),
            ("mutation probability", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GaParamsError::Probability { name, value });
            }
        }
        if self.elitism_count < 1 || self.elitism_count >= self.population_size {
            return Err(GaParamsError::Elitism {
                elite: self.elitism_count,
                population: self.population_size,
            });
        }
        Ok(())
    }
}

/// A sample's raw bits with the mask loci pinned to `pattern`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleChromosome {
    genes: u32,
    mask: LayerMask,
    pattern: BitPattern,
}

impl SampleChromosome {
    /// Wraps raw bits, forcing the frozen loci to the pattern.
    pub fn repaired(genes: u32, mask: LayerMask, pattern: BitPattern) -> Self {
        let full = mask.depth().full_mask();
        let genes = (genes & full & !mask.bits()) | mask.scatter(pattern);
        Self {
            genes,
            mask,
            pattern,
        }
    }

    pub fn from_value(value: i32, mask: LayerMask, pattern: BitPattern) -> Self {
        Self::repaired(mask.depth().to_raw(value), mask, pattern)
    }

    pub fn genes(&self) -> u32 {
        self.genes
    }

    pub fn value(&self) -> i32 {
        self.mask.depth().from_raw(self.genes)
    }

    pub fn mask(&self) -> &LayerMask {
        &self.mask
    }

    pub fn pattern(&self) -> BitPattern {
        self.pattern
    }

    fn depth(&self) -> BitDepth {
        self.mask.depth()
    }
}

/// Negated embedding error; 0 is a perfect match.
pub fn fitness(candidate: &SampleChromosome, original: i32) -> f64 {
    -(distance(candidate.value(), original) as f64)
}

/// Single-point crossover. Loci `1..=cut_point` come from the first parent,
/// the rest from the second; the second child is the mirror. Both are repaired.
pub fn crossover(
    a: &SampleChromosome,
    b: &SampleChromosome,
    cut_point: u32,
) -> (SampleChromosome, SampleChromosome) {
    debug_assert!(cut_point >= 1 && cut_point < a.depth().bits());
    let low = (1u32 << cut_point) - 1;
    let high = a.depth().full_mask() & !low;
    let c1 = (a.genes & low) | (b.genes & high);
    let c2 = (b.genes & low) | (a.genes & high);
    (
        SampleChromosome::repaired(c1, a.mask, a.pattern),
        SampleChromosome::repaired(c2, a.mask, a.pattern),
    )
}

/// Flips each free locus independently with probability `mutation_prob`.
pub fn mutate(c: &SampleChromosome, mutation_prob: f64, rng: &mut SplitMix64) -> SampleChromosome {
    let mut genes = c.genes;
    for locus in 0..c.depth().bits() {
        let bit = 1u32 << locus;
        if c.mask.bits() & bit == 0 && rng.chance(mutation_prob) {
            genes ^= bit;
        }
    }
    SampleChromosome { genes, ..*c }
}

/// Keeps the `size` fittest of `pool`, dropping duplicates before any
/// distinct chromosome. `pool` must hold at least `size` entries.
fn survivors<K: Ord>(
    mut pool: Vec<SampleChromosome>,
    size: usize,
    key: impl Fn(&SampleChromosome) -> K,
) -> Vec<SampleChromosome> {
    pool.sort_by_key(&key);
    let mut kept: Vec<SampleChromosome> = Vec::with_capacity(pool.len());
    let mut repeats = Vec::new();
    for c in pool {
        if kept.last().is_some_and(|k| k.genes == c.genes) {
            repeats.push(c);
        } else {
            kept.push(c);
        }
    }
    kept.extend(repeats);
    kept.truncate(size);
    kept
}

/// Best value found plus the best distance after each generation
/// (index 0 is the initial population).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaTrace {
    pub value: i32,
    pub best_distance: Vec<u32>,
    pub population_sizes: Vec<usize>,
}

pub fn run_ga(
    sample: i32,
    mask: &LayerMask,
    pattern: BitPattern,
    params: &GaParams,
    seed: u64,
) -> i32 {
    evolve(sample, mask, pattern, params, seed, false).value
}

/// [`run_ga`] that also records per-generation statistics.
pub fn run_ga_traced(
    sample: i32,
    mask: &LayerMask,
    pattern: BitPattern,
    params: &GaParams,
    seed: u64,
) -> GaTrace {
    evolve(sample, mask, pattern, params, seed, true)
}

fn evolve(
    sample: i32,
    mask: &LayerMask,
    pattern: BitPattern,
    params: &GaParams,
    seed: u64,
    trace: bool,
) -> GaTrace {
    let mask = *mask;
    let depth = mask.depth();
    let size = params.population_size.max(2);
    let elite = params.elitism_count.clamp(1, size - 1);
    let mut rng = SplitMix64::new(seed);

    // Lower key = fitter: smaller distance, then smaller value.
    let key = |c: &SampleChromosome| (distance(c.value(), sample), c.value());

    let mut population = Vec::with_capacity(size + 1);
    population.push(SampleChromosome::from_value(sample, mask, pattern));
    population.push(SampleChromosome::from_value(
        alter(sample, &mask, pattern),
        mask,
        pattern,
    ));
    while population.len() < size {
        let raw = rng.next_u64() as u32;
        population.push(SampleChromosome::repaired(raw, mask, pattern));
    }
    population.sort_by_key(key);

    let mut best_distance = Vec::new();
    let mut population_sizes = Vec::new();
    if trace {
        best_distance.push(key(&population[0]).0);
        population_sizes.push(population.len());
    }

    let offspring_per_gen = size - elite;
    let draw_budget = DRAW_BUDGET_FACTOR * size;
    for _ in 0..params.generations {
        if key(&population[0]).0 == 0 {
            break;
        }
        let (p1, p2) = (population[0], population[1]);
        let mut pool = population.clone();
        let mut born = 0;
        let mut draws = 0;
        while born < offspring_per_gen {
            let (c1, c2) = if depth.bits() > 1 && rng.chance(params.crossover_prob) {
                let cut = 1 + rng.below(depth.bits() as u64 - 1) as u32;
                crossover(&p1, &p2, cut)
            } else {
                (p1, p2)
            };
            for child in [c1, c2] {
                if born == offspring_per_gen {
                    break;
                }
                let mut child = mutate(&child, params.mutation_prob, &mut rng);
                draws += 1;
                if pool.iter().any(|c| c.genes == child.genes) {
                    if draws <= draw_budget {
                        continue;
                    }
                    // Parents exhausted their neighbourhood: random immigrant.
                    child = SampleChromosome::repaired(rng.next_u64() as u32, mask, pattern);
                }
                pool.push(child);
                born += 1;
            }
        }
        population = survivors(pool, size, key);
        if trace {
            best_distance.push(key(&population[0]).0);
            population_sizes.push(population.len());
        }
    }

    GaTrace {
        value: population[0].value(),
        best_distance,
        population_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitplane::{oracle_nearest, read_bits};

    fn m8(layers: &[u32]) -> LayerMask {
        LayerMask::new(layers, BitDepth::Eight).unwrap()
    }

    #[test]
    fn fitness_examples() {
        let mask = m8(&[5]);
        let p = BitPattern::new(1, 1);
        assert_eq!(
            fitness(&SampleChromosome::from_value(48, mask, p), 47),
            -1.0
        );
        let mask2 = m8(&[4, 5]);
        let p2 = BitPattern::new(0b11, 2);
        assert_eq!(
            fitness(&SampleChromosome::from_value(63, mask2, p2), 39),
            -24.0
        );
        let same = SampleChromosome::from_value(48, mask, p);
        assert_eq!(fitness(&same, 48), 0.0);
    }

    #[test]
    fn crossover_hand_example() {
        let mask = m8(&[1]);
        let p = BitPattern::new(1, 1);
        let a = SampleChromosome::repaired(0b0000_0000, mask, p);
        let b = SampleChromosome::repaired(0b1111_1111, mask, p);
        let (c1, c2) = crossover(&a, &b, 4);
        assert_eq!(c1.genes(), 0b1111_0001);
        assert_eq!(c2.genes(), 0b0000_1111);
    }

    #[test]
    fn crossover_identical_parents() {
        let mask = m8(&[3, 6]);
        let p = BitPattern::new(0b10, 2);
        let a = SampleChromosome::from_value(201, mask, p);
        for cut in 1..8 {
            assert_eq!(crossover(&a, &a, cut), (a, a));
        }
    }

    #[test]
    fn mutation_extremes() {
        let mask = m8(&[1]);
        let p = BitPattern::new(0, 1);
        let c = SampleChromosome::from_value(0b1010_1010, mask, p);
        let mut rng = SplitMix64::new(3);
        assert_eq!(mutate(&c, 0.0, &mut rng), c);
        assert_eq!(mutate(&c, 1.0, &mut rng).genes(), 0b0101_0100);
    }

    #[test]
    fn worked_example_reaches_optimum() {
        let mask = m8(&[5]);
        let p = BitPattern::new(1, 1);
        assert_eq!(run_ga(47, &mask, p, &GaParams::default(), 42), 48);
    }

    #[test]
    fn matching_bits_return_original() {
        let mask = m8(&[2, 3]);
        for s in 0..=255 {
            let p = read_bits(s, &mask);
            assert_eq!(run_ga(s, &mask, p, &GaParams::default(), s as u64), s);
        }
    }

    #[test]
    fn params_validation() {
        assert!(GaParams::default().validate().is_ok());
        let bad = [
            GaParams {
                population_size: 1,
                ..Default::default()
            },
            GaParams {
                generations: 0,
                ..Default::default()
            },
            GaParams {
                crossover_prob: 1.5,
                ..Default::default()
            },
            GaParams {
                mutation_prob: -0.1,
                ..Default::default()
            },
            GaParams {
                elitism_count: 16,
                ..Default::default()
            },
            GaParams {
                elitism_count: 0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn trace_is_monotone_and_sized() {
        let mask = m8(&[6]);
        for s in [0, 31, 32, 100, 200, 255] {
            let p = BitPattern::new(u32::from(read_bits(s, &mask).bits() == 0), 1);
            let t = run_ga_traced(s, &mask, p, &GaParams::default(), 7);
            assert!(t.best_distance.windows(2).all(|w| w[1] <= w[0]));
            assert!(t.population_sizes.iter().all(|&n| n == 16));
            assert_eq!(*t.best_distance.last().unwrap(), distance(t.value, s));
            assert!(distance(t.value, s) >= distance(oracle_nearest(s, &mask, p), s));
        }
    }
}
