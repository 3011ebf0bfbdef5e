//! Genetic search: bitmask feature selection and real-coded placement.
//!
//! Both variants use tournament-of-2 selection, one-point crossover, per-gene
//! mutation and elitism, and minimize their fitness.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population: 32,
            generations: 40,
            mutation_rate: 0.05,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParameter("population must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidParameter("mutation rate must lie in [0, 1]".into()));
        }
        if self.elitism >= self.population {
            return Err(Error::InvalidParameter("elitism must be below the population".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome<G> {
    pub best: G,
    pub best_fitness: f64,
    /// Best-so-far fitness after each generation, starting with the
    /// initial population.
    pub trace: Vec<f64>,
    pub final_population: Vec<G>,
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64]) -> usize {
    let a = rng.gen_range(0..fitness.len());
    let b = rng.gen_range(0..fitness.len());
    if fitness[b] < fitness[a] {
        b
    } else {
        a
    }
}

/// Indices sorted by fitness, ties by index so the order is deterministic.
fn ranked(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    idx
}

fn evolve<G, F, X, M>(
    config: &GAConfig,
    mut population: Vec<G>,
    fitness_of: F,
    crossover: X,
    mutate: M,
) -> Result<GaOutcome<G>>
where
    G: Clone + Send + Sync,
    F: Fn(&[G]) -> Result<Vec<f64>>,
    X: Fn(&mut ChaCha8Rng, &G, &G) -> G,
    M: Fn(&mut ChaCha8Rng, &mut G, usize),
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fitness = fitness_of(&population)?;
    let mut trace = Vec::with_capacity(config.generations + 1);
    let best_now = |f: &[f64]| f.iter().copied().fold(f64::INFINITY, f64::min);
    trace.push(best_now(&fitness));
    for generation in 0..config.generations {
        let order = ranked(&fitness);
        let mut next: Vec<G> = order[..config.elitism].iter().map(|&i| population[i].clone()).collect();
        while next.len() < population.len() {
            let a = tournament(&mut rng, &fitness);
            let b = tournament(&mut rng, &fitness);
            let mut child = crossover(&mut rng, &population[a], &population[b]);
            mutate(&mut rng, &mut child, generation);
            next.push(child);
        }
        population = next;
        fitness = fitness_of(&population)?;
        let prev = *trace.last().expect("trace seeded");
        trace.push(prev.min(best_now(&fitness)));
    }
    let best = ranked(&fitness)[0];
    Ok(GaOutcome {
        best: population[best].clone(),
        best_fitness: fitness[best],
        trace,
        final_population: population,
    })
}

/// Evolves feature bitmasks. `fitness(mask)` must be deterministic; each
/// distinct mask is evaluated once.
pub fn evolve_masks<F>(
    features: usize,
    config: &GAConfig,
    initial: Option<Vec<Vec<bool>>>,
    fitness: F,
) -> Result<GaOutcome<Vec<bool>>>
where
    F: Fn(&[bool]) -> Result<f64> + Sync,
{
    if features < 2 {
        return Err(Error::InvalidParameter(
            "feature selection needs at least 2 features".into(),
        ));
    }
    let population = match initial {
        Some(p) => {
            if p.len() != config.population || p.iter().any(|m| m.len() != features) {
                return Err(Error::InvalidParameter("initial population has the wrong shape".into()));
            }
            p
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
            (0..config.population)
                .map(|_| {
                    let mut m: Vec<bool> = (0..features).map(|_| rng.gen_bool(0.5)).collect();
                    if !m.iter().any(|&b| b) {
                        m[rng.gen_range(0..features)] = true;
                    }
                    m
                })
                .collect()
        }
    };
    let cache = std::sync::Mutex::new(BTreeMap::<Vec<bool>, f64>::new());
    let rate = config.mutation_rate;
    evolve(
        config,
        population,
        |pop| {
            let todo: Vec<Vec<bool>> = {
                let c = cache.lock().expect("cache lock");
                let mut seen = std::collections::BTreeSet::new();
                pop.iter()
                    .filter(|m| !c.contains_key(*m) && seen.insert((*m).clone()))
                    .cloned()
                    .collect()
            };
            let fresh: Vec<Result<f64>> = todo.par_iter().map(|m| fitness(m)).collect();
            let mut c = cache.lock().expect("cache lock");
            for (m, f) in todo.into_iter().zip(fresh) {
                c.insert(m, f?);
            }
            Ok(pop.iter().map(|m| c[m]).collect())
        },
        |rng, a, b| {
            let cut = rng.gen_range(1..features);
            a[..cut].iter().chain(&b[cut..]).copied().collect()
        },
        |rng, m, _| {
            for bit in m.iter_mut() {
                if rate > 0.0 && rng.gen_bool(rate) {
                    *bit = !*bit;
                }
            }
        },
    )
}

/// Maximizes `objective` over the unit box `[0, 1]^dims`. `seeds` join
/// the initial population (truncated to the population size).
pub fn maximize_unit_box<F>(
    dims: usize,
    config: &GAConfig,
    seeds: &[Vec<f64>],
    objective: F,
) -> Result<GaOutcome<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dims == 0 {
        return Err(Error::InvalidParameter("search space has no dimensions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xb0c5);
    let mut population: Vec<Vec<f64>> = seeds
        .iter()
        .take(config.population)
        .map(|s| s.iter().map(|v| v.clamp(0.0, 1.0)).collect())
        .collect();
    while population.len() < config.population {
        population.push((0..dims).map(|_| rng.gen_range(0.0..1.0)).collect());
    }
    let rate = config.mutation_rate.max(1.0 / dims as f64);
    let gens = config.generations.max(1) as f64;
    let outcome = evolve(
        config,
        population,
        |pop| Ok(pop.par_iter().map(|g| -objective(g)).collect()),
        |rng, a, b| {
            // one-point crossover on the gene list, then a blend so a
            // single-gene space still mixes parents
            let cut = if dims > 1 { rng.gen_range(1..dims) } else { 0 };
            let w: f64 = rng.gen_range(0.0..1.0);
            (0..dims)
                .map(|i| {
                    let (p, q) = if i < cut { (a[i], b[i]) } else { (b[i], a[i]) };
                    w * p + (1.0 - w) * q
                })
                .collect()
        },
        |rng, g, generation| {
            let sigma = 0.15 * (1.0 - generation as f64 / gens) + 0.002;
            for v in g.iter_mut() {
                if rng.gen_bool(rate) {
                    let n: f64 = rng.sample(StandardNormal);
                    *v = (*v + sigma * n).clamp(0.0, 1.0);
                }
            }
        },
    )?;
    Ok(GaOutcome {
        best_fitness: -outcome.best_fitness,
        trace: outcome.trace.iter().map(|f| -f).collect(),
        ..outcome
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elitist_trace_is_monotone() {
        let cfg = GAConfig {
            generations: 25,
            seed: 3,
            ..Default::default()
        };
        let target = [true, false, true, true, false, false, true, false];
        let out = evolve_masks(8, &cfg, None, |m| {
            Ok(m.iter().zip(&target).filter(|(a, b)| a != b).count() as f64)
        })
        .unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.best_fitness, 0.0);
        assert_eq!(out.best, target);
    }

    #[test]
    fn no_mutation_keeps_identical_population() {
        let cfg = GAConfig {
            mutation_rate: 0.0,
            generations: 10,
            ..Default::default()
        };
        let mask = vec![true, false, true];
        let init = vec![mask.clone(); cfg.population];
        let out = evolve_masks(3, &cfg, Some(init), |m| Ok(m.iter().filter(|&&b| b).count() as f64)).unwrap();
        assert!(out.final_population.iter().all(|m| *m == mask));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let f = |_: &[bool]| Ok(0.0);
        let bad = [
            GAConfig {
                population: 1,
                ..Default::default()
            },
            GAConfig {
                mutation_rate: 1.5,
                ..Default::default()
            },
            GAConfig {
                elitism: 32,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(evolve_masks(4, &cfg, None, f).is_err());
        }
        assert!(evolve_masks(1, &GAConfig::default(), None, f).is_err());
    }

    #[test]
    fn unit_box_finds_a_quadratic_peak() {
        let star = [0.31, 0.77];
        let out = maximize_unit_box(
            2,
            &GAConfig {
                seed: 8,
                ..Default::default()
            },
            &[],
            |g| -((g[0] - star[0]).powi(2) + (g[1] - star[1]).powi(2)),
        )
        .unwrap();
        let d = ((out.best[0] - star[0]).powi(2) + (out.best[1] - star[1]).powi(2)).sqrt();
        assert!(d < 0.01, "{:?}", out.best);
        assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let f = |g: &[f64]| (7.0 * g[0]).sin() * g[1];
        let cfg = GAConfig {
            seed: 12,
            ..Default::default()
        };
        let a = maximize_unit_box(2, &cfg, &[], f).unwrap();
        let b = maximize_unit_box(2, &cfg, &[], f).unwrap();
        assert_eq!(
            a.best.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.best.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.trace, b.trace);
    }
}
