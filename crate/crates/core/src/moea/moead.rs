use rand::Rng;

use super::operators::{das_dennis, partitions_for, polynomial_mutation, sbx};
use super::{evaluate, evaluate_all, final_front, GenomeLayout, Individual, MoeaConfig, MoeaError, Solution};
use crate::decomposition::{scalarize, ObjectiveBounds, WeightVector};
use crate::hydro::SystemInstance;

/// Weight vectors: the largest Das–Dennis lattice not exceeding the
/// population, topped up with uniform random simplex points.
pub(crate) fn moead_weights<R: Rng + ?Sized>(population: usize, rng: &mut R) -> Vec<WeightVector> {
    let mut w: Vec<[f64; 3]> = das_dennis(partitions_for(population));
    w.truncate(population);
    while w.len() < population {
        // Sorted uniforms give a uniform point on the simplex.
        let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
        let (lo, hi) = (a.min(b), a.max(b));
        w.push([lo, hi - lo, 1.0 - hi]);
    }
    w.into_iter()
        .map(|c| {
            let s = c[0] + c[1] + c[2];
            let c0 = c[0] / s;
            let c1 = c[1] / s;
            WeightVector::new(c0, c1, (1.0 - c0 - c1).max(0.0)).expect("simplex point")
        })
        .collect()
}

fn neighborhoods(weights: &[WeightVector], size: usize) -> Vec<Vec<usize>> {
    weights
        .iter()
        .map(|wi| {
            let a = wi.components();
            let mut idx: Vec<usize> = (0..weights.len()).collect();
            let dist = |j: usize| {
                let b = weights[j].components();
                (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>()
            };
            idx.sort_by(|&x, &y| dist(x).total_cmp(&dist(y)).then(x.cmp(&y)));
            idx.truncate(size);
            idx
        })
        .collect()
}

/// Whether `child` should replace `incumbent` on subproblem `w`.
fn improves(child: &Individual, incumbent: &Individual, w: &WeightVector, bounds: &ObjectiveBounds) -> bool {
    match (child.feasible(), incumbent.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => child.violation < incumbent.violation,
        (true, true) => scalarize(&child.objectives, w, bounds) > scalarize(&incumbent.objectives, w, bounds),
    }
}

/// MOEA/D with weighted-sum subproblems scored by
/// [`scalarize`](crate::decomposition::scalarize) under `bounds`.
pub fn moead_run<R: Rng + ?Sized>(
    inst: &SystemInstance,
    config: &MoeaConfig,
    bounds: &ObjectiveBounds,
    initial: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<Solution>, MoeaError> {
    config.validate().map_err(MoeaError::InvalidConfig)?;
    let layout = GenomeLayout::of(inst);
    let weights = moead_weights(config.population, rng);
    let hoods = neighborhoods(&weights, config.neighborhood);
    let mut genomes: Vec<Vec<f64>> = initial.iter().take(config.population).cloned().collect();
    if let Some(bad) = genomes.iter().find(|g| g.len() != layout.len()) {
        return Err(MoeaError::GenomeLength {
            expected: layout.len(),
            actual: bad.len(),
        });
    }
    while genomes.len() < config.population {
        genomes.push((0..layout.len()).map(|_| rng.random::<f64>()).collect());
    }
    let mut pop = evaluate_all(inst, &layout, genomes);
    for _ in 0..config.generations {
        for i in 0..pop.len() {
            let hood = &hoods[i];
            let a = hood[rng.random_range(0..hood.len())];
            let b = hood[rng.random_range(0..hood.len())];
            let mut child = if rng.random_bool(config.crossover_prob) {
                sbx(&pop[a].genes, &pop[b].genes, config.sbx_eta, rng).0
            } else {
                pop[a].genes.clone()
            };
            polynomial_mutation(&mut child, config.mutation_prob, config.mutation_eta, rng);
            let child = evaluate(inst, &layout, child);
            for &j in hood {
                if rng.random_bool(config.update_prob) && improves(&child, &pop[j], &weights[j], bounds) {
                    pop[j] = child.clone();
                }
            }
        }
    }
    Ok(final_front(inst, &layout, &pop))
}
