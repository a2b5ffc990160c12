use rand::seq::IndexedRandom;
use rand::Rng;

use super::operators::{das_dennis, partitions_for, polynomial_mutation, sbx};
use super::{evaluate_all, final_front, GenomeLayout, Individual, MoeaConfig, MoeaError, Solution};
use crate::hydro::SystemInstance;

/// Fronts of constraint-domination sorting, best first, as indices.
pub(crate) fn nondominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in 0..n {
        for q in p + 1..n {
            if pop[p].constrained_dominates(&pop[q]) {
                dominates[p].push(q);
                dominated_by_count[q] += 1;
            } else if pop[q].constrained_dominates(&pop[p]) {
                dominates[q].push(p);
                dominated_by_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| dominated_by_count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominates[p] {
                dominated_by_count[q] -= 1;
                if dominated_by_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [Individual], rng: &mut R) -> &'a Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if a.constrained_dominates(b) {
        a
    } else if b.constrained_dominates(a) {
        b
    } else if rng.random_bool(0.5) {
        a
    } else {
        b
    }
}

pub(crate) fn make_offspring<R: Rng + ?Sized>(pop: &[Individual], config: &MoeaConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let mut children = Vec::with_capacity(pop.len());
    while children.len() < pop.len() {
        let p1 = tournament(pop, rng);
        let p2 = tournament(pop, rng);
        let (mut c1, mut c2) = if rng.random_bool(config.crossover_prob) {
            sbx(&p1.genes, &p2.genes, config.sbx_eta, rng)
        } else {
            (p1.genes.clone(), p2.genes.clone())
        };
        polynomial_mutation(&mut c1, config.mutation_prob, config.mutation_eta, rng);
        polynomial_mutation(&mut c2, config.mutation_prob, config.mutation_eta, rng);
        children.push(c1);
        if children.len() < pop.len() {
            children.push(c2);
        }
    }
    children
}

/// Solves `E·b = 1` for the hyperplane through three extreme points and
/// returns its axis intercepts `1 / b`.
fn intercepts(extremes: &[[f64; 3]; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for r in 0..3 {
        m[r][..3].copy_from_slice(&extremes[r]);
        m[r][3] = 1.0;
    }
    for c in 0..3 {
        let pivot = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[pivot][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, pivot);
        for r in 0..3 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..4 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let b = m[k][3] / m[k][k];
        out[k] = 1.0 / b;
        if !(out[k].is_finite() && out[k] > 1e-10) {
            return None;
        }
    }
    Some(out)
}

/// Normalized objectives of `members` (min form) following the standard
/// ideal-point translation and extreme-point hyperplane.
fn normalize(members: &[&Individual]) -> Vec<[f64; 3]> {
    let f: Vec<[f64; 3]> = members.iter().map(|m| m.min_form()).collect();
    let mut ideal = [f64::INFINITY; 3];
    for v in &f {
        for k in 0..3 {
            ideal[k] = ideal[k].min(v[k]);
        }
    }
    let t: Vec<[f64; 3]> = f.iter().map(|v| [v[0] - ideal[0], v[1] - ideal[1], v[2] - ideal[2]]).collect();
    let mut extremes = [[0.0; 3]; 3];
    for (axis, e) in extremes.iter_mut().enumerate() {
        let asf = |v: &[f64; 3]| {
            (0..3)
                .map(|k| v[k] / if k == axis { 1.0 } else { 1e-6 })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        *e = *t.iter().min_by(|a, b| asf(a).total_cmp(&asf(b))).expect("nonempty");
    }
    let a = intercepts(&extremes).unwrap_or_else(|| {
        let mut nadir = [0.0f64; 3];
        for v in &t {
            for k in 0..3 {
                nadir[k] = nadir[k].max(v[k]);
            }
        }
        nadir
    });
    t.iter()
        .map(|v| {
            let mut out = [0.0; 3];
            for k in 0..3 {
                out[k] = if a[k] > 1e-12 { v[k] / a[k] } else { v[k] };
            }
            out
        })
        .collect()
}

/// Closest reference direction by perpendicular distance.
fn associate(point: &[f64; 3], refs: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, w) in refs.iter().enumerate() {
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let proj: f64 = w.iter().zip(point).map(|(a, b)| a * b).sum::<f64>() / ww;
        let d = (0..3).map(|k| (point[k] - proj * w[k]).powi(2)).sum::<f64>().sqrt();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn niching<R: Rng + ?Sized>(
    pop: &[Individual],
    chosen: &[usize],
    last: &[usize],
    k: usize,
    refs: &[[f64; 3]],
    rng: &mut R,
) -> Vec<usize> {
    let members: Vec<&Individual> = chosen.iter().chain(last).map(|&i| &pop[i]).collect();
    let normalized = normalize(&members);
    let assoc: Vec<(usize, f64)> = normalized.iter().map(|p| associate(p, refs)).collect();
    let mut niche = vec![0usize; refs.len()];
    for a in &assoc[..chosen.len()] {
        niche[a.0] += 1;
    }
    // Candidates: positions within `last`, with their association.
    let mut pool: Vec<(usize, usize, f64)> = last
        .iter()
        .enumerate()
        .map(|(n, &i)| (i, assoc[chosen.len() + n].0, assoc[chosen.len() + n].1))
        .collect();
    let mut excluded = vec![false; refs.len()];
    let mut picked = Vec::with_capacity(k);
    while picked.len() < k {
        let min = (0..refs.len())
            .filter(|&j| !excluded[j])
            .map(|j| niche[j])
            .min()
            .expect("some reference direction has candidates");
        let tied: Vec<usize> = (0..refs.len()).filter(|&j| !excluded[j] && niche[j] == min).collect();
        let j = *tied.choose(rng).expect("nonempty");
        let here: Vec<usize> = (0..pool.len()).filter(|&p| pool[p].1 == j).collect();
        if here.is_empty() {
            excluded[j] = true;
            continue;
        }
        let pos = if niche[j] == 0 {
            *here
                .iter()
                .min_by(|&&a, &&b| pool[a].2.total_cmp(&pool[b].2))
                .expect("nonempty")
        } else {
            *here.choose(rng).expect("nonempty")
        };
        picked.push(pool.remove(pos).0);
        niche[j] += 1;
    }
    picked
}

/// Environmental selection of `n` survivors from `pop`.
fn select<R: Rng + ?Sized>(pop: &[Individual], n: usize, refs: &[[f64; 3]], rng: &mut R) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(n);
    for front in nondominated_sort(pop) {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
            if chosen.len() == n {
                break;
            }
            continue;
        }
        let k = n - chosen.len();
        if pop[front[0]].feasible() {
            let extra = niching(pop, &chosen, &front, k, refs, rng);
            chosen.extend(extra);
        } else {
            // Equal-violation infeasible front: keep the first k.
            chosen.extend(front.into_iter().take(k));
        }
        break;
    }
    chosen
}

/// NSGA-III. `initial` genomes seed the population (the rest is uniform
/// random). Returns the feasible nondominated members of the final
/// population.
pub fn nsga3_run<R: Rng + ?Sized>(
    inst: &SystemInstance,
    config: &MoeaConfig,
    initial: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<Solution>, MoeaError> {
    config.validate().map_err(MoeaError::InvalidConfig)?;
    let layout = GenomeLayout::of(inst);
    let refs = das_dennis(partitions_for(config.population));
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
        let children = evaluate_all(inst, &layout, make_offspring(&pop, config, rng));
        pop.extend(children);
        let keep = select(&pop, config.population, &refs, rng);
        let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
        pop = keep.into_iter().map(|i| slots[i].take().expect("selected once")).collect();
    }
    Ok(final_front(inst, &layout, &pop))
}
