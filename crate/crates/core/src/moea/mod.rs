//! Evolutionary baselines: NSGA-III and MOEA/D over real-coded schedule
//! genomes (see [`GenomeLayout`]).
//!
//! Both use simulated binary crossover and polynomial mutation and handle
//! constraints by constraint domination: feasible beats infeasible, and
//! among infeasible solutions the smaller total normalized violation wins.
//! Only feasible, mutually nondominated solutions are returned.

mod genome;
mod moead;
mod nsga3;
mod operators;

pub use genome::GenomeLayout;
pub use moead::moead_run;
pub use nsga3::nsga3_run;
pub use operators::{das_dennis, partitions_for, polynomial_mutation, sbx};
pub use crate::pareto::dominance_filter;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hydro::{check_constraints, derive_trajectory, objective_triple, Decisions, ObjectiveTriple, SystemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    /// MOEA/D neighborhood size.
    pub neighborhood: usize,
    /// MOEA/D probability of offering a child to each neighbor.
    pub update_prob: f64,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        Self {
            population: 200,
            generations: 100,
            crossover_prob: 0.9,
            mutation_prob: 0.1,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            neighborhood: 20,
            update_prob: 0.5,
        }
    }
}

impl MoeaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.population < 4 {
            return Err("population must be at least 4".into());
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("update_prob", self.update_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.sbx_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return Err("distribution indices must be nonnegative".into());
        }
        if self.neighborhood < 2 || self.neighborhood > self.population {
            return Err("neighborhood must lie in [2, population]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MoeaError {
    #[error("invalid evolutionary config: {0}")]
    InvalidConfig(String),
    #[error("seed genome has {actual} genes, expected {expected}")]
    GenomeLength { expected: usize, actual: usize },
}

/// One evaluated genome.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub objectives: ObjectiveTriple,
    /// Total normalized constraint violation; zero iff feasible.
    pub violation: f64,
}

impl Individual {
    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    /// Minimization-form objective vector `(−power, aapfd, −revenue)`.
    pub fn min_form(&self) -> [f64; 3] {
        self.objectives.as_minimization()
    }

    /// Constraint domination.
    pub fn constrained_dominates(&self, other: &Self) -> bool {
        match (self.feasible(), other.feasible()) {
            (true, false) => true,
            (false, true) => false,
            (false, false) => self.violation < other.violation,
            (true, true) => self.objectives.dominates(&other.objectives),
        }
    }
}

/// A returned solution with its decoded decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub genes: Vec<f64>,
    pub decisions: Decisions,
    pub objectives: ObjectiveTriple,
}

pub(crate) fn evaluate(inst: &SystemInstance, layout: &GenomeLayout, genes: Vec<f64>) -> Individual {
    let sched = derive_trajectory(inst, layout.decode(inst, &genes)).expect("genome matches instance shape");
    let report = check_constraints(inst, &sched);
    let objectives = objective_triple(inst, &sched).expect("validated instance");
    Individual {
        genes,
        objectives,
        violation: report.total_violation(),
    }
}

pub(crate) fn evaluate_all(inst: &SystemInstance, layout: &GenomeLayout, genomes: Vec<Vec<f64>>) -> Vec<Individual> {
    genomes.into_par_iter().map(|g| evaluate(inst, layout, g)).collect()
}

/// Feasible nondominated members of `pop`, duplicates (equal genes)
/// removed, in population order.
pub(crate) fn final_front(inst: &SystemInstance, layout: &GenomeLayout, pop: &[Individual]) -> Vec<Solution> {
    let feasible: Vec<&Individual> = pop.iter().filter(|p| p.feasible()).collect();
    let objs: Vec<ObjectiveTriple> = feasible.iter().map(|p| p.objectives).collect();
    let mut out: Vec<Solution> = Vec::new();
    for k in crate::pareto::nondominated_indices(&objs) {
        let ind = feasible[k];
        if out.iter().any(|s| s.genes == ind.genes) {
            continue;
        }
        out.push(Solution {
            genes: ind.genes.clone(),
            decisions: layout.decode(inst, &ind.genes),
            objectives: ind.objectives,
        });
    }
    out
}
