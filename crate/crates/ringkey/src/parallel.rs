//! Rayon drivers for the core optimizer. Blocks are simulated in parallel
//! and merged in block order, so results do not depend on the thread count.

use anyhow::{bail, Result};
use rayon::prelude::*;

use ringkey_core::optimizer::{
    evaluate_counts, select_best, simulate_block, CandidateCounts, OptimizationProblem,
    OptimizationResult, MIN_TRIALS,
};

pub fn simulate_counts(
    problem: &OptimizationProblem,
    trials: usize,
    seed: u64,
) -> Result<Vec<CandidateCounts>> {
    problem.validate()?;
    if trials < MIN_TRIALS {
        bail!("need at least {MIN_TRIALS} trials, got {trials}");
    }
    let per_block = (0..problem.blocks_for(trials))
        .into_par_iter()
        .map(|b| simulate_block(problem, seed, b))
        .collect::<Result<Vec<_>, _>>()?;
    let mut acc = vec![CandidateCounts::default(); problem.search_grid.len()];
    for block in per_block {
        for (a, c) in acc.iter_mut().zip(block) {
            *a = a.merge(c);
        }
    }
    Ok(acc)
}

/// Security accounting for precomputed counts; the targets may differ from
/// the ones the counts were simulated under.
pub fn optimize_counts(
    problem: &OptimizationProblem,
    counts: &[CandidateCounts],
) -> Result<OptimizationResult> {
    let evaluations = problem
        .search_grid
        .par_iter()
        .zip(counts)
        .map(|(p, c)| evaluate_counts(problem, *p, c))
        .collect();
    Ok(select_best(problem, evaluations)?)
}

pub fn optimize(
    problem: &OptimizationProblem,
    trials: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    let counts = simulate_counts(problem, trials, seed)?;
    optimize_counts(problem, &counts)
}
