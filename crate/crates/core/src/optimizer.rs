//! Key-rate maximization over a grid of selection parameters.
//!
//! Each candidate is simulated in fixed-size blocks; every candidate sees the
//! same blocks, so differences between candidates are not sampling noise
//! from different draws. Measured error rates feed the security accounting,
//! which yields the smallest kept length `n0`, the interval count
//! `n = ceil(n0 / (1 - P_er))` and the key rate `ell / n`.

use alloc::vec::Vec;

// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::keygen::{measure_errors, ErrorReport, SelectionPolicy};
use crate::security::{
    budget_at, min_kept_bits, GallagerExponent, SecurityBudget, SecurityTargets,
};
use crate::source::KeySource;
use crate::{Error, Result};

/// Minimum number of simulated candidate bits per evaluation.
pub const MIN_TRIALS: usize = 10_000;
/// Default cap on the interval count before a candidate is called infeasible.
pub const DEFAULT_N_CAP: u64 = 10_000_000;

const SIMULATION_DOMAIN: u64 = 0x6f70_7469;

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub source: KeySource,
    pub targets: SecurityTargets,
    /// Candidates, all of the same selection kind.
    pub search_grid: Vec<SelectionPolicy>,
    /// Candidate bits per simulated block. For top-M selection this is the
    /// run length out of which `M` are kept.
    pub block_len: usize,
    pub n_cap: u64,
}

impl OptimizationProblem {
    pub fn validate(&self) -> Result<()> {
        self.targets.validate()?;
        let first = self
            .search_grid
            .first()
            .ok_or(Error::InvalidArgument("search grid is empty"))?;
        let same_kind = |p: &SelectionPolicy| {
            matches!(
                (first, p),
                (
                    SelectionPolicy::Threshold { .. },
                    SelectionPolicy::Threshold { .. }
                ) | (SelectionPolicy::TopM { .. }, SelectionPolicy::TopM { .. })
            )
        };
        if !self.search_grid.iter().all(same_kind) {
            return Err(Error::InvalidArgument("search grid mixes selection kinds"));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidArgument("block length must be positive"));
        }
        for p in &self.search_grid {
            match *p {
                SelectionPolicy::Threshold { alpha } if !(alpha >= 0.0) => {
                    return Err(Error::InvalidArgument("alpha must be non-negative"));
                }
                SelectionPolicy::TopM { m_keep } if m_keep == 0 || m_keep > self.block_len => {
                    return Err(Error::InvalidArgument("m_keep must lie in 1..=block_len"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn blocks_for(&self, trials: usize) -> u64 {
        trials.div_ceil(self.block_len) as u64
    }
}

/// Raw counts from simulated blocks; merge in block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CandidateCounts {
    pub total: usize,
    pub kept: usize,
    pub legal_disagreements: usize,
    pub eavesdropper_disagreements: usize,
}

impl CandidateCounts {
    pub fn merge(self, other: CandidateCounts) -> CandidateCounts {
        CandidateCounts {
            total: self.total + other.total,
            kept: self.kept + other.kept,
            legal_disagreements: self.legal_disagreements + other.legal_disagreements,
            eavesdropper_disagreements: self.eavesdropper_disagreements
                + other.eavesdropper_disagreements,
        }
    }

    pub fn report(&self) -> Result<ErrorReport> {
        if self.kept == 0 {
            return Err(Error::EmptySelection);
        }
        Ok(ErrorReport {
            legal_error: self.legal_disagreements as f64 / self.kept as f64,
            eavesdropper_error: self.eavesdropper_disagreements as f64 / self.kept as f64,
            erasure_rate: 1.0 - self.kept as f64 / self.total as f64,
            kept: self.kept,
            total: self.total,
        })
    }
}

/// Counts for every grid candidate on simulated block `block`.
pub fn simulate_block(
    problem: &OptimizationProblem,
    master_seed: u64,
    block: u64,
) -> Result<Vec<CandidateCounts>> {
    let run = problem
        .source
        .run_block(master_seed, SIMULATION_DOMAIN, block, problem.block_len)?;
    problem
        .search_grid
        .iter()
        .map(|policy| match policy.apply(&run) {
            Ok(key) => {
                let r = measure_errors(&key)?;
                Ok(CandidateCounts {
                    total: r.total,
                    kept: r.kept,
                    legal_disagreements: (r.legal_error * r.kept as f64).round() as usize,
                    eavesdropper_disagreements: (r.eavesdropper_error * r.kept as f64).round()
                        as usize,
                })
            }
            Err(Error::EmptySelection) => Ok(CandidateCounts {
                total: run.len(),
                ..CandidateCounts::default()
            }),
            Err(e) => Err(e),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateEvaluation {
    pub policy: SelectionPolicy,
    pub measured: ErrorReport,
    pub budget: SecurityBudget,
    /// Intervals needed: `ceil(n0 / (1 - P_er))`.
    pub n: u64,
    /// `ell / n`.
    pub key_rate: f64,
    /// `ell / n0`.
    pub key_rate_kept: f64,
}

impl CandidateEvaluation {
    /// Recomputes the budget at the reported `n0` and checks both targets.
    pub fn verify(&self, targets: &SecurityTargets) -> bool {
        let decoder = GallagerExponent::new(self.measured.legal_error);
        match budget_at(
            self.budget.n0,
            targets,
            self.measured.eavesdropper_error,
            &decoder,
        ) {
            Ok(b) => {
                b == self.budget
                    && b.satisfies(targets.leakage_target, targets.ped_target)
                    && self.key_rate == targets.ell as f64 / self.n as f64
            }
            Err(_) => false,
        }
    }
}

/// Security accounting for one candidate's merged counts.
pub fn evaluate_counts(
    problem: &OptimizationProblem,
    policy: SelectionPolicy,
    counts: &CandidateCounts,
) -> Result<CandidateEvaluation> {
    let measured = counts.report()?;
    let keep_fraction = 1.0 - measured.erasure_rate;
    // n = ceil(n0 / keep_fraction) must stay within the cap too
    let n0_cap = (problem.n_cap as f64 * keep_fraction).floor() as u64;
    let budget = min_kept_bits(
        &problem.targets,
        measured.eavesdropper_error,
        measured.legal_error,
        n0_cap,
    )?;
    let n = (budget.n0 as f64 / keep_fraction).ceil() as u64;
    if n > problem.n_cap {
        return Err(Error::Infeasible("interval count exceeds the cap"));
    }
    let ell = problem.targets.ell as f64;
    Ok(CandidateEvaluation {
        policy,
        measured,
        budget,
        n,
        key_rate: ell / n as f64,
        key_rate_kept: ell / budget.n0 as f64,
    })
}

/// Sequential simulation of all candidates over `trials` bits.
pub fn simulate_counts(
    problem: &OptimizationProblem,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<CandidateCounts>> {
    problem.validate()?;
    if trials < MIN_TRIALS {
        return Err(Error::TooFewSamples {
            required: MIN_TRIALS,
            actual: trials,
        });
    }
    let mut acc = alloc::vec![CandidateCounts::default(); problem.search_grid.len()];
    for block in 0..problem.blocks_for(trials) {
        for (a, c) in acc
            .iter_mut()
            .zip(simulate_block(problem, master_seed, block)?)
        {
            *a = a.merge(c);
        }
    }
    Ok(acc)
}

pub fn evaluate_candidate(
    problem: &OptimizationProblem,
    policy: SelectionPolicy,
    trials: usize,
    master_seed: u64,
) -> Result<CandidateEvaluation> {
    let single = OptimizationProblem {
        search_grid: alloc::vec![policy],
        ..problem.clone()
    };
    let counts = simulate_counts(&single, trials, master_seed)?;
    evaluate_counts(&single, policy, &counts[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: CandidateEvaluation,
    /// Every grid point in grid order, infeasible ones as errors.
    pub candidates: Vec<Result<CandidateEvaluation>>,
}

// Smaller means fewer erasures.
fn erasure_order(p: &SelectionPolicy) -> f64 {
    match *p {
        SelectionPolicy::Threshold { alpha } => alpha,
        SelectionPolicy::TopM { m_keep } => -(m_keep as f64),
    }
}

/// Picks the feasible candidate with the largest `ell / n`; ties go to the
/// candidate that erases less. The winner is re-verified.
pub fn select_best(
    problem: &OptimizationProblem,
    candidates: Vec<Result<CandidateEvaluation>>,
) -> Result<OptimizationResult> {
    let mut best: Option<CandidateEvaluation> = None;
    for c in candidates.iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => {
                c.key_rate > b.key_rate
                    || (c.key_rate == b.key_rate
                        && erasure_order(&c.policy) < erasure_order(&b.policy))
            }
        };
        if better {
            best = Some(*c);
        }
    }
    let best = best.ok_or(Error::Infeasible("no grid candidate meets the targets"))?;
    if !best.verify(&problem.targets) {
        return Err(Error::Infeasible(
            "selected candidate failed re-verification",
        ));
    }
    Ok(OptimizationResult { best, candidates })
}

pub fn optimize(
    problem: &OptimizationProblem,
    trials: usize,
    master_seed: u64,
) -> Result<OptimizationResult> {
    let counts = simulate_counts(problem, trials, master_seed)?;
    let evaluations = problem
        .search_grid
        .iter()
        .zip(&counts)
        .map(|(p, c)| evaluate_counts(problem, *p, c))
        .collect();
    select_best(problem, evaluations)
}
