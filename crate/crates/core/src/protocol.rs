//! One complete key agreement: collect kept bits block by block, reconcile
//! with a syndrome of the charged length, then hash both sides down to the
//! final key.

use alloc::vec::Vec;

use crate::keygen::{
    bit_randomness_tests, hash_key, RandomnessReport, SelectionPolicy, MIN_RANDOMNESS_BITS,
};
use crate::reconcile::{kept_bit_llrs, reconcile};
use crate::security::SecurityBudget;
use crate::seed::block_rng;
use crate::source::KeySource;
use crate::{Error, Result};

const COLLECT_DOMAIN: u64 = 0x6b65_7973;
const MATRIX_DOMAIN: u64 = 0x6c64_7063;
const HASH_DOMAIN: u64 = 0x7465_6f70;
/// Blocks drawn before giving up on reaching the kept length.
const MAX_BLOCKS: u64 = 100_000;

#[derive(Debug, Clone)]
pub struct AgreementPlan {
    pub source: KeySource,
    pub policy: SelectionPolicy,
    /// Candidate bits per block; selection statistics are per block.
    pub block_len: usize,
    /// Kept length, check bits and final length to use.
    pub budget: SecurityBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementOutcome {
    pub key_a: Option<Vec<bool>>,
    pub key_b: Vec<bool>,
    /// Intervals consumed (candidate bits, before erasure).
    pub intervals: usize,
    /// A-B disagreements on the kept bits before reconciliation.
    pub raw_disagreements: usize,
    /// B-E disagreements on the kept bits.
    pub eavesdropper_disagreements: usize,
    /// Randomness tests on B's kept bits, over at least
    /// `MIN_RANDOMNESS_BITS` of them.
    pub randomness: RandomnessReport,
}

impl AgreementOutcome {
    pub fn keys_match(&self) -> bool {
        self.key_a.as_ref() == Some(&self.key_b)
    }
}

struct Collected {
    bits_a_llr: Vec<f64>,
    bits_a: Vec<bool>,
    bits_b: Vec<bool>,
    bits_e: Vec<bool>,
    intervals: usize,
}

fn collect(plan: &AgreementPlan, seed: u64, wanted: usize) -> Result<Collected> {
    let mut c = Collected {
        bits_a_llr: Vec::new(),
        bits_a: Vec::new(),
        bits_b: Vec::new(),
        bits_e: Vec::new(),
        intervals: 0,
    };
    let mut block = 0;
    while c.bits_b.len() < wanted {
        if block == MAX_BLOCKS {
            return Err(Error::Infeasible("selection keeps too few bits"));
        }
        let mut rng = block_rng(seed, COLLECT_DOMAIN, block);
        block += 1;
        let run = plan.source.run(plan.block_len, &mut rng)?;
        let key = match plan.policy.apply(&run) {
            Ok(k) => k,
            Err(Error::EmptySelection) => continue,
            Err(e) => return Err(e),
        };
        c.intervals += run.len();
        c.bits_a_llr.extend(kept_bit_llrs(&run, &key.kept_indices)?);
        c.bits_a.extend(key.bits_a);
        c.bits_b.extend(key.bits_b);
        c.bits_e.extend(key.bits_e);
    }
    Ok(c)
}

/// Runs the agreement with every random choice derived from `seed`.
pub fn agree(plan: &AgreementPlan, seed: u64) -> Result<AgreementOutcome> {
    let n0 = plan.budget.n0 as usize;
    let ell = plan.budget.ell as usize;
    if n0 == 0 || ell == 0 || ell > n0 {
        return Err(Error::InvalidArgument("budget needs 0 < ell <= n0"));
    }
    let c = collect(plan, seed, n0.max(MIN_RANDOMNESS_BITS))?;
    let randomness = bit_randomness_tests(&c.bits_b)?;
    // the key uses the first n0 kept bits
    let (llr, bits_b) = (&c.bits_a_llr[..n0], &c.bits_b[..n0]);
    let raw_disagreements = c.bits_a[..n0]
        .iter()
        .zip(bits_b)
        .filter(|(a, b)| a != b)
        .count();
    let eavesdropper_disagreements = c.bits_e[..n0]
        .iter()
        .zip(bits_b)
        .filter(|(e, b)| e != b)
        .count();
    let intervals = c.intervals * n0 / c.bits_b.len();
    let matrix_seed = seed ^ MATRIX_DOMAIN;
    let corrected = if plan.budget.check_bits == 0 {
        Some(c.bits_a[..n0].to_vec())
    } else {
        reconcile(llr, bits_b, plan.budget.check_bits as usize, matrix_seed)?.corrected
    };
    let hash_seed = seed ^ HASH_DOMAIN;
    let key_b = hash_key(bits_b, ell, hash_seed)?;
    let key_a = corrected
        .map(|bits| hash_key(&bits, ell, hash_seed))
        .transpose()?;
    Ok(AgreementOutcome {
        key_a,
        key_b,
        intervals,
        raw_disagreements,
        eavesdropper_disagreements,
        randomness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Snr;
    use crate::security::{min_kept_bits, SecurityTargets};
    use crate::source::SyntheticSource;

    #[test]
    fn synthetic_agreement_matches() {
        let targets = SecurityTargets::new(128);
        let budget = min_kept_bits(&targets, 0.2, 0.01, 1_000_000).unwrap();
        let plan = AgreementPlan {
            source: KeySource::Synthetic(
                SyntheticSource::new(0.8, Snr::new(100.0).unwrap()).unwrap(),
            ),
            policy: SelectionPolicy::Threshold { alpha: 0.1 },
            block_len: 2_000,
            budget,
        };
        let out = agree(&plan, 5).unwrap();
        assert!(out.keys_match());
        assert_eq!(out.key_b.len(), 128);
        assert!(out.raw_disagreements > 0);
        assert_eq!(out, agree(&plan, 5).unwrap());
    }
}
