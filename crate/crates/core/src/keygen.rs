//! Key-bit formation: thresholding, reliability selection with public
//! erasure announcement, error measurement, randomness tests and
//! Toeplitz-hash privacy amplification.

use alloc::vec::Vec;

// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::seed::rng_from_seed;
use crate::stats::{self, mean_variance, TEST_LEVEL};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    One,
    Zero,
    Erased,
}

/// `1` if `value >= threshold`, `0` if `value <= -threshold`, erased
/// otherwise. A zero threshold never erases.
pub fn quantize_threshold(value: f64, threshold: f64) -> Decision {
    debug_assert!(threshold >= 0.0);
    if value >= threshold {
        Decision::One
    } else if value <= -threshold {
        Decision::Zero
    } else {
        Decision::Erased
    }
}

/// Aligned functional outputs of one run: `eta_a`, `eta_b` for the legal users
/// and `zeta_e` for the eavesdropper, one entry per candidate key bit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FunctionalRun {
    pub eta_a: Vec<f64>,
    pub eta_b: Vec<f64>,
    pub zeta_e: Vec<f64>,
    /// A's estimate of the standard deviation of `eta_b - eta_a` per entry.
    /// Only the reconciliation step reads it.
    pub legal_noise_sd: Vec<f64>,
    /// Whether the values are angles in `(-pi, pi]`, where the sign also
    /// flips across `+-pi`.
    pub circular: bool,
}

impl FunctionalRun {
    pub fn len(&self) -> usize {
        self.eta_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_a.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.eta_a.len();
        for len in [self.eta_b.len(), self.zeta_e.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        if !self.legal_noise_sd.is_empty() && self.legal_noise_sd.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.legal_noise_sd.len(),
            });
        }
        Ok(())
    }
}

/// How unreliable positions are removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionPolicy {
    /// Erase `|eta| < alpha * std(eta)`, each user with its own sample
    /// standard deviation.
    Threshold { alpha: f64 },
    /// Keep the `m_keep` largest `|eta|`.
    TopM { m_keep: usize },
}

impl SelectionPolicy {
    pub fn apply(&self, run: &FunctionalRun) -> Result<KeyRun> {
        match *self {
            SelectionPolicy::Threshold { alpha } => select_method1(run, alpha),
            SelectionPolicy::TopM { m_keep } => select_method2(run, m_keep),
        }
    }
}

/// Bits of A, B and E on the publicly agreed kept positions.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRun {
    pub n: usize,
    pub kept_indices: Vec<usize>,
    pub bits_a: Vec<bool>,
    pub bits_b: Vec<bool>,
    pub bits_e: Vec<bool>,
}

impl KeyRun {
    pub fn n_kept(&self) -> usize {
        self.kept_indices.len()
    }

    pub fn n_erased(&self) -> usize {
        self.n - self.kept_indices.len()
    }

    /// Ternary view of party `which` (0 = A, 1 = B, 2 = E) at interval `j`.
    pub fn decision(&self, which: usize, j: usize) -> Decision {
        let bits = match which {
            0 => &self.bits_a,
            1 => &self.bits_b,
            _ => &self.bits_e,
        };
        match self.kept_indices.binary_search(&j) {
            Ok(pos) if bits[pos] => Decision::One,
            Ok(_) => Decision::Zero,
            Err(_) => Decision::Erased,
        }
    }

    fn from_kept(run: &FunctionalRun, kept: Vec<usize>) -> Result<Self> {
        if kept.is_empty() {
            return Err(Error::EmptySelection);
        }
        let sign = |v: &[f64]| kept.iter().map(|&j| v[j] >= 0.0).collect::<Vec<_>>();
        Ok(KeyRun {
            n: run.len(),
            bits_a: sign(&run.eta_a),
            bits_b: sign(&run.eta_b),
            bits_e: sign(&run.zeta_e),
            kept_indices: kept,
        })
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    mean_variance(xs).1.sqrt()
}

/// Threshold selection. A and B each erase by their own threshold and
/// announce the erased positions; both keep only positions neither erased.
/// E takes the sign of `zeta` on the kept positions.
pub fn select_method1(run: &FunctionalRun, alpha_in_sigma: f64) -> Result<KeyRun> {
    run.validate()?;
    if !(alpha_in_sigma >= 0.0) {
        return Err(Error::InvalidArgument("alpha must be non-negative"));
    }
    if run.is_empty() {
        return Err(Error::EmptySelection);
    }
    let thr_a = alpha_in_sigma * sample_std(&run.eta_a);
    let thr_b = alpha_in_sigma * sample_std(&run.eta_b);
    let kept = (0..run.len())
        .filter(|&j| {
            quantize_threshold(run.eta_a[j], thr_a) != Decision::Erased
                && quantize_threshold(run.eta_b[j], thr_b) != Decision::Erased
        })
        .collect();
    KeyRun::from_kept(run, kept)
}

/// Top-M selection. Each legal user ranks positions by its own `|eta|`; the
/// kept set is the intersection of the two announced top-M sets.
pub fn select_method2(run: &FunctionalRun, m_keep: usize) -> Result<KeyRun> {
    run.validate()?;
    let n = run.len();
    if m_keep == 0 || m_keep > n {
        return Err(Error::InvalidArgument("m_keep must lie in 1..=n"));
    }
    let top = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..n).collect();
        // stable order on ties: larger magnitude first, then lower index
        idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
        let mut mask = alloc::vec![false; n];
        for &i in &idx[..m_keep] {
            mask[i] = true;
        }
        mask
    };
    let in_a = top(&run.eta_a);
    let in_b = top(&run.eta_b);
    let kept = (0..n).filter(|&j| in_a[j] && in_b[j]).collect();
    KeyRun::from_kept(run, kept)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// A-B disagreement on kept bits (`p1` or `p2`).
    pub legal_error: f64,
    /// B-E disagreement on kept bits, i.e. conditioned on the public
    /// selection.
    pub eavesdropper_error: f64,
    pub erasure_rate: f64,
    pub kept: usize,
    pub total: usize,
}

pub fn measure_errors(run: &KeyRun) -> Result<ErrorReport> {
    let kept = run.n_kept();
    if kept == 0 {
        return Err(Error::EmptySelection);
    }
    let disagree = |x: &[bool], y: &[bool]| {
        x.iter().zip(y).filter(|(a, b)| a != b).count() as f64 / kept as f64
    };
    Ok(ErrorReport {
        legal_error: disagree(&run.bits_a, &run.bits_b),
        eavesdropper_error: disagree(&run.bits_b, &run.bits_e),
        erasure_rate: run.n_erased() as f64 / run.n as f64,
        kept,
        total: run.n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    /// Standardized statistic, approximately N(0, 1) under the null.
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
}

impl TestOutcome {
    fn from_z(z: f64) -> Self {
        let p = libm::erfc(z.abs() / core::f64::consts::SQRT_2);
        TestOutcome {
            statistic: z,
            p_value: p,
            passed: p > TEST_LEVEL,
        }
    }

    fn failed() -> Self {
        TestOutcome {
            statistic: f64::INFINITY,
            p_value: 0.0,
            passed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomnessReport {
    pub monobit: TestOutcome,
    pub serial: TestOutcome,
    pub runs: TestOutcome,
}

impl RandomnessReport {
    pub fn all_passed(&self) -> bool {
        self.monobit.passed && self.serial.passed && self.runs.passed
    }
}

pub const MIN_RANDOMNESS_BITS: usize = 1_000;

/// Frequency (monobit), lag-1 serial correlation and Wald-Wolfowitz runs
/// tests, each two-sided at the 1% level.
pub fn bit_randomness_tests(bits: &[bool]) -> Result<RandomnessReport> {
    let n = bits.len();
    if n < MIN_RANDOMNESS_BITS {
        return Err(Error::TooFewSamples {
            required: MIN_RANDOMNESS_BITS,
            actual: n,
        });
    }
    let nf = n as f64;
    let ones = bits.iter().filter(|&&b| b).count();
    let zeros = n - ones;
    let monobit = TestOutcome::from_z((ones as f64 - zeros as f64) / nf.sqrt());

    let (serial, runs) = if ones == 0 || zeros == 0 {
        (TestOutcome::failed(), TestOutcome::failed())
    } else {
        let x: Vec<f64> = bits.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let serial = match stats::pearson_correlation(&x[..n - 1], &x[1..]) {
            Ok(r) => TestOutcome::from_z(r.coefficient * (nf - 1.0).sqrt()),
            Err(_) => TestOutcome::failed(),
        };
        let n_runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
        let (n1, n2) = (ones as f64, zeros as f64);
        let mu = 2.0 * n1 * n2 / nf + 1.0;
        let var = (mu - 1.0) * (mu - 2.0) / (nf - 1.0);
        let runs = TestOutcome::from_z((n_runs as f64 - mu) / var.sqrt());
        (serial, runs)
    };
    Ok(RandomnessReport {
        monobit,
        serial,
        runs,
    })
}

/// Seeded binary Toeplitz matrix of size `output_len x input_len`. Entry
/// `(i, j)` is `diag[i - j + input_len - 1]`, with the `input_len +
/// output_len - 1` diagonal bits drawn from a ChaCha8 stream keyed by the
/// seed. Over uniformly random diagonals the family is 2-universal.
#[derive(Debug, Clone)]
pub struct ToeplitzHash {
    input_len: usize,
    output_len: usize,
    diagonals: Vec<bool>,
}

impl ToeplitzHash {
    pub fn from_seed(input_len: usize, output_len: usize, seed: u64) -> Result<Self> {
        if output_len == 0 || output_len >= input_len {
            return Err(Error::InvalidArgument(
                "output length must lie in 1..input length",
            ));
        }
        let mut rng = rng_from_seed(seed);
        let diagonals = (0..input_len + output_len - 1)
            .map(|_| rng.random::<bool>())
            .collect();
        Ok(ToeplitzHash {
            input_len,
            output_len,
            diagonals,
        })
    }

    pub fn entry(&self, row: usize, col: usize) -> bool {
        self.diagonals[row + self.input_len - 1 - col]
    }

    pub fn apply(&self, bits: &[bool]) -> Result<Vec<bool>> {
        if bits.len() != self.input_len {
            return Err(Error::DimensionMismatch {
                expected: self.input_len,
                actual: bits.len(),
            });
        }
        Ok((0..self.output_len)
            .map(|i| {
                let row = &self.diagonals[i..i + self.input_len];
                // row[k] = entry(i, input_len - 1 - k)
                row.iter()
                    .rev()
                    .zip(bits)
                    .fold(false, |acc, (&m, &b)| acc ^ (m & b))
            })
            .collect())
    }
}

/// Compresses agreed key bits to `output_length` bits.
pub fn hash_key(bits: &[bool], output_length: usize, seed: u64) -> Result<Vec<bool>> {
    ToeplitzHash::from_seed(bits.len(), output_length, seed)?.apply(bits)
}
