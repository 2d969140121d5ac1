//! One-way syndrome reconciliation. B publishes the syndrome of its kept
//! bits under a seeded sparse parity-check matrix; A decodes B's string from
//! its own bits and their reliabilities with normalized min-sum belief
//! propagation.
//!
//! The security accounting charges the syndrome length as the check bits
//! `r`; the decoder only has to make the demo succeed in practice.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index::sample;

use crate::keygen::FunctionalRun;
use crate::seed::rng_from_seed;
use crate::stats::normal_cdf;
use crate::{Error, Result};

pub const DEFAULT_COLUMN_WEIGHT: usize = 3;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;
const MIN_SUM_SCALE: f64 = 0.8;
const LLR_CLAMP: f64 = 30.0;

/// Sparse binary matrix with `checks` rows and `bits` columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    bits: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Every column gets `column_weight` distinct rows drawn from the seeded
    /// stream among rows that are not yet full, so row weights differ by at
    /// most one where possible.
    pub fn random(bits: usize, checks: usize, column_weight: usize, seed: u64) -> Result<Self> {
        if bits == 0 || checks == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive"));
        }
        let w = column_weight.min(checks);
        if w == 0 {
            return Err(Error::InvalidArgument("column weight must be positive"));
        }
        let cap = (w * bits).div_ceil(checks);
        let mut rng = rng_from_seed(seed);
        let mut rows = alloc::vec![Vec::new(); checks];
        let mut cols = Vec::with_capacity(bits);
        let mut open: Vec<usize> = (0..checks).collect();
        for j in 0..bits {
            let mut picked: Vec<usize> = if open.len() >= w {
                sample(&mut rng, open.len(), w)
                    .into_iter()
                    .map(|k| open[k])
                    .collect()
            } else {
                sample(&mut rng, checks, w).into_vec()
            };
            picked.sort_unstable();
            for &i in &picked {
                rows[i].push(j);
            }
            open.retain(|&i| rows[i].len() < cap);
            cols.push(picked);
        }
        Ok(ParityCheckMatrix { bits, rows, cols })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn checks(&self) -> usize {
        self.rows.len()
    }

    pub fn syndrome(&self, word: &[bool]) -> Result<Vec<bool>> {
        if word.len() != self.bits {
            return Err(Error::DimensionMismatch {
                expected: self.bits,
                actual: word.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().fold(false, |acc, &j| acc ^ word[j]))
            .collect())
    }

    /// Most likely word with the given syndrome under the prior
    /// `llr[j] = ln P(bit j = 0) / P(bit j = 1)`. `None` if the iterations
    /// run out before the syndrome is matched.
    pub fn decode(
        &self,
        syndrome: &[bool],
        llr: &[f64],
        max_iterations: usize,
    ) -> Result<Option<Vec<bool>>> {
        if syndrome.len() != self.checks() {
            return Err(Error::DimensionMismatch {
                expected: self.checks(),
                actual: syndrome.len(),
            });
        }
        if llr.len() != self.bits {
            return Err(Error::DimensionMismatch {
                expected: self.bits,
                actual: llr.len(),
            });
        }
        // edge messages stored per row, in row order
        let mut check_to_bit: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| alloc::vec![0.0; r.len()])
            .collect();
        // position of each (row, bit) edge inside its row
        let slot: Vec<Vec<usize>> = self
            .cols
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                rows.iter()
                    .map(|&i| self.rows[i].binary_search(&j).expect("edge present in row"))
                    .collect()
            })
            .collect();
        let mut word: Vec<bool> = llr.iter().map(|&l| l < 0.0).collect();
        if self.syndrome(&word)? == syndrome {
            return Ok(Some(word));
        }
        let mut incoming = Vec::new();
        for _ in 0..max_iterations {
            let mut total = llr.to_vec();
            for (j, rows) in self.cols.iter().enumerate() {
                for (k, &i) in rows.iter().enumerate() {
                    total[j] += check_to_bit[i][slot[j][k]];
                }
            }
            for (i, row) in self.rows.iter().enumerate() {
                incoming.clear();
                incoming.extend(
                    row.iter()
                        .enumerate()
                        .map(|(e, &j)| total[j] - check_to_bit[i][e]),
                );
                let mut sign_flip = syndrome[i];
                let (mut min1, mut min2, mut at) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                for (e, &m) in incoming.iter().enumerate() {
                    sign_flip ^= m < 0.0;
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        at = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for (e, &m) in incoming.iter().enumerate() {
                    let mag = if e == at { min2 } else { min1 };
                    let negative = sign_flip ^ (m < 0.0);
                    let v = (MIN_SUM_SCALE * mag).min(LLR_CLAMP);
                    check_to_bit[i][e] = if negative { -v } else { v };
                }
            }
            for (j, rows) in self.cols.iter().enumerate() {
                let mut t = llr[j];
                for (k, &i) in rows.iter().enumerate() {
                    t += check_to_bit[i][slot[j][k]];
                }
                word[j] = t < 0.0;
            }
            if self.syndrome(&word)? == syndrome {
                return Ok(Some(word));
            }
        }
        Ok(None)
    }
}

/// A's log-likelihood ratios for B's kept bits: its own sign, weighted by
/// how far its value sits from the nearest decision boundary in units of
/// the legal noise. On a circular run the boundaries are `0` and `+-pi`.
pub fn kept_bit_llrs(run: &FunctionalRun, kept: &[usize]) -> Result<Vec<f64>> {
    run.validate()?;
    if run.legal_noise_sd.len() != run.len() {
        return Err(Error::InvalidArgument(
            "run carries no legal noise estimates",
        ));
    }
    kept.iter()
        .map(|&j| {
            let v = *run
                .eta_a
                .get(j)
                .ok_or(Error::InvalidArgument("kept index out of range"))?;
            let margin = if run.circular {
                v.abs().min(PI - v.abs())
            } else {
                v.abs()
            };
            let sd = run.legal_noise_sd[j];
            let magnitude = if sd > 0.0 {
                let flip = normal_cdf(-margin / sd).max(1e-15);
                ((1.0 - flip) / flip).ln().min(LLR_CLAMP)
            } else {
                LLR_CLAMP
            };
            // bit 1 is a non-negative value
            Ok(if v >= 0.0 { -magnitude } else { magnitude })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconcileOutcome {
    /// A's estimate of B's bits; `None` if decoding did not converge.
    pub corrected: Option<Vec<bool>>,
    pub check_bits: usize,
}

/// Runs one reconciliation of A's reliabilities against B's bits with
/// `check_bits` syndrome bits.
pub fn reconcile(
    llr_a: &[f64],
    bits_b: &[bool],
    check_bits: usize,
    matrix_seed: u64,
) -> Result<ReconcileOutcome> {
    let h = ParityCheckMatrix::random(
        bits_b.len(),
        check_bits.max(1),
        DEFAULT_COLUMN_WEIGHT,
        matrix_seed,
    )?;
    let s = h.syndrome(bits_b)?;
    Ok(ReconcileOutcome {
        corrected: h.decode(&s, llr_a, DEFAULT_MAX_ITERATIONS)?,
        check_bits: h.checks(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matrix_shape_and_syndrome() {
        let h = ParityCheckMatrix::random(100, 20, 3, 1).unwrap();
        assert_eq!(h.checks(), 20);
        assert!(h.cols.iter().all(|c| c.len() == 3));
        assert_eq!(h.rows.iter().map(Vec::len).sum::<usize>(), 300);
        let zero = alloc::vec![false; 100];
        assert!(h.syndrome(&zero).unwrap().iter().all(|b| !b));
        assert!(h.syndrome(&zero[..10]).is_err());
        assert_eq!(h, ParityCheckMatrix::random(100, 20, 3, 1).unwrap());
    }

    #[test]
    fn syndrome_is_linear() {
        let h = ParityCheckMatrix::random(64, 16, 3, 2).unwrap();
        let mut rng = rng_from_seed(3);
        let x: Vec<bool> = (0..64).map(|_| rng.random()).collect();
        let y: Vec<bool> = (0..64).map(|_| rng.random()).collect();
        let xy: Vec<bool> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
        let sx = h.syndrome(&x).unwrap();
        let sy = h.syndrome(&y).unwrap();
        let sxy = h.syndrome(&xy).unwrap();
        for i in 0..16 {
            assert_eq!(sxy[i], sx[i] ^ sy[i]);
        }
    }

    #[test]
    fn corrects_binary_symmetric_errors() {
        // 2000 bits, 3% flips, half-rate syndrome: far inside the decodable region
        let n = 2000;
        let p: f64 = 0.03;
        let mut rng = rng_from_seed(4);
        let mut ok = 0;
        for trial in 0..10 {
            let b: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let a: Vec<bool> = b.iter().map(|&x| x ^ (rng.random::<f64>() < p)).collect();
            let l = ((1.0 - p) / p).ln();
            let llr: Vec<f64> = a.iter().map(|&x| if x { -l } else { l }).collect();
            let out = reconcile(&llr, &b, 600, trial).unwrap();
            if out.corrected.as_deref() == Some(&b[..]) {
                ok += 1;
            }
        }
        assert!(ok >= 9, "{ok}");
    }

    #[test]
    fn llrs_follow_margin() {
        let run = FunctionalRun {
            eta_a: alloc::vec![0.01, -3.1, 1.5, -1.0],
            eta_b: alloc::vec![0.0; 4],
            zeta_e: alloc::vec![0.0; 4],
            legal_noise_sd: alloc::vec![0.1; 4],
            circular: true,
        };
        let l = kept_bit_llrs(&run, &[0, 1, 2, 3]).unwrap();
        assert!(l[0] < 0.0 && l[0] > -1.0);
        assert!(l[1] > 0.0 && l[1] < 1.0);
        assert!(l[2] <= -LLR_CLAMP + 1e-9);
        assert!(l[3] > 10.0);
        assert!(kept_bit_llrs(&run, &[7]).is_err());
    }
}
