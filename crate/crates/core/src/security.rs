//! Information-theoretic accounting for the agreed key: the eavesdropper's
//! Rényi information, the privacy-amplification leakage bound, and the
//! decoding-error bound for check bits sent over the public channel.
//!
//! The decoding exponent is the modified random-coding form
//!
//! ```text
//! E(R_C) = max_{0 < r < 1} [ E0(r) - r * (2*R_C - 1) / R_C ]
//! E0(r)  = r - (1 + r) * log2( p^(1/(1+r)) + (1-p)^(1/(1+r)) )
//! ```
//!
//! with `R_C = n0 / (n0 + check_bits)` and `P_ed <= 2^(-n0 * E(R_C))`.
//! `E0` is a function of the maximization variable `r` (written `rho0` below).

use alloc::vec::Vec;
use core::f64::consts::LN_2;

// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Default leakage target, bits of Shannon information.
pub const DEFAULT_LEAKAGE_TARGET: f64 = 1e-9;
/// Default target for the decoding-error probability.
pub const DEFAULT_PED_TARGET: f64 = 1e-5;

/// Number of receive antennas B picks from at random each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiversityConfig {
    antenna_count: u32,
}

impl DiversityConfig {
    pub const SINGLE: DiversityConfig = DiversityConfig { antenna_count: 1 };

    pub fn new(antenna_count: u32) -> Result<Self> {
        if antenna_count == 0 {
            return Err(Error::InvalidArgument(
                "diversity needs at least one antenna",
            ));
        }
        Ok(DiversityConfig { antenna_count })
    }

    pub fn antenna_count(&self) -> u32 {
        self.antenna_count
    }
}

impl Default for DiversityConfig {
    fn default() -> Self {
        Self::SINGLE
    }
}

/// `t = n + (n / m) * log2(pe^2 + (1 - pe)^2)`; `m = 1` is the plain form.
pub fn renyi_information(n: f64, pe: f64, diversity: DiversityConfig) -> f64 {
    let collision = pe * pe + (1.0 - pe) * (1.0 - pe);
    n + n / diversity.antenna_count as f64 * collision.log2()
}

/// `2^-(n0 - ell - t - r) / ln 2`. Values above 1 are returned unchanged.
pub fn pa_leakage_bound(n0: f64, ell: f64, t: f64, r: f64) -> f64 {
    (-(n0 - ell - t - r)).exp2() / LN_2
}

pub fn gallager_e0(rho0: f64, p: f64) -> f64 {
    let a = 1.0 / (1.0 + rho0);
    rho0 - (1.0 + rho0) * (p.powf(a) + (1.0 - p).powf(a)).log2()
}

const GRID_STEP: f64 = 1e-4;
const GRID_POINTS: usize = 9_999;

/// `E0` tabulated on the `rho0` grid for one crossover probability, so that
/// the exponent can be evaluated at many code rates cheaply.
#[derive(Debug, Clone)]
pub struct GallagerExponent {
    p: f64,
    e0: Vec<f64>,
}

impl GallagerExponent {
    pub fn new(p: f64) -> Self {
        let e0 = (1..=GRID_POINTS)
            .map(|k| gallager_e0(k as f64 * GRID_STEP, p))
            .collect();
        GallagerExponent { p, e0 }
    }

    pub fn crossover(&self) -> f64 {
        self.p
    }

    /// `E(R_C)`, clamped at 0. Grid maximum refined by ternary search on the
    /// neighbouring cells; the objective is concave in `rho0`.
    pub fn exponent(&self, code_rate: f64) -> f64 {
        if !(code_rate > 0.0 && code_rate <= 1.0) {
            return 0.0;
        }
        let slope = (2.0 * code_rate - 1.0) / code_rate;
        let objective = |r: f64| gallager_e0(r, self.p) - r * slope;
        let mut best_k = 0;
        let mut best = f64::NEG_INFINITY;
        for (k, e0) in self.e0.iter().enumerate() {
            let v = e0 - (k + 1) as f64 * GRID_STEP * slope;
            if v > best {
                best = v;
                best_k = k;
            }
        }
        let center = (best_k + 1) as f64 * GRID_STEP;
        let (mut lo, mut hi) = (
            (center - GRID_STEP).max(GRID_STEP * 1e-3),
            (center + GRID_STEP).min(1.0 - GRID_STEP * 1e-3),
        );
        for _ in 0..60 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if objective(m1) < objective(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        best.max(objective(0.5 * (lo + hi))).max(0.0)
    }

    /// `min(1, 2^(-n0 * E(n0 / (n0 + r))))`, and exactly 0 for an
    /// error-free channel.
    pub fn decoding_error_bound(&self, n0: u64, check_bits: u64) -> f64 {
        if self.p == 0.0 {
            return 0.0;
        }
        let rate = n0 as f64 / (n0 + check_bits) as f64;
        (-(n0 as f64) * self.exponent(rate)).exp2().min(1.0)
    }

    /// Smallest `r` with `decoding_error_bound(n0, r) <= target`, searched
    /// up to `20 * n0`.
    pub fn min_check_bits(&self, n0: u64, target: f64) -> Result<u64> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidArgument("target must lie in (0, 1)"));
        }
        if !(self.p < 0.5) {
            return Err(Error::Infeasible("crossover probability must be below 0.5"));
        }
        if n0 == 0 {
            return Err(Error::InvalidArgument("n0 must be positive"));
        }
        if self.decoding_error_bound(n0, 0) <= target {
            return Ok(0);
        }
        let cap = 20 * n0;
        if self.decoding_error_bound(n0, cap) > target {
            return Err(Error::Infeasible("decoding target unreachable"));
        }
        let (mut lo, mut hi) = (0u64, cap);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.decoding_error_bound(n0, mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

pub fn gallager_exponent(code_rate: f64, p: f64) -> f64 {
    GallagerExponent::new(p).exponent(code_rate)
}

pub fn decoding_error_bound(n0: u64, check_bits: u64, p: f64) -> f64 {
    GallagerExponent::new(p).decoding_error_bound(n0, check_bits)
}

pub fn min_check_bits(n0: u64, p: f64, target_ped: f64) -> Result<u64> {
    GallagerExponent::new(p).min_check_bits(n0, target_ped)
}

/// Full accounting for one `(n0, ell)` choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityBudget {
    pub n0: u64,
    pub ell: u64,
    pub renyi_t: f64,
    pub check_bits: u64,
    pub code_rate: f64,
    pub exponent: f64,
    pub leakage_bound: f64,
    pub decoding_bound: f64,
}

impl SecurityBudget {
    pub fn satisfies(&self, leakage_target: f64, ped_target: f64) -> bool {
        self.leakage_bound <= leakage_target && self.decoding_bound <= ped_target
    }
}

/// Inputs that stay fixed while the kept length `n0` is searched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityTargets {
    pub ell: u64,
    pub leakage_target: f64,
    pub ped_target: f64,
    pub diversity: DiversityConfig,
}

impl SecurityTargets {
    pub fn new(ell: u64) -> Self {
        SecurityTargets {
            ell,
            leakage_target: DEFAULT_LEAKAGE_TARGET,
            ped_target: DEFAULT_PED_TARGET,
            diversity: DiversityConfig::SINGLE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return Err(Error::InvalidArgument("key length must be positive"));
        }
        for t in [self.leakage_target, self.ped_target] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument("targets must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Budget at kept length `n0` with eavesdropper error `pe_eve` and legal
/// error `p_legal`; the Rényi information is taken over the kept bits.
pub fn budget_at(
    n0: u64,
    targets: &SecurityTargets,
    pe_eve: f64,
    decoder: &GallagerExponent,
) -> Result<SecurityBudget> {
    let r = decoder.min_check_bits(n0, targets.ped_target)?;
    let t = renyi_information(n0 as f64, pe_eve, targets.diversity);
    let rate = n0 as f64 / (n0 + r) as f64;
    Ok(SecurityBudget {
        n0,
        ell: targets.ell,
        renyi_t: t,
        check_bits: r,
        code_rate: rate,
        exponent: decoder.exponent(rate),
        leakage_bound: pa_leakage_bound(n0 as f64, targets.ell as f64, t, r as f64),
        decoding_bound: decoder.decoding_error_bound(n0, r),
    })
}

/// Smallest kept length meeting both targets, up to `n0_cap`.
///
/// Feasibility is not monotone in `n0`: each step up in the check-bit count
/// costs leakage margin. The search walks upward, jumping straight to the
/// length whose leakage margin covers the current check-bit count; since that
/// count never decreases with `n0`, no skipped length can be feasible.
pub fn min_kept_bits(
    targets: &SecurityTargets,
    pe_eve: f64,
    p_legal: f64,
    n0_cap: u64,
) -> Result<SecurityBudget> {
    targets.validate()?;
    if !(0.0..=1.0).contains(&pe_eve) {
        return Err(Error::InvalidArgument(
            "eavesdropper error must be a probability",
        ));
    }
    if !(p_legal < 0.5) {
        return Err(Error::Infeasible("legal error rate must be below 0.5"));
    }
    // secret bits per kept bit: n0 - t = n0 * per_bit
    let per_bit = n0_margin_rate(pe_eve, targets.diversity);
    if !(per_bit > 0.0) {
        return Err(Error::Infeasible("eavesdropper holds the whole string"));
    }
    let margin = (1.0 / (targets.leakage_target * LN_2)).log2();
    // A positive exponent needs r > n0 * h(p_legal), so no n0 can work
    // unless n0 * (per_bit - h) exceeds the fixed costs.
    let spare = per_bit - binary_entropy(p_legal);
    if !(spare > 0.0) {
        return Err(Error::Infeasible(
            "check bits would cost more than the secret margin",
        ));
    }
    let floor = (targets.ell as f64 + margin) / spare;
    if floor > n0_cap as f64 {
        return Err(Error::Infeasible(
            "security targets need more than the n0 cap",
        ));
    }
    let decoder = GallagerExponent::new(p_legal);
    let start = (targets.ell + 1).max(floor as u64);
    let mut n0 = first_decodable(&decoder, start, n0_cap, targets.ped_target)?;
    // The minimal check fraction r/n0 never grows with n0, so falling short
    // at `hi` even with one check bit to spare rules out every n0 <= hi.
    let hopeless = |hi: u64| -> Result<bool> {
        let r = decoder.min_check_bits(hi, targets.ped_target)?;
        Ok(per_bit * hi as f64 + 1.0 < (targets.ell + r) as f64 + margin)
    };
    if hopeless(n0)? {
        let mut lo = n0;
        let mut hi = n0;
        while hopeless(hi)? {
            if hi >= n0_cap {
                return Err(Error::Infeasible(
                    "security targets need more than the n0 cap",
                ));
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(n0_cap);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if hopeless(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        n0 = lo + 1;
    }
    // (n0, r) of the previous step, so that short steps can update r cheaply.
    let mut last: Option<(u64, u64)> = None;
    while n0 <= n0_cap {
        let r = match last {
            Some((prev, r)) if n0 - prev <= 8 => {
                next_check_bits(&decoder, n0, r, n0 - prev, targets.ped_target)?
            }
            _ => decoder.min_check_bits(n0, targets.ped_target)?,
        };
        last = Some((n0, r));
        let needed = ((targets.ell + r) as f64 + margin) / per_bit;
        if (n0 as f64) + 1e-9 < needed {
            n0 = (needed.ceil() as u64).max(n0 + 1);
            continue;
        }
        let b = budget_at(n0, targets, pe_eve, &decoder)?;
        if b.satisfies(targets.leakage_target, targets.ped_target) {
            return Ok(b);
        }
        n0 += 1;
    }
    Err(Error::Infeasible(
        "security targets need more than the n0 cap",
    ))
}

// Check bits at `n0` given the minimal `r_prev` at `n0 - step`: usually
// within `r_prev..=r_prev + step`.
fn next_check_bits(
    decoder: &GallagerExponent,
    n0: u64,
    r_prev: u64,
    step: u64,
    target: f64,
) -> Result<u64> {
    let below = r_prev
        .checked_sub(1)
        .map(|r| decoder.decoding_error_bound(n0, r) <= target);
    if below != Some(true) {
        for r in r_prev..=r_prev + step {
            if decoder.decoding_error_bound(n0, r) <= target {
                return Ok(r);
            }
        }
    }
    decoder.min_check_bits(n0, target)
}

// Smallest n0 >= start for which some check-bit count reaches the target.
fn first_decodable(decoder: &GallagerExponent, start: u64, cap: u64, target: f64) -> Result<u64> {
    let ok = |n0: u64| decoder.min_check_bits(n0, target).is_ok();
    if ok(start) {
        return Ok(start);
    }
    let (mut lo, mut hi) = (start, start.saturating_mul(2));
    while !ok(hi) {
        if hi >= cap {
            return Err(Error::Infeasible(
                "decoding target unreachable below the n0 cap",
            ));
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn n0_margin_rate(pe: f64, diversity: DiversityConfig) -> f64 {
    1.0 - renyi_information(1.0, pe, diversity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renyi_examples() {
        let one = DiversityConfig::SINGLE;
        assert!(renyi_information(100.0, 0.5, one).abs() < 1e-12);
        assert_eq!(renyi_information(100.0, 0.0, one), 100.0);
        // 100 + 50 * log2(0.82) = 85.684790742...
        let t = renyi_information(100.0, 0.1, DiversityConfig::new(2).unwrap());
        assert!((t - 85.684_790_742_167_95).abs() < 1e-9);
        assert!(DiversityConfig::new(0).is_err());
    }

    #[test]
    fn renyi_symmetric_and_bounded() {
        let one = DiversityConfig::SINGLE;
        let mut prev = -1.0;
        for i in 0..=50 {
            let pe = 0.5 - i as f64 / 100.0;
            let t = renyi_information(1000.0, pe, one);
            assert!((t - renyi_information(1000.0, 1.0 - pe, one)).abs() < 1e-9);
            assert!((0.0..=1000.0).contains(&t));
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn leakage_examples() {
        // margin 30: 2^-30 / ln 2 = 1.3435...e-9
        let b = pa_leakage_bound(1000.0, 128.0, 842.0, 0.0);
        assert!((b - 1.343_614_459_865_692e-9).abs() < 1e-20, "{b}");
        assert!(b <= 1.35e-9);
        assert!((pa_leakage_bound(10.0, 5.0, 5.0, 0.0) - 1.0 / LN_2).abs() < 1e-15);
        let b1 = pa_leakage_bound(500.0, 100.0, 300.0, 10.0);
        let b2 = pa_leakage_bound(500.0, 101.0, 300.0, 10.0);
        assert!((b2 / b1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn e0_examples() {
        for k in 1..100 {
            let r = k as f64 / 100.0;
            assert!(gallager_e0(r, 0.5).abs() < 1e-12);
        }
        assert!((gallager_e0(0.5, 0.0) - 0.5).abs() < 1e-15);
        // Oracle: direct float evaluation in Python.
        assert!((gallager_e0(0.5, 0.01) - 0.415_669_821_669_998_7).abs() < 1e-12);
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(gallager_exponent(0.8, 0.5), 0.0);
        // Oracle: mpmath root of dE/drho0, argmax 0.46582.
        assert!((gallager_exponent(0.8, 0.01) - 0.040_895_281_969_709_85).abs() < 1e-10);
        assert_eq!(gallager_exponent(1.0, 0.0), 0.0);
        assert_eq!(gallager_exponent(1.0, 0.01), 0.0);
    }

    #[test]
    fn exponent_monotone_on_grid() {
        for pi in 1..10 {
            let p = pi as f64 * 0.01;
            let ex = GallagerExponent::new(p);
            let mut prev = f64::INFINITY;
            for ri in 1..=20 {
                let e = ex.exponent(ri as f64 / 20.0);
                assert!(e <= prev + 1e-12);
                prev = e;
            }
        }
        for ri in 1..=20 {
            let rate = ri as f64 / 20.0;
            let mut prev = f64::INFINITY;
            for pi in 0..50 {
                let e = gallager_exponent(rate, pi as f64 * 0.01);
                assert!(e <= prev + 1e-12);
                prev = e;
            }
        }
    }

    #[test]
    fn decoding_bound_examples() {
        assert_eq!(decoding_error_bound(1000, 50, 0.5), 1.0);
        assert_eq!(decoding_error_bound(1000, 0, 0.01), 1.0);
        assert_eq!(decoding_error_bound(1000, 0, 0.0), 0.0);
        // n0 = 1000, rate 0.8 (r = 250): 2^(-1000 * 0.0408953) = 5.27e-13
        let b = decoding_error_bound(1000, 250, 0.01);
        assert!((b / (-40.895_281_969_709_85f64).exp2() - 1.0).abs() < 1e-6);
        let ex = GallagerExponent::new(0.02);
        let mut prev = 1.0;
        for r in (0..2000).step_by(25) {
            let b = ex.decoding_error_bound(1000, r);
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn check_bit_search() {
        assert_eq!(min_check_bits(1000, 0.0, 1e-5).unwrap(), 0);
        // Oracle: linear scan over r in Python with the same grid exponent.
        assert_eq!(min_check_bits(1000, 0.0032, 1e-5).unwrap(), 113);
        let loose = min_check_bits(1000, 0.0032, 1e-3).unwrap();
        assert_eq!(loose, 93);
        assert!(min_check_bits(1000, 0.5, 1e-5).is_err());
        assert!(min_check_bits(1000, 0.01, 0.0).is_err());
    }

    #[test]
    fn kept_length_search_meets_targets() {
        let targets = SecurityTargets::new(128);
        let b = min_kept_bits(&targets, 0.089, 0.0032, 1_000_000).unwrap();
        assert!(b.satisfies(1e-9, 1e-5));
        // one fewer kept bit must fail or the search was not tight
        let dec = GallagerExponent::new(0.0032);
        let below = budget_at(b.n0 - 1, &targets, 0.089, &dec).unwrap();
        assert!(!below.satisfies(1e-9, 1e-5));
        assert!(min_kept_bits(&targets, 0.0, 0.0032, 1_000_000).is_err());
    }

    #[test]
    fn kept_length_reference_values() {
        // Oracle: linear scan in Python over the grid exponent.
        for (pe, p, ell, n0) in [
            (0.027, 0.0032, 128, 7956),
            (0.089, 0.0032, 512, 3027),
            (0.24, 0.00035, 128, 291),
            (0.24, 0.0008, 256, 514),
        ] {
            let b = min_kept_bits(&SecurityTargets::new(ell), pe, p, 1_000_000).unwrap();
            assert_eq!(b.n0, n0, "pe={pe} p={p} ell={ell}");
        }
    }

    #[test]
    fn noisy_legal_channel_is_rejected_without_scanning() {
        // E sees almost nothing, but the legal channel is worse still.
        let start = std::time::Instant::now();
        let targets = SecurityTargets::new(128);
        assert!(min_kept_bits(&targets, 0.49, 0.49, 10_000_000).is_err());
        assert!(min_kept_bits(&targets, 0.45, 0.3, 2_000).is_err());
        assert_eq!(
            min_kept_bits(&targets, 0.45, 0.3, 10_000_000).unwrap().n0,
            2725
        );
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn renyi_in_range_and_symmetric(n in 0.0f64..1e5, pe in 0.0f64..=1.0, m in 1u32..8) {
                let d = DiversityConfig::new(m).unwrap();
                let t = renyi_information(n, pe, d);
                prop_assert!(t >= -1e-9 && t <= n + 1e-9);
                prop_assert!((t - renyi_information(n, 1.0 - pe, d)).abs() <= 1e-9 * n.max(1.0));
            }

            #[test]
            fn leakage_halves_per_margin_bit(n0 in 100.0f64..900.0, ell in 1.0f64..100.0, t in 0.0f64..50.0, r in 0.0f64..20.0) {
                let a = pa_leakage_bound(n0, ell, t, r);
                let b = pa_leakage_bound(n0 + 1.0, ell, t, r);
                prop_assert!((a / b - 2.0).abs() < 1e-9);
            }

            #[test]
            fn decoding_bound_non_increasing_in_checks(n0 in 10u64..2000, r in 0u64..2000, p in 0.0f64..0.3) {
                let ex = GallagerExponent::new(p);
                prop_assert!(ex.decoding_error_bound(n0, r + 7) <= ex.decoding_error_bound(n0, r));
            }
        }
    }
}
