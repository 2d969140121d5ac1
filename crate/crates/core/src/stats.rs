//! Statistical core: correlation, bit-disagreement probability for
//! thresholded correlated Gaussians, distribution fitting and
//! Kolmogorov-Smirnov testing.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_PI, PI};

// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Significance level used by every goodness-of-fit and randomness test.
pub const TEST_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub coefficient: f64,
    pub sample_count: usize,
}

/// Sample Pearson correlation of two equal-length sequences.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<CorrelationEstimate> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero sample variance"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrelationEstimate {
        coefficient: r,
        sample_count: xs.len(),
    })
}

/// Probability that two zero-mean jointly Gaussian variables with
/// correlation `rho` in `(0, 1]` fall on opposite sides of zero:
/// `arctan(sqrt(1 - rho^2) / rho) / pi`.
pub fn pe_closed_form(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument("rho must lie in (0, 1]"));
    }
    Ok(FRAC_1_PI * ((1.0 - rho * rho).sqrt() / rho).atan())
}

/// Disagreement probability over the whole range `[-1, 1]`, using
/// `pe(rho) = 1 - pe(-rho)` for negative correlation and `0.5` at zero.
pub fn pe_any_sign(rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument("rho must lie in [-1, 1]"));
    }
    if rho > 0.0 {
        pe_closed_form(rho)
    } else if rho == 0.0 {
        Ok(0.5)
    } else {
        Ok(1.0 - pe_closed_form(-rho)?)
    }
}

/// A Monte Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl ProbabilityEstimate {
    pub fn from_counts(hits: usize, samples: usize) -> Self {
        let p = hits as f64 / samples as f64;
        ProbabilityEstimate {
            probability: p,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        }
    }

    /// Whether `value` lies within `k` standard errors.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.probability - value).abs() < k * self.std_error
    }
}

/// Monte Carlo estimate of the sign-disagreement probability, drawing
/// `(g1, rho*g1 + sqrt(1-rho^2)*g2)`.
pub fn pe_monte_carlo<R: Rng + ?Sized>(
    rho: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<ProbabilityEstimate> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidArgument("|rho| must be below 1"));
    }
    if n_samples < 10_000 {
        return Err(Error::TooFewSamples {
            required: 10_000,
            actual: n_samples,
        });
    }
    let c = (1.0 - rho * rho).sqrt();
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let other = rho * g1 + c * g2;
        if (g1 >= 0.0) != (other >= 0.0) {
            hits += 1;
        }
    }
    Ok(ProbabilityEstimate::from_counts(hits, n_samples))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianFit {
    pub fn cdf(&self, x: f64) -> f64 {
        normal_cdf((x - self.mean) / self.variance.sqrt())
    }
}

/// Result of a one-sample Kolmogorov-Smirnov test at [`TEST_LEVEL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub passed: bool,
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

// lambda with Q(lambda) = 0.01
const KS_LAMBDA_1PCT: f64 = 1.627_624;

/// KS test of `samples` against `cdf`. Uses Stephens' effective-n scaling for
/// the p-value and the critical value.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsTest> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples {
            required: 1,
            actual: 0,
        });
    }
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d = d.max(lo).max(hi);
    }
    let sqrt_n = n.sqrt();
    let scale = sqrt_n + 0.12 + 0.11 / sqrt_n;
    let p_value = kolmogorov_q(scale * d);
    Ok(KsTest {
        statistic: d,
        critical_value: KS_LAMBDA_1PCT / scale,
        p_value,
        passed: p_value > TEST_LEVEL,
    })
}

/// Moment fit plus KS distance to the fitted normal. `ks` is `None` when the
/// samples are constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFitReport {
    pub fit: GaussianFit,
    pub ks: Option<KsTest>,
}

impl GaussianFitReport {
    pub fn is_degenerate(&self) -> bool {
        self.ks.is_none()
    }
}

pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

pub fn gaussian_fit(samples: &[f64]) -> Result<GaussianFitReport> {
    if samples.len() < 100 {
        return Err(Error::TooFewSamples {
            required: 100,
            actual: samples.len(),
        });
    }
    let (mean, variance) = mean_variance(samples);
    let fit = GaussianFit { mean, variance };
    let ks = if variance > 0.0 {
        Some(ks_test(samples, |x| fit.cdf(x))?)
    } else {
        None
    };
    Ok(GaussianFitReport { fit, ks })
}

/// KS test against the uniform law on `[lo, hi)`.
pub fn uniform_ks(samples: &[f64], lo: f64, hi: f64) -> Result<KsTest> {
    let width = hi - lo;
    ks_test(samples, |x| ((x - lo) / width).clamp(0.0, 1.0))
}

/// Exponentially scaled modified Bessel function `exp(-|x|) I0(x)`
/// (polynomial approximations, relative error below 2e-7).
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.75 {
        let y = (x / 3.75) * (x / 3.75);
        let i0 = 1.0
            + y * (3.515_622_9
                + y * (3.089_942_4
                    + y * (1.206_749_2 + y * (0.265_973_2 + y * (0.036_076_8 + y * 0.004_581_3)))));
        i0 * (-ax).exp()
    } else {
        let y = 3.75 / ax;
        (0.398_942_28
            + y * (0.013_285_92
                + y * (0.002_253_19
                    + y * (-0.001_575_65
                        + y * (0.009_162_81
                            + y * (-0.020_577_06
                                + y * (0.026_355_37 + y * (-0.016_476_33 + y * 0.003_923_77))))))))
            / ax.sqrt()
    }
}

/// Rice law with noncentrality `nu` and scale `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiceFit {
    pub nu: f64,
    pub sigma: f64,
}

impl RiceFit {
    /// Method of moments on the second and fourth raw moments:
    /// `E[A^2] = nu^2 + 2 sigma^2`, `E[A^4] = nu^4 + 8 sigma^2 nu^2 + 8 sigma^4`.
    /// Falls back to Rayleigh (`nu = 0`) when the kurtosis exceeds the
    /// Rayleigh value.
    pub fn method_of_moments(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples {
                required: 1,
                actual: 0,
            });
        }
        let n = samples.len() as f64;
        let m2 = samples.iter().map(|a| a * a).sum::<f64>() / n;
        let m4 = samples.iter().map(|a| a * a * a * a).sum::<f64>() / n;
        if m2 <= 0.0 {
            return Err(Error::Degenerate("zero second moment"));
        }
        let nu2 = (2.0 * m2 * m2 - m4).max(0.0).sqrt();
        let sigma2 = (m2 - nu2) / 2.0;
        if sigma2 <= 0.0 {
            return Err(Error::Degenerate("amplitude has no spread"));
        }
        Ok(RiceFit {
            nu: nu2.sqrt(),
            sigma: sigma2.sqrt(),
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let s2 = self.sigma * self.sigma;
        let z = x * self.nu / s2;
        // exp(-(x^2+nu^2)/2s2) I0(z) = exp(-(x-nu)^2/2s2) I0e(z)
        x / s2 * (-(x - self.nu) * (x - self.nu) / (2.0 * s2)).exp() * bessel_i0e(z)
    }

    /// Tabulated CDF on `[0, upper]`, integrated by the trapezoid rule.
    pub fn cdf_table(&self, upper: f64, points: usize) -> CdfTable {
        let step = upper / (points - 1) as f64;
        let mut values = Vec::with_capacity(points);
        values.push(0.0);
        let mut acc = 0.0;
        let mut prev = self.pdf(0.0);
        for i in 1..points {
            let cur = self.pdf(i as f64 * step);
            acc += 0.5 * (prev + cur) * step;
            values.push(acc);
            prev = cur;
        }
        CdfTable { step, values }
    }
}

/// Piecewise-linear CDF on an even grid starting at 0.
#[derive(Debug, Clone)]
pub struct CdfTable {
    step: f64,
    values: Vec<f64>,
}

impl CdfTable {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let pos = x / self.step;
        let i = pos as usize;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1].min(1.0);
        }
        let frac = pos - i as f64;
        (self.values[i] * (1.0 - frac) + self.values[i + 1] * frac).min(1.0)
    }
}

/// Equal-width histogram over `[lo, hi]`; out-of-range samples are clamped
/// into the end bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(
                "histogram needs bins > 0 and hi > lo",
            ));
        }
        let mut counts = alloc::vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &x in samples {
            let idx = ((x - lo) / width).floor();
            let idx = if idx < 0.0 {
                0
            } else {
                (idx as usize).min(bins - 1)
            };
            counts[idx] += 1;
        }
        Ok(Histogram { lo, hi, counts })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    /// Count normalized to a probability density.
    pub fn density(&self, i: usize) -> f64 {
        let total: u64 = self.counts.iter().sum();
        self.counts[i] as f64 / (total as f64 * self.bin_width())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x % two_pi;
    if y > PI {
        y -= two_pi;
    } else if y <= -PI {
        y += two_pi;
    }
    y
}
