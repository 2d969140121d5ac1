//! Ring-type variable-directional antenna.
//!
//! `N` identical isotropic radiators sit on a circle of radius `R` in the
//! horizontal plane, radiator `s` at azimuth `2*pi*s/N`. With element phases
//! `psi_s`, the complex instant diagram towards azimuth `phi` and elevation
//! `theta` is
//!
//! ```text
//! f(phi, theta) = sum_s exp(i * (k0 * R * sin(theta) * cos(phi - 2*pi*s/N) - psi_s))
//! ```
//!
//! `theta` is measured from the ring's vertical axis, so the horizon is
//! `theta = pi/2` and the zenith is `theta = 0`. Elements are ideal unit-gain
//! radiators with no mutual coupling.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::stats::{self, GaussianFit, Histogram, KsTest, RiceFit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingAntenna {
    n_radiators: usize,
    radius: f64,
    wavelength: f64,
    wavenumber: f64,
}

impl RingAntenna {
    pub fn new(n_radiators: usize, radius: f64, wavelength: f64) -> Result<Self> {
        if n_radiators == 0 {
            return Err(Error::InvalidArgument("ring needs at least one radiator"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument("radius must be positive"));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::InvalidArgument("wavelength must be positive"));
        }
        Ok(RingAntenna {
            n_radiators,
            radius,
            wavelength,
            wavenumber: TAU / wavelength,
        })
    }

    pub fn n_radiators(&self) -> usize {
        self.n_radiators
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `k0 = 2*pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// Per-element geometric phases towards one direction.
    pub fn steering(&self, azimuth: f64, elevation: f64) -> Steering {
        let scale = self.wavenumber * self.radius * elevation.sin();
        let n = self.n_radiators as f64;
        let phases = (1..=self.n_radiators)
            .map(|s| scale * (azimuth - TAU * s as f64 / n).cos())
            .collect();
        Steering { phases }
    }

    pub fn evaluate_diagram(
        &self,
        excitation: &ExcitationVector,
        azimuth: f64,
        elevation: f64,
    ) -> Result<DiagramValue> {
        self.steering(azimuth, elevation).gain(excitation)
    }

    /// Independent element phases, uniform on `[0, 2*pi)`.
    pub fn sample_excitation<R: Rng + ?Sized>(&self, rng: &mut R) -> ExcitationVector {
        ExcitationVector {
            phases: (0..self.n_radiators)
                .map(|_| rng.random::<f64>() * TAU)
                .collect(),
        }
    }
}

/// Element phases `psi_s`, each reduced to `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationVector {
    phases: Vec<f64>,
}

impl ExcitationVector {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        ExcitationVector {
            phases: phases.into_iter().map(reduce_phase).collect(),
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

fn reduce_phase(x: f64) -> f64 {
    let mut r = x % TAU;
    if r < 0.0 {
        r += TAU;
    }
    // tiny negative inputs round up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Geometric element phases for a fixed direction; evaluating many
/// excitations against one direction only needs this once.
#[derive(Debug, Clone, PartialEq)]
pub struct Steering {
    phases: Vec<f64>,
}

impl Steering {
    pub fn gain(&self, excitation: &ExcitationVector) -> Result<DiagramValue> {
        if excitation.len() != self.phases.len() {
            return Err(Error::DimensionMismatch {
                expected: self.phases.len(),
                actual: excitation.len(),
            });
        }
        let gain = self
            .phases
            .iter()
            .zip(excitation.phases())
            .map(|(g, psi)| Complex64::from_polar(1.0, g - psi))
            .sum();
        Ok(DiagramValue { gain })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramValue {
    pub gain: Complex64,
}

impl DiagramValue {
    pub fn amplitude(&self) -> f64 {
        self.gain.norm()
    }

    /// `arg(gain)` in `(-pi, pi]`.
    pub fn phase(&self) -> f64 {
        let p = self.gain.arg();
        if p == -PI {
            PI
        } else {
            p
        }
    }
}

/// Empirical diagram statistics at one direction over random excitations.
#[derive(Debug, Clone)]
pub struct DiagramStatistics {
    pub samples: usize,
    pub amplitude_histogram: Histogram,
    pub phase_histogram: Histogram,
    /// Rice parameters by method of moments; `None` when the amplitude is
    /// constant (single radiator).
    pub rice: Option<RiceFit>,
    pub rice_ks: Option<KsTest>,
    pub amplitude_gaussian: GaussianFit,
    /// Phase uniformity on `(-pi, pi]`.
    pub phase_ks: KsTest,
}

pub const MIN_DIAGRAM_SAMPLES: usize = 1_000;
const HISTOGRAM_BINS: usize = 50;

pub fn diagram_statistics<R: Rng + ?Sized>(
    antenna: &RingAntenna,
    azimuth: f64,
    elevation: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<DiagramStatistics> {
    if n_samples < MIN_DIAGRAM_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_DIAGRAM_SAMPLES,
            actual: n_samples,
        });
    }
    let steering = antenna.steering(azimuth, elevation);
    let mut amplitudes = Vec::with_capacity(n_samples);
    let mut phases = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let v = steering.gain(&antenna.sample_excitation(rng))?;
        amplitudes.push(v.amplitude());
        phases.push(v.phase());
    }
    let n = antenna.n_radiators() as f64;
    let (mean, variance) = stats::mean_variance(&amplitudes);
    // A single radiator has |f| = 1 exactly; rounding in from_polar can leave
    // variance at the 1e-32 level.
    let constant_amplitude = variance < 1e-20;
    let (rice, rice_ks) = if constant_amplitude {
        (None, None)
    } else {
        let fit = RiceFit::method_of_moments(&amplitudes)?;
        let upper = n.max(fit.nu + 12.0 * fit.sigma);
        let table = fit.cdf_table(upper, 40_001);
        let ks = stats::ks_test(&amplitudes, |x| table.eval(x))?;
        (Some(fit), Some(ks))
    };
    let phase_ks = stats::uniform_ks(&phases, -PI, PI)?;
    Ok(DiagramStatistics {
        samples: n_samples,
        amplitude_histogram: Histogram::new(&amplitudes, 0.0, n, HISTOGRAM_BINS)?,
        phase_histogram: Histogram::new(&phases, -PI, PI, HISTOGRAM_BINS)?,
        rice,
        rice_ks,
        amplitude_gaussian: GaussianFit {
            mean,
            variance: if constant_amplitude { 0.0 } else { variance },
        },
        phase_ks,
    })
}
