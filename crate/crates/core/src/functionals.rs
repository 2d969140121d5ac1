//! Scalar statistics of received quadrature samples used to form key bits.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::QuadratureObservation;
use crate::stats::wrap_angle;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalKind {
    Envelope,
    Phase,
    PhaseDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalSample {
    pub kind: FunctionalKind,
    pub value: f64,
}

impl FunctionalSample {
    pub fn new(kind: FunctionalKind, value: f64) -> Result<Self> {
        let ok = match kind {
            FunctionalKind::Envelope => value >= 0.0,
            FunctionalKind::Phase | FunctionalKind::PhaseDifference => value > -PI && value <= PI,
        };
        if !ok || !value.is_finite() {
            return Err(Error::InvalidArgument(
                "value outside the functional's range",
            ));
        }
        Ok(FunctionalSample { kind, value })
    }
}

/// `sqrt(mu_c^2 + mu_s^2)`.
pub fn envelope(obs: &QuadratureObservation) -> f64 {
    obs.in_phase.hypot(obs.quadrature)
}

/// Four-quadrant phase of `mu_c + i*mu_s`, in `(-pi, pi]`.
pub fn phase(obs: &QuadratureObservation) -> Result<f64> {
    if obs.in_phase == 0.0 && obs.quadrature == 0.0 {
        return Err(Error::Degenerate("phase of a zero phasor"));
    }
    let p = obs.quadrature.atan2(obs.in_phase);
    Ok(if p == -PI { PI } else { p })
}

/// `current - previous`, wrapped into `(-pi, pi]`.
pub fn phase_difference(current: f64, previous: f64) -> f64 {
    wrap_angle(current - previous)
}

/// How consecutive intervals are paired into phase differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// `(psi_2 - psi_1), (psi_4 - psi_3), ...`; every interval is used once,
    /// so successive differences are independent.
    #[default]
    NonOverlapping,
    /// `psi_{j+1} - psi_j` for every `j`.
    Overlapping,
}

impl Pairing {
    /// Number of raw intervals needed for `bits` differences.
    pub fn intervals_for(&self, bits: usize) -> usize {
        match self {
            Pairing::NonOverlapping => 2 * bits,
            Pairing::Overlapping => bits + 1,
        }
    }
}

pub fn phase_difference_series(phases: &[f64], pairing: Pairing) -> Vec<f64> {
    match pairing {
        Pairing::NonOverlapping => phases
            .chunks_exact(2)
            .map(|w| phase_difference(w[1], w[0]))
            .collect(),
        Pairing::Overlapping => phases
            .windows(2)
            .map(|w| phase_difference(w[1], w[0]))
            .collect(),
    }
}

/// Applies `kind` to a run of observations. Phase differences consume
/// intervals according to `pairing`; the other kinds map one-to-one.
pub fn functional_series(
    observations: &[QuadratureObservation],
    kind: FunctionalKind,
    pairing: Pairing,
) -> Result<Vec<f64>> {
    match kind {
        FunctionalKind::Envelope => Ok(observations.iter().map(envelope).collect()),
        FunctionalKind::Phase => observations.iter().map(phase).collect(),
        FunctionalKind::PhaseDifference => {
            let phases = observations.iter().map(phase).collect::<Result<Vec<_>>>()?;
            Ok(phase_difference_series(&phases, pairing))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn envelope_examples() {
        assert_eq!(envelope(&QuadratureObservation::new(3.0, 4.0)), 5.0);
        assert_eq!(envelope(&QuadratureObservation::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn phase_quadrants() {
        assert_eq!(phase(&QuadratureObservation::new(1.0, 0.0)).unwrap(), 0.0);
        assert!((phase(&QuadratureObservation::new(0.0, 1.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(
            (phase(&QuadratureObservation::new(-1.0, -1.0)).unwrap() + 3.0 * PI / 4.0).abs()
                < 1e-15
        );
        assert_eq!(phase(&QuadratureObservation::new(-1.0, -0.0)).unwrap(), PI);
        assert!(phase(&QuadratureObservation::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn phase_difference_examples() {
        assert!((phase_difference(0.5, 0.2) - 0.3).abs() < 1e-15);
        assert!((phase_difference(3.0, -3.0) - (6.0 - 2.0 * PI)).abs() < 1e-12);
        assert!((phase_difference(3.0, -3.0) + 0.283_185_307_179_586_2).abs() < 1e-12);
        assert_eq!(phase_difference(1.7, 1.7), 0.0);
    }

    #[test]
    fn pairing_modes() {
        let p = [0.0, 0.1, 0.3, 0.6, 1.0];
        let non = phase_difference_series(&p, Pairing::NonOverlapping);
        let ovl = phase_difference_series(&p, Pairing::Overlapping);
        assert_eq!(non.len(), 2);
        assert_eq!(ovl.len(), 4);
        assert!((non[1] - 0.3).abs() < 1e-12);
        assert!((ovl[3] - 0.4).abs() < 1e-12);
        assert_eq!(Pairing::NonOverlapping.intervals_for(3), 6);
        assert_eq!(Pairing::Overlapping.intervals_for(3), 4);
    }

    #[test]
    fn sample_ranges() {
        assert!(FunctionalSample::new(FunctionalKind::Envelope, -0.1).is_err());
        assert!(FunctionalSample::new(FunctionalKind::PhaseDifference, -PI).is_err());
        assert!(FunctionalSample::new(FunctionalKind::PhaseDifference, PI).is_ok());
    }

    proptest! {
        #[test]
        fn rotation_and_scaling(c in -10.0f64..10.0, s in -10.0f64..10.0, rot in -7.0f64..7.0, k in 0.01f64..100.0) {
            prop_assume!(c.hypot(s) > 1e-6);
            let obs = QuadratureObservation::new(c, s);
            let (sr, cr) = rot.sin_cos();
            let rotated = QuadratureObservation::new(c * cr - s * sr, c * sr + s * cr);
            prop_assert!((envelope(&obs) - envelope(&rotated)).abs() < 1e-9 * envelope(&obs).max(1.0));
            let scaled = QuadratureObservation::new(k * c, k * s);
            prop_assert!((phase(&obs).unwrap() - phase(&scaled).unwrap()).abs() < 1e-12);
            prop_assert!((envelope(&scaled) - k * envelope(&obs)).abs() < 1e-9 * k * envelope(&obs).max(1.0));
        }

        #[test]
        fn difference_antisymmetric(a in -PI..PI, b in -PI..PI) {
            let d = phase_difference(a, b);
            prop_assert!(d > -PI && d <= PI);
            let r = phase_difference(b, a);
            if d != PI {
                prop_assert!((d + r).abs() < 1e-12);
            }
        }
    }
}
