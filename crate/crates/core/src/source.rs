//! Producers of aligned A/B/E functional runs: the ray-traced physical link
//! and a correlated-Gaussian stand-in with exactly known correlation.

use alloc::vec::Vec;

// Unused whenever std is linked, since its inherent float methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::antenna::RingAntenna;
use crate::channel::{
    add_receiver_noise, trace_rays, Geometry, Medium, PreparedLink, QuadratureObservation,
    Receiver, Snr,
};
use crate::functionals::{envelope, functional_series, FunctionalKind, Pairing};
use crate::keygen::FunctionalRun;
use crate::seed::block_rng;
use crate::stats::{pearson_correlation, CorrelationEstimate};
use crate::{Error, Result};

/// `eta = x + noise` for A and B, `zeta = rho * x + sqrt(1 - rho^2) * g` for
/// E, with `x`, `g` standard normal and legal noise variance `1 / snr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSource {
    pub rho: f64,
    pub snr: Snr,
}

impl SyntheticSource {
    pub fn new(rho: f64, snr: Snr) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArgument("rho must lie in [-1, 1]"));
        }
        Ok(SyntheticSource { rho, snr })
    }

    pub fn run<R: Rng + ?Sized>(&self, bits: usize, rng: &mut R) -> FunctionalRun {
        let sd = if self.snr.is_noiseless() {
            0.0
        } else {
            (1.0 / self.snr.ratio()).sqrt()
        };
        let side = (1.0 - self.rho * self.rho).max(0.0).sqrt();
        let mut run = FunctionalRun {
            eta_a: Vec::with_capacity(bits),
            eta_b: Vec::with_capacity(bits),
            zeta_e: Vec::with_capacity(bits),
            legal_noise_sd: alloc::vec![sd * core::f64::consts::SQRT_2; bits],
            circular: false,
        };
        for _ in 0..bits {
            let x: f64 = rng.sample(StandardNormal);
            let g: f64 = rng.sample(StandardNormal);
            let na: f64 = rng.sample(StandardNormal);
            let nb: f64 = rng.sample(StandardNormal);
            run.eta_a.push(x + sd * na);
            run.eta_b.push(x + sd * nb);
            run.zeta_e.push(self.rho * x + side * g);
        }
        run
    }
}

/// Raw samples of one block of key intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationBlock {
    pub noiseless: Vec<QuadratureObservation>,
    pub at_a: Vec<QuadratureObservation>,
    pub at_b: Vec<QuadratureObservation>,
    /// The eavesdropper's samples are kept noiseless (best case for E).
    pub at_e: Vec<QuadratureObservation>,
    /// Mean noiseless A-B power over the block; the noise reference.
    pub power_reference: f64,
    /// Per-quadrature noise variance actually applied.
    pub noise_variance: f64,
}

impl ObservationBlock {
    pub fn len(&self) -> usize {
        self.noiseless.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noiseless.is_empty()
    }
}

/// Ring antenna at A, omnidirectional B and E, three-ray channel.
#[derive(Debug, Clone)]
pub struct PhysicalSource {
    pub antenna: RingAntenna,
    pub geometry: Geometry,
    pub medium: Medium,
    pub snr: Snr,
    pub functional: FunctionalKind,
    pub pairing: Pairing,
    link_b: PreparedLink,
    link_e: PreparedLink,
}

impl PhysicalSource {
    pub fn new(
        antenna: RingAntenna,
        geometry: Geometry,
        medium: Medium,
        snr: Snr,
        functional: FunctionalKind,
        pairing: Pairing,
    ) -> Result<Self> {
        let rays_b = trace_rays(&geometry, Receiver::LegalUser, &medium)?;
        let rays_e = trace_rays(&geometry, Receiver::Eavesdropper, &medium)?;
        Ok(PhysicalSource {
            link_b: PreparedLink::new(&rays_b, &antenna),
            link_e: PreparedLink::new(&rays_e, &antenna),
            antenna,
            geometry,
            medium,
            snr,
            functional,
            pairing,
        })
    }

    /// Six-element ring at 12.5 cm with half-wavelength radius, 25 m link
    /// between planes 3 m above and below, perfect-conductor reflections.
    pub fn reference_setup(
        eavesdropper_offset: f64,
        snr: Snr,
        functional: FunctionalKind,
    ) -> Result<Self> {
        let wavelength = 0.125;
        let antenna = RingAntenna::new(6, wavelength / 2.0, wavelength)?;
        let geometry = Geometry::new(25.0, 3.0, 3.0, eavesdropper_offset)?;
        let medium = Medium::for_antenna(&antenna);
        Self::new(
            antenna,
            geometry,
            medium,
            snr,
            functional,
            Pairing::default(),
        )
    }

    pub fn with_eavesdropper_offset(&self, offset: f64) -> Result<Self> {
        Self::new(
            self.antenna,
            self.geometry.with_eavesdropper_offset(offset)?,
            self.medium,
            self.snr,
            self.functional,
            self.pairing,
        )
    }

    /// Key intervals consumed to produce `bits` candidate values.
    pub fn intervals_for(&self, bits: usize) -> usize {
        match self.functional {
            FunctionalKind::PhaseDifference => self.pairing.intervals_for(bits),
            _ => bits,
        }
    }

    /// `intervals` fresh excitations; noise is drawn after all excitations.
    pub fn observe<R: Rng + ?Sized>(
        &self,
        intervals: usize,
        rng: &mut R,
    ) -> Result<ObservationBlock> {
        if intervals == 0 {
            return Err(Error::InvalidArgument("block needs at least one interval"));
        }
        let mut noiseless = Vec::with_capacity(intervals);
        let mut at_e = Vec::with_capacity(intervals);
        for _ in 0..intervals {
            let exc = self.antenna.sample_excitation(rng);
            noiseless.push(self.link_b.observe(&exc)?);
            at_e.push(self.link_e.observe(&exc)?);
        }
        let power = noiseless.iter().map(|o| o.power()).sum::<f64>() / intervals as f64;
        let mut at_a = Vec::with_capacity(intervals);
        let mut at_b = Vec::with_capacity(intervals);
        for o in &noiseless {
            at_a.push(add_receiver_noise(*o, self.snr, power, rng));
            at_b.push(add_receiver_noise(*o, self.snr, power, rng));
        }
        Ok(ObservationBlock {
            noiseless,
            at_a,
            at_b,
            at_e,
            power_reference: power,
            noise_variance: self.snr.quadrature_noise_variance(power),
        })
    }

    /// Functional run over one block. Envelopes are centred on each party's
    /// own sample median so that the sign splits them evenly.
    pub fn functional_run(&self, block: &ObservationBlock) -> Result<FunctionalRun> {
        let kind = self.functional;
        let series = |obs: &[QuadratureObservation]| -> Result<Vec<f64>> {
            let mut v = functional_series(obs, kind, self.pairing)?;
            if kind == FunctionalKind::Envelope {
                let m = median(&v);
                v.iter_mut().for_each(|x| *x -= m);
            }
            Ok(v)
        };
        let eta_a = series(&block.at_a)?;
        let eta_b = series(&block.at_b)?;
        let zeta_e = series(&block.at_e)?;
        let legal_noise_sd = self.legal_noise_estimates(&block.at_a, block.noise_variance);
        debug_assert_eq!(legal_noise_sd.len(), eta_a.len());
        Ok(FunctionalRun {
            eta_a,
            eta_b,
            zeta_e,
            legal_noise_sd,
            circular: kind != FunctionalKind::Envelope,
        })
    }

    pub fn run<R: Rng + ?Sized>(&self, bits: usize, rng: &mut R) -> Result<FunctionalRun> {
        let block = self.observe(self.intervals_for(bits), rng)?;
        self.functional_run(&block)
    }

    // A's view of sd(eta_b - eta_a): both sides carry independent noise of
    // variance `var` per quadrature, projected through A's own amplitude.
    fn legal_noise_estimates(&self, at_a: &[QuadratureObservation], var: f64) -> Vec<f64> {
        let two_var = 2.0 * var;
        let inv_power = |o: &QuadratureObservation| {
            let p = o.power();
            if p > 0.0 {
                1.0 / p
            } else {
                f64::INFINITY
            }
        };
        match self.functional {
            FunctionalKind::Envelope => alloc::vec![two_var.sqrt(); at_a.len()],
            FunctionalKind::Phase => at_a
                .iter()
                .map(|o| (two_var * inv_power(o)).sqrt())
                .collect(),
            FunctionalKind::PhaseDifference => {
                let pair = |w: &[QuadratureObservation]| {
                    (two_var * (inv_power(&w[0]) + inv_power(&w[1]))).sqrt()
                };
                match self.pairing {
                    Pairing::NonOverlapping => at_a.chunks_exact(2).map(pair).collect(),
                    Pairing::Overlapping => at_a.windows(2).map(pair).collect(),
                }
            }
        }
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    let mid = v.len() / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if v.len() % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Either source behind one interface.
#[derive(Debug, Clone)]
pub enum KeySource {
    Synthetic(SyntheticSource),
    Physical(PhysicalSource),
}

impl KeySource {
    pub fn run<R: Rng + ?Sized>(&self, bits: usize, rng: &mut R) -> Result<FunctionalRun> {
        match self {
            KeySource::Synthetic(s) => Ok(s.run(bits, rng)),
            KeySource::Physical(p) => p.run(bits, rng),
        }
    }

    /// Block `block` of a batched computation, drawn from its own stream.
    pub fn run_block(
        &self,
        master_seed: u64,
        domain: u64,
        block: u64,
        bits: usize,
    ) -> Result<FunctionalRun> {
        self.run(bits, &mut block_rng(master_seed, domain, block))
    }
}

/// B-E correlation of one block for the envelope and the phase difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPair {
    pub envelope: CorrelationEstimate,
    pub phase_difference: CorrelationEstimate,
}

/// Correlations between B's and E's functionals over one observation block.
pub fn legal_eavesdropper_correlation(
    block: &ObservationBlock,
    pairing: Pairing,
) -> Result<CorrelationPair> {
    let env = |obs: &[QuadratureObservation]| obs.iter().map(envelope).collect::<Vec<_>>();
    let envelope_corr = pearson_correlation(&env(&block.at_b), &env(&block.at_e))?;
    let diff = |obs: &[QuadratureObservation]| {
        functional_series(obs, FunctionalKind::PhaseDifference, pairing)
    };
    let phase_corr = pearson_correlation(&diff(&block.at_b)?, &diff(&block.at_e)?)?;
    Ok(CorrelationPair {
        envelope: envelope_corr,
        phase_difference: phase_corr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use crate::stats::mean_variance;

    #[test]
    fn synthetic_moments() {
        let src = SyntheticSource::new(0.8, Snr::new(100.0).unwrap()).unwrap();
        let run = src.run(200_000, &mut rng_from_seed(1));
        run.validate().unwrap();
        let (_, var_b) = mean_variance(&run.eta_b);
        assert!((var_b - 1.01).abs() < 0.02);
        // corr(eta_b, zeta) = rho / sqrt(1 + 1/snr) = 0.79603
        let r = pearson_correlation(&run.eta_b, &run.zeta_e)
            .unwrap()
            .coefficient;
        assert!((r - 0.796_02).abs() < 0.005, "{r}");
        let d: Vec<f64> = run
            .eta_a
            .iter()
            .zip(&run.eta_b)
            .map(|(a, b)| b - a)
            .collect();
        let (_, var_d) = mean_variance(&d);
        assert!((var_d.sqrt() / run.legal_noise_sd[0] - 1.0).abs() < 0.01);
        assert!(SyntheticSource::new(1.5, Snr::NOISELESS).is_err());
    }

    #[test]
    fn synthetic_noiseless_agrees() {
        let src = SyntheticSource::new(0.9, Snr::NOISELESS).unwrap();
        let run = src.run(100, &mut rng_from_seed(2));
        assert_eq!(run.eta_a, run.eta_b);
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }

    #[test]
    fn physical_run_shapes() {
        let src = PhysicalSource::reference_setup(
            10.0,
            Snr::new(100.0).unwrap(),
            FunctionalKind::PhaseDifference,
        )
        .unwrap();
        assert_eq!(src.intervals_for(50), 100);
        let run = src.run(500, &mut rng_from_seed(3)).unwrap();
        run.validate().unwrap();
        assert_eq!(run.len(), 500);
        assert_eq!(run.legal_noise_sd.len(), 500);
        assert!(run.circular);
        assert!(run.eta_a.iter().all(|v| v.abs() <= core::f64::consts::PI));
    }

    #[test]
    fn envelope_run_is_centred() {
        let src = PhysicalSource::reference_setup(
            10.0,
            Snr::new(100.0).unwrap(),
            FunctionalKind::Envelope,
        )
        .unwrap();
        let run = src.run(1001, &mut rng_from_seed(4)).unwrap();
        let above = run.eta_a.iter().filter(|v| **v > 0.0).count();
        assert_eq!(above, 500);
        assert!(!run.circular);
    }

    #[test]
    fn block_noise_matches_reference() {
        let src = PhysicalSource::reference_setup(
            5.0,
            Snr::new(100.0).unwrap(),
            FunctionalKind::Envelope,
        )
        .unwrap();
        let block = src.observe(50_000, &mut rng_from_seed(5)).unwrap();
        let d: Vec<f64> = block
            .at_a
            .iter()
            .zip(&block.noiseless)
            .map(|(a, o)| a.in_phase - o.in_phase)
            .collect();
        let (_, v) = mean_variance(&d);
        assert!((v / block.noise_variance - 1.0).abs() < 0.03);
        assert!((block.noise_variance - block.power_reference / 200.0).abs() < 1e-12);
        assert_eq!(block.at_e, {
            // E is never noised: recomputing with a noiseless source gives
            // the same E samples from the same stream
            let quiet =
                PhysicalSource::reference_setup(5.0, Snr::NOISELESS, FunctionalKind::Envelope)
                    .unwrap();
            quiet.observe(50_000, &mut rng_from_seed(5)).unwrap().at_e
        });
    }

    #[test]
    fn coincident_receivers_fully_correlated() {
        let src =
            PhysicalSource::reference_setup(0.0, Snr::NOISELESS, FunctionalKind::Envelope).unwrap();
        let block = src.observe(4_000, &mut rng_from_seed(6)).unwrap();
        let c = legal_eavesdropper_correlation(&block, Pairing::NonOverlapping).unwrap();
        assert!((c.envelope.coefficient - 1.0).abs() < 1e-12);
        assert!((c.phase_difference.coefficient - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blocks_are_reproducible() {
        let src = KeySource::Synthetic(SyntheticSource::new(0.5, Snr::new(10.0).unwrap()).unwrap());
        let a = src.run_block(9, 1, 4, 100).unwrap();
        let b = src.run_block(9, 1, 4, 100).unwrap();
        let c = src.run_block(9, 1, 5, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
