//! The experiments behind each subcommand. Each returns plain rows; writing
//! them out is the caller's business.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use ringkey_core::antenna::{diagram_statistics, DiagramStatistics};
use ringkey_core::channel::{trace_rays, Receiver};
use ringkey_core::functionals::{envelope, functional_series, FunctionalKind};
use ringkey_core::keygen::SelectionPolicy;
use ringkey_core::optimizer::{CandidateEvaluation, OptimizationProblem};
use ringkey_core::protocol::{agree, AgreementOutcome, AgreementPlan};
use ringkey_core::seed::block_rng;
use ringkey_core::source::{legal_eavesdropper_correlation, KeySource};
use ringkey_core::stats::{
    gaussian_fit, pe_closed_form, pe_monte_carlo, pearson_correlation, uniform_ks, Histogram,
    KsTest, ProbabilityEstimate,
};

use crate::config::Config;
use crate::parallel::{optimize, optimize_counts, simulate_counts};

const SWEEP_DOMAIN: u64 = 1;
const PE_DOMAIN: u64 = 2;
const DISTRIBUTION_DOMAIN: u64 = 3;
const DIAGRAM_DOMAIN: u64 = 4;
const RHO_DOMAIN: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// Metres from B towards A.
    pub delta_l: f64,
    pub r_envelope: f64,
    pub r_phase_diff: f64,
    /// Intervals simulated at this offset.
    pub sample_count: usize,
}

/// B-E correlation of both functionals along the configured offsets. Every
/// offset sees the same excitations and noise.
pub fn correlation_sweep(cfg: &Config) -> Result<Vec<SweepRow>> {
    let offsets = cfg.sweep_offsets()?;
    let base = cfg.physical_source()?;
    let pairing = cfg.pairing.into();
    offsets
        .par_iter()
        .map(|&offset| {
            let source = base.with_eavesdropper_offset(offset)?;
            let block = source.observe(cfg.trials, &mut block_rng(cfg.seed, SWEEP_DOMAIN, 0))?;
            let c = legal_eavesdropper_correlation(&block, pairing)?;
            Ok(SweepRow {
                delta_l: offset,
                r_envelope: c.envelope.coefficient,
                r_phase_diff: c.phase_difference.coefficient,
                sample_count: block.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeRow {
    pub rho: f64,
    pub pe_closed: f64,
    pub pe_mc: f64,
    pub std_err: f64,
}

pub fn pe_curve(cfg: &Config) -> Result<Vec<PeRow>> {
    cfg.pe_curve
        .rho
        .par_iter()
        .enumerate()
        .map(|(i, &rho)| {
            let closed = pe_closed_form(rho).with_context(|| format!("rho = {rho}"))?;
            let mc = if rho == 1.0 {
                // identical pair: never disagrees
                ProbabilityEstimate::from_counts(0, cfg.trials)
            } else {
                pe_monte_carlo(
                    rho,
                    cfg.trials,
                    &mut block_rng(cfg.seed, PE_DOMAIN, i as u64),
                )?
            };
            Ok(PeRow {
                rho,
                pe_closed: closed,
                pe_mc: mc.probability,
                std_err: mc.std_error,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    /// Target correlation of the source, or the offset-based regime label.
    pub rho: f64,
    /// B-E correlation measured on the first simulated block.
    pub rho_measured: f64,
    /// `alpha_opt` (method 1) or `M_opt` (method 2).
    pub parameter: Option<f64>,
    pub p_e: Option<f64>,
    pub p_er: Option<f64>,
    /// `p1` or `p2`.
    pub p_legal: Option<f64>,
    pub ell: u64,
    pub n0: Option<u64>,
    pub check_bits: Option<u64>,
    pub n: Option<u64>,
    /// `ell / n`.
    pub rk_n: Option<f64>,
    /// `ell / n0`.
    pub rk_n0: Option<f64>,
    pub status: String,
}

fn parameter_value(p: &SelectionPolicy) -> f64 {
    match *p {
        SelectionPolicy::Threshold { alpha } => alpha,
        SelectionPolicy::TopM { m_keep } => m_keep as f64,
    }
}

fn table_row(rho: f64, rho_measured: f64, ell: u64, best: Result<CandidateEvaluation>) -> TableRow {
    match best {
        Ok(e) => TableRow {
            rho,
            rho_measured,
            parameter: Some(parameter_value(&e.policy)),
            p_e: Some(e.measured.eavesdropper_error),
            p_er: Some(e.measured.erasure_rate),
            p_legal: Some(e.measured.legal_error),
            ell,
            n0: Some(e.budget.n0),
            check_bits: Some(e.budget.check_bits),
            n: Some(e.n),
            rk_n: Some(e.key_rate),
            rk_n0: Some(e.key_rate_kept),
            status: "ok".into(),
        },
        Err(err) => TableRow {
            rho,
            rho_measured,
            parameter: None,
            p_e: None,
            p_er: None,
            p_legal: None,
            ell,
            n0: None,
            check_bits: None,
            n: None,
            rk_n: None,
            rk_n0: None,
            status: format!("{err:#}"),
        },
    }
}

fn measured_rho(problem: &OptimizationProblem, seed: u64) -> Result<f64> {
    let run = problem
        .source
        .run_block(seed, RHO_DOMAIN, 0, problem.block_len)?;
    Ok(pearson_correlation(&run.eta_b, &run.zeta_e)?.coefficient)
}

/// Key-rate optimization for every configured regime and key length.
/// Infeasible cells become rows with a status message.
pub fn key_rate_table(cfg: &Config, method: u8) -> Result<Vec<TableRow>> {
    let regimes: Vec<(f64, KeySource)> = if cfg.table.physical {
        vec![(f64::NAN, KeySource::Physical(cfg.physical_source()?))]
    } else {
        cfg.table
            .rho
            .iter()
            .map(|&rho| Ok((rho, KeySource::Synthetic(cfg.synthetic_source(rho)?))))
            .collect::<Result<_>>()?
    };
    let first_ell = *cfg
        .security
        .ell
        .first()
        .context("no key lengths configured")?;
    let mut rows = Vec::new();
    for (rho, source) in regimes {
        let base = cfg.problem(source, method, first_ell)?;
        let rho_measured = measured_rho(&base, cfg.seed)?;
        let rho = if rho.is_nan() { rho_measured } else { rho };
        let counts = simulate_counts(&base, cfg.trials, cfg.seed)?;
        for &ell in &cfg.security.ell {
            let problem = OptimizationProblem {
                targets: cfg.targets(ell)?,
                ..base.clone()
            };
            let best = optimize_counts(&problem, &counts).map(|r| r.best);
            rows.push(table_row(rho, rho_measured, ell, best));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub quantity: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub quantity: String,
    /// `gaussian`, `uniform` or `rice`.
    pub model: String,
    /// Mean, lower bound or Rice `nu`.
    pub param1: f64,
    /// Variance, upper bound or Rice `sigma`.
    pub param2: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub p_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    pub histograms: Vec<HistogramRow>,
    pub fits: Vec<FitRow>,
}

fn histogram_rows(name: &str, h: &Histogram) -> Vec<HistogramRow> {
    (0..h.counts.len())
        .map(|i| HistogramRow {
            quantity: name.into(),
            bin_lo: h.lo + i as f64 * h.bin_width(),
            bin_hi: h.lo + (i + 1) as f64 * h.bin_width(),
            density: h.density(i),
        })
        .collect()
}

fn fit_row(quantity: &str, model: &str, p1: f64, p2: f64, ks: &KsTest) -> FitRow {
    FitRow {
        quantity: quantity.into(),
        model: model.into(),
        param1: p1,
        param2: p2,
        ks_statistic: ks.statistic,
        ks_critical: ks.critical_value,
        p_value: ks.p_value,
        passed: ks.passed,
    }
}

/// Diagram statistics at the departure direction of each ray towards B.
pub fn departure_diagram_statistics(cfg: &Config) -> Result<Vec<(String, DiagramStatistics)>> {
    let ring = cfg.ring()?;
    let source = cfg.physical_source()?;
    let rays = trace_rays(&cfg.geometry()?, Receiver::LegalUser, &source.medium)?;
    let names = ["direct", "upper", "lower"];
    rays.par_iter()
        .zip(names)
        .enumerate()
        .map(|(i, (ray, name))| {
            let mut rng = block_rng(cfg.seed, DIAGRAM_DOMAIN, i as u64);
            let s = diagram_statistics(
                &ring,
                ray.departure_azimuth,
                ray.departure_elevation,
                cfg.trials,
                &mut rng,
            )?;
            Ok((name.to_string(), s))
        })
        .collect()
}

/// Histograms and fits of B's functionals, plus the antenna diagram at each
/// ray's departure direction.
pub fn distributions(cfg: &Config) -> Result<DistributionReport> {
    if cfg.trials < 10_000 {
        bail!("distributions need at least 10000 trials");
    }
    let bins = cfg.distributions.bins;
    let source = cfg.physical_source()?;
    let block = source.observe(cfg.trials, &mut block_rng(cfg.seed, DISTRIBUTION_DOMAIN, 0))?;
    let env: Vec<f64> = block.at_b.iter().map(envelope).collect();
    let dpsi = functional_series(
        &block.at_b,
        FunctionalKind::PhaseDifference,
        cfg.pairing.into(),
    )?;
    let env_max = env.iter().copied().fold(0.0, f64::max);
    let mut histograms = histogram_rows("envelope", &Histogram::new(&env, 0.0, env_max, bins)?);
    histograms.extend(histogram_rows(
        "phase_difference",
        &Histogram::new(&dpsi, -PI, PI, bins)?,
    ));
    let mut fits = Vec::new();
    for (name, values) in [("envelope", &env), ("phase_difference", &dpsi)] {
        let g = gaussian_fit(values)?;
        if let Some(ks) = &g.ks {
            fits.push(fit_row(name, "gaussian", g.fit.mean, g.fit.variance, ks));
        }
    }
    fits.push(fit_row(
        "phase_difference",
        "uniform",
        -PI,
        PI,
        &uniform_ks(&dpsi, -PI, PI)?,
    ));
    for (name, s) in departure_diagram_statistics(cfg)? {
        let amp = format!("diagram_amplitude_{name}");
        let ph = format!("diagram_phase_{name}");
        if let (Some(rice), Some(ks)) = (&s.rice, &s.rice_ks) {
            fits.push(fit_row(&amp, "rice", rice.nu, rice.sigma, ks));
        }
        fits.push(fit_row(&ph, "uniform", -PI, PI, &s.phase_ks));
        histograms.extend(histogram_rows(&amp, &s.amplitude_histogram));
        histograms.extend(histogram_rows(&ph, &s.phase_histogram));
    }
    Ok(DistributionReport { histograms, fits })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub plan: CandidateEvaluation,
    pub outcomes: Vec<AgreementOutcome>,
}

impl DemoReport {
    pub fn matching_keys(&self) -> usize {
        self.outcomes.iter().filter(|o| o.keys_match()).count()
    }

    pub fn random_streams(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.randomness.all_passed())
            .count()
    }
}

/// Optimizes method 1 on the ray-traced link, then runs `demo.runs`
/// agreements with seeds `seed, seed + 1, ...`.
pub fn protocol_demo(cfg: &Config) -> Result<DemoReport> {
    let source = KeySource::Physical(cfg.physical_source()?);
    let problem = cfg.problem(source.clone(), 1, cfg.demo.ell)?;
    let best = optimize(&problem, cfg.trials, cfg.seed)?.best;
    let plan = AgreementPlan {
        source,
        policy: best.policy,
        block_len: cfg.selection.block_len,
        budget: best.budget,
    };
    let outcomes = (0..cfg.demo.runs as u64)
        .into_par_iter()
        .map(|i| agree(&plan, cfg.seed.wrapping_add(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DemoReport {
        plan: best,
        outcomes,
    })
}
