//! Scenario file: flat TOML sections mirroring the simulation parameters.
//! Every key may be overridden from the command line as `section.key=value`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ringkey_core::antenna::RingAntenna;
use ringkey_core::channel::{Geometry, Medium, Snr};
use ringkey_core::functionals::{FunctionalKind, Pairing};
use ringkey_core::keygen::SelectionPolicy;
use ringkey_core::optimizer::OptimizationProblem;
use ringkey_core::security::{DiversityConfig, SecurityTargets};
use ringkey_core::source::{KeySource, PhysicalSource, SyntheticSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Monte Carlo samples per estimate.
    pub trials: usize,
    /// Linear S/N at the legal receivers; `inf` switches noise off.
    pub snr: f64,
    pub functional: Functional,
    pub pairing: PairingChoice,
    pub geometry: GeometryConfig,
    pub antenna: AntennaConfig,
    pub sweep: SweepConfig,
    pub selection: SelectionConfig,
    pub security: SecurityConfig,
    pub table: TableConfig,
    pub pe_curve: PeCurveConfig,
    pub distributions: DistributionsConfig,
    pub demo: DemoConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Envelope,
    PhaseDifference,
}

impl From<Functional> for FunctionalKind {
    fn from(f: Functional) -> Self {
        match f {
            Functional::Envelope => FunctionalKind::Envelope,
            Functional::PhaseDifference => FunctionalKind::PhaseDifference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingChoice {
    NonOverlapping,
    Overlapping,
}

impl From<PairingChoice> for Pairing {
    fn from(p: PairingChoice) -> Self {
        match p {
            PairingChoice::NonOverlapping => Pairing::NonOverlapping,
            PairingChoice::Overlapping => Pairing::Overlapping,
        }
    }
}

/// Distances in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub link_length: f64,
    pub surface_above: f64,
    pub surface_below: f64,
    /// Eavesdropper's distance from B towards A.
    pub eavesdropper_offset: f64,
    pub reflection_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaConfig {
    pub radiators: usize,
    /// Metres.
    pub wavelength: f64,
    /// Ring radius in wavelengths.
    pub radius_wavelengths: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Threshold grid for method 1, in units of the sample deviation.
    pub alpha_grid: Vec<f64>,
    /// Keep-count grid for method 2.
    pub m_grid: Vec<usize>,
    /// Candidate bits per simulated block for method 1.
    pub block_len: usize,
    /// Run length out of which method 2 keeps `M`.
    pub top_m_run_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityConfig {
    pub ell: Vec<u64>,
    /// Bits of Shannon information allowed to leak.
    pub leakage_target: f64,
    pub ped_target: f64,
    pub diversity: u32,
    pub n_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableConfig {
    /// Correlations of the synthetic source, one table block each.
    pub rho: Vec<f64>,
    /// Use the ray-traced link at the configured eavesdropper offset instead.
    pub physical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeCurveConfig {
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionsConfig {
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub ell: u64,
    /// Independent agreements to run.
    pub runs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            trials: 100_000,
            snr: 100.0,
            functional: Functional::PhaseDifference,
            pairing: PairingChoice::NonOverlapping,
            geometry: GeometryConfig::default(),
            antenna: AntennaConfig::default(),
            sweep: SweepConfig::default(),
            selection: SelectionConfig::default(),
            security: SecurityConfig::default(),
            table: TableConfig::default(),
            pe_curve: PeCurveConfig::default(),
            distributions: DistributionsConfig::default(),
            demo: DemoConfig::default(),
        }
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            link_length: 25.0,
            surface_above: 3.0,
            surface_below: 3.0,
            eavesdropper_offset: 20.0,
            reflection_coefficient: -1.0,
        }
    }
}

impl Default for AntennaConfig {
    fn default() -> Self {
        AntennaConfig {
            radiators: 6,
            wavelength: 0.125,
            radius_wavelengths: 0.5,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            start: 3.0,
            stop: 22.0,
            step: 1.0,
        }
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            alpha_grid: (0..=8).map(|k| k as f64 * 0.05).collect(),
            m_grid: (0..=13).map(|k| 7_000 + k * 250).chain([10_588]).collect(),
            block_len: 10_000,
            top_m_run_len: 10_588,
        }
    }
}

impl Default for SecurityConfig {
    fn default() -> Self {
        SecurityConfig {
            ell: vec![128, 256, 512],
            leakage_target: 1e-9,
            ped_target: 1e-5,
            diversity: 1,
            n_cap: 10_000_000,
        }
    }
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            rho: vec![0.99, 0.95, 0.8],
            physical: false,
        }
    }
}

impl Default for PeCurveConfig {
    fn default() -> Self {
        PeCurveConfig {
            rho: (1..=99).map(|k| k as f64 / 100.0).chain([1.0]).collect(),
        }
    }
}

impl Default for DistributionsConfig {
    fn default() -> Self {
        DistributionsConfig { bins: 60 }
    }
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig { ell: 128, runs: 1 }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Applies `section.key=value` overrides; values use TOML syntax.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut table = toml::Table::try_from(self)?;
        for item in overrides {
            let item = item.as_ref();
            let (key, value) = item
                .split_once('=')
                .with_context(|| format!("override `{item}` is not key=value"))?;
            let value: toml::Value =
                toml::from_str::<toml::Table>(&format!("v = {}", value.trim()))
                    .or_else(|_| {
                        toml::from_str::<toml::Table>(&format!("v = \"{}\"", value.trim()))
                    })
                    .with_context(|| format!("bad value in `{item}`"))?
                    .remove("v")
                    .expect("parsed key");
            let path: Vec<&str> = key.trim().split('.').collect();
            let (last, parents) = path.split_last().expect("split yields one item");
            let mut node = &mut table;
            for p in parents {
                node = node
                    .get_mut(*p)
                    .and_then(toml::Value::as_table_mut)
                    .with_context(|| format!("unknown section `{p}` in `{item}`"))?;
            }
            if !node.contains_key(*last) {
                bail!("unknown key `{key}`");
            }
            node.insert((*last).to_string(), value);
        }
        Ok(toml::Value::Table(table).try_into()?)
    }

    pub fn snr(&self) -> Result<Snr> {
        if self.snr.is_infinite() && self.snr > 0.0 {
            Ok(Snr::NOISELESS)
        } else {
            Ok(Snr::new(self.snr)?)
        }
    }

    pub fn ring(&self) -> Result<RingAntenna> {
        let a = &self.antenna;
        Ok(RingAntenna::new(
            a.radiators,
            a.radius_wavelengths * a.wavelength,
            a.wavelength,
        )?)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        let g = &self.geometry;
        Ok(Geometry::new(
            g.link_length,
            g.surface_above,
            g.surface_below,
            g.eavesdropper_offset,
        )?)
    }

    pub fn physical_source(&self) -> Result<PhysicalSource> {
        let antenna = self.ring()?;
        let medium = Medium::new(antenna.wavenumber(), self.geometry.reflection_coefficient)?;
        Ok(PhysicalSource::new(
            antenna,
            self.geometry()?,
            medium,
            self.snr()?,
            self.functional.into(),
            self.pairing.into(),
        )?)
    }

    pub fn synthetic_source(&self, rho: f64) -> Result<SyntheticSource> {
        Ok(SyntheticSource::new(rho, self.snr()?)?)
    }

    pub fn targets(&self, ell: u64) -> Result<SecurityTargets> {
        let t = SecurityTargets {
            ell,
            leakage_target: self.security.leakage_target,
            ped_target: self.security.ped_target,
            diversity: DiversityConfig::new(self.security.diversity)?,
        };
        t.validate()?;
        Ok(t)
    }

    /// Problem for selection method 1 (threshold) or 2 (top-M).
    pub fn problem(&self, source: KeySource, method: u8, ell: u64) -> Result<OptimizationProblem> {
        let (grid, block_len) = match method {
            1 => (
                self.selection
                    .alpha_grid
                    .iter()
                    .map(|&alpha| SelectionPolicy::Threshold { alpha })
                    .collect(),
                self.selection.block_len,
            ),
            2 => (
                self.selection
                    .m_grid
                    .iter()
                    .map(|&m_keep| SelectionPolicy::TopM { m_keep })
                    .collect(),
                self.selection.top_m_run_len,
            ),
            _ => bail!("selection method must be 1 or 2"),
        };
        let p = OptimizationProblem {
            source,
            targets: self.targets(ell)?,
            search_grid: grid,
            block_len,
            n_cap: self.security.n_cap,
        };
        p.validate()?;
        Ok(p)
    }

    /// Eavesdropper offsets of the sweep, inclusive of `stop` when it lands
    /// on the grid.
    pub fn sweep_offsets(&self) -> Result<Vec<f64>> {
        let s = &self.sweep;
        if !(s.step > 0.0) || !(s.start <= s.stop) || !(s.start >= 0.0) {
            bail!("sweep needs 0 <= start <= stop and step > 0");
        }
        if s.stop >= self.geometry.link_length {
            bail!("sweep must stay inside the link");
        }
        let count = ((s.stop - s.start) / s.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| s.start + k as f64 * s.step).collect())
    }
}
