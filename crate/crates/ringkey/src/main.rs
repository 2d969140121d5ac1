use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde::Serialize;

use ringkey::config::Config;
use ringkey::experiments;
use ringkey::output::{resolve_output, sibling, write_csv_file, OUT_DIR_ENV};

/// Simulate secret key agreement over a multipath channel with a randomly
/// excited ring antenna.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Scenario file (TOML); defaults are used for anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output CSV file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for outputs when --out is not given.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "results")]
    out_dir: PathBuf,
    /// Synthetic-source correlations for `table`, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    synthetic_rho: Option<Vec<f64>>,
    /// Override any scenario key, e.g. `--set geometry.eavesdropper_offset=7`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// B-E correlation of envelope and phase difference versus E's offset.
    SweepCorrelation,
    /// Bit-disagreement probability: closed form against Monte Carlo.
    PeCurve,
    /// Key-rate optimization table.
    Table {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        method: u8,
        /// Use the ray-traced link instead of the synthetic source.
        #[arg(long)]
        physical: bool,
    },
    /// Histograms and distribution fits of the functionals and the diagram.
    Distributions,
    /// End-to-end key agreement with the optimized first selection method.
    ProtocolDemo {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        ell: Option<u64>,
    },
}

fn scenario(cli: &Cli) -> Result<Config> {
    let base = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let mut cfg = base.with_overrides(&cli.overrides)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(r) = &cli.synthetic_rho {
        cfg.table.rho = r.clone();
        cfg.table.physical = false;
    }
    Ok(cfg)
}

fn hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|c| {
            let v = c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8) << (4 - c.len());
            char::from_digit(v as u32, 16).expect("nibble")
        })
        .collect()
}

#[derive(Serialize)]
struct DemoRow {
    run: usize,
    key_a: String,
    key_b: String,
    matched: bool,
    intervals: usize,
    raw_disagreements: usize,
    eavesdropper_disagreements: usize,
    randomness_passed: bool,
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = scenario(cli)?;
    let header = |what: &str, units: &str| {
        format!(
            "ringkey {what} seed={} trials={} snr={}; {units}",
            cfg.seed, cfg.trials, cfg.snr
        )
    };
    let out = |name: &str| resolve_output(cli.out.as_deref(), &cli.out_dir, name);
    match &cli.command {
        Command::SweepCorrelation => {
            let rows = experiments::correlation_sweep(&cfg)?;
            let path = out("sweep_correlation.csv");
            write_csv_file(
                &path,
                &header("sweep-correlation", "delta_l in metres from B towards A"),
                &rows,
            )?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::PeCurve => {
            let rows = experiments::pe_curve(&cfg)?;
            let path = out("pe_curve.csv");
            write_csv_file(
                &path,
                &header("pe-curve", "probabilities per key bit"),
                &rows,
            )?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::Table { method, physical } => {
            cfg.table.physical |= *physical;
            let rows = experiments::key_rate_table(&cfg, *method)?;
            let path = out(&format!("table_method{method}.csv"));
            let units = format!(
                "method {method}; leakage target {} bit; decoding target {}; lengths in bits",
                cfg.security.leakage_target, cfg.security.ped_target
            );
            write_csv_file(&path, &header("table", &units), &rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::Distributions => {
            let report = experiments::distributions(&cfg)?;
            let path = out("distributions.csv");
            write_csv_file(
                &path,
                &header("distributions", "densities per unit of the quantity"),
                &report.histograms,
            )?;
            let fits = sibling(&path, "fits");
            write_csv_file(
                &fits,
                &header("distributions", "KS tests at the 1% level"),
                &report.fits,
            )?;
            eprintln!("wrote {} and {}", path.display(), fits.display());
        }
        Command::ProtocolDemo { runs, ell } => {
            if let Some(r) = runs {
                cfg.demo.runs = *r;
            }
            if let Some(l) = ell {
                cfg.demo.ell = *l;
            }
            let report = experiments::protocol_demo(&cfg)?;
            let p = &report.plan;
            println!(
                "plan: {:?}, n0 = {}, check bits = {}, p1 = {:.5}, p_e = {:.4}, ell = {}",
                p.policy,
                p.budget.n0,
                p.budget.check_bits,
                p.measured.legal_error,
                p.measured.eavesdropper_error,
                p.budget.ell
            );
            let rows: Vec<DemoRow> = report
                .outcomes
                .iter()
                .enumerate()
                .map(|(i, o)| DemoRow {
                    run: i,
                    key_a: o.key_a.as_deref().map_or_else(|| "-".into(), hex),
                    key_b: hex(&o.key_b),
                    matched: o.keys_match(),
                    intervals: o.intervals,
                    raw_disagreements: o.raw_disagreements,
                    eavesdropper_disagreements: o.eavesdropper_disagreements,
                    randomness_passed: o.randomness.all_passed(),
                })
                .collect();
            for r in &rows {
                println!("run {}: A {}", r.run, r.key_a);
                println!(
                    "run {}: B {} {}",
                    r.run,
                    r.key_b,
                    if r.matched { "match" } else { "MISMATCH" }
                );
            }
            let path = out("protocol_demo.csv");
            write_csv_file(
                &path,
                &header("protocol-demo", "keys in hex, counts in bits"),
                &rows,
            )?;
            println!(
                "{}/{} keys match, {}/{} kept-bit streams pass the randomness tests",
                report.matching_keys(),
                rows.len(),
                report.random_streams(),
                rows.len()
            );
            return Ok(report.matching_keys() == rows.len());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
