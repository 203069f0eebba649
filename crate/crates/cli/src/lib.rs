//! Command-line driver: loads the configuration, applies flag overrides and
//! runs one experiment, writing CSV tables and SVG plots.

pub mod args;
pub mod plot;
pub mod report;

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::Context;
use hbf_core::config::SystemConfig;
use hbf_core::harness::{convergence_records, run_convergence, run_sweep, ExperimentPlan, SchemeKind};
use hbf_core::validate::{run_validation, ValidateOptions};

use args::{Command, Overrides};
use report::{convergence_plot, rates_plot, write_csv, ConvergenceRow, RateRow};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Error carrying the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub exit_code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Self { exit_code: EXIT_CONFIG, error: error.into() }
    }

    fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self { exit_code: EXIT_VALIDATION, error: error.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Defaults, then the config file, then flags.
pub fn load_config(o: &Overrides) -> Result<SystemConfig, Failure> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(Failure::config)?;
            SystemConfig::from_toml_str(&text).map_err(Failure::config)?
        }
        None => SystemConfig::default(),
    };
    let e = &mut cfg.experiment;
    if let Some(v) = o.snr_min {
        e.snr_min_db = v;
    }
    if let Some(v) = o.snr_max {
        e.snr_max_db = v;
    }
    if let Some(v) = o.snr_step {
        e.snr_step_db = v;
    }
    if let Some(v) = o.trials {
        e.trials = v;
    }
    if let Some(v) = o.seed {
        e.seed = v;
    }
    if let Some(list) = &o.nrf {
        e.rf_chain_sweep = list.clone();
        e.convergence_rf_chains = list.clone();
    }
    if let Some(k) = o.iterations {
        cfg.algorithm.iterations = k;
    }
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

/// Schemes from `--schemes` (default: all), minus RF redesign under `--fixed-rf`.
pub fn select_schemes(o: &Overrides) -> Result<Vec<SchemeKind>, Failure> {
    let mut schemes = match &o.schemes {
        Some(names) => names
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<SchemeKind>, _>>()
            .map_err(Failure::config)?,
        None => SchemeKind::ALL.to_vec(),
    };
    if o.fixed_rf {
        schemes.retain(|&s| s != SchemeKind::HybridRedesign);
    }
    schemes.dedup();
    if schemes.is_empty() {
        return Err(Failure::config(hbf_core::Error::NoSchemes));
    }
    Ok(schemes)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(Failure::runtime)
}

fn write_outputs<T: serde::Serialize>(dir: &Path, stem: &str, rows: &[T], svg: &str) -> Result<(), Failure> {
    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(&csv_path, rows)
        .with_context(|| format!("writing {}", csv_path.display()))
        .map_err(Failure::runtime)?;
    let svg_path = dir.join(format!("{stem}.svg"));
    fs::write(&svg_path, svg)
        .with_context(|| format!("writing {}", svg_path.display()))
        .map_err(Failure::runtime)?;
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

fn converge(cfg: &SystemConfig, o: &Overrides) -> Result<u8, Failure> {
    prepare_out(&o.out)?;
    let series = run_convergence(cfg, &cfg.experiment.convergence_rf_chains).map_err(Failure::runtime)?;
    for s in &series {
        println!(
            "N_RF = {}: {} steps, final distance {:e}{}",
            s.n_rf,
            s.trace.len(),
            s.trace.last().copied().unwrap_or(f64::NAN),
            if s.converged { "" } else { " (not converged)" }
        );
    }
    let rows: Vec<ConvergenceRow> = convergence_records(&series).iter().map(ConvergenceRow::from).collect();
    write_outputs(&o.out, "convergence", &rows, &convergence_plot(&rows).to_svg())?;
    Ok(EXIT_OK)
}

fn rates(cfg: &SystemConfig, o: &Overrides) -> Result<u8, Failure> {
    let schemes = select_schemes(o)?;
    prepare_out(&o.out)?;
    for &n_rf in &cfg.experiment.rf_chain_sweep {
        let sub = cfg.with_rf_chains(n_rf);
        sub.validate().map_err(Failure::config)?;
        let plan = ExperimentPlan { schemes: schemes.clone(), ..ExperimentPlan::from_config(&sub) };
        let sweep = run_sweep(&plan, &sub).map_err(Failure::runtime)?;
        for f in &sweep.failures {
            eprintln!(
                "warning: N_RF = {n_rf}, trial {}, {} at {} dB failed: {}",
                f.trial, f.scheme, f.snr_db, f.message
            );
        }
        let rows: Vec<RateRow> = sweep.records.iter().map(RateRow::from).collect();
        let stem = format!("rates_nrf{n_rf}");
        write_outputs(&o.out, &stem, &rows, &rates_plot(&rows, n_rf).to_svg())?;
    }
    Ok(EXIT_OK)
}

fn validate(o: &Overrides) -> Result<u8, Failure> {
    let mut opts = ValidateOptions { filter: o.filter.clone(), ..ValidateOptions::default() };
    if let Some(seed) = o.seed {
        opts.seed = seed;
    }
    let report = run_validation(&opts).map_err(Failure::config)?;
    print!("{}", report.table());
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_VALIDATION })
}

/// Runs one subcommand and returns the process exit code.
pub fn run(command: Command, overrides: &Overrides) -> Result<u8, Failure> {
    match command {
        Command::Validate => validate(overrides),
        Command::Converge => converge(&load_config(overrides)?, overrides),
        Command::Rates => rates(&load_config(overrides)?, overrides),
    }
}
