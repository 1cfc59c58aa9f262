//! Command-line front end.
//!
//! Exit codes: 0 success, 1 statistical pipeline error, 2 I/O or parse
//! error, 3 invalid configuration.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_estimate, cmd_simulate, cmd_test, cmd_tstar, CommandOutput, SimModel, SimSettings,
    TestOptions,
};
pub use config::RunConfig;

use crate::error::{Error, Result};
use crate::regimes::FamilyKind;
use crate::volatility::Side;

#[derive(Debug, Parser)]
#[command(name = "regime-surrogate", version, about = "Surrogate-data tests for regime-switching price models")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set B=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for CSV outputs (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Price file; repeat for several series.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jump-diffusion calibration and empirical summaries.
    Estimate(Inputs),
    /// Observed duration statistic on both sides.
    Tstar(Inputs),
    /// Surrogate test against candidate model families.
    Test {
        #[command(flatten)]
        inputs: Inputs,
        /// uni, markov, semimarkov or all.
        #[arg(long, default_value = "all")]
        family: String,
        /// plus, minus or both.
        #[arg(long, default_value = "both")]
        side: String,
        /// Write replicate 0 of each best-α parameter set.
        #[arg(long)]
        dump_paths: bool,
        /// Write box-plot summaries of the surrogate statistics.
        #[arg(long)]
        dump_boxplot: bool,
    },
    /// Generate a synthetic price series.
    Simulate {
        /// uni, markov, semimarkov or jump.
        #[arg(long, default_value = "markov")]
        model: String,
        #[arg(long, default_value_t = 18_000)]
        steps: usize,
        #[arg(long, default_value_t = 100.0)]
        s0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        /// Volatility of the uni and jump models.
        #[arg(long, default_value_t = 0.08)]
        sigma: f64,
        #[arg(long, default_value_t = 0.03)]
        sigma1: f64,
        #[arg(long, default_value_t = 0.12)]
        sigma2: f64,
        /// Mean sojourn of state 1 in days.
        #[arg(long, default_value_t = 3.0)]
        hold1: f64,
        #[arg(long, default_value_t = 17.0)]
        hold2: f64,
        #[arg(long, default_value_t = 1.0)]
        k1: f64,
        #[arg(long, default_value_t = 1.0)]
        k2: f64,
        /// Jump intensity per year.
        #[arg(long, default_value_t = 120.0)]
        jump_rate: f64,
        #[arg(long, default_value_t = 2e-5)]
        jump_var: f64,
        /// Output file, relative to the output directory.
        #[arg(long, default_value = "simulated.csv")]
        output: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => 2,
        Error::Config(_) | Error::InvalidParameter(_) => 3,
        Error::InsufficientData(_) | Error::EmptyFamily(_) | Error::InsufficientDurations(_) => 1,
    }
}

fn parse_families(s: &str) -> Result<Vec<FamilyKind>> {
    if s == "all" {
        return Ok(FamilyKind::ALL.to_vec());
    }
    s.parse::<FamilyKind>()
        .map(|f| vec![f])
        .map_err(|_| Error::Config(format!("unknown family {s:?}")))
}

fn parse_sides(s: &str) -> Result<Vec<Side>> {
    if s == "both" {
        return Ok(Side::BOTH.to_vec());
    }
    s.parse::<Side>()
        .map(|x| vec![x])
        .map_err(|_| Error::Config(format!("unknown side {s:?}")))
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.set_pair(o)?;
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<CommandOutput> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Estimate(i) => cmd_estimate(&cfg, &i.input),
        Command::Tstar(i) => cmd_tstar(&cfg, &i.input),
        Command::Test { inputs, family, side, dump_paths, dump_boxplot } => cmd_test(
            &cfg,
            &inputs.input,
            &parse_families(family)?,
            &parse_sides(side)?,
            TestOptions { dump_paths: *dump_paths, dump_boxplot: *dump_boxplot },
        ),
        Command::Simulate {
            model, steps, s0, mu, sigma, sigma1, sigma2, hold1, hold2, k1, k2, jump_rate, jump_var, output,
        } => {
            let set = SimSettings {
                model: model.parse()?,
                steps: *steps,
                s0: *s0,
                mu: *mu,
                sigma: *sigma,
                sigma1: *sigma1,
                sigma2: *sigma2,
                hold1_days: *hold1,
                hold2_days: *hold2,
                k1: *k1,
                k2: *k2,
                jump_rate: *jump_rate,
                jump_var: *jump_var,
            };
            cmd_simulate(&cfg, &set, output)
        }
    }
}

fn write_outputs(cli: &Cli, out: &CommandOutput) -> Result<()> {
    let io = |path: &PathBuf| {
        let path = path.clone();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(&cli.out_dir).map_err(io(&cli.out_dir))?;
    for (name, contents) in &out.files {
        let p = cli.out_dir.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(io(&dir.to_path_buf()))?;
        }
        fs::write(&p, contents).map_err(io(&p))?;
    }
    Ok(())
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli).and_then(|out| write_outputs(&cli, &out).map(|_| out));
    match result {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", out.text);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_parsing() {
        let cli = Cli::try_parse_from([
            "regime-surrogate", "test", "--input", "a.csv", "--input", "b.csv", "--family", "markov",
            "--side", "minus", "--seed", "7", "--set", "B=20", "--dump-boxplot",
        ])
        .unwrap();
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!((cfg.master_seed, cfg.replicates), (7, 20));
        match cli.command {
            Command::Test { inputs, family, side, dump_boxplot, dump_paths } => {
                assert_eq!(inputs.input.len(), 2);
                assert_eq!(parse_families(&family).unwrap(), vec![FamilyKind::Markov]);
                assert_eq!(parse_sides(&side).unwrap(), vec![Side::Expansion]);
                assert!(dump_boxplot && !dump_paths);
            }
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn selections() {
        assert_eq!(parse_families("all").unwrap().len(), 3);
        assert_eq!(parse_sides("both").unwrap().len(), 2);
        assert_eq!(parse_sides("plus").unwrap(), vec![Side::Squeeze]);
        assert!(matches!(parse_families("garch"), Err(Error::Config(_))));
    }

    #[test]
    fn codes() {
        assert_eq!(exit_code(&Error::Config(String::new())), 3);
        assert_eq!(exit_code(&Error::Parse { row: 1, message: String::new() }), 2);
        assert_eq!(exit_code(&Error::InsufficientDurations(String::new())), 1);
        assert_eq!(main_with_args(["regime-surrogate", "--bogus"]), 3);
    }
}
