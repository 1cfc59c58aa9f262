//! The `estimate`, `tstar`, `test` and `simulate` commands.
//!
//! Each command returns its stdout text and the files it wants written, so
//! the driver alone touches the file system.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::report::{a3, five_numbers, sig6, tstat_cells, Table};
use crate::error::{Error, Result};
use crate::harness::{observed_tstar, run_test, simulate_model, summarize_best_fit, TestReport};
use crate::jumpsep::{estimate_jump_params, strip_jumps, JumpEstimates};
use crate::regimes::{
    summarize, EmpiricalSummary, FamilyKind, MarkovRegimeParams, Model, SemiMarkovRegimeParams,
    UniRegimeParams,
};
use crate::simulate::{
    simulate_gbm, simulate_jump_diffusion, simulate_markov_glp, simulate_semimarkov_glp, SeedSpec,
};
use crate::timeseries::{load_prices, simple_returns, PriceSeries, ReturnSeries};
use crate::volatility::{moving_stats, Side};

/// θ index reserved for synthetic data so it never shares streams with surrogates.
pub const DATA_THETA: u64 = (1 << 24) - 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub text: String,
    /// `(file name, contents)` relative to the output directory.
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

/// One input series carried through calibration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub label: String,
    pub prices: PriceSeries,
    pub returns: ReturnSeries,
    pub jumps: JumpEstimates,
    pub summary: EmpiricalSummary,
}

pub fn prepare_series(cfg: &RunConfig, prices: PriceSeries) -> Result<Prepared> {
    let returns = simple_returns(&prices);
    let jumps = estimate_jump_params(&returns, cfg.p_hat, cfg.max_iters)?;
    let vol = moving_stats(&strip_jumps(&returns, jumps.c_hat), cfg.window)?;
    let summary = summarize(&vol, &jumps, cfg.p)?;
    Ok(Prepared {
        label: prices.label().to_string(),
        prices,
        returns,
        jumps,
        summary,
    })
}

fn load_all(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Vec<Prepared>> {
    if inputs.is_empty() {
        return Err(Error::Config("no input files".into()));
    }
    inputs
        .iter()
        .map(|p| prepare_series(cfg, load_prices(p, cfg.delta)?))
        .collect()
}

/// β̂, Λ̂, V, μ̄, σ̄ per series.
pub fn cmd_estimate(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<CommandOutput> {
    cfg.validate()?;
    let mut t = Table::new(&[
        "series", "n_steps", "beta_hat", "lambda_hat", "v", "mu_bar", "sigma_bar", "c_hat", "jumps",
        "converged",
    ]);
    let mut warnings = Vec::new();
    for s in load_all(cfg, inputs)? {
        let j = &s.jumps;
        if !j.converged {
            warnings.push(format!(
                "{}: jump calibration did not converge after {} iterations",
                s.label, j.iterations_used
            ));
        }
        t.push(vec![
            s.label.clone(),
            s.returns.len().to_string(),
            sig6(j.beta_hat),
            sig6(j.lambda_hat),
            sig6(j.v),
            sig6(s.summary.mu_bar),
            sig6(s.summary.sigma_bar),
            sig6(j.c_hat),
            j.jump_indices.len().to_string(),
            j.converged.to_string(),
        ]);
    }
    Ok(CommandOutput {
        text: t.to_text(),
        files: vec![("estimates.csv".into(), t.to_csv())],
        warnings,
    })
}

/// Observed statistic on both sides per series.
pub fn cmd_tstar(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<CommandOutput> {
    cfg.validate()?;
    let mut t = Table::new(&["series", "side", "class", "L", "t1", "t2", "t3", "t4", "threshold"]);
    for s in load_all(cfg, inputs)? {
        for side in Side::BOTH {
            let obs = observed_tstar(&s.returns, &s.jumps, cfg.window, cfg.p, side)?;
            let mut row = vec![
                s.label.clone(),
                side.sign_label().to_string(),
                side.class_label().to_string(),
                obs.l.to_string(),
            ];
            row.extend(tstat_cells(&obs.t));
            row.push(sig6(obs.threshold));
            t.push(row);
        }
    }
    Ok(CommandOutput {
        text: t.to_text(),
        files: vec![("tstar.csv".into(), t.to_csv())],
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TestOptions {
    pub dump_paths: bool,
    pub dump_boxplot: bool,
}

fn class_name(family: FamilyKind, side: Side) -> String {
    format!("{}-{family}", side.class_label())
}

fn model_cells(m: &Model) -> Vec<String> {
    let (mu1, mu2, s1, s2, l1, l2, k1, k2) = match m {
        Model::Uni(u) => (u.mu, u.mu, u.beta, u.beta, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        Model::Markov(r) => (r.mu1, r.mu2, r.sigma1, r.sigma2, r.lambda1, r.lambda2, 1.0, 1.0),
        Model::SemiMarkov(s) => {
            let r = &s.regime;
            (r.mu1, r.mu2, r.sigma1, r.sigma2, r.lambda1, r.lambda2, s.k1, s.k2)
        }
    };
    [mu1, mu2, s1, s2, l1, l2, k1, k2]
        .iter()
        .map(|&x| if x.is_nan() { String::new() } else { sig6(x) })
        .collect()
}

/// α table in the layout index, α₁..α₄ for A⁺, α₁..α₄ for A⁻.
fn alpha_table(reports: &[&TestReport]) -> Table {
    let mut header = vec!["index".to_string()];
    for r in reports {
        for j in 1..=4 {
            header.push(format!("{}_alpha{j}", r.side.sign_label()));
        }
    }
    let mut t = Table::new(&header);
    let rows = reports.iter().map(|r| r.per_theta.len()).max().unwrap_or(0);
    for i in 0..rows {
        let mut row = vec![(i + 1).to_string()];
        for r in reports {
            match r.per_theta.get(i) {
                Some(th) => row.extend(th.alphas.iter().map(|&a| a3(a))),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        t.push(row);
    }
    let mut row = vec!["max".to_string()];
    for r in reports {
        row.extend(r.composite.iter().map(|&a| a3(a)));
    }
    t.push(row);
    t
}

fn theta_table(r: &TestReport) -> Table {
    let mut t = Table::new(&[
        "index", "mu1", "mu2", "sigma1", "sigma2", "lambda1", "lambda2", "k1", "k2", "alpha1",
        "alpha2", "alpha3", "alpha4", "count1", "count2", "count3", "count4", "valid", "discarded",
        "unreliable",
    ]);
    for th in &r.per_theta {
        let mut row = vec![(th.index + 1).to_string()];
        row.extend(model_cells(&th.model));
        row.extend(th.alphas.iter().map(|&a| a3(a)));
        row.extend(th.counts.iter().map(|c| c.to_string()));
        row.push(th.valid.to_string());
        row.push(th.discarded.to_string());
        row.push(th.unreliable.to_string());
        t.push(row);
    }
    t
}

fn boxplot_table(r: &TestReport) -> Result<Table> {
    let mut t = Table::new(&["index", "component", "n", "min", "q1", "median", "q3", "max", "t_star"]);
    for th in &r.per_theta {
        if th.samples.is_empty() {
            continue;
        }
        for j in 1..=4 {
            let v: Vec<f64> = th.samples.iter().map(|s| s.get(j)).collect();
            let mut row = vec![(th.index + 1).to_string(), format!("T{j}"), v.len().to_string()];
            row.extend(five_numbers(&v)?.iter().map(|&x| sig6(x)));
            row.push(sig6(r.t_star.get(j)));
            t.push(row);
        }
    }
    Ok(t)
}

/// Surrogate test of every requested family on every requested side.
pub fn cmd_test(
    cfg: &RunConfig,
    inputs: &[PathBuf],
    families: &[FamilyKind],
    sides: &[Side],
    opts: TestOptions,
) -> Result<CommandOutput> {
    cfg.validate()?;
    if families.is_empty() || sides.is_empty() {
        return Err(Error::Config("no family or side selected".into()));
    }
    let mut out = CommandOutput::default();
    let mut classes = Vec::new();
    for &side in sides {
        for &f in families {
            classes.push(class_name(f, side));
        }
    }
    let mut best_header = vec!["series".to_string()];
    best_header.extend(classes.iter().map(|c| format!("{c}_alpha4")));
    best_header.extend(["best", "alpha4", "confidence", "ambiguous"].map(String::from));
    let mut best = Table::new(&best_header);

    for s in load_all(cfg, inputs)? {
        let mut reports: Vec<TestReport> = Vec::new();
        out.text.push_str(&format!("series {}\n", s.label));
        for &side in sides {
            let obs = observed_tstar(&s.returns, &s.jumps, cfg.window, cfg.p, side)?;
            out.text.push_str(&format!(
                "  {} ({}) t* = ({}, {}, {}, {}), L = {}\n",
                side,
                side.class_label(),
                sig6(obs.t.t1),
                sig6(obs.t.t2),
                sig6(obs.t.t3),
                sig6(obs.t.t4),
                obs.l
            ));
            for &family in families {
                let spec = cfg.hypothesis(family, side);
                let rep = run_test(&s.summary, &obs.t, &spec, cfg.workers)?;
                out.warnings
                    .extend(rep.warnings.iter().map(|w| format!("{} {}: {w}", s.label, class_name(family, side))));
                reports.push(rep);
            }
        }

        let mut summary = Table::new(&[
            "class", "thetas", "dropped", "unreliable", "alpha1", "alpha2", "alpha3", "alpha4",
            "conf1", "conf4", "argmax4",
        ]);
        for rep in &reports {
            let unreliable = rep.per_theta.iter().filter(|t| t.unreliable).count();
            if unreliable > 0 {
                out.warnings.push(format!(
                    "{} {}: {unreliable} parameter sets discarded more than 10% of replicates",
                    s.label,
                    class_name(rep.family, rep.side)
                ));
            }
            let mut row = vec![
                class_name(rep.family, rep.side),
                rep.per_theta.len().to_string(),
                rep.dropped.len().to_string(),
                unreliable.to_string(),
            ];
            row.extend(rep.composite.iter().map(|&a| a3(a)));
            row.push(format!("{:.1}", rep.confidence[0]));
            row.push(format!("{:.1}", rep.confidence[3]));
            row.push((rep.argmax[3] + 1).to_string());
            summary.push(row);

            let stem = format!("{}_{}_{}", s.label, rep.family, rep.side.sign_label());
            out.files.push((format!("{stem}_theta.csv"), theta_table(rep).to_csv()));
            if opts.dump_boxplot {
                out.files.push((format!("{stem}_boxplot.csv"), boxplot_table(rep)?.to_csv()));
            }
            if opts.dump_paths {
                let spec = cfg.hypothesis(rep.family, rep.side);
                let picks: BTreeSet<usize> = rep.argmax.iter().copied().collect();
                for i in picks {
                    let theta = match spec.seed_mode {
                        crate::harness::SeedMode::Independent => i as u64,
                        crate::harness::SeedMode::Common => 0,
                    };
                    let path = simulate_model(
                        &rep.per_theta[i].model,
                        s.summary.n_steps,
                        s.summary.delta,
                        spec.initial_regime,
                        SeedSpec::new(spec.master_seed, theta, 0),
                    )?;
                    let mut buf = Vec::new();
                    path.write_csv(&mut buf).expect("write to memory");
                    out.files.push((
                        format!("{stem}_path{}.csv", i + 1),
                        String::from_utf8(buf).expect("ascii csv"),
                    ));
                }
            }
        }
        out.text.push_str(&summary.to_text());

        for &family in families {
            let fam: Vec<&TestReport> = reports.iter().filter(|r| r.family == family).collect();
            out.files
                .push((format!("{}_alpha_{family}.csv", s.label), alpha_table(&fam).to_csv()));
        }

        let mut row = vec![s.label.clone()];
        row.extend(reports.iter().map(|r| a3(r.composite[3])));
        match summarize_best_fit(&reports) {
            Some(b) => {
                out.text.push_str(&format!(
                    "  best fit: {} (alpha4 {}, rejection confidence {:.0}%){}\n",
                    class_name(b.family, b.side),
                    a3(b.alpha4),
                    b.confidence,
                    if b.ambiguous { ", side ambiguous" } else { "" }
                ));
                row.extend([
                    class_name(b.family, b.side),
                    a3(b.alpha4),
                    format!("{:.1}", b.confidence),
                    b.ambiguous.to_string(),
                ]);
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        best.push(row);
    }
    out.files.push(("best_fit.csv".into(), best.to_csv()));
    Ok(out)
}

/// Which synthetic process `simulate` draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimModel {
    Uni,
    Markov,
    SemiMarkov,
    Jump,
}

impl std::str::FromStr for SimModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uni" | "gbm" => SimModel::Uni,
            "markov" => SimModel::Markov,
            "semimarkov" => SimModel::SemiMarkov,
            "jump" => SimModel::Jump,
            _ => return Err(Error::Config(format!("unknown model {s:?}"))),
        })
    }
}

/// Parameters for synthetic data. Rates are per year, holding times in days.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub model: SimModel,
    pub steps: usize,
    pub s0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub hold1_days: f64,
    pub hold2_days: f64,
    pub k1: f64,
    pub k2: f64,
    pub jump_rate: f64,
    pub jump_var: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            model: SimModel::Markov,
            steps: 18_000,
            s0: 100.0,
            mu: 0.0,
            sigma: 0.08,
            sigma1: 0.03,
            sigma2: 0.12,
            hold1_days: 3.0,
            hold2_days: 17.0,
            k1: 1.0,
            k2: 1.0,
            jump_rate: 120.0,
            jump_var: 2e-5,
        }
    }
}

/// Markov parameters with mean sojourns `hold·day_years`.
pub fn markov_from_holding(set: &SimSettings, day_years: f64) -> MarkovRegimeParams {
    MarkovRegimeParams {
        mu1: set.mu,
        mu2: set.mu,
        sigma1: set.sigma1,
        sigma2: set.sigma2,
        lambda1: 1.0 / (set.hold1_days * day_years),
        lambda2: 1.0 / (set.hold2_days * day_years),
        side: if set.sigma1 <= set.sigma2 { Side::Squeeze } else { Side::Expansion },
    }
}

/// Write one synthetic price path (`step,regime,age,price`) to `output`.
pub fn cmd_simulate(cfg: &RunConfig, set: &SimSettings, output: &Path) -> Result<CommandOutput> {
    cfg.validate()?;
    let seed = SeedSpec::new(cfg.master_seed, DATA_THETA, 0);
    let uni = UniRegimeParams { mu: set.mu, beta: set.sigma };
    let m = markov_from_holding(set, cfg.day_years);
    let path = match set.model {
        SimModel::Uni => simulate_gbm(&uni, set.steps, cfg.delta, set.s0, seed)?,
        SimModel::Jump => {
            simulate_jump_diffusion(&uni, set.jump_rate, set.jump_var, set.steps, cfg.delta, set.s0, seed)?
        }
        SimModel::Markov => simulate_markov_glp(&m, set.steps, cfg.delta, set.s0, cfg.initial_regime, seed)?,
        SimModel::SemiMarkov => {
            // Sojourn means stay at the requested holding times: rate = k / mean.
            let sm = SemiMarkovRegimeParams {
                regime: MarkovRegimeParams {
                    lambda1: set.k1 * m.lambda1,
                    lambda2: set.k2 * m.lambda2,
                    ..m
                },
                k1: set.k1,
                k2: set.k2,
            };
            simulate_semimarkov_glp(&sm, set.steps, cfg.delta, set.s0, cfg.initial_regime, seed)?
        }
    };
    let mut buf = Vec::new();
    path.write_csv(&mut buf).expect("write to memory");
    let name = output.to_string_lossy().into_owned();
    Ok(CommandOutput {
        text: format!("{} steps written to {name}\n", set.steps),
        files: vec![(name, String::from_utf8(buf).expect("ascii csv"))],
        warnings: Vec::new(),
    })
}
