//! Surrogate test orchestration.
//!
//! For every candidate model θ in a family, `B` price paths of the same
//! length and step as the data are simulated (continuous part only), reduced
//! to the duration statistic T, and the observed `t*` is ranked against them.
//! Work is a flat bag of (θ, replicate) tasks whose random streams depend only
//! on `(master_seed, θ, replicate)`, so results do not depend on scheduling.

use rayon::prelude::*;

use crate::diststats::{alpha_from_counts, confidence, rank_counts, t_statistics, TStat, R_MAX};
use crate::error::{Error, Result};
use crate::jumpsep::{strip_jumps, JumpEstimates};
use crate::regimes::{
    markov_family, semi_markov_family, uni_regime_fit, DroppedPoint, EmpiricalSummary,
    FamilyGrid, FamilyKind, Model,
};
use crate::simulate::{
    check_switch_rates, simulate_gbm, simulate_markov_glp, simulate_semimarkov_glp,
    InitialRegime, SeedSpec, SimPath,
};
use crate::timeseries::{returns_from_prices, ReturnSeries};
use crate::volatility::{durations, moving_stats, Side};

/// Default replicates per θ.
pub const DEFAULT_REPLICATES: usize = 200;
/// Regeneration attempts after the first draw of a replicate slot.
pub const MAX_RETRIES: u8 = 10;
/// Fraction of discarded slots above which θ is flagged unreliable.
pub const UNRELIABLE_DISCARD_FRACTION: f64 = 0.10;

const SURROGATE_S0: f64 = 100.0;

/// Whether θ's share random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedMode {
    /// Every θ draws from its own streams.
    #[default]
    Independent,
    /// Common random numbers: replicate `i` uses the same streams for every θ.
    Common,
}

/// One composite null hypothesis and the settings used to test it.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSpec {
    pub family: FamilyKind,
    pub side: Side,
    pub replicates: usize,
    pub r_max: usize,
    pub grid: FamilyGrid,
    pub window: usize,
    pub master_seed: u64,
    pub seed_mode: SeedMode,
    pub initial_regime: InitialRegime,
}

impl HypothesisSpec {
    pub fn new(family: FamilyKind, side: Side) -> Self {
        Self {
            family,
            side,
            replicates: DEFAULT_REPLICATES,
            r_max: R_MAX,
            grid: FamilyGrid::default(),
            window: crate::volatility::DEFAULT_WINDOW,
            master_seed: 0,
            seed_mode: SeedMode::Independent,
            initial_regime: InitialRegime::Stationary,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Config(format!("B must be at least 2, got {}", self.replicates)));
        }
        if !(1..=R_MAX).contains(&self.r_max) {
            return Err(Error::Config(format!("r_max must lie in 1..=4, got {}", self.r_max)));
        }
        if self.window < 2 {
            return Err(Error::Config(format!("window must be >= 2, got {}", self.window)));
        }
        Ok(())
    }
}

/// The observed statistic together with its duration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedStat {
    pub t: TStat,
    /// Number of completed durations L.
    pub l: usize,
    /// Squeeze ceiling or expansion floor in σ̂ units.
    pub threshold: f64,
}

/// `t*`: strip jumps, moving statistics, durations on `side`, then T.
pub fn observed_tstar(
    ret: &ReturnSeries,
    jumps: &JumpEstimates,
    window: usize,
    p: f64,
    side: Side,
) -> Result<ObservedStat> {
    let rhat = strip_jumps(ret, jumps.c_hat);
    let vol = moving_stats(&rhat, window)?;
    let d = durations(&vol.sigma_hat, p, side)?;
    if d.len() < 2 {
        return Err(Error::InsufficientDurations(format!(
            "{} completed {side} durations (need at least 2) at p={p}, threshold {:.6}",
            d.len(),
            d.threshold
        )));
    }
    Ok(ObservedStat {
        t: t_statistics(&d)?,
        l: d.len(),
        threshold: d.threshold,
    })
}

/// T of a jump-free surrogate path, or `None` when fewer than `r_max`
/// components are defined.
pub fn surrogate_tstat(path: &SimPath, window: usize, p: f64, side: Side, r_max: usize) -> Option<TStat> {
    let ret = returns_from_prices(&path.prices, path.delta);
    let vol = moving_stats(&ret, window).ok()?;
    let d = durations(&vol.sigma_hat, p, side).ok()?;
    let t = t_statistics(&d).ok()?;
    (t.defined_up_to >= r_max).then_some(t)
}

/// Simulate one surrogate path of model θ.
pub fn simulate_model(
    model: &Model,
    n_steps: usize,
    delta: f64,
    initial: InitialRegime,
    seed: SeedSpec,
) -> Result<SimPath> {
    match model {
        Model::Uni(u) => simulate_gbm(u, n_steps, delta, SURROGATE_S0, seed),
        Model::Markov(m) => simulate_markov_glp(m, n_steps, delta, SURROGATE_S0, initial, seed),
        Model::SemiMarkov(s) => simulate_semimarkov_glp(s, n_steps, delta, SURROGATE_S0, initial, seed),
    }
}

/// Result for one θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaResult {
    pub index: usize,
    pub model: Model,
    /// α₁..α₄; zero when every replicate was discarded.
    pub alphas: [f64; 4],
    /// `card{i : t*_j ≥ t^i_j}` per component.
    pub counts: [usize; 4],
    /// Replicates entering the ranks (B minus discards).
    pub valid: usize,
    pub discarded: usize,
    pub unreliable: bool,
    /// Surrogate statistics in replicate order.
    pub samples: Vec<TStat>,
}

/// Outcome of testing one family on one side.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub family: FamilyKind,
    pub side: Side,
    pub t_star: TStat,
    pub per_theta: Vec<ThetaResult>,
    /// Composite α_r = max over θ, for r = 1..=4.
    pub composite: [f64; 4],
    /// Rejection confidence `100(1 − 2α_r)` in percent.
    pub confidence: [f64; 4],
    /// θ index attaining each composite α_r (first on ties).
    pub argmax: [usize; 4],
    pub dropped: Vec<DroppedPoint>,
    pub warnings: Vec<String>,
}

/// Enumerate the family's models and the grid points its guards dropped.
pub fn build_family(
    summary: &EmpiricalSummary,
    family: FamilyKind,
    side: Side,
    grid: &FamilyGrid,
) -> Result<(Vec<Model>, Vec<DroppedPoint>)> {
    Ok(match family {
        FamilyKind::Uni => (vec![Model::Uni(uni_regime_fit(summary))], Vec::new()),
        FamilyKind::Markov => {
            let f = markov_family(summary, grid, side)?;
            (f.members.into_iter().map(Model::Markov).collect(), f.dropped)
        }
        FamilyKind::SemiMarkov => {
            let f = semi_markov_family(summary, grid, side)?;
            (f.members.into_iter().map(Model::SemiMarkov).collect(), f.dropped)
        }
    })
}

/// Run the surrogate test for an explicit list of models.
pub fn run_test_models(
    models: &[Model],
    summary: &EmpiricalSummary,
    t_star: &TStat,
    spec: &HypothesisSpec,
    workers: usize,
) -> Result<TestReport> {
    spec.validate()?;
    if models.is_empty() {
        return Err(Error::EmptyFamily("no models to test".into()));
    }
    if models.len() >= (1 << 24) - 1 {
        return Err(Error::Config("family too large for the seed layout".into()));
    }
    if t_star.defined_up_to < spec.r_max {
        return Err(Error::InsufficientDurations(format!(
            "observed statistic defined only up to component {}",
            t_star.defined_up_to
        )));
    }
    let n_steps = summary.n_steps;
    let delta = summary.delta;
    let p = summary.p;
    let b = spec.replicates;

    let mut warnings = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let rate = match m {
            Model::Uni(_) => continue,
            Model::Markov(r) => r.lambda1.max(r.lambda2),
            // Mean-rate proxy; the age-dependent hazard is clamped per step.
            Model::SemiMarkov(s) => (s.regime.lambda1 / s.k1).max(s.regime.lambda2 / s.k2),
        };
        if let Some(w) = check_switch_rates(rate, delta)? {
            warnings.push(format!("theta {i}: {w}"));
        }
    }

    let task = |t: usize| -> Result<Option<TStat>> {
        let (theta, slot) = (t / b, t % b);
        let stream_theta = match spec.seed_mode {
            SeedMode::Independent => theta as u64,
            SeedMode::Common => 0,
        };
        let base = SeedSpec::new(spec.master_seed, stream_theta, slot as u64);
        for attempt in 0..=MAX_RETRIES {
            let path = simulate_model(&models[theta], n_steps, delta, spec.initial_regime, base.with_attempt(attempt))?;
            if let Some(stat) = surrogate_tstat(&path, spec.window, p, spec.side, spec.r_max) {
                return Ok(Some(stat));
            }
        }
        Ok(None)
    };

    let n_tasks = models.len() * b;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Option<TStat>> =
        pool.install(|| (0..n_tasks).into_par_iter().map(task).collect::<Result<_>>())?;

    let mut per_theta = Vec::with_capacity(models.len());
    for (theta, chunk) in outcomes.chunks(b).enumerate() {
        let samples: Vec<TStat> = chunk.iter().flatten().copied().collect();
        let valid = samples.len();
        let discarded = b - valid;
        let mut counts = [0usize; 4];
        let mut alphas = [0.0; 4];
        if valid > 0 {
            let c = rank_counts(t_star, &samples, spec.r_max);
            counts[..spec.r_max].copy_from_slice(&c);
            for r in 1..=4 {
                alphas[r - 1] = alpha_from_counts(&counts, valid, r.min(spec.r_max));
            }
        }
        per_theta.push(ThetaResult {
            index: theta,
            model: models[theta],
            alphas,
            counts,
            valid,
            discarded,
            unreliable: discarded as f64 > UNRELIABLE_DISCARD_FRACTION * b as f64,
            samples,
        });
    }

    let mut composite = [f64::NEG_INFINITY; 4];
    let mut argmax = [0usize; 4];
    for th in &per_theta {
        for r in 0..4 {
            if th.alphas[r] > composite[r] {
                composite[r] = th.alphas[r];
                argmax[r] = th.index;
            }
        }
    }
    Ok(TestReport {
        family: models[0].kind(),
        side: spec.side,
        t_star: *t_star,
        per_theta,
        composite,
        confidence: composite.map(confidence),
        argmax,
        dropped: Vec::new(),
        warnings,
    })
}

/// Build the family described by `spec` and run the surrogate test.
pub fn run_test(
    summary: &EmpiricalSummary,
    t_star: &TStat,
    spec: &HypothesisSpec,
    workers: usize,
) -> Result<TestReport> {
    let (models, dropped) = build_family(summary, spec.family, spec.side, &spec.grid)?;
    let mut report = run_test_models(&models, summary, t_star, spec, workers)?;
    report.dropped = dropped;
    Ok(report)
}

/// Best-fitting model class for one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestFit {
    pub family: FamilyKind,
    pub side: Side,
    pub alpha4: f64,
    /// Rejection confidence of the best class, in percent.
    pub confidence: f64,
    /// The best α₄ is attained on both sides.
    pub ambiguous: bool,
}

/// Pick the class with the largest α₄ (α at the report's top component).
///
/// A richer family must be strictly better to win: ties go to uni over
/// Markov over semi-Markov. Side ties are flagged and resolved toward the
/// squeeze side.
pub fn summarize_best_fit<'a, I>(reports: I) -> Option<BestFit>
where
    I: IntoIterator<Item = &'a TestReport>,
{
    let entries: Vec<(FamilyKind, Side, f64)> = reports
        .into_iter()
        .map(|r| (r.family, r.side, r.composite[3]))
        .collect();
    let best = entries.iter().map(|e| e.2).fold(f64::NEG_INFINITY, f64::max);
    let mut winners: Vec<&(FamilyKind, Side, f64)> = entries.iter().filter(|e| e.2 == best).collect();
    if winners.is_empty() {
        return None;
    }
    let ambiguous = winners.iter().any(|e| e.1 == Side::Squeeze) && winners.iter().any(|e| e.1 == Side::Expansion);
    winners.sort_by_key(|e| (e.1, e.0));
    let w = winners[0];
    Some(BestFit {
        family: w.0,
        side: w.1,
        alpha4: w.2,
        confidence: confidence(w.2),
        ambiguous,
    })
}
