//! Run configuration: flat `key = value` files with command-line overrides.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{HypothesisSpec, SeedMode, DEFAULT_REPLICATES};
use crate::regimes::{FamilyGrid, FamilyKind, DEFAULT_DAY_YEARS};
use crate::simulate::InitialRegime;
use crate::volatility::{Side, DEFAULT_WINDOW};

/// Every tunable of the estimation and test pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Sampling step in years (5 minutes of a 6-hour, 250-day year).
    pub delta: f64,
    /// Jump false-flag probability.
    pub p_hat: f64,
    pub window: usize,
    /// Squeeze/expansion percentile level.
    pub p: f64,
    /// Surrogate replicates per θ.
    pub replicates: usize,
    pub r_max: usize,
    pub holding_days: Vec<f64>,
    pub day_years: f64,
    pub percents_plus: Option<Vec<u32>>,
    pub percents_minus: Option<Vec<u32>>,
    pub shapes: Vec<f64>,
    pub master_seed: u64,
    pub workers: usize,
    pub max_iters: usize,
    pub seed_mode: SeedMode,
    pub initial_regime: InitialRegime,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = FamilyGrid::default();
        Self {
            delta: 5.0 / (250.0 * 360.0),
            p_hat: 2e-4,
            window: DEFAULT_WINDOW,
            p: 0.15,
            replicates: DEFAULT_REPLICATES,
            r_max: 4,
            holding_days: grid.holding_days,
            day_years: DEFAULT_DAY_YEARS,
            percents_plus: None,
            percents_minus: None,
            shapes: grid.shapes,
            master_seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_iters: crate::jumpsep::DEFAULT_MAX_ITERS,
            seed_mode: SeedMode::Independent,
            initial_regime: InitialRegime::Stationary,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key} = {value:?}: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, value, e))
}

/// Comma list whose items may be integer ranges `a..b` (inclusive).
fn list<T: std::str::FromStr + From<u32>>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u32 = num(key, a)?;
            let b: u32 = num(key, b)?;
            if a > b {
                return Err(bad(key, value, "empty range"));
            }
            out.extend((a..=b).map(T::from));
        } else {
            out.push(num(key, item)?);
        }
    }
    if out.is_empty() {
        return Err(bad(key, value, "empty list"));
    }
    Ok(out)
}

impl RunConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let v = value.trim();
        match key {
            "delta" => self.delta = num(key, v)?,
            "p_hat" => self.p_hat = num(key, v)?,
            "window" | "n" => self.window = num(key, v)?,
            "p" => self.p = num(key, v)?,
            "B" | "replicates" => self.replicates = num(key, v)?,
            "r_max" => self.r_max = num(key, v)?,
            "holding_days" => self.holding_days = list(key, v)?,
            "day_years" => self.day_years = num(key, v)?,
            "percents_plus" => self.percents_plus = Some(list(key, v)?),
            "percents_minus" => self.percents_minus = Some(list(key, v)?),
            "shapes" => self.shapes = list(key, v)?,
            "seed" | "master_seed" => self.master_seed = num(key, v)?,
            "workers" => self.workers = num(key, v)?,
            "max_iters" => self.max_iters = num(key, v)?,
            "seed_mode" => {
                self.seed_mode = match v {
                    "independent" => SeedMode::Independent,
                    "common" | "crn" => SeedMode::Common,
                    _ => return Err(bad(key, v, "expected independent or common")),
                }
            }
            "initial_regime" => {
                self.initial_regime = match v {
                    "stationary" => InitialRegime::Stationary,
                    "1" => InitialRegime::Fixed(1),
                    "2" => InitialRegime::Fixed(2),
                    _ => return Err(bad(key, v, "expected stationary, 1 or 2")),
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a `key=value` override as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(k, v)
    }

    /// Parse configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return fail(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.p_hat > 0.0 && self.p_hat < 1.0) {
            return fail(format!("p_hat must lie in (0, 1), got {}", self.p_hat));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return fail(format!("p must lie in (0, 1), got {}", self.p));
        }
        if self.window < 2 {
            return fail(format!("window must be at least 2, got {}", self.window));
        }
        if self.replicates < 2 {
            return fail(format!("B must be at least 2, got {}", self.replicates));
        }
        if !(1..=4).contains(&self.r_max) {
            return fail(format!("r_max must lie in 1..=4, got {}", self.r_max));
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if !(self.day_years > 0.0) {
            return fail(format!("day_years must be positive, got {}", self.day_years));
        }
        if self.holding_days.iter().any(|h| !(*h > 0.0)) {
            return fail("holding_days must be positive".into());
        }
        if self.shapes.iter().any(|k| !(*k > 0.0)) {
            return fail("shapes must be positive".into());
        }
        for pcts in [&self.percents_plus, &self.percents_minus].into_iter().flatten() {
            if pcts.iter().any(|q| !(1..=100).contains(q)) {
                return fail("percents must lie in 1..=100".into());
            }
        }
        Ok(())
    }

    pub fn grid(&self, side: Side) -> FamilyGrid {
        FamilyGrid {
            holding_days: self.holding_days.clone(),
            day_years: self.day_years,
            percents: match side {
                Side::Squeeze => self.percents_plus.clone(),
                Side::Expansion => self.percents_minus.clone(),
            },
            shapes: self.shapes.clone(),
        }
    }

    pub fn hypothesis(&self, family: FamilyKind, side: Side) -> HypothesisSpec {
        HypothesisSpec {
            family,
            side,
            replicates: self.replicates,
            r_max: self.r_max,
            grid: self.grid(side),
            window: self.window,
            master_seed: self.master_seed,
            seed_mode: self.seed_mode,
            initial_regime: self.initial_regime,
        }
    }
}
