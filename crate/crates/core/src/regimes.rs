//! Empirical constraint targets and the finite candidate families for the
//! uni-regime, binary Markov and binary semi-Markov hypotheses.
//!
//! Every regime-switching candidate matches the data's long-run drift and
//! volatility, and spends a long-run fraction `p` of time in state 1. On the
//! squeeze side state 1 is the low-volatility regime (σ₁ at or below the
//! `p`-percentile of σ̂); on the expansion side it is the high-volatility one
//! (σ₁ at or above the `(1 − p)`-percentile).

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::jumpsep::JumpEstimates;
use crate::special::{ln_gamma, ln_gamma_q};
use crate::timeseries::mean;
use crate::volatility::{integer_percentiles, Side, VolSeries};

/// One trading day in years: six hours a day, 250 days a year.
pub const DEFAULT_DAY_YEARS: f64 = 1.0 / 250.0;

const REL_TOL: f64 = 1e-12;

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    Uni,
    Markov,
    SemiMarkov,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [FamilyKind::Uni, FamilyKind::Markov, FamilyKind::SemiMarkov];
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Uni => "uni",
            FamilyKind::Markov => "markov",
            FamilyKind::SemiMarkov => "semimarkov",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uni" | "gbm" => Ok(FamilyKind::Uni),
            "markov" | "m" => Ok(FamilyKind::Markov),
            "semimarkov" | "semi-markov" | "sm" => Ok(FamilyKind::SemiMarkov),
            _ => Err(Error::Config(format!("unknown family {s:?}"))),
        }
    }
}

/// Long-run summaries of the data that every candidate model must match.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    /// Time average of μ̂ (per year).
    pub mu_bar: f64,
    /// Time average of σ̂ (per √year).
    pub sigma_bar: f64,
    pub lambda_hat: f64,
    pub v: f64,
    /// σ̂ percentiles at integer percents; entry `q - 1` holds percent `q`.
    pub sigma_percentiles: Vec<f64>,
    pub p: f64,
    pub delta: f64,
    /// Number of returns N in the source series.
    pub n_steps: usize,
}

impl EmpiricalSummary {
    /// Percentile of σ̂ at integer percent `q` in `1..=100`.
    pub fn sigma_percentile(&self, q: u32) -> f64 {
        self.sigma_percentiles[q as usize - 1]
    }

    /// Highest percent on the squeeze side: `⌊100p⌋`.
    pub fn max_squeeze_percent(&self) -> u32 {
        (100.0 * self.p + 1e-9).floor() as u32
    }

    /// Lowest percent on the expansion side: `⌈100(1 − p)⌉`.
    pub fn min_expansion_percent(&self) -> u32 {
        (100.0 * (1.0 - self.p) - 1e-9).ceil() as u32
    }

    /// The side-consistent percent grid for σ₁.
    pub fn default_percents(&self, side: Side) -> Vec<u32> {
        match side {
            Side::Squeeze => (1..=self.max_squeeze_percent()).collect(),
            Side::Expansion => (self.min_expansion_percent()..=100).collect(),
        }
    }
}

pub fn summarize(vol: &VolSeries, jumps: &JumpEstimates, p: f64) -> Result<EmpiricalSummary> {
    if vol.is_empty() {
        return Err(Error::InsufficientData("empty volatility series".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(EmpiricalSummary {
        mu_bar: mean(&vol.mu_hat),
        sigma_bar: mean(&vol.sigma_hat),
        lambda_hat: jumps.lambda_hat,
        v: jumps.v,
        sigma_percentiles: integer_percentiles(&vol.sigma_hat)?,
        p,
        delta: vol.delta,
        n_steps: vol.len() + vol.window - 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniRegimeParams {
    pub mu: f64,
    pub beta: f64,
}

impl UniRegimeParams {
    /// A zero-volatility fit carries no squeeze/expansion structure.
    pub fn is_degenerate(&self) -> bool {
        self.beta == 0.0
    }
}

pub fn uni_regime_fit(summary: &EmpiricalSummary) -> UniRegimeParams {
    UniRegimeParams {
        mu: summary.mu_bar,
        beta: summary.sigma_bar,
    }
}

/// Binary regime coefficients with exponential (Markov) sojourns.
///
/// State 1 occupies long-run fraction `p`; `lambda1`, `lambda2` are the exit
/// rates of states 1 and 2 (per year).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovRegimeParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub side: Side,
}

impl MarkovRegimeParams {
    pub fn mu(&self, state: u8) -> f64 {
        if state == 1 {
            self.mu1
        } else {
            self.mu2
        }
    }

    pub fn sigma(&self, state: u8) -> f64 {
        if state == 1 {
            self.sigma1
        } else {
            self.sigma2
        }
    }

    pub fn lambda(&self, state: u8) -> f64 {
        if state == 1 {
            self.lambda1
        } else {
            self.lambda2
        }
    }

    /// Check the class constraints against `summary`.
    pub fn verify(&self, summary: &EmpiricalSummary) -> Result<()> {
        let p = summary.p;
        let fail = |what: &str| Err(Error::param(format!("{what} violated by {self:?}")));
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return fail("positive volatilities");
        }
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return fail("positive rates");
        }
        if !rel_close(self.lambda1, (1.0 / p - 1.0) * self.lambda2) {
            return fail("occupation fraction");
        }
        if !rel_close(p * self.sigma1 + (1.0 - p) * self.sigma2, summary.sigma_bar) {
            return fail("volatility average");
        }
        if !rel_close(p * self.mu1 + (1.0 - p) * self.mu2, summary.mu_bar) {
            return fail("drift average");
        }
        let ok = match self.side {
            Side::Squeeze => {
                self.sigma1 <= summary.sigma_percentile(summary.max_squeeze_percent().max(1))
            }
            Side::Expansion => {
                self.sigma1 >= summary.sigma_percentile(summary.min_expansion_percent().min(100))
            }
        };
        if !ok {
            return fail("side constraint on sigma1");
        }
        Ok(())
    }
}

/// Binary regime coefficients with gamma-distributed sojourns.
///
/// `regime.lambda1/2` are gamma rates; the sojourn in state `i` is
/// `Γ(k_i, λ_i)` with mean `k_i / λ_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiMarkovRegimeParams {
    pub regime: MarkovRegimeParams,
    pub k1: f64,
    pub k2: f64,
}

impl SemiMarkovRegimeParams {
    pub fn shape(&self, state: u8) -> f64 {
        if state == 1 {
            self.k1
        } else {
            self.k2
        }
    }

    pub fn verify(&self, summary: &EmpiricalSummary) -> Result<()> {
        let r = &self.regime;
        if !(self.k1 > 0.0 && self.k1 == self.k2) {
            return Err(Error::param(format!("shapes must be equal and positive: {self:?}")));
        }
        let e1 = self.k1 / r.lambda1;
        let e2 = self.k2 / r.lambda2;
        if !rel_close(e1 / (e1 + e2), summary.p) {
            return Err(Error::param(format!("mean sojourn fraction violated by {self:?}")));
        }
        r.verify(summary)
    }
}

/// One candidate model θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Uni(UniRegimeParams),
    Markov(MarkovRegimeParams),
    SemiMarkov(SemiMarkovRegimeParams),
}

impl Model {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Model::Uni(_) => FamilyKind::Uni,
            Model::Markov(_) => FamilyKind::Markov,
            Model::SemiMarkov(_) => FamilyKind::SemiMarkov,
        }
    }

    /// Long-run fraction of time in state 1, if the model has regimes.
    pub fn state1_fraction(&self) -> Option<f64> {
        match self {
            Model::Uni(_) => None,
            Model::Markov(m) => Some(m.lambda2 / (m.lambda1 + m.lambda2)),
            Model::SemiMarkov(s) => {
                let e1 = s.k1 / s.regime.lambda1;
                let e2 = s.k2 / s.regime.lambda2;
                Some(e1 / (e1 + e2))
            }
        }
    }
}

/// Grids spanning a regime family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyGrid {
    /// Mean sojourn of state 1, in days.
    pub holding_days: Vec<f64>,
    /// Length of one day in years.
    pub day_years: f64,
    /// σ₁ percents; `None` selects the side-consistent default.
    pub percents: Option<Vec<u32>>,
    /// Gamma shapes (semi-Markov only).
    pub shapes: Vec<f64>,
}

impl Default for FamilyGrid {
    fn default() -> Self {
        let mut shapes = vec![0.5];
        shapes.extend((1..=16).map(f64::from));
        Self {
            holding_days: (1..=15).map(f64::from).collect(),
            day_years: DEFAULT_DAY_YEARS,
            percents: None,
            shapes,
        }
    }
}

/// A grid point removed because σ₂ came out non-positive (or σ₁ was zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppedPoint {
    pub holding_days: f64,
    pub percent: u32,
    pub sigma1: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family<T> {
    pub members: Vec<T>,
    pub dropped: Vec<DroppedPoint>,
}

fn check_percents(summary: &EmpiricalSummary, percents: &[u32], side: Side) -> Result<()> {
    let ok = match side {
        Side::Squeeze => {
            let hi = summary.max_squeeze_percent();
            percents.iter().all(|&q| (1..=hi).contains(&q))
        }
        Side::Expansion => {
            let lo = summary.min_expansion_percent();
            percents.iter().all(|&q| (lo..=100).contains(&q))
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "percent grid {percents:?} is inconsistent with side {side} at p={}",
            summary.p
        )))
    }
}

// Shared (h, q) enumeration for both regime families. `rate_numerator` is
// k for gamma sojourns and 1 for exponential ones.
fn regime_points(
    summary: &EmpiricalSummary,
    grid: &FamilyGrid,
    side: Side,
    rate_numerator: f64,
    out: &mut Vec<MarkovRegimeParams>,
    dropped: &mut Vec<DroppedPoint>,
) -> Result<()> {
    let p = summary.p;
    let percents = grid
        .percents
        .clone()
        .unwrap_or_else(|| summary.default_percents(side));
    if grid.holding_days.is_empty() || percents.is_empty() {
        return Err(Error::Config("family grids must be non-empty".into()));
    }
    if !(grid.day_years > 0.0) || grid.holding_days.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::Config("holding times must be positive".into()));
    }
    check_percents(summary, &percents, side)?;
    for &h in &grid.holding_days {
        let lambda1 = rate_numerator / (h * grid.day_years);
        let lambda2 = lambda1 / (1.0 / p - 1.0);
        for &q in &percents {
            let sigma1 = summary.sigma_percentile(q);
            let sigma2 = (summary.sigma_bar - p * sigma1) / (1.0 - p);
            if !(sigma1 > 0.0 && sigma2 > 0.0) {
                dropped.push(DroppedPoint {
                    holding_days: h,
                    percent: q,
                    sigma1,
                    sigma2,
                });
                continue;
            }
            out.push(MarkovRegimeParams {
                mu1: summary.mu_bar,
                mu2: summary.mu_bar,
                sigma1,
                sigma2,
                lambda1,
                lambda2,
                side,
            });
        }
    }
    Ok(())
}

/// Markov family over (mean holding time of state 1) × (σ₁ percent).
pub fn markov_family(
    summary: &EmpiricalSummary,
    grid: &FamilyGrid,
    side: Side,
) -> Result<Family<MarkovRegimeParams>> {
    let mut members = Vec::new();
    let mut dropped = Vec::new();
    regime_points(summary, grid, side, 1.0, &mut members, &mut dropped)?;
    if members.is_empty() {
        return Err(Error::EmptyFamily(format!(
            "all {} Markov grid points dropped (sigma2 <= 0)",
            dropped.len()
        )));
    }
    for m in &members {
        m.verify(summary)?;
    }
    Ok(Family { members, dropped })
}

/// Semi-Markov family over holding time × σ₁ percent × gamma shape.
///
/// Ordered shape-major so that a shape of 1 reproduces the Markov family
/// point for point.
pub fn semi_markov_family(
    summary: &EmpiricalSummary,
    grid: &FamilyGrid,
    side: Side,
) -> Result<Family<SemiMarkovRegimeParams>> {
    if grid.shapes.is_empty() {
        return Err(Error::Config("shape grid must be non-empty".into()));
    }
    if grid.shapes.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Config("gamma shapes must be positive".into()));
    }
    let mut members = Vec::new();
    let mut dropped = Vec::new();
    for (i, &k) in grid.shapes.iter().enumerate() {
        let mut pts = Vec::new();
        let mut drop_k = Vec::new();
        regime_points(summary, grid, side, k, &mut pts, &mut drop_k)?;
        members.extend(pts.into_iter().map(|regime| SemiMarkovRegimeParams {
            regime,
            k1: k,
            k2: k,
        }));
        // The σ guard does not depend on k; report each dropped point once.
        if i == 0 {
            dropped = drop_k;
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyFamily(format!(
            "all semi-Markov grid points dropped ({} per shape)",
            dropped.len()
        )));
    }
    for m in &members {
        m.verify(summary)?;
    }
    Ok(Family { members, dropped })
}

/// Hazard rate of `Γ(k, λ)` at age `y` (years), evaluated in log space.
pub fn gamma_hazard(y: f64, k: f64, lambda: f64) -> Result<f64> {
    if !(k > 0.0 && lambda > 0.0) {
        return Err(Error::param(format!("gamma shape and rate must be positive (k={k}, λ={lambda})")));
    }
    if !(y >= 0.0) {
        return Err(Error::param(format!("age must be non-negative, got {y}")));
    }
    if k == 1.0 {
        return Ok(lambda);
    }
    if y == 0.0 {
        return if k > 1.0 {
            Ok(0.0)
        } else {
            Err(Error::param("infinite hazard at zero age for shape < 1"))
        };
    }
    let x = lambda * y;
    let log_ratio = (k - 1.0) * x.ln() - x - ln_gamma(k) - ln_gamma_q(k, x);
    Ok(lambda * log_ratio.exp())
}

/// Write a family as CSV, one θ per row.
pub fn write_family_csv<W: Write>(w: &mut W, models: &[Model]) -> io::Result<()> {
    writeln!(w, "theta,family,side,mu1,mu2,sigma1,sigma2,lambda1,lambda2,k1,k2")?;
    for (i, m) in models.iter().enumerate() {
        match m {
            Model::Uni(u) => writeln!(w, "{i},uni,,{},{},{},{},,,,", u.mu, u.mu, u.beta, u.beta)?,
            Model::Markov(r) => writeln!(
                w,
                "{i},markov,{},{},{},{},{},{},{},1,1",
                r.side.sign_label(),
                r.mu1,
                r.mu2,
                r.sigma1,
                r.sigma2,
                r.lambda1,
                r.lambda2
            )?,
            Model::SemiMarkov(s) => {
                let r = &s.regime;
                writeln!(
                    w,
                    "{i},semimarkov,{},{},{},{},{},{},{},{},{}",
                    r.side.sign_label(),
                    r.mu1,
                    r.mu2,
                    r.sigma1,
                    r.sigma2,
                    r.lambda1,
                    r.lambda2,
                    s.k1,
                    s.k2
                )?
            }
        }
    }
    Ok(())
}
