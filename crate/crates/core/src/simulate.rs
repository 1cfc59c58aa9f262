//! Discrete-time path generators with a replicable randomness contract.
//!
//! Every path draws from ChaCha8 streams keyed by the master seed and a lane
//! (diffusion, switching, jumps, initial state) and selected by a stream id
//! built from the (θ index, attempt, replicate index) triple. Streams for
//! distinct triples never overlap, so tasks can run in any order or thread.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::regimes::{gamma_hazard, MarkovRegimeParams, SemiMarkovRegimeParams, UniRegimeParams};

const LANE_DIFFUSION: u64 = 0;
const LANE_SWITCH: u64 = 1;
const LANE_JUMP: u64 = 2;
const LANE_INITIAL: u64 = 3;

/// Above this switch probability per step the Bernoulli discretization is coarse.
pub const COARSE_SWITCH_PROB: f64 = 0.1;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    /// Must be below 2²⁴.
    pub theta_index: u64,
    /// Must be below 2³².
    pub replicate_index: u64,
    /// Regeneration attempt for a replicate slot.
    pub attempt: u8,
}

impl SeedSpec {
    pub fn new(master_seed: u64, theta_index: u64, replicate_index: u64) -> Self {
        Self {
            master_seed,
            theta_index,
            replicate_index,
            attempt: 0,
        }
    }

    pub fn with_attempt(self, attempt: u8) -> Self {
        Self { attempt, ..self }
    }

    fn stream_id(&self) -> u64 {
        debug_assert!(self.theta_index < 1 << 24);
        debug_assert!(self.replicate_index < 1 << 32);
        (self.theta_index << 40) | (u64::from(self.attempt) << 32) | self.replicate_index
    }

    /// Generator for one lane of this stream.
    pub fn rng(&self, lane: u64) -> ChaCha8Rng {
        let k0 = splitmix64(self.master_seed ^ splitmix64(lane));
        let mut key = [0u8; 32];
        let mut s = k0;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id());
        rng
    }
}

/// How the initial regime X₀ is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialRegime {
    /// State 1 with probability equal to its long-run fraction.
    #[default]
    Stationary,
    Fixed(u8),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub step: usize,
    pub size: f64,
}

/// A simulated price path on the grid `t₀ < … < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub prices: Vec<f64>,
    /// Regime X_i in {1, 2}, when the model has regimes.
    pub regimes: Option<Vec<u8>>,
    /// Age Y_i since the last switch in years (semi-Markov only).
    pub ages: Option<Vec<f64>>,
    /// Realized jumps (jump-diffusion only); `step` is the 0-based step index.
    pub jumps: Vec<JumpEvent>,
    pub delta: f64,
}

impl SimPath {
    pub fn n_steps(&self) -> usize {
        self.prices.len() - 1
    }

    /// Dump as CSV with columns `step,regime,age,price`. Price comes last so
    /// the file loads as a price series.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "step,regime,age,price")?;
        for (i, p) in self.prices.iter().enumerate() {
            let regime = self
                .regimes
                .as_ref()
                .map(|r| r[i].to_string())
                .unwrap_or_default();
            let age = self.ages.as_ref().map(|a| a[i].to_string()).unwrap_or_default();
            writeln!(w, "{i},{regime},{age},{p}")?;
        }
        Ok(())
    }
}

fn check_common(n_steps: usize, delta: f64, s0: f64) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::param("n_steps must be positive"));
    }
    if !(delta > 0.0) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    if !(s0 > 0.0) {
        return Err(Error::param(format!("s0 must be positive, got {s0}")));
    }
    Ok(())
}

fn gaussian_step(rng: &mut ChaCha8Rng, sqrt_delta: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sqrt_delta
}

/// `S_{i+1} = S_i·exp((μ − β²/2)Δ + β·Z_i)` with `Z_i ~ N(0, Δ)`.
pub fn simulate_gbm(
    params: &UniRegimeParams,
    n_steps: usize,
    delta: f64,
    s0: f64,
    seed: SeedSpec,
) -> Result<SimPath> {
    check_common(n_steps, delta, s0)?;
    let mut rng = seed.rng(LANE_DIFFUSION);
    let drift = (params.mu - 0.5 * params.beta * params.beta) * delta;
    let sqrt_delta = delta.sqrt();
    let mut prices = Vec::with_capacity(n_steps + 1);
    let mut s = s0;
    prices.push(s);
    for _ in 0..n_steps {
        s *= (drift + params.beta * gaussian_step(&mut rng, sqrt_delta)).exp();
        prices.push(s);
    }
    Ok(SimPath {
        prices,
        regimes: None,
        ages: None,
        jumps: Vec::new(),
        delta,
    })
}

/// Validates `λ_max·Δ < 1`; returns a warning when it exceeds 0.1.
pub fn check_switch_rates(max_rate: f64, delta: f64) -> Result<Option<String>> {
    let q = max_rate * delta;
    if q >= 1.0 {
        return Err(Error::param(format!(
            "switch probability per step {q} >= 1; reduce delta or the rates"
        )));
    }
    Ok((q > COARSE_SWITCH_PROB).then(|| {
        format!("switch probability per step {q:.3} exceeds {COARSE_SWITCH_PROB}; discretization is coarse")
    }))
}

fn initial_state(init: InitialRegime, fraction1: f64, seed: &SeedSpec) -> Result<u8> {
    match init {
        InitialRegime::Fixed(x @ (1 | 2)) => Ok(x),
        InitialRegime::Fixed(x) => Err(Error::param(format!("initial regime must be 1 or 2, got {x}"))),
        InitialRegime::Stationary => {
            let u: f64 = seed.rng(LANE_INITIAL).random();
            Ok(if u < fraction1 { 1 } else { 2 })
        }
    }
}

// Regime-modulated GBM driven by a per-step switch probability.
#[allow(clippy::too_many_arguments)]
fn regime_path(
    regime: &MarkovRegimeParams,
    n_steps: usize,
    delta: f64,
    s0: f64,
    x0: u8,
    seed: SeedSpec,
    mut switch_prob: impl FnMut(u8, u64) -> f64,
    track_age: bool,
) -> SimPath {
    let mut diffusion = seed.rng(LANE_DIFFUSION);
    let mut switching = seed.rng(LANE_SWITCH);
    let sqrt_delta = delta.sqrt();
    let coef = |x: u8| {
        let sigma = regime.sigma(x);
        ((regime.mu(x) - 0.5 * sigma * sigma) * delta, sigma)
    };
    let coefs = [coef(1), coef(2)];

    let mut prices = Vec::with_capacity(n_steps + 1);
    let mut regimes = Vec::with_capacity(n_steps + 1);
    let mut ages = Vec::with_capacity(if track_age { n_steps + 1 } else { 0 });
    let mut s = s0;
    let mut x = x0;
    let mut age_steps: u64 = 0;
    prices.push(s);
    regimes.push(x);
    if track_age {
        ages.push(0.0);
    }
    for _ in 0..n_steps {
        let (drift, sigma) = coefs[usize::from(x - 1)];
        s *= (drift + sigma * gaussian_step(&mut diffusion, sqrt_delta)).exp();
        let u: f64 = switching.random();
        if u < switch_prob(x, age_steps) {
            x = 3 - x;
            age_steps = 0;
        } else {
            age_steps += 1;
        }
        prices.push(s);
        regimes.push(x);
        if track_age {
            ages.push(age_steps as f64 * delta);
        }
    }
    SimPath {
        prices,
        regimes: Some(regimes),
        ages: track_age.then_some(ages),
        jumps: Vec::new(),
        delta,
    }
}

/// Markov-modulated GBM; `P_i ~ Bernoulli(λ_{X_i}Δ)` flips the state.
pub fn simulate_markov_glp(
    params: &MarkovRegimeParams,
    n_steps: usize,
    delta: f64,
    s0: f64,
    x0: InitialRegime,
    seed: SeedSpec,
) -> Result<SimPath> {
    check_common(n_steps, delta, s0)?;
    if !(params.lambda1 >= 0.0 && params.lambda2 >= 0.0) {
        return Err(Error::param("switch rates must be non-negative"));
    }
    check_switch_rates(params.lambda1.max(params.lambda2), delta)?;
    let total = params.lambda1 + params.lambda2;
    let fraction1 = if total > 0.0 { params.lambda2 / total } else { 0.5 };
    let x = initial_state(x0, fraction1, &seed)?;
    let q = [params.lambda1 * delta, params.lambda2 * delta];
    Ok(regime_path(
        params,
        n_steps,
        delta,
        s0,
        x,
        seed,
        |x, _| q[usize::from(x - 1)],
        false,
    ))
}

/// Per-age switch probabilities `min(λ(y)Δ, 1)`, filled on demand.
///
/// Age is measured in whole steps; the hazard at age 0 is taken at `Δ/2`
/// when it is infinite (shape below 1).
#[derive(Debug, Clone)]
pub struct HazardTable {
    k: f64,
    lambda: f64,
    delta: f64,
    probs: Vec<f64>,
}

impl HazardTable {
    pub fn new(k: f64, lambda: f64, delta: f64) -> Result<Self> {
        gamma_hazard(1.0, k, lambda)?;
        Ok(Self {
            k,
            lambda,
            delta,
            probs: Vec::new(),
        })
    }

    pub fn prob(&mut self, age_steps: u64) -> f64 {
        let idx = age_steps as usize;
        while self.probs.len() <= idx {
            let j = self.probs.len();
            let y = if j == 0 && self.k < 1.0 {
                0.5 * self.delta
            } else {
                j as f64 * self.delta
            };
            let h = gamma_hazard(y, self.k, self.lambda).expect("validated at construction");
            self.probs.push((h * self.delta).min(1.0));
        }
        self.probs[idx]
    }
}

/// Semi-Markov-modulated GBM with gamma sojourns, discretized by Bernoulli
/// thinning of the age-dependent hazard; `Y_{i+1} = (Y_i + Δ)(1 − P_i)`.
pub fn simulate_semimarkov_glp(
    params: &SemiMarkovRegimeParams,
    n_steps: usize,
    delta: f64,
    s0: f64,
    x0: InitialRegime,
    seed: SeedSpec,
) -> Result<SimPath> {
    check_common(n_steps, delta, s0)?;
    let r = &params.regime;
    let mut tables = [
        HazardTable::new(params.k1, r.lambda1, delta)?,
        HazardTable::new(params.k2, r.lambda2, delta)?,
    ];
    let e1 = params.k1 / r.lambda1;
    let e2 = params.k2 / r.lambda2;
    let x = initial_state(x0, e1 / (e1 + e2), &seed)?;
    Ok(regime_path(
        r,
        n_steps,
        delta,
        s0,
        x,
        seed,
        |x, age| tables[usize::from(x - 1)].prob(age),
        true,
    ))
}

/// GBM with compound-Poisson jumps of mean zero and variance `v`.
///
/// Jump sizes are `ξ = e^Z − 1`, `Z ~ N(−s²/2, s²)`, `s² = ln(1 + v)`.
pub fn simulate_jump_diffusion(
    params: &UniRegimeParams,
    lambda: f64,
    v: f64,
    n_steps: usize,
    delta: f64,
    s0: f64,
    seed: SeedSpec,
) -> Result<SimPath> {
    if !(lambda >= 0.0 && v >= 0.0) {
        return Err(Error::param(format!("lambda and v must be non-negative ({lambda}, {v})")));
    }
    let mut path = simulate_gbm(params, n_steps, delta, s0, seed)?;
    let rate = lambda * delta;
    if rate == 0.0 {
        return Ok(path);
    }
    let mut rng = seed.rng(LANE_JUMP);
    let s = (1.0 + v).ln().sqrt();
    let poisson = if rate > 0.01 {
        Some(Poisson::new(rate).map_err(|e| Error::param(e.to_string()))?)
    } else {
        None
    };
    // Price at t_{i+1} carries every multiplicative factor up to step i.
    let mut factor = 1.0;
    for i in 0..n_steps {
        let count = match &poisson {
            Some(dist) => dist.sample(&mut rng) as usize,
            None => usize::from(rng.random::<f64>() < rate),
        };
        for _ in 0..count {
            let z: f64 = StandardNormal.sample(&mut rng);
            let size = (-0.5 * s * s + s * z).exp() - 1.0;
            factor *= 1.0 + size;
            path.jumps.push(JumpEvent { step: i, size });
        }
        path.prices[i + 1] *= factor;
    }
    Ok(path)
}
