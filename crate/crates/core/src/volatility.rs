//! Moving-window empirical drift and volatility, the empirical CDF and its
//! generalized inverse, and sojourn durations of volatility squeezes and
//! expansions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::timeseries::ReturnSeries;

/// Default moving window length.
pub const DEFAULT_WINDOW: usize = 20;

/// Which tail of the volatility distribution a duration series tracks.
///
/// `Squeeze` pairs with low-volatility-low-probability (A⁺) hypotheses and
/// `Expansion` with high-volatility-low-probability (A⁻) ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Squeeze,
    Expansion,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Squeeze, Side::Expansion];

    /// Short label used in reports: `plus` / `minus`.
    pub fn sign_label(self) -> &'static str {
        match self {
            Side::Squeeze => "plus",
            Side::Expansion => "minus",
        }
    }

    /// Regime class label: `LVLP` / `HVLP`.
    pub fn class_label(self) -> &'static str {
        match self {
            Side::Squeeze => "LVLP",
            Side::Expansion => "HVLP",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Squeeze => "squeeze",
            Side::Expansion => "expansion",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "squeeze" | "lvlp" | "+" => Ok(Side::Squeeze),
            "minus" | "expansion" | "hvlp" | "-" => Ok(Side::Expansion),
            _ => Err(Error::Config(format!("unknown side {s:?}"))),
        }
    }
}

/// Empirical drift μ̂ (per year) and volatility σ̂ (per √year) for `k = n..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolSeries {
    pub mu_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub window: usize,
    pub delta: f64,
}

impl VolSeries {
    pub fn len(&self) -> usize {
        self.sigma_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_hat.is_empty()
    }
}

/// Moving mean and standard deviation over windows of `window` returns.
///
/// `σ(k) = √( Σr²/(n−1) − n·m(k)²/(n−1) )`, clamped at zero when rounding
/// drives the radicand negative.
pub fn moving_stats(rhat: &ReturnSeries, window: usize) -> Result<VolSeries> {
    if window < 2 {
        return Err(Error::param(format!("window must be >= 2, got {window}")));
    }
    let r = rhat.r();
    if r.len() < window {
        return Err(Error::InsufficientData(format!(
            "{} returns is shorter than window {window}",
            r.len()
        )));
    }
    let delta = rhat.delta();
    let n = window as f64;
    let sqrt_delta = delta.sqrt();
    let len = r.len() - window + 1;
    let mut mu_hat = Vec::with_capacity(len);
    let mut sigma_hat = Vec::with_capacity(len);
    for w in r.windows(window) {
        let (s, ss) = w.iter().fold((0.0, 0.0), |(s, ss), x| (s + x, ss + x * x));
        let m = s / n;
        let radicand = ss / (n - 1.0) - n / (n - 1.0) * m * m;
        let sigma = if radicand > 0.0 { radicand.sqrt() } else { 0.0 };
        mu_hat.push(m / delta);
        sigma_hat.push(sigma / sqrt_delta);
    }
    Ok(VolSeries {
        mu_hat,
        sigma_hat,
        window,
        delta,
    })
}

/// Empirical CDF `F̂(x) = card{k : y_k ≤ x} / m`.
pub fn ecdf_eval(samples: &[f64], x: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("ecdf of an empty sample".into()));
    }
    let count = samples.iter().filter(|&&y| y <= x).count();
    Ok(count as f64 / samples.len() as f64)
}

/// 1-based rank `k` of the smallest order statistic with `k/m ≥ p`.
fn percentile_rank(m: usize, p: f64) -> usize {
    let mf = m as f64;
    let mut k = ((mf * p).ceil() as usize).clamp(1, m);
    while k > 1 && (k - 1) as f64 / mf >= p {
        k -= 1;
    }
    while k < m && (k as f64 / mf) < p {
        k += 1;
    }
    k
}

fn order_statistic(samples: &[f64], rank: usize) -> f64 {
    let mut buf = samples.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *v
}

/// Generalized inverse `inf{x : F̂(x) ≥ p}` for `p ∈ (0, 1)`.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("percentile level must lie in (0, 1), got {p}")));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData("percentile of an empty sample".into()));
    }
    Ok(order_statistic(samples, percentile_rank(samples.len(), p)))
}

/// Percentiles at integer percents `1..=100` (percent 100 is the maximum),
/// using exact integer rank arithmetic `k = ⌈m·q/100⌉`.
pub fn integer_percentiles(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("percentiles of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    Ok((1..=100)
        .map(|q| {
            let k = (m * q).div_ceil(100).max(1);
            sorted[k - 1]
        })
        .collect())
}

/// Completed sojourn durations (in steps) of a squeeze or expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationSeries {
    pub entries: Vec<usize>,
    pub side: Side,
    pub p: f64,
    /// Threshold in volatility units: the squeeze ceiling, or the expansion floor.
    pub threshold: f64,
}

impl DurationSeries {
    /// Number of completed durations L.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when no sojourn completed (L undefined).
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sojourn bounds `(a_i, b_i)` for `i = 1..=L` over the in-state indicator.
///
/// Positions are 0-based offsets from `a₀`. The run containing `a₀` and a
/// trailing run that never leaves the state are excluded.
pub fn sojourn_bounds(in_state: &[bool]) -> Vec<(usize, usize)> {
    let m = in_state.len();
    let first_from = |start: usize, want: bool| (start..m).find(|&k| in_state[k] == want);
    let mut out = Vec::new();
    let Some(mut b) = first_from(0, false) else {
        return out;
    };
    while let Some(a) = first_from(b, true) {
        match first_from(a, false) {
            Some(next_b) => {
                out.push((a, next_b));
                b = next_b;
            }
            None => break,
        }
    }
    out
}

/// Durations of `p`-squeezes (`σ̂ ≤ F̂⁻(p)`) or `p`-expansions, the latter
/// built by applying the squeeze construction to `−σ̂`.
pub fn durations(vol: &[f64], p: f64, side: Side) -> Result<DurationSeries> {
    if vol.is_empty() {
        return Err(Error::InsufficientData("durations of an empty series".into()));
    }
    let transformed: Vec<f64> = match side {
        Side::Squeeze => vol.to_vec(),
        Side::Expansion => vol.iter().map(|v| -v).collect(),
    };
    let cut = percentile(&transformed, p)?;
    let in_state: Vec<bool> = transformed.iter().map(|&v| v <= cut).collect();
    let entries = sojourn_bounds(&in_state)
        .into_iter()
        .map(|(a, b)| b - a)
        .collect();
    Ok(DurationSeries {
        entries,
        side,
        p,
        threshold: match side {
            Side::Squeeze => cut,
            Side::Expansion => -cut,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_percentile(samples: &[f64], p: f64) -> f64 {
        // Scan candidate points in increasing order for the first with F̂ ≥ p.
        let mut cands = samples.to_vec();
        cands.sort_by(f64::total_cmp);
        let m = samples.len() as f64;
        for &x in &cands {
            let f = samples.iter().filter(|&&y| y <= x).count() as f64 / m;
            if f >= p {
                return x;
            }
        }
        unreachable!()
    }

    #[test]
    fn moving_stats_examples() {
        let r = ReturnSeries::from_returns(vec![0.01; 30], 0.5);
        let v = moving_stats(&r, 20).unwrap();
        assert_eq!(v.len(), 11);
        assert!(v.sigma_hat.iter().all(|&s| s == 0.0));
        assert!(v.mu_hat.iter().all(|&m| (m - 0.02).abs() < 1e-15));

        let a = 0.3;
        let r = ReturnSeries::from_returns(vec![a, -a], 1.0);
        let v = moving_stats(&r, 2).unwrap();
        assert_eq!(v.mu_hat, vec![0.0]);
        assert!((v.sigma_hat[0] - a * 2f64.sqrt()).abs() < 1e-15);

        assert!(moving_stats(&r, 3).is_err());
        assert!(moving_stats(&r, 1).is_err());
    }

    #[test]
    fn ecdf_examples() {
        let s = [1.0, 2.0, 3.0];
        assert!((ecdf_eval(&s, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ecdf_eval(&s, 0.5).unwrap(), 0.0);
        assert_eq!(ecdf_eval(&s, 3.0).unwrap(), 1.0);
        assert!(ecdf_eval(&[], 1.0).is_err());
    }

    #[test]
    fn percentile_examples() {
        let s = [3.0, 1.0, 2.0];
        assert_eq!(percentile(&s, 1.0 / 3.0).unwrap(), 1.0);
        assert_eq!(percentile(&s, 0.5).unwrap(), 2.0);
        assert!(percentile(&s, 0.0).is_err());
        assert!(percentile(&s, 1.0).is_err());
    }

    #[test]
    fn integer_percentiles_agree_with_percentile() {
        let s: Vec<f64> = (0..137).map(|i| ((i * 37) % 101) as f64 * 0.5).collect();
        let table = integer_percentiles(&s).unwrap();
        for q in 1..100 {
            assert_eq!(table[q - 1], brute_percentile(&s, q as f64 / 100.0), "q={q}");
        }
        assert_eq!(table[99], 50.0);
    }

    #[test]
    fn duration_worked_example() {
        let vol = [1.0, 5.0, 1.0, 1.0, 5.0, 5.0, 1.0, 5.0];
        let inside: Vec<bool> = vol.iter().map(|&v| v <= 2.0).collect();
        assert_eq!(sojourn_bounds(&inside), vec![(2, 4), (6, 7)]);
        // p = 0.5 puts the percentile at 1.0, the same partition as threshold 2.
        let d = durations(&vol, 0.5, Side::Squeeze).unwrap();
        assert_eq!(d.entries, vec![2, 1]);
        assert_eq!(d.threshold, 1.0);
    }

    #[test]
    fn all_in_state_gives_empty() {
        assert!(sojourn_bounds(&[true; 10]).is_empty());
        let d = durations(&[1.0; 10], 0.5, Side::Squeeze).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn alternating_gives_unit_durations() {
        let inside: Vec<bool> = (0..21).map(|i| i % 2 == 1).collect();
        let b = sojourn_bounds(&inside);
        assert!(b.iter().all(|(a, b)| b - a == 1));
        assert_eq!(b.len(), 10);
    }

    #[test]
    fn expansion_uses_upper_tail() {
        let vol = [5.0, 1.0, 5.0, 5.0, 1.0, 1.0, 5.0, 1.0];
        let d = durations(&vol, 0.5, Side::Expansion).unwrap();
        assert_eq!(d.entries, vec![2, 1]);
        assert_eq!(d.threshold, 5.0);
    }

    proptest! {
        #[test]
        fn percentile_matches_scan(s in prop::collection::vec(-100i32..100, 1..200), p in 0.001f64..0.999) {
            let s: Vec<f64> = s.into_iter().map(f64::from).collect();
            let got = percentile(&s, p).unwrap();
            prop_assert_eq!(got, brute_percentile(&s, p));
            prop_assert!(s.contains(&got));
        }

        #[test]
        fn reflection_in_ecdf_gaps(s in prop::collection::vec(-50i32..50, 1..80), u in 0.01f64..0.99, gap in 0usize..1000) {
            let s: Vec<f64> = s.into_iter().map(f64::from).collect();
            let m = s.len();
            let i = gap % m + 1;
            let p = (i as f64 - 1.0 + u) / m as f64;
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert_eq!(-percentile(&neg, p).unwrap(), percentile(&s, 1.0 - p).unwrap());
        }

        #[test]
        fn ecdf_monotone(s in prop::collection::vec(-10.0f64..10.0, 1..50), x in -12.0f64..12.0, dx in 0.0f64..5.0) {
            let a = ecdf_eval(&s, x).unwrap();
            let b = ecdf_eval(&s, x + dx).unwrap();
            prop_assert!(a <= b);
            let scaled = a * s.len() as f64;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }

        #[test]
        fn durations_bounded_by_in_state_count(v in prop::collection::vec(0.0f64..1.0, 1..300), p in 0.05f64..0.95) {
            for side in Side::BOTH {
                let d = durations(&v, p, side).unwrap();
                let count = v.iter().filter(|&&x| match side {
                    Side::Squeeze => x <= d.threshold,
                    Side::Expansion => x >= d.threshold,
                }).count();
                prop_assert!(d.entries.iter().sum::<usize>() <= count);
                prop_assert!(d.entries.iter().all(|&e| e >= 1));
            }
        }
    }
}
