//! The four-component duration statistic T and folded-rank α-values.

use crate::error::{Error, Result};
use crate::volatility::DurationSeries;

/// Number of statistic components used in tests.
pub const R_MAX: usize = 4;

/// Mean, standard deviation, skewness and kurtosis of a duration series.
///
/// Components past `defined_up_to` are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TStat {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    /// 1 when L = 1, 2 when the standard deviation is zero, else 4.
    pub defined_up_to: usize,
}

impl TStat {
    pub fn components(&self) -> [f64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }

    /// Component `j` in `1..=4`.
    pub fn get(&self, j: usize) -> f64 {
        self.components()[j - 1]
    }
}

/// T from raw durations.
pub fn t_statistics_from(d: &[usize]) -> Result<TStat> {
    let l = d.len();
    if l == 0 {
        return Err(Error::InsufficientDurations("no completed durations".into()));
    }
    let lf = l as f64;
    let t1 = d.iter().map(|&x| x as f64).sum::<f64>() / lf;
    if l == 1 {
        return Ok(TStat {
            t1,
            t2: f64::NAN,
            t3: f64::NAN,
            t4: f64::NAN,
            defined_up_to: 1,
        });
    }
    let (m2, m3, m4) = d.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &x| {
        let e = x as f64 - t1;
        let e2 = e * e;
        (a + e2, b + e2 * e, c + e2 * e2)
    });
    let t2 = (m2 / (lf - 1.0)).sqrt();
    if t2 == 0.0 {
        return Ok(TStat {
            t1,
            t2,
            t3: f64::NAN,
            t4: f64::NAN,
            defined_up_to: 2,
        });
    }
    Ok(TStat {
        t1,
        t2,
        t3: m3 / lf / t2.powi(3),
        t4: m4 / lf / t2.powi(4),
        defined_up_to: 4,
    })
}

pub fn t_statistics(d: &DurationSeries) -> Result<TStat> {
    t_statistics_from(&d.entries)
}

/// Folded rank `max(min(x, B − x) / B, 0)`.
pub fn g_b(x: usize, b: usize) -> f64 {
    let x = x.min(b);
    (x.min(b - x) as f64 / b as f64).max(0.0)
}

/// Per-component counts `card{i : t*_j ≥ t^i_j}` for `j = 1..=r`.
pub fn rank_counts(t_star: &TStat, samples: &[TStat], r: usize) -> Vec<usize> {
    (1..=r)
        .map(|j| {
            let tj = t_star.get(j);
            samples.iter().filter(|s| tj >= s.get(j)).count()
        })
        .collect()
}

/// `α_r = min_{j ≤ r} g_B(count_j)` given per-component counts.
pub fn alpha_from_counts(counts: &[usize], b: usize, r: usize) -> f64 {
    counts[..r]
        .iter()
        .map(|&c| g_b(c, b))
        .fold(f64::INFINITY, f64::min)
}

/// α-value of one model against its `B` surrogate statistics.
pub fn alpha_theta(t_star: &TStat, samples: &[TStat], r: usize) -> Result<f64> {
    if !(1..=R_MAX).contains(&r) {
        return Err(Error::param(format!("r must lie in 1..=4, got {r}")));
    }
    if samples.is_empty() {
        return Err(Error::param("no surrogate samples"));
    }
    if t_star.defined_up_to < r || samples.iter().any(|s| s.defined_up_to < r) {
        return Err(Error::param(format!("statistic undefined up to component {r}")));
    }
    Ok(alpha_from_counts(&rank_counts(t_star, samples, r), samples.len(), r))
}

/// Composite α (max over models) and its rejection confidence in percent.
pub fn alpha_composite<I: IntoIterator<Item = f64>>(per_theta: I) -> Result<(f64, f64)> {
    let best = per_theta
        .into_iter()
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.max(a))))
        .ok_or_else(|| Error::EmptyFamily("no α values to combine".into()))?;
    Ok((best, confidence(best)))
}

/// Rejection confidence `100(1 − 2α)` in percent.
pub fn confidence(alpha: f64) -> f64 {
    100.0 * (1.0 - 2.0 * alpha)
}
