//! Equispaced price series, simple returns and their summary moments.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Arithmetic mean with compensated accumulation. Returns NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation with `len - 1` denominator; zero for fewer than two values.
pub fn sample_sd(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Strictly positive, equispaced prices `S(0..=N)` with step `delta` in years.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    values: Vec<f64>,
    delta: f64,
    label: String,
}

impl PriceSeries {
    pub fn new(values: Vec<f64>, delta: f64, label: impl Into<String>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param(format!("delta must be positive, got {delta}")));
        }
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 prices, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("price must be positive and finite, got {v}"),
            });
        }
        Ok(Self {
            values,
            delta,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of steps N (one less than the number of prices).
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// Parse price CSV text: one record per line, price in the last comma-separated
/// field, `#` comment lines and blank lines skipped. A header line whose last
/// field is not numeric is tolerated only as the first record.
pub fn parse_prices(text: &str, delta: f64, label: &str) -> Result<PriceSeries> {
    let mut values = Vec::new();
    let mut seen_record = false;
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Parse {
                        row,
                        message: format!("price must be positive, got {field}"),
                    });
                }
                values.push(v);
            }
            Err(_) if !seen_record => {}
            Err(_) => {
                return Err(Error::Parse {
                    row,
                    message: format!("cannot parse price {field:?}"),
                })
            }
        }
        seen_record = true;
    }
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{label}: need at least 2 prices, got {}",
            values.len()
        )));
    }
    PriceSeries::new(values, delta, label)
}

/// Load a price file. `delta` comes from configuration and is never inferred
/// from timestamps.
pub fn load_prices(path: &Path, delta: f64) -> Result<PriceSeries> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_prices(&text, delta, &label).map_err(|e| match e {
        Error::Parse { row, message } => Error::Parse {
            row,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Simple returns `r(1..=N)` with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    r: Vec<f64>,
    rbar: f64,
    sd: f64,
    delta: f64,
}

impl ReturnSeries {
    /// Build from raw returns, computing `rbar` and `sd`.
    pub fn from_returns(r: Vec<f64>, delta: f64) -> Self {
        let rbar = mean(&r);
        let sd = sample_sd(&r, rbar);
        Self { r, rbar, sd, delta }
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn rbar(&self) -> f64 {
        self.rbar
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// `r(i) = (S(i) - S(i-1)) / S(i-1)`.
pub fn simple_returns(s: &PriceSeries) -> ReturnSeries {
    returns_from_prices(s.values(), s.delta())
}

pub(crate) fn returns_from_prices(prices: &[f64], delta: f64) -> ReturnSeries {
    let r = prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    ReturnSeries::from_returns(r, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_rows_in_order() {
        let s = parse_prices("100\n101\n99", 0.001, "x").unwrap();
        assert_eq!(s.values(), &[100.0, 101.0, 99.0]);
        assert_eq!(s.delta(), 0.001);
    }

    #[test]
    fn timestamps_header_and_comments() {
        let text = "# comment\ntime,price\n2017-01-01 09:15,100\n2017-01-01 09:20, 102.5\n";
        let s = parse_prices(text, 0.5, "x").unwrap();
        assert_eq!(s.values(), &[100.0, 102.5]);
    }

    #[test]
    fn rejects_negative_price_with_row() {
        match parse_prices("-5\n3\n", 0.1, "x") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_prices("1\n2\n0\n", 0.1, "x") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_single_row() {
        assert!(matches!(
            parse_prices("100\n", 0.1, "x"),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn rejects_garbage_after_first_record() {
        assert!(matches!(
            parse_prices("1\nabc\n2\n", 0.1, "x"),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn returns_worked_examples() {
        let r = simple_returns(&PriceSeries::new(vec![100.0, 110.0], 1.0, "").unwrap());
        assert!((r.r()[0] - 0.1).abs() < 1e-15);
        assert!((r.rbar() - 0.1).abs() < 1e-15);

        let r = simple_returns(&PriceSeries::new(vec![7.0; 3], 1.0, "").unwrap());
        assert_eq!(r.r(), &[0.0, 0.0]);
        assert_eq!((r.rbar(), r.sd()), (0.0, 0.0));

        let r = simple_returns(&PriceSeries::new(vec![1.0, 2.0, 1.0], 1.0, "").unwrap());
        assert_eq!(r.r(), &[1.0, -0.5]);
        assert_eq!(r.rbar(), 0.25);
        assert!((r.sd() - (2.0_f64 * 0.75 * 0.75).sqrt()).abs() < 1e-15);
        assert!((r.sd() - 1.06066).abs() < 1e-5);
    }

    #[test]
    fn mean_is_accurate_over_long_series() {
        // ±2^40 interleaved with small dyadic values: a naive running sum
        // rounds the small terms away, the exact sum is an integer multiple of 2^-20.
        let big = 2f64.powi(40);
        let n = 100_000;
        let mut v = Vec::with_capacity(n);
        let mut exact: i128 = 0;
        for i in 0..n / 2 {
            let t = (i % 1000) as i128 + 1;
            v.push(if i % 2 == 0 { big } else { -big });
            v.push(t as f64 * 2f64.powi(-20));
            exact += t;
        }
        let want = exact as f64 * 2f64.powi(-20) / n as f64;
        let m = mean(&v);
        assert!((m - want).abs() / want < 1e-12, "mean {m} want {want}");
    }

    proptest! {
        #[test]
        fn scale_invariant(prices in prop::collection::vec(0.5f64..2.0, 2..60), c in 0.01f64..100.0) {
            let a = simple_returns(&PriceSeries::new(prices.clone(), 1.0, "").unwrap());
            let scaled: Vec<f64> = prices.iter().map(|p| p * c).collect();
            let b = simple_returns(&PriceSeries::new(scaled, 1.0, "").unwrap());
            for (x, y) in a.r().iter().zip(b.r()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn reconstructs_prices(prices in prop::collection::vec(0.5f64..2.0, 2..200)) {
            let r = simple_returns(&PriceSeries::new(prices.clone(), 1.0, "").unwrap());
            let mut s = prices[0];
            for (i, ri) in r.r().iter().enumerate() {
                s *= 1.0 + ri;
                prop_assert!((s - prices[i + 1]).abs() <= 1e-10 * prices[i + 1]);
            }
            prop_assert_eq!(r.len(), prices.len() - 1);
            prop_assert!(r.sd() >= 0.0);
        }
    }
}
