//! Tables rendered both as CSV and as aligned text.

use crate::diststats::TStat;
use crate::error::Result;
use crate::volatility::percentile;

/// Six significant digits, shortest form.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let s = rounded.to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// α-values with three decimals.
pub fn a3(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.3}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Right-aligned columns separated by two spaces.
    pub fn to_text(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, f) in width.iter_mut().zip(row) {
                *w = (*w).max(f.chars().count());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = row
                .iter()
                .zip(&width)
                .map(|(f, w)| format!("{f:>w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Five-number summary (min, q1, median, q3, max) using the ecdf-inverse
/// percentile, the same definition as the squeeze/expansion thresholds.
pub fn five_numbers(values: &[f64]) -> Result<[f64; 5]> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok([
        v[0],
        percentile(&v, 0.25)?,
        percentile(&v, 0.5)?,
        percentile(&v, 0.75)?,
        v[v.len() - 1],
    ])
}

pub fn tstat_cells(t: &TStat) -> Vec<String> {
    t.components().iter().map(|&x| sig6(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(sig6(0.0784), "0.0784");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(120.0), "120");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(f64::NAN), "NaN");
        assert_eq!(a3(0.385), "0.385");
        assert_eq!(a3(0.0), "0.000");
    }

    #[test]
    fn table_renders() {
        let mut t = Table::new(&["name", "x"]);
        t.push(vec!["a,b".into(), "1".into()]);
        t.push(vec!["long".into(), "22".into()]);
        assert_eq!(t.to_csv(), "name,x\n\"a,b\",1\nlong,22\n");
        assert_eq!(t.to_text(), "name   x\n a,b   1\nlong  22\n");
    }

    #[test]
    fn five_number_summary() {
        let v: Vec<f64> = (1..=8).rev().map(f64::from).collect();
        assert_eq!(five_numbers(&v).unwrap(), [1.0, 2.0, 4.0, 6.0, 8.0]);
    }
}
