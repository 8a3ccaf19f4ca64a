//! Summary statistics and deterministic CSV/text emission helpers.

use crate::num::Scalar;

/// Linear-interpolation quantile (the common "type 7" definition) over a
/// sorted slice. Returns `None` on empty input.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let q = q.clamp(0.0, 1.0);
    let h = T::c(q) * T::c((sorted.len() - 1) as f64);
    let lo = h.floor();
    let lo_idx = lo.to_f64().unwrap_or(0.0) as usize;
    let hi_idx = (lo_idx + 1).min(sorted.len() - 1);
    let frac = h - lo;
    Some(sorted[lo_idx] + frac * (sorted[hi_idx] - sorted[lo_idx]))
}

/// Sorts and takes a quantile.
pub fn quantile<T: Scalar>(values: &[T], q: f64) -> Option<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    quantile_sorted(&v, q)
}

/// Empirical CDF sample points: sorted values with cumulative probability
/// (i+1)/n.
pub fn cdf_samples<T: Scalar>(values: &[T]) -> Vec<(T, f64)> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    v.into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n as f64))
        .collect()
}

/// Minimal CSV writer: header plus preformatted rows, `\n` line endings.
pub struct CsvBuilder {
    buf: String,
}

impl CsvBuilder {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Fixed-precision float formatting shared by every CSV/report writer so
/// reruns stay byte-identical.
pub fn fmt_f(v: f64, decimals: usize) -> String {
    format!("{v:.decimals$}")
}

/// Bits to gigabytes (1 GB = 8e9 bits).
pub fn bits_to_gb(bits: f64) -> f64 {
    bits / 8e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_on_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert!((quantile(&v, 0.5).unwrap() - 50.5).abs() < 1e-12);
        assert!((quantile(&v, 0.9).unwrap() - 90.1).abs() < 1e-9);
    }

    #[test]
    fn quantile_single_value() {
        let v = vec![5.0];
        assert_eq!(quantile(&v, 0.5), Some(5.0));
        assert_eq!(quantile(&v, 0.9), Some(5.0));
    }

    #[test]
    fn quantile_empty() {
        let v: Vec<f64> = vec![];
        assert_eq!(quantile(&v, 0.5), None);
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let v = vec![3.0, 1.0, 2.0, 2.0];
        let cdf = cdf_samples(&v);
        assert_eq!(cdf.len(), 4);
        assert_eq!(cdf.last().unwrap().1, 1.0);
        for w in cdf.windows(2) {
            assert!(w[0].0 <= w[1].0);
            assert!(w[0].1 < w[1].1);
        }
    }

    #[test]
    fn csv_builder_layout() {
        let mut c = CsvBuilder::new("a,b");
        c.row(&["1".into(), "2".into()]);
        assert_eq!(c.finish(), "a,b\n1,2\n");
    }
}
