use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Complementary CDF `P(X ≥ v)` at each distinct sample value, ascending.
pub fn ccdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("ccdf of an empty sample".into()));
    }
    if let Some(x) = samples.iter().find(|x| x.is_nan()) {
        return Err(Error::Data(format!("sample {x} is not a number")));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        out.push((v[i], (v.len() - i) as f64 / n));
        let x = v[i];
        while i < v.len() && v[i] == x {
            i += 1;
        }
    }
    Ok(out)
}

/// Empirical pmf of integer values as `(value, probability)` pairs.
pub fn degree_pmf(values: &[u64]) -> Vec<(u64, f64)> {
    let mut counts = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    let n = values.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBin {
    pub lo: f64,
    pub hi: f64,
    /// Geometric center `√(lo·hi)`.
    pub center: f64,
    pub count: usize,
    /// `count / (n · (hi - lo))`.
    pub density: f64,
}

/// Histogram on edges `10^(k/bins_per_decade)`, normalized to unit mass.
/// Empty bins are omitted.
pub fn log_bin(samples: &[f64], bins_per_decade: usize) -> Result<Vec<LogBin>> {
    if bins_per_decade == 0 {
        return Err(Error::InvalidConfig("bins_per_decade must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("log_bin of an empty sample".into()));
    }
    if let Some(x) = samples.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("log binning needs positive finite samples, found {x}")));
    }
    let per = bins_per_decade as f64;
    let index = |x: f64| -> i64 {
        let mut k = (x.log10() * per).floor() as i64;
        // guard against log10 rounding at exact edges
        if edge(k + 1, per) <= x {
            k += 1;
        } else if edge(k, per) > x {
            k -= 1;
        }
        k
    };
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &x in samples {
        *counts.entry(index(x)).or_insert(0) += 1;
    }
    let n = samples.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(k, count)| {
            let (lo, hi) = (edge(k, per), edge(k + 1, per));
            LogBin { lo, hi, center: (lo * hi).sqrt(), count, density: count as f64 / (n * (hi - lo)) }
        })
        .collect())
}

fn edge(k: i64, per: f64) -> f64 {
    10f64.powf(k as f64 / per)
}
