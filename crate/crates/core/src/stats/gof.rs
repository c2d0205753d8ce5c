use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::dist::{DistributionModel, Family};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GofKind {
    KolmogorovSmirnov,
    AndersonDarling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub kind: GofKind,
    /// KS distance `D` or AD statistic `A²`.
    pub statistic_raw: f64,
    /// `√n·D` for KS; equal to `A²` for AD.
    pub statistic_scaled: f64,
    pub n: usize,
    pub family: Option<Family>,
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("goodness-of-fit test needs at least one sample".into()));
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Data(format!("non-finite sample {x}")));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov distance against `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<GofReport> {
    let x = sorted_finite(samples)?;
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(GofReport {
        kind: GofKind::KolmogorovSmirnov,
        statistic_raw: d,
        statistic_scaled: n.sqrt() * d,
        n: x.len(),
        family: None,
    })
}

/// [`ks_test`] against a distribution model.
pub fn ks_test_model(samples: &[f64], model: &DistributionModel) -> Result<GofReport> {
    model.validate()?;
    let failure = std::cell::RefCell::new(None);
    let mut r = ks_test(samples, |x| {
        model.cdf(x).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    })?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    r.family = Some(model.family());
    Ok(r)
}

/// Anderson-Darling statistic against `cdf`.
pub fn ad_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<GofReport> {
    let x = sorted_finite(samples)?;
    let n = x.len();
    let f: Vec<f64> = x.iter().map(|&v| cdf(v)).collect();
    for (&point, &c) in x.iter().zip(&f) {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::TailSaturation { point, cdf: c });
        }
    }
    let mut s = 0.0;
    for i in 0..n {
        s += (2 * i + 1) as f64 * (f[i].ln() + (-f[n - 1 - i]).ln_1p());
    }
    let a2 = -(n as f64) - s / n as f64;
    Ok(GofReport { kind: GofKind::AndersonDarling, statistic_raw: a2, statistic_scaled: a2, n, family: None })
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let x = sorted_finite(a)?;
    let y = sorted_finite(b)?;
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Inclusive lower bounds of the pooled bins.
    pub bin_starts: Vec<u64>,
}

/// Pearson chi-square test of integer counts against Poisson(`lambda`).
///
/// Adjacent values are pooled left to right until each bin expects at least
/// five observations; the last bin absorbs the upper tail.
pub fn poisson_chi_square(values: &[u64], lambda: f64) -> Result<ChiSquareReport> {
    if values.is_empty() {
        return Err(Error::EmptyInput("chi-square test needs observations".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("Poisson mean must be positive, got {lambda}")));
    }
    let n = values.len() as f64;
    let ln_pmf = |k: u64| k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0);
    let kmax = (lambda + 40.0 * lambda.sqrt() + 40.0).ceil() as u64;
    let mut starts = Vec::new();
    let mut expected = Vec::new();
    let mut acc = 0.0;
    let mut start = 0;
    for k in 0..=kmax {
        acc += ln_pmf(k).exp();
        if acc * n >= 5.0 {
            starts.push(start);
            expected.push(acc);
            acc = 0.0;
            start = k + 1;
        }
    }
    // fold the remaining upper tail into the last bin
    let total: f64 = expected.iter().sum();
    match expected.last_mut() {
        Some(last) if starts.len() >= 2 => *last += 1.0 - total,
        _ => return Err(Error::InsufficientData(format!("{} observations cannot fill two bins", values.len()))),
    }
    let mut observed = vec![0.0; starts.len()];
    for &v in values {
        let bin = starts.partition_point(|&s| s <= v) - 1;
        observed[bin] += 1.0;
    }
    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, p)| {
            let e = p * n;
            (o - e) * (o - e) / e
        })
        .sum();
    let dof = starts.len() - 1;
    Ok(ChiSquareReport { statistic, dof, p_value: gamma_ur(dof as f64 / 2.0, statistic / 2.0), bin_starts: starts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_cases() {
        let cdf = |x: f64| DistributionModel::Gaussian { mean: 0.0, sd: 1.0 }.cdf(x).unwrap();
        let ks = ks_test(&[0.0], cdf).unwrap();
        assert_eq!(ks.statistic_raw, 0.5);
        let ad = ad_test(&[0.0], cdf).unwrap();
        assert!((ad.statistic_raw - (-1.0 + 2.0 * 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(ks_test(&[f64::NAN], |x| x), Err(Error::Data(_))));
        assert!(matches!(ks_test(&[], |x| x), Err(Error::EmptyInput(_))));
        let r = ad_test(&[0.5, 2.0], |x: f64| x.clamp(0.0, 1.0));
        assert!(matches!(r, Err(Error::TailSaturation { point, .. }) if point == 2.0));
    }

    #[test]
    fn two_sample_distance() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_square_bins_expect_five() {
        let v: Vec<u64> = (0..200).map(|i| 8 + (i % 5)).collect();
        let r = poisson_chi_square(&v, 10.0).unwrap();
        assert_eq!(r.dof + 1, r.bin_starts.len());
        assert!(r.p_value < 1e-6, "underdispersed data should be rejected: {r:?}");
    }
}
