//! Log-log scaling estimators: size-variance (`σ(g) ∝ W^-β`) and
//! strength-degree (`W ∝ K^θ`).

use crate::error::{Error, Result};

/// Ordinary least squares fit `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ols {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<Ols> {
    if x.len() != y.len() {
        return Err(Error::Data(format!("regression inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData("regression needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::NoVariation("regressor is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Ols { slope, intercept, stderr })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingBin {
    /// Bin coordinate on the size axis (geometric mean of the entities).
    pub x: f64,
    /// σ(g) for size-variance; mean W for strength-degree.
    pub y: f64,
    /// Standard deviation of W within the bin (strength-degree only; 0 otherwise).
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// β for size-variance, θ for strength-degree.
    pub exponent: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub bins: Vec<ScalingBin>,
    /// Binning scheme used.
    pub binning: String,
    /// Size range of the entities entering the fit.
    pub range: (f64, f64),
    pub n_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// Bins of equal width in log W.
    LogWidth,
    /// Bins of equal population (deciles for 10 bins).
    Quantile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeVarianceOptions {
    pub n_bins: usize,
    pub binning: Binning,
    /// Central fraction of entities (by W) retained before binning.
    pub central: f64,
    /// Half-open range of bin indices entering the regression; all bins when `None`.
    pub fit_bins: Option<(usize, usize)>,
}

impl Default for SizeVarianceOptions {
    fn default() -> Self {
        Self { n_bins: 20, binning: Binning::LogWidth, central: 0.9, fit_bins: None }
    }
}

/// Estimates β in `σ(g) ∝ W^-β` by regressing the log of the per-bin standard
/// deviation of growth rates on the log of the bin's size.
pub fn fit_size_variance(initial: &[f64], growth: &[f64], opts: &SizeVarianceOptions) -> Result<ScalingFit> {
    if initial.len() != growth.len() {
        return Err(Error::Data(format!("{} strengths but {} growth rates", initial.len(), growth.len())));
    }
    if opts.n_bins < 2 {
        return Err(Error::InvalidConfig("size-variance fit needs at least two bins".into()));
    }
    if !(opts.central > 0.0 && opts.central <= 1.0) {
        return Err(Error::InvalidConfig(format!("central fraction must lie in (0, 1], got {}", opts.central)));
    }
    let n = initial.len();
    if n < 10 * opts.n_bins {
        return Err(Error::InsufficientData(format!("{n} entities for {} bins; need at least {}", opts.n_bins, 10 * opts.n_bins)));
    }
    if let Some(w) = initial.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::Domain(format!("strengths must be positive, found {w}")));
    }
    if let Some(g) = growth.iter().find(|g| !g.is_finite()) {
        return Err(Error::Data(format!("non-finite growth rate {g}")));
    }

    let mut pairs: Vec<(f64, f64)> = initial.iter().copied().zip(growth.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let drop = ((1.0 - opts.central) / 2.0 * n as f64).floor() as usize;
    let kept = &pairs[drop..n - drop];
    let (wlo, whi) = (kept[0].0, kept[kept.len() - 1].0);

    let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); opts.n_bins];
    match opts.binning {
        Binning::LogWidth => {
            if wlo == whi {
                return Err(Error::NoVariation("all retained strengths are equal".into()));
            }
            let (llo, lhi) = (wlo.ln(), whi.ln());
            for &p in kept {
                let f = (p.0.ln() - llo) / (lhi - llo);
                let b = ((f * opts.n_bins as f64) as usize).min(opts.n_bins - 1);
                groups[b].push(p);
            }
        }
        Binning::Quantile => {
            for (i, &p) in kept.iter().enumerate() {
                groups[i * opts.n_bins / kept.len()].push(p);
            }
        }
    }

    let mut bins = Vec::with_capacity(opts.n_bins);
    for (b, g) in groups.iter().enumerate() {
        if g.len() < 3 {
            return Err(Error::SparseBin { bin: b, count: g.len() });
        }
        let m = g.len() as f64;
        let mean_ln_w = g.iter().map(|p| p.0.ln()).sum::<f64>() / m;
        let mean_g = g.iter().map(|p| p.1).sum::<f64>() / m;
        let var = g.iter().map(|p| (p.1 - mean_g).powi(2)).sum::<f64>() / (m - 1.0);
        bins.push(ScalingBin { x: mean_ln_w.exp(), y: var.sqrt(), sd: 0.0, count: g.len() });
    }

    let (from, to) = opts.fit_bins.unwrap_or((0, bins.len()));
    if from >= to || to > bins.len() || to - from < 2 {
        return Err(Error::InvalidConfig(format!("fit bins {from}..{to} invalid for {} bins", bins.len())));
    }
    let used = &bins[from..to];
    if let Some(b) = used.iter().find(|b| b.y <= 0.0) {
        return Err(Error::NoVariation(format!("growth rates do not vary in the bin at W = {}", b.x)));
    }
    let lx: Vec<f64> = used.iter().map(|b| b.x.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|b| b.y.ln()).collect();
    let fit = ols(&lx, &ly)?;
    let range = (
        groups[from].first().map_or(wlo, |p| p.0),
        groups[to - 1].last().map_or(whi, |p| p.0),
    );
    let binning = match opts.binning {
        Binning::LogWidth => format!("{} log-width bins over central {:.0}%", opts.n_bins, opts.central * 100.0),
        Binning::Quantile => format!("{} quantile bins over central {:.0}%", opts.n_bins, opts.central * 100.0),
    };
    Ok(ScalingFit {
        exponent: -fit.slope,
        intercept: fit.intercept,
        stderr: fit.stderr,
        bins,
        binning: format!("{binning}; fitted bins {from}..{to}"),
        range,
        n_used: groups[from..to].iter().map(Vec::len).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthDegreeOptions {
    /// Inclusive degree range used in the regression.
    pub k_range: Option<(f64, f64)>,
    /// Log-K bins per decade for the per-bin summary.
    pub bins_per_decade: usize,
}

impl Default for StrengthDegreeOptions {
    fn default() -> Self {
        Self { k_range: None, bins_per_decade: 5 }
    }
}

/// Estimates θ in `W ∝ K^θ` by OLS of `ln W` on `ln K` over individual nodes.
pub fn fit_strength_degree(degrees: &[u64], strengths: &[f64], opts: &StrengthDegreeOptions) -> Result<ScalingFit> {
    if degrees.len() != strengths.len() {
        return Err(Error::Data(format!("{} degrees but {} strengths", degrees.len(), strengths.len())));
    }
    if degrees.is_empty() {
        return Err(Error::EmptyInput("no nodes to fit".into()));
    }
    if degrees.contains(&0) {
        return Err(Error::Domain("degrees must be at least 1".into()));
    }
    if let Some(w) = strengths.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::Domain(format!("strengths must be positive, found {w}")));
    }
    if opts.bins_per_decade == 0 {
        return Err(Error::InvalidConfig("bins_per_decade must be at least 1".into()));
    }
    let (klo, khi) = opts.k_range.unwrap_or((1.0, f64::INFINITY));
    let selected: Vec<(f64, f64)> = degrees
        .iter()
        .zip(strengths)
        .map(|(&k, &w)| (k as f64, w))
        .filter(|&(k, _)| k >= klo && k <= khi)
        .collect();
    if selected.len() < 2 || selected.iter().all(|p| p.0 == selected[0].0) {
        return Err(Error::NoVariation("degrees in the fitted range do not vary".into()));
    }
    let lx: Vec<f64> = selected.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = selected.iter().map(|p| p.1.ln()).collect();
    let fit = ols(&lx, &ly)?;

    let per = opts.bins_per_decade as f64;
    let mut groups: std::collections::BTreeMap<i64, Vec<(f64, f64)>> = Default::default();
    for &p in &selected {
        groups.entry((p.0.log10() * per + 1e-9).floor() as i64).or_default().push(p);
    }
    let bins = groups
        .into_iter()
        .map(|(k, g)| {
            let m = g.len() as f64;
            let mean = g.iter().map(|p| p.1).sum::<f64>() / m;
            let sd = if g.len() > 1 {
                (g.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
            } else {
                0.0
            };
            let center = 10f64.powf((k as f64 + 0.5) / per);
            ScalingBin { x: center, y: mean, sd, count: g.len() }
        })
        .collect();
    let kmin = selected.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let kmax = selected.iter().map(|p| p.0).fold(0.0, f64::max);
    Ok(ScalingFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        stderr: fit.stderr,
        bins,
        binning: format!("{} log-K bins per decade", opts.bins_per_decade),
        range: (kmin, kmax),
        n_used: selected.len(),
    })
}
