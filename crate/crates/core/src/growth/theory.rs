use crate::dist::DistributionModel;
use crate::error::{Error, Result};

/// Analytic degree law after `t` steps from `n0` initial nodes.
///
/// Without entry the law is exponential with mean `2t/n0`. With entry rate
/// `a > 0` it is a power law with exponent `2 + a/(1-a)` cut off
/// exponentially at `(1 + 2t/n0)^(1-a) - 1`.
pub fn theoretical_degree_model(a: f64, t: usize, n0: usize) -> Result<DistributionModel> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidConfig(format!("a must lie in [0, 1], got {a}")));
    }
    if a == 1.0 {
        return Err(Error::DegenerateModel("a = 1 leaves no preferential regime".into()));
    }
    if t == 0 || n0 == 0 {
        return Err(Error::InvalidConfig("t and n0 must be at least 1".into()));
    }
    let ratio = 2.0 * t as f64 / n0 as f64;
    if a == 0.0 {
        return Ok(DistributionModel::Exponential { mean: ratio });
    }
    Ok(DistributionModel::YulePowerlawCutoff {
        exponent: 2.0 + a / (1.0 - a),
        cutoff: (1.0 + ratio).powf(1.0 - a) - 1.0,
        kmin: 1,
    })
}
