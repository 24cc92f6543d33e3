use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub kappa: f64,
    pub tau: f64,
    pub k_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiophantineReport {
    pub pass: bool,
    /// Smallest `k` minimising `||k alpha|| k^kappa`.
    pub worst_k: u64,
    pub worst_value: f64,
}

/// Distance to the nearest integer.
pub fn dist_to_integer(x: f64) -> f64 {
    let f = x - x.round();
    f.abs()
}

/// Scan `||k alpha|| >= tau / k^kappa` for `1 <= k <= k_max`.
///
/// `k alpha` within a few ulps of an integer is treated as an exact rational
/// hit, so `alpha = p/q` reports `worst_k = q` and `worst_value = 0`.
pub fn diophantine_check(alpha: f64, params: DiophantineParams) -> Result<DiophantineReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ));
    }
    if !(params.kappa > 0.0) || !(params.tau > 0.0) {
        return Err(Error::arg("kappa/tau", "must be positive"));
    }
    if params.k_max == 0 {
        return Err(Error::arg("k_max", "must be at least 1"));
    }
    let mut worst_k = 1;
    let mut worst_value = f64::INFINITY;
    for k in 1..=params.k_max {
        let kf = k as f64;
        let mut d = dist_to_integer(kf * alpha);
        if d <= 8.0 * f64::EPSILON * kf {
            d = 0.0;
        }
        let value = d * kf.powf(params.kappa);
        if value < worst_value {
            worst_value = value;
            worst_k = k;
        }
    }
    Ok(DiophantineReport {
        pass: worst_value >= params.tau,
        worst_k,
        worst_value,
    })
}
