use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(sqrt(5) - 1) / 2`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

/// Real trigonometric polynomial on the unit circle:
/// `v(x) = sum_k cos[k] cos(2 pi k x) + sum_{k>=1} sin[k-1] sin(2 pi k x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigPolynomial {
    /// `amp * cos(2 pi x)`.
    pub fn cosine(amp: f64) -> Self {
        Self {
            cos: vec![0.0, amp],
            sin: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k == 0 {
                    c
                } else {
                    c * (TAU * k as f64 * x).cos()
                }
            })
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, &s)| s * (TAU * (k + 1) as f64 * x).sin())
            .sum();
        c + s
    }

    /// `sum |coefficients|`, an upper bound of `sup |v|`.
    pub fn sup_bound(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().skip(1).chain(&self.sin).all(|&c| c == 0.0)
    }
}

/// On-site potential `V_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialLaw {
    /// `V_n = v(theta + n alpha mod 1)`.
    Quasiperiodic {
        v: TrigPolynomial,
        theta: f64,
        alpha: f64,
    },
    /// `V_n = values[n - lo]`, undefined elsewhere.
    Explicit {
        lo: i64,
        values: Vec<f64>,
    },
    Constant {
        value: f64,
    },
}

impl PotentialLaw {
    pub fn quasiperiodic(v: TrigPolynomial, theta: f64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::arg(
                "alpha",
                format!("must lie in [0, 1), got {alpha}"),
            ));
        }
        Ok(Self::Quasiperiodic {
            v,
            theta: theta.rem_euclid(1.0),
            alpha,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn explicit(lo: i64, values: Vec<f64>) -> Self {
        Self::Explicit { lo, values }
    }

    pub fn value(&self, n: i64) -> Result<f64> {
        match self {
            Self::Quasiperiodic { v, theta, alpha } => {
                let x = (theta + n as f64 * alpha).rem_euclid(1.0);
                Ok(v.eval(x))
            }
            Self::Explicit { lo, values } => {
                let idx = n - lo;
                if idx < 0 || idx as usize >= values.len() {
                    Err(Error::PotentialOutOfRange { site: n })
                } else {
                    Ok(values[idx as usize])
                }
            }
            Self::Constant { value } => Ok(*value),
        }
    }

    /// Upper bound of `|V_n|` over every site where the law is defined.
    pub fn bound(&self) -> f64 {
        match self {
            Self::Quasiperiodic { v, .. } => v.sup_bound(),
            Self::Explicit { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Self::Constant { value } => value.abs(),
        }
    }

    /// Potential of the reflected lattice, `V'_n = V_{-n}`.
    pub fn reflected(&self) -> Self {
        match self {
            Self::Quasiperiodic { v, theta, alpha } => Self::Quasiperiodic {
                v: v.clone(),
                theta: *theta,
                alpha: if *alpha == 0.0 { 0.0 } else { 1.0 - alpha },
            },
            Self::Explicit { lo, values } => {
                let hi = lo + values.len() as i64 - 1;
                let mut values = values.clone();
                values.reverse();
                Self::Explicit { lo: -hi, values }
            }
            Self::Constant { value } => Self::Constant { value: *value },
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant { .. } => true,
            Self::Quasiperiodic { v, .. } => v.is_constant(),
            Self::Explicit { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_potential_values() {
        let law =
            PotentialLaw::quasiperiodic(TrigPolynomial::cosine(2.0), 0.0, GOLDEN_MEAN).unwrap();
        assert!((law.value(0).unwrap() - 2.0).abs() < 1e-15);
        let expect = 2.0 * (TAU * GOLDEN_MEAN).cos();
        assert!((law.value(1).unwrap() - expect).abs() < 1e-14);
        assert_eq!(law.bound(), 2.0);
    }

    #[test]
    fn explicit_is_undefined_off_window() {
        let law = PotentialLaw::explicit(0, vec![2.0, -1.0]);
        assert_eq!(law.value(1).unwrap(), -1.0);
        assert!(matches!(
            law.value(2),
            Err(Error::PotentialOutOfRange { site: 2 })
        ));
        assert_eq!(law.bound(), 2.0);
    }

    #[test]
    fn reflection_maps_site_n_to_minus_n() {
        let law = PotentialLaw::quasiperiodic(
            TrigPolynomial {
                cos: vec![0.1, 1.0, 0.3],
                sin: vec![0.5],
            },
            0.27,
            GOLDEN_MEAN,
        )
        .unwrap();
        let r = law.reflected();
        for n in -20..20 {
            assert!((law.value(n).unwrap() - r.value(-n).unwrap()).abs() < 1e-12);
        }
        let e = PotentialLaw::explicit(2, vec![1.0, 2.0, 3.0]);
        let r = e.reflected();
        assert_eq!(r.value(-4).unwrap(), 3.0);
        assert_eq!(r.value(-2).unwrap(), 1.0);
    }

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        assert!(PotentialLaw::quasiperiodic(TrigPolynomial::cosine(1.0), 0.0, 1.2).is_err());
    }
}
