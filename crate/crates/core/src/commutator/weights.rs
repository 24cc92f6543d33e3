use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, upper_hull};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Finitely supported sequence `gamma_k`, `|k| <= radius`, with a declared
/// envelope `|gamma_k| <= c_const * exp(-c_rate |k|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSequence {
    radius: usize,
    entries: Vec<Complex64>,
    pub c_const: f64,
    pub c_rate: f64,
}

/// Exponential envelope read off a sequence's outer entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub c_const: f64,
    pub rate: f64,
    pub points: usize,
}

impl WeightSequence {
    /// Entries for offsets `-radius..=radius`; the envelope constants are taken
    /// as the tightest `c_const` for the given `c_rate`.
    pub fn new(entries: Vec<Complex64>, c_rate: f64) -> Result<Self> {
        if entries.len().is_multiple_of(2) {
            return Err(Error::arg(
                "weights",
                "need an odd number of entries centred at 0",
            ));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::arg("weights", "entries must be finite"));
        }
        if !(c_rate >= 0.0) {
            return Err(Error::arg("c_gamma", "decay rate must be >= 0"));
        }
        let radius = entries.len() / 2;
        let c_const = entries
            .iter()
            .enumerate()
            .map(|(i, e)| e.norm() * (c_rate * (i as f64 - radius as f64).abs()).exp())
            .fold(0.0, f64::max);
        Ok(Self {
            radius,
            entries,
            c_const,
            c_rate,
        })
    }

    /// `gamma = delta_0`.
    pub fn delta() -> Self {
        Self::new(vec![Complex64::new(1.0, 0.0)], 0.0).expect("valid")
    }

    /// `gamma_k = amp * exp(-rate |k|)` for `|k| <= radius`.
    pub fn exponential(amp: f64, rate: f64, radius: usize) -> Result<Self> {
        let r = radius as i64;
        let entries = (-r..=r)
            .map(|k| Complex64::new(amp * (-rate * k.abs() as f64).exp(), 0.0))
            .collect();
        Self::new(entries, rate)
    }

    /// Sequence with the given `(offset, value)` pairs and zeros elsewhere.
    pub fn from_pairs(pairs: &[(i64, Complex64)], c_rate: f64) -> Result<Self> {
        let r = pairs
            .iter()
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut entries = vec![ZERO; 2 * r + 1];
        for &(k, v) in pairs {
            entries[(k + r as i64) as usize] += v;
        }
        Self::new(entries, c_rate)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.radius {
            ZERO
        } else {
            self.entries[(k + self.radius as i64) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let r = self.radius as i64;
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i as i64 - r, v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| v.norm() == 0.0)
    }

    /// Fit `ln max(|gamma_m|, |gamma_-m|)` over the outer half of the support,
    /// on the upper hull of the points. `None` with fewer than two nonzero offsets.
    pub fn envelope_fit(&self) -> Option<EnvelopeFit> {
        let nonzero: Vec<(f64, f64)> = (0..=self.radius as i64)
            .filter_map(|m| {
                let v = self.get(m).norm().max(self.get(-m).norm());
                (v > 0.0).then(|| (m as f64, v.ln()))
            })
            .collect();
        let reach = nonzero.last()?.0;
        let outer: Vec<(f64, f64)> = nonzero
            .iter()
            .copied()
            .filter(|p| p.0 >= 0.5 * reach)
            .collect();
        let pts = if outer.len() >= 2 { outer } else { nonzero };
        if pts.len() < 2 {
            return None;
        }
        let hull = upper_hull(&pts);
        let (xs, ys): (Vec<f64>, Vec<f64>) = hull.iter().copied().unzip();
        let line = linear_fit(&xs, &ys).ok()?;
        Some(EnvelopeFit {
            c_const: line.intercept.exp(),
            rate: -line.slope,
            points: pts.len(),
        })
    }
}
