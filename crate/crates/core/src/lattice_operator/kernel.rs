use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;

/// Default cut-off for the exponential tail of a hopping kernel.
pub const KERNEL_TAIL_TOL: f64 = 1e-14;

/// Relative slack allowed when checking the decay envelope of stored entries.
const ENVELOPE_SLACK: f64 = 1e-12;

/// Toeplitz hopping amplitudes `a_n` with an exponential decay envelope
/// `|a_n| <= decay_amp * exp(-decay_rate * |n|)`.
///
/// Entries are stored densely for offsets `-radius..=radius`; everything
/// beyond the radius is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingKernel {
    radius: usize,
    entries: Vec<Complex64>,
    decay_amp: f64,
    decay_rate: f64,
}

impl HoppingKernel {
    /// `a_n = amp * exp(-rate |n|)` for `n != 0`, `a_0 = 0`, truncated where
    /// the envelope drops below `tail_tol`.
    pub fn exponential(amp: f64, rate: f64, tail_tol: f64) -> Result<Self> {
        if !(amp > 0.0 && amp.is_finite()) {
            return Err(Error::arg("A1", format!("must be positive, got {amp}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::arg("a", format!("must be positive, got {rate}")));
        }
        let radius = truncation_radius(amp, rate, tail_tol)?;
        Self::exponential_with_radius(amp, rate, radius)
    }

    /// `a_n = amp * exp(-rate |n|)` for `0 < |n| <= radius`.
    pub fn exponential_with_radius(amp: f64, rate: f64, radius: usize) -> Result<Self> {
        if !(amp > 0.0 && amp.is_finite()) {
            return Err(Error::arg("A1", format!("must be positive, got {amp}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::arg("a", format!("must be positive, got {rate}")));
        }
        let entries = (-(radius as i64)..=radius as i64)
            .map(|n| {
                if n == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(amp * (-rate * n.abs() as f64).exp(), 0.0)
                }
            })
            .collect();
        Ok(Self {
            radius,
            entries,
            decay_amp: amp,
            decay_rate: rate,
        })
    }

    /// Nearest-neighbour hopping `a_{±1} = t`. The envelope is `A1 = |t| e`, `a = 1`.
    pub fn nearest_neighbor(t: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let h = Complex64::new(t, 0.0);
        Self {
            radius: 1,
            entries: vec![h, z, h],
            decay_amp: t.abs().max(f64::MIN_POSITIVE) * std::f64::consts::E,
            decay_rate: 1.0,
        }
    }

    /// Kernel that vanishes identically.
    pub fn zero() -> Self {
        Self {
            radius: 0,
            entries: vec![Complex64::new(0.0, 0.0)],
            decay_amp: 1.0,
            decay_rate: 1.0,
        }
    }

    /// Build from explicit `(offset, amplitude)` pairs.
    ///
    /// Offsets given on one side only are mirrored by conjugation; offsets
    /// given on both sides must already be conjugate. Every entry must lie
    /// under the declared envelope.
    pub fn from_table(table: &[(i64, Complex64)], decay_amp: f64, decay_rate: f64) -> Result<Self> {
        if !(decay_amp > 0.0) || !(decay_rate > 0.0) {
            return Err(Error::KernelInvariant(format!(
                "envelope constants must be positive (A1={decay_amp}, a={decay_rate})"
            )));
        }
        let radius = table
            .iter()
            .map(|(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut entries = vec![None::<Complex64>; 2 * radius + 1];
        for &(n, value) in table {
            let slot = &mut entries[(n + radius as i64) as usize];
            if slot.is_some() {
                return Err(Error::KernelInvariant(format!("offset {n} given twice")));
            }
            *slot = Some(value);
        }
        let mut dense = vec![Complex64::new(0.0, 0.0); 2 * radius + 1];
        for n in -(radius as i64)..=radius as i64 {
            let here = entries[(n + radius as i64) as usize];
            let mirror = entries[(-n + radius as i64) as usize];
            let value = match (here, mirror) {
                (Some(v), Some(w)) => {
                    let scale = v.norm().max(w.norm()).max(f64::MIN_POSITIVE);
                    if (v - w.conj()).norm() > 1e-14 * scale {
                        return Err(Error::KernelInvariant(format!(
                            "a_{{-{n}}} != conj(a_{n}): {w} vs {v}"
                        )));
                    }
                    v
                }
                (Some(v), None) => v,
                (None, Some(w)) => w.conj(),
                (None, None) => Complex64::new(0.0, 0.0),
            };
            dense[(n + radius as i64) as usize] = value;
        }
        let kernel = Self {
            radius,
            entries: dense,
            decay_amp,
            decay_rate,
        };
        kernel.check_envelope()?;
        Ok(kernel)
    }

    fn check_envelope(&self) -> Result<()> {
        for (n, a) in self.iter() {
            let bound = self.envelope(n);
            if a.norm() > bound * (1.0 + ENVELOPE_SLACK) {
                return Err(Error::KernelInvariant(format!(
                    "|a_{n}| = {:.3e} exceeds envelope {bound:.3e}",
                    a.norm()
                )));
            }
        }
        Ok(())
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn decay_amp(&self) -> f64 {
        self.decay_amp
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    /// `A1 exp(-a |n|)`.
    pub fn envelope(&self, n: i64) -> f64 {
        self.decay_amp * (-self.decay_rate * n.abs() as f64).exp()
    }

    /// `a_n`, zero beyond the radius.
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.radius {
            Complex64::new(0.0, 0.0)
        } else {
            self.entries[(n + self.radius as i64) as usize]
        }
    }

    /// Iterate `(n, a_n)` over every stored offset.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let r = self.radius as i64;
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, &a)| (i as i64 - r, a))
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|a| a.im == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|a| a.norm() == 0.0)
    }

    /// `sum_n |a_n|`.
    pub fn abs_sum(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).sum()
    }

    /// `sum_n |n| |a_n|`, the Lieb-Robinson style speed of the unit-coupling kernel.
    pub fn first_moment(&self) -> f64 {
        self.iter().map(|(n, a)| n.abs() as f64 * a.norm()).sum()
    }

    /// `sum_{n >= d} |a_n|` (one side).
    pub fn tail_from(&self, d: i64) -> f64 {
        let start = d.max(0);
        (start..=self.radius as i64)
            .map(|n| self.get(n).norm())
            .sum()
    }

    /// Kernel of the reflected operator, `a'_n = a_{-n}`.
    pub fn reflected(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.reverse();
        Self {
            entries,
            ..self.clone()
        }
    }
}

fn truncation_radius(amp: f64, rate: f64, tail_tol: f64) -> Result<usize> {
    if !(tail_tol > 0.0) {
        return Err(Error::arg("tail_tol", "must be positive"));
    }
    let r = ((amp / tail_tol).ln() / rate).ceil();
    Ok(r.max(1.0) as usize)
}

/// Result of fitting `ln |a_n| = ln A1 - a |n|` to the stored entries.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub amp_fit: f64,
    pub rate_fit: f64,
    /// Number of distinct `|n| >= 1` used in the fit.
    pub points: usize,
    /// Every stored entry lies under the declared envelope.
    pub envelope_ok: bool,
    /// The fitted envelope does not exceed the declared one on the fitted range.
    pub consistent: bool,
}

/// Least-squares fit of the kernel's exponential envelope.
///
/// With a single distinct offset there is no slope information; the declared
/// rate is kept and only the amplitude is read off.
pub fn kernel_decay_fit(kernel: &HoppingKernel, fit_tol: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = (1..=kernel.radius() as i64)
        .filter_map(|n| {
            let m = kernel.get(n).norm().max(kernel.get(-n).norm());
            (m > 0.0).then(|| (n as f64, m.ln()))
        })
        .collect();
    if pts.is_empty() {
        return Err(Error::DegenerateFit(
            "all off-diagonal kernel entries vanish".into(),
        ));
    }
    let (amp_fit, rate_fit) = if pts.len() == 1 {
        let (n, ln_a) = pts[0];
        let rate = kernel.decay_rate();
        ((ln_a + rate * n).exp(), rate)
    } else {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let line = linear_fit(&xs, &ys)?;
        (line.intercept.exp(), -line.slope)
    };
    let envelope_ok = kernel
        .iter()
        .all(|(n, a)| a.norm() <= kernel.envelope(n) * (1.0 + ENVELOPE_SLACK));
    let consistent = envelope_ok
        && pts.iter().all(|&(n, _)| {
            amp_fit * (-rate_fit * n).exp() <= kernel.envelope(n as i64) * (1.0 + fit_tol)
        });
    Ok(DecayFit {
        amp_fit,
        rate_fit,
        points: pts.len(),
        envelope_ok,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_radius_matches_tail_rule() {
        let k = HoppingKernel::exponential(1.0, 1.0, KERNEL_TAIL_TOL).unwrap();
        assert_eq!(k.radius(), 33);
        assert!(k.envelope(33) < KERNEL_TAIL_TOL);
        assert_eq!(k.get(0), Complex64::new(0.0, 0.0));
        assert_eq!(k.get(34), Complex64::new(0.0, 0.0));
        assert!((k.get(-2).re - (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn table_mirrors_and_rejects_non_hermitian() {
        let a1 = Complex64::new(0.3, 0.2);
        let k = HoppingKernel::from_table(&[(1, a1)], 1.0, 1.0).unwrap();
        assert_eq!(k.get(-1), a1.conj());

        let bad = HoppingKernel::from_table(&[(1, a1), (-1, a1)], 1.0, 1.0);
        assert!(matches!(bad, Err(Error::KernelInvariant(_))));

        let over = HoppingKernel::from_table(&[(2, Complex64::new(1.0, 0.0))], 1.0, 1.0);
        assert!(matches!(over, Err(Error::KernelInvariant(_))));
    }

    #[test]
    fn fit_recovers_exact_exponentials() {
        let k = HoppingKernel::exponential(1.0, 1.0, KERNEL_TAIL_TOL).unwrap();
        let f = kernel_decay_fit(&k, 0.01).unwrap();
        assert!((f.rate_fit - 1.0).abs() < 0.01);
        assert!((f.amp_fit - 1.0).abs() < 0.05);
        assert!(f.consistent);

        let k = HoppingKernel::exponential(3.0, 2.0, KERNEL_TAIL_TOL).unwrap();
        let f = kernel_decay_fit(&k, 0.01).unwrap();
        assert!((f.rate_fit - 2.0).abs() < 1e-9);
        assert!((f.amp_fit - 3.0).abs() < 1e-8);
    }

    #[test]
    fn nearest_neighbour_envelope_passes_direct_scan() {
        let k = HoppingKernel::nearest_neighbor(1.0);
        let f = kernel_decay_fit(&k, 0.01).unwrap();
        assert_eq!(f.points, 1);
        assert!(f.envelope_ok);
        // A1 = e, a = 1 gives exactly |a_1| = 1 on the envelope.
        assert!((k.envelope(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_kernel_fit_is_degenerate() {
        assert!(matches!(
            kernel_decay_fit(&HoppingKernel::zero(), 0.01),
            Err(Error::DegenerateFit(_))
        ));
    }
}
