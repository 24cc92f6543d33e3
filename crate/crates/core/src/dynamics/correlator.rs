use num_complex::Complex64;
use serde::Serialize;

use super::evolve::SpectralCache;
use super::{integrate_along, DynamicsOptions, StateVector, StepIntegrand};
use crate::chebyshev::{StepBasis, Trajectory};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::greens::{Energy, GreensSolver};
use crate::lattice_operator::{spectrum_bound, OperatorSpec, Window};
use crate::quadrature::{integrate_breaks, integrate_to_infinity, QuadOptions};

/// Sites of the window used for Parseval comparisons.
pub const PARSEVAL_SITES: usize = 1024;

/// Correlators below this value are compared in absolute rather than
/// relative terms.
pub const CORRELATOR_FLOOR: f64 = 1e-12;

/// `[-512, 511]`: the truncated operator on this window is the object on
/// both sides of the identity.
pub fn parseval_window() -> Window {
    Window::centered(PARSEVAL_SITES).expect("nonempty")
}

/// `a(j, n, T)` from the time average and from the energy integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlator {
    pub j: i64,
    pub n: i64,
    pub t: f64,
    pub a_time: f64,
    pub a_energy: f64,
    pub residual: f64,
    pub time_error: f64,
    pub energy_error: f64,
}

impl Correlator {
    /// `|a_time - a_energy| / max(a_time, CORRELATOR_FLOOR)`.
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.a_time.max(CORRELATOR_FLOOR)
    }
}

struct SiteIntegrand {
    idx: usize,
    t: f64,
}

impl StepIntegrand for SiteIntegrand {
    fn ncomp(&self) -> usize {
        1
    }

    fn eval(&self, basis: &StepBasis, tau: f64, out: &mut [f64]) {
        let amp = basis.amplitudes_at(tau, &[self.idx])[0];
        let t = basis.t0 + tau;
        out[0] = amp.norm_sqr() * (2.0 / self.t) * (-2.0 * t / self.t).exp();
    }
}

fn time_side(
    spec: &OperatorSpec,
    w: Window,
    j: i64,
    n: i64,
    t: f64,
    opts: &DynamicsOptions,
) -> Result<(f64, f64)> {
    let psi0 = StateVector::delta(j).embed(&w)?;
    let mut topts = opts.trajectory;
    topts.fixed_window = true;
    let mut traj = Trajectory::new(spec, w, psi0, topts)?;
    let idx = w.index(n).expect("checked by caller");
    let mut opts = *opts;
    // Single-site overlaps can be tiny and oscillate within one step; resolve
    // them relative to themselves and more tightly than the moments.
    opts.abs_density = opts.abs_density.min(1e-30);
    opts.quadrature_tol *= 0.1;
    let mut integrand = SiteIntegrand { idx, t };
    let t_max = opts.abel_horizon(t);
    let res = integrate_along(&mut traj, &[t_max], &mut integrand, &opts)?;
    let (mut value, mut error) = (res.values[0], res.errors[0]);
    // |psi_n|^2 <= 1, so the discarded tail is at most e^{-2 t_max / T}. Small
    // correlators need a longer horizon for that bound to be relative.
    let target = opts.abel_tail_tol * value.max(CORRELATOR_FLOOR);
    let mut tail = (-2.0 * t_max / t).exp();
    if tail > target {
        let more = integrate_along(
            &mut traj,
            &[0.5 * t * (1.0 / target).ln()],
            &mut integrand,
            &opts,
        )?;
        value += more.values[0];
        error += more.errors[0];
        tail = target;
    }
    Ok((value, error + tail))
}

fn energy_side(
    spec: &OperatorSpec,
    w: Window,
    j: i64,
    n: i64,
    t: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let eig = SpectralCache::global().get(spec, &w)?;
    let (ij, in_) = (w.index(j).expect("checked"), w.index(n).expect("checked"));
    let u = &eig.eigenvectors;
    let weights: Vec<(f64, Complex64)> = (0..eig.dim())
        .map(|k| (eig.eigenvalues[k], u[(ij, k)] * u[(in_, k)].conj()))
        .filter(|(_, c)| c.norm() != 0.0)
        .collect();
    let eta = 1.0 / t;
    let g2 = |e: f64| -> f64 {
        let z = Complex64::new(e, eta);
        let g: Complex64 = weights.iter().map(|(l, c)| c / (l - z)).sum();
        g.norm_sqr()
    };
    let k = spectrum_bound(spec);
    let scale = 1.0 / (t * std::f64::consts::PI);
    // Far off the diagonal G is a sum of O(1) terms cancelling to something
    // tiny, so |G|^2 carries a roundoff floor; resolve only down to the floor.
    let qopts = QuadOptions {
        rel_tol,
        abs_tol: rel_tol * CORRELATOR_FLOOR / scale,
        max_intervals: 200_000,
    };
    // Every eigenvalue carrying weight is a break, so each Lorentzian peak is seen.
    let wmax = weights.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let mut breaks: Vec<f64> = weights
        .iter()
        .filter(|(_, c)| c.norm() >= 1e-10 * wmax)
        .map(|(l, _)| *l)
        .filter(|l| l.abs() < k)
        .collect();
    breaks.push(-k);
    breaks.push(k);
    breaks.sort_by(f64::total_cmp);
    // Peaks closer than a small fraction of their width act as one.
    breaks.dedup_by(|b, a| *b - *a <= 1e-6 * eta);
    let inner = integrate_breaks(|e, out| out[0] = g2(e), &breaks, 1, qopts);
    // Off the diagonal the tails decay like E^-4 through cancellation, so they
    // are resolved against the inner integral rather than against themselves.
    let tail_opts = QuadOptions {
        abs_tol: (0.25 * rel_tol * inner.values[0].abs()).max(qopts.abs_tol),
        ..qopts
    };
    let right = integrate_to_infinity(|e, out| out[0] = g2(e), k, 1, tail_opts);
    let left = integrate_to_infinity(|e, out| out[0] = g2(-e), k, 1, tail_opts);
    let total = inner.values[0] + right.values[0] + left.values[0];
    let err = inner.errors[0] + right.errors[0] + left.errors[0];
    if [&inner, &right, &left].iter().any(|r| !r.converged)
        && err > rel_tol * total.abs().max(qopts.abs_tol / rel_tol)
    {
        return Err(Error::Quadrature {
            achieved: if total == 0.0 { err } else { err / total.abs() },
            requested: rel_tol,
        });
    }
    Ok((scale * total, scale * err))
}

/// `a(j, n, T)` on `window` by both routes.
pub fn correlator_on(
    spec: &OperatorSpec,
    window: Window,
    j: i64,
    n: i64,
    t: f64,
    opts: &DynamicsOptions,
) -> Result<Correlator> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::arg("T", "must be finite and positive"));
    }
    for s in [j, n] {
        if !window.contains(s) {
            return Err(Error::arg(
                "site",
                format!("{s} outside [{}, {}]", window.lo(), window.hi()),
            ));
        }
    }
    let (a_time, time_error) = time_side(spec, window, j, n, t, opts)?;
    let (a_energy, energy_error) = energy_side(spec, window, j, n, t, opts.quadrature_tol * 1e-2)?;
    Ok(Correlator {
        j,
        n,
        t,
        a_time,
        a_energy,
        residual: (a_time - a_energy).abs(),
        time_error,
        energy_error,
    })
}

/// `a(j, n, T)` on the Parseval window.
pub fn correlator(
    spec: &OperatorSpec,
    j: i64,
    n: i64,
    t: f64,
    opts: &DynamicsOptions,
) -> Result<Correlator> {
    correlator_on(spec, parseval_window(), j, n, t, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFitRow {
    pub c_pow: f64,
    /// Slope of `ln a` against `|n - j|^c_pow`.
    pub slope: f64,
    /// RMS residual of the fit divided by the standard deviation of `ln a`
    /// over the range, i.e. `sqrt(1 - R^2)`.
    pub residual: f64,
    /// RMS residual in units of `ln a`.
    pub abs_residual: f64,
    /// `-slope * c_pow * d^(c_pow - 1)` at the farthest distance: the
    /// smallest local decay rate per site across the range.
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelatorDecayReport {
    pub j: i64,
    pub t: f64,
    pub sites: Vec<i64>,
    /// `ln a(j, n, T)`; `-inf` where the correlator vanished.
    pub ln_a: Vec<f64>,
    pub fits: Vec<DecayFitRow>,
    pub best: Option<DecayFitRow>,
    pub fit_tol: f64,
    /// Smallest rate accepted as decay rather than ballistic spreading.
    pub min_rate: f64,
    pub window: (i64, i64),
    /// All correlators vanished exactly.
    pub degenerate: bool,
    pub pass: bool,
}

/// Window padding: the packet travels `v_max t` over times `t ~ T ln(1e12)`.
fn decay_pad(spec: &OperatorSpec, t: f64) -> i64 {
    ((1e12f64).ln() * spec.lieb_robinson_speed() * t)
        .ceil()
        .clamp(64.0, 8192.0) as i64
}

/// `ln a(j, n, T)` for every site in `sites` from rows of the banded
/// resolvent, scaled per site so that values far below the double range stay
/// resolvable.
fn ln_correlators(
    spec: &OperatorSpec,
    w: &Window,
    j: i64,
    sites: &[i64],
    t: f64,
) -> Result<Vec<f64>> {
    let eta = 1.0 / t;
    let idx: Vec<usize> = sites
        .iter()
        .map(|&n| w.index(n).expect("inside window"))
        .collect();
    let ln_row = |e: f64| -> Result<Vec<f64>> {
        let row = GreensSolver::new(spec, w, Energy::new(e, eta)?)?.row(j)?;
        Ok(idx.iter().map(|&i| 2.0 * row[i].norm().ln()).collect())
    };
    let k = spectrum_bound(spec);
    let coarse = 129;
    let mut scale = vec![f64::NEG_INFINITY; sites.len()];
    for s in 0..coarse {
        let e = -k + 2.0 * k * s as f64 / (coarse - 1) as f64;
        for (m, v) in scale.iter_mut().zip(ln_row(e)?) {
            *m = m.max(v);
        }
    }
    let scale: Vec<f64> = scale
        .iter()
        .map(|s| if s.is_finite() { *s } else { 0.0 })
        .collect();
    let failure = std::sync::Mutex::new(None);
    let f = |e: f64, out: &mut [f64]| match ln_row(e) {
        Ok(v) => {
            for ((o, l), s) in out.iter_mut().zip(v).zip(&scale) {
                *o = (l - s).exp();
            }
        }
        Err(err) => {
            out.fill(0.0);
            failure.lock().expect("lock").get_or_insert(err);
        }
    };
    let qopts = QuadOptions {
        rel_tol: 1e-2,
        abs_tol: 1e-300,
        max_intervals: 20_000,
    };
    // Resonances have width eta; start from a grid at that scale.
    let pieces = ((2.0 * k / (2.0 * eta)).ceil() as usize).clamp(16, 4096);
    let breaks: Vec<f64> = (0..=pieces)
        .map(|i| -k + 2.0 * k * i as f64 / pieces as f64)
        .collect();
    let inner = integrate_breaks(f, &breaks, sites.len(), qopts);
    let right = integrate_to_infinity(f, k, sites.len(), qopts);
    let left = integrate_to_infinity(|e, out| f(-e, out), k, sites.len(), qopts);
    if let Some(err) = failure.into_inner().expect("lock") {
        return Err(err);
    }
    Ok((0..sites.len())
        .map(|c| {
            let total = inner.values[c] + right.values[c] + left.values[c];
            if total > 0.0 {
                scale[c] + total.ln() - (t * std::f64::consts::PI).ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect())
}

/// Fits `ln a(j, n, T)` against `|n - j|^c_pow` for each power in the grid.
///
/// Passes when some power gives a negative slope, a normalized residual at
/// most `fit_tol` and a local decay rate of at least `4 / (v_max T)`, the rate at
/// which the Abel weight alone would cut off a ballistic front.
pub fn correlator_decay_check(
    spec: &OperatorSpec,
    j: i64,
    t: f64,
    n_range: (i64, i64),
    c_pow_grid: &[f64],
    fit_tol: f64,
) -> Result<CorrelatorDecayReport> {
    let (n_lo, n_hi) = n_range;
    if n_lo > n_hi || (n_lo..=n_hi).contains(&j) {
        return Err(Error::arg(
            "n_range",
            "must be a nonempty range excluding j",
        ));
    }
    if c_pow_grid.is_empty() || c_pow_grid.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::arg("c_pow_grid", "powers must be positive"));
    }
    if !(t > 0.0) {
        return Err(Error::arg("T", "must be positive"));
    }
    let pad = decay_pad(spec, t);
    let w = Window::finite(j.min(n_lo) - pad, j.max(n_hi) + pad)?;
    let sites: Vec<i64> = (n_lo..=n_hi).collect();
    let ln_a = ln_correlators(spec, &w, j, &sites, t)?;
    let v = spec.lieb_robinson_speed();
    let min_rate = if v > 0.0 { 4.0 / (v * t) } else { 0.0 };
    let pts: Vec<(f64, f64)> = sites
        .iter()
        .zip(&ln_a)
        .filter(|(_, l)| l.is_finite())
        .map(|(n, l)| ((n - j).abs() as f64, *l))
        .collect();
    let degenerate = pts.is_empty();
    let d_max = sites.iter().map(|n| (n - j).abs()).max().unwrap_or(1) as f64;
    let mut fits = Vec::new();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
    let spread =
        (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len().max(1) as f64).sqrt();
    if pts.len() >= 2 {
        for &c in c_pow_grid {
            let xs: Vec<f64> = pts.iter().map(|p| p.0.powf(c)).collect();
            if let Ok(fit) = linear_fit(&xs, &ys) {
                fits.push(DecayFitRow {
                    c_pow: c,
                    slope: fit.slope,
                    residual: if spread > 0.0 {
                        fit.rms_residual / spread
                    } else {
                        0.0
                    },
                    abs_residual: fit.rms_residual,
                    rate: -fit.slope * c * d_max.powf(c - 1.0),
                });
            }
        }
    }
    let best = fits
        .iter()
        .filter(|f| f.slope < 0.0 && f.residual <= fit_tol && f.rate >= min_rate)
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .copied();
    Ok(CorrelatorDecayReport {
        j,
        t,
        sites,
        ln_a,
        fits,
        best,
        fit_tol,
        min_rate,
        window: (w.lo(), w.hi()),
        degenerate,
        pass: degenerate || best.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_operator::PotentialLaw;

    #[test]
    fn single_site_unit_overlap() {
        let spec = OperatorSpec::diagonal(PotentialLaw::constant(0.0));
        let c = correlator_on(
            &spec,
            Window::finite(-4, 4).unwrap(),
            0,
            0,
            7.0,
            &DynamicsOptions::default(),
        )
        .unwrap();
        assert!((c.a_time - 1.0).abs() < 1e-8, "{c:?}");
        assert!((c.a_energy - 1.0).abs() < 1e-8, "{c:?}");
        let off = correlator_on(
            &spec,
            Window::finite(-4, 4).unwrap(),
            0,
            3,
            7.0,
            &DynamicsOptions::default(),
        )
        .unwrap();
        assert_eq!(off.a_time, 0.0);
        assert_eq!(off.a_energy, 0.0);
    }

    #[test]
    fn free_parseval_agreement() {
        let c = correlator(
            &OperatorSpec::free_laplacian(),
            0,
            5,
            50.0,
            &DynamicsOptions::default(),
        )
        .unwrap();
        assert!(c.relative_residual() < 1e-4, "{c:?}");
        assert!(c.a_time > 0.0 && c.a_time <= 1.0);
    }

    #[test]
    fn decay_check_trivial_and_free() {
        let diag = OperatorSpec::diagonal(PotentialLaw::constant(0.5));
        let r = correlator_decay_check(&diag, 0, 20.0, (5, 30), &[0.5, 1.0], 0.5).unwrap();
        assert!(r.degenerate && r.pass);
        let free = correlator_decay_check(
            &OperatorSpec::free_laplacian(),
            0,
            20.0,
            (10, 60),
            &[0.5, 0.75, 1.0],
            0.5,
        )
        .unwrap();
        assert!(!free.pass, "{:?}", free.fits);
    }
}
