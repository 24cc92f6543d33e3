//! Time evolution, Abel-averaged moments `<|X|^p>(T)`, transport exponents
//! and the correlator `a(j, n, T)` in its time and energy forms.
//!
//! Short evolutions on small windows use a dense eigendecomposition. Moments
//! over long times use the Chebyshev propagator on windows that follow the
//! wave packet, so the light cone never reaches the boundary.

mod correlator;
mod evolve;
mod io;
mod moments;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use correlator::{
    correlator, correlator_decay_check, correlator_on, parseval_window, Correlator,
    CorrelatorDecayReport, DecayFitRow, CORRELATOR_FLOOR, PARSEVAL_SITES,
};
pub use evolve::{evolve, light_cone_guard, SpectralCache};
pub use io::{write_correlator_csv, write_exponent_json, write_moment_csv};
pub use moments::{
    abel_moment, abel_moments, abel_moments_on, ballistic_check, beta_monotonicity_check,
    transport_exponent, AbelMoment, BallisticReport, ExponentEstimate, MomentSeries,
    MonotonicityReport, MONOTONICITY_FLOOR,
};

use crate::chebyshev::{StepBasis, Trajectory, TrajectoryOptions};
use crate::error::{Error, Result};
use crate::lattice_operator::Window;
use crate::quadrature::{gk15_combine, gk15_nodes};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Finitely supported state `phi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVector {
    window: Window,
    amplitudes: Vec<Complex64>,
    support_radius: i64,
    norm: f64,
}

impl StateVector {
    pub fn new(window: Window, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != window.size() {
            return Err(Error::arg(
                "amplitudes",
                "length differs from the window size",
            ));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::arg("amplitudes", "must be finite"));
        }
        let support_radius = window
            .sites()
            .zip(&amplitudes)
            .filter(|(_, a)| a.norm() != 0.0)
            .map(|(n, _)| n.abs())
            .max()
            .unwrap_or(0);
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Ok(Self {
            window,
            amplitudes,
            support_radius,
            norm,
        })
    }

    /// `delta_n`.
    pub fn delta(n: i64) -> Self {
        Self::new(
            Window::finite(n, n).expect("single site"),
            vec![Complex64::new(1.0, 0.0)],
        )
        .expect("valid unit vector")
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Largest `|n|` with a non-zero amplitude.
    pub fn support_radius(&self) -> i64 {
        self.support_radius
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn get(&self, n: i64) -> Complex64 {
        self.window.index(n).map_or(ZERO, |i| self.amplitudes[i])
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::new(self.window, self.amplitudes.iter().map(|a| a * c).collect())
            .expect("same window")
    }

    /// `phi(n) -> phi(-n)`.
    pub fn reflected(&self) -> Self {
        let mut amps = self.amplitudes.clone();
        amps.reverse();
        Self::new(self.window.reflected(), amps).expect("same size")
    }

    /// Amplitudes on a larger window; fails if any non-zero amplitude falls outside.
    pub fn embed(&self, window: &Window) -> Result<Vec<Complex64>> {
        let mut out = vec![ZERO; window.size()];
        for (n, a) in self.window.sites().zip(&self.amplitudes) {
            match window.index(n) {
                Some(i) => out[i] = *a,
                None if a.norm() == 0.0 => {}
                None => {
                    return Err(Error::WindowTooSmall(format!(
                        "state has support at {n}, outside [{}, {}]",
                        window.lo(),
                        window.hi()
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Smallest window holding the support plus `pad` sites on each side.
    pub fn padded_window(&self, pad: i64) -> Window {
        let (lo, hi) = self
            .window
            .sites()
            .zip(&self.amplitudes)
            .filter(|(_, a)| a.norm() != 0.0)
            .fold((i64::MAX, i64::MIN), |(lo, hi), (n, _)| {
                (lo.min(n), hi.max(n))
            });
        let (lo, hi) = if lo > hi { (0, 0) } else { (lo, hi) };
        Window::finite(lo - pad, hi + pad).expect("lo <= hi")
    }
}

/// Tolerances shared by the dynamics operations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DynamicsOptions {
    /// Local relative error per component of the time quadrature.
    pub quadrature_tol: f64,
    /// Abel integrals stop at `t_max = (T/2) ln(1/abel_tail_tol)`.
    pub abel_tail_tol: f64,
    /// Largest probability tolerated near a window edge by `evolve`.
    pub leak_tol: f64,
    /// Bisection depth limit inside one propagation step.
    pub max_depth: usize,
    /// Absolute error density (per unit time) accepted by the time quadrature.
    pub abs_density: f64,
    #[serde(skip)]
    pub trajectory: TrajectoryOptions,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            quadrature_tol: 1e-6,
            abel_tail_tol: 1e-10,
            leak_tol: 1e-8,
            max_depth: 12,
            abs_density: 1e-300,
            trajectory: TrajectoryOptions::default(),
        }
    }
}

impl DynamicsOptions {
    /// Cut-off time of the Abel integral at time scale `t`.
    pub fn abel_horizon(&self, t: f64) -> f64 {
        0.5 * t * (1.0 / self.abel_tail_tol).ln()
    }
}

/// A vector-valued function of time evaluated from the dense output of a step.
pub(crate) trait StepIntegrand: Sync {
    fn ncomp(&self) -> usize;
    /// Called once per step before any evaluation, with the step's window.
    fn begin_step(&mut self, _basis: &StepBasis) {}
    fn eval(&self, basis: &StepBasis, tau: f64, out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub(crate) struct TimeIntegral {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
    pub edge_mass: f64,
    pub final_window: Window,
    pub depth_limited: bool,
}

/// `int_0^{horizon_c} f_c(t) dt` along `traj`, step by step, with local
/// adaptive Gauss-Kronrod inside each step.
pub(crate) fn integrate_along<I: StepIntegrand>(
    traj: &mut Trajectory,
    horizons: &[f64],
    integrand: &mut I,
    opts: &DynamicsOptions,
) -> Result<TimeIntegral> {
    let ncomp = integrand.ncomp();
    if horizons.len() != ncomp {
        return Err(Error::arg("horizons", "one horizon per component"));
    }
    let mut breaks: Vec<f64> = horizons.iter().copied().filter(|h| *h > 0.0).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut out = TimeIntegral {
        values: vec![0.0; ncomp],
        errors: vec![0.0; ncomp],
        evaluations: 0,
        edge_mass: 0.0,
        final_window: *traj.window(),
        depth_limited: false,
    };
    for &stop in &breaks {
        while traj.time() < stop * (1.0 - 1e-15) {
            let t0 = traj.time();
            let span = (stop - t0).min(traj.max_step());
            let basis = traj.step(span)?;
            integrand.begin_step(&basis);
            let active: Vec<bool> = horizons.iter().map(|h| *h >= stop).collect();
            local_adaptive(&basis, 0.0, span, integrand, &active, opts, 0, &mut out);
        }
    }
    out.edge_mass = traj.edge_mass();
    out.final_window = *traj.window();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn local_adaptive<I: StepIntegrand>(
    basis: &StepBasis,
    a: f64,
    b: f64,
    integrand: &I,
    active: &[bool],
    opts: &DynamicsOptions,
    depth: usize,
    out: &mut TimeIntegral,
) {
    let ncomp = integrand.ncomp();
    let nodes = gk15_nodes(a, b);
    let values: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&tau| {
            let mut v = vec![0.0; ncomp];
            integrand.eval(basis, tau, &mut v);
            v
        })
        .collect();
    out.evaluations += 15;
    let (k, e) = gk15_combine(a, b, &values, ncomp);
    let floor = opts.abs_density * (b - a);
    // Tolerance relative to the piece itself or to the average accumulated so
    // far over a span of the same length, whichever is larger: pieces that are
    // negligible against the running total are not resolved to full precision.
    let elapsed = basis.t0 + a;
    let ok = (0..ncomp).all(|c| {
        let mut scale = k[c].abs();
        if elapsed > 0.0 {
            scale = scale.max(out.values[c].abs() * (b - a) / elapsed);
        }
        !active[c] || e[c] <= opts.quadrature_tol * scale + floor
    });
    if ok || depth >= opts.max_depth {
        if !ok {
            out.depth_limited = true;
        }
        for c in 0..ncomp {
            if active[c] {
                out.values[c] += k[c];
                out.errors[c] += e[c];
            }
        }
        return;
    }
    let mid = 0.5 * (a + b);
    local_adaptive(basis, a, mid, integrand, active, opts, depth + 1, out);
    local_adaptive(basis, mid, b, integrand, active, opts, depth + 1, out);
}

/// `|n|^p` with exact integer powers.
pub(crate) fn site_power(n: i64, p: f64) -> f64 {
    let x = n.unsigned_abs() as f64;
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_vector_basics() {
        let w = Window::finite(-2, 2).unwrap();
        let amps: Vec<Complex64> = [0.0, 1.0, 0.0, 2.0, 0.0]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let phi = StateVector::new(w, amps).unwrap();
        assert_eq!(phi.support_radius(), 1);
        assert!((phi.norm() - 5f64.sqrt()).abs() < 1e-15);
        let r = phi.reflected();
        assert_eq!(r.get(1), Complex64::new(1.0, 0.0));
        assert_eq!(r.get(-1), Complex64::new(2.0, 0.0));
        assert_eq!(phi.padded_window(3), Window::finite(-4, 4).unwrap());
        assert!(phi.embed(&Window::finite(0, 5).unwrap()).is_err());
        assert_eq!(phi.embed(&Window::finite(-1, 1).unwrap()).unwrap().len(), 3);
    }

    #[test]
    fn site_powers() {
        assert_eq!(site_power(0, 0.0), 1.0);
        assert_eq!(site_power(0, 2.0), 0.0);
        assert_eq!(site_power(-3, 4.0), 81.0);
        assert!((site_power(4, 0.5) - 2.0).abs() < 1e-15);
    }
}
