use serde::Serialize;

use super::{
    integrate_along, light_cone_guard, site_power, DynamicsOptions, StateVector, StepIntegrand,
};
use crate::chebyshev::{StepBasis, Trajectory};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, upper_hull};
use crate::lattice_operator::{OperatorSpec, Window, WindowIntent};

/// `<|X|^p_phi>(T)` over a grid of time scales.
#[derive(Debug, Clone, Serialize)]
pub struct MomentSeries {
    pub p: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Quadrature error + Abel tail bound + edge leak bound.
    pub error_bars: Vec<f64>,
    /// Cut-off time of each Abel integral.
    pub t_max: Vec<f64>,
    /// Integrand evaluations shared by every series of the same run.
    pub nodes: usize,
    /// Largest squared amplitude found in the window's outer strip.
    pub leak: f64,
    pub final_window: (i64, i64),
    /// Some step hit the bisection limit; its error is still in `error_bars`.
    pub depth_limited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbelMoment {
    pub p: f64,
    pub t: f64,
    pub value: f64,
    pub error_bar: f64,
}

struct MomentIntegrand {
    ps: Vec<f64>,
    ts: Vec<f64>,
    window: Option<Window>,
    weights: Vec<Vec<f64>>,
}

impl StepIntegrand for MomentIntegrand {
    fn ncomp(&self) -> usize {
        self.ps.len() * self.ts.len()
    }

    fn begin_step(&mut self, basis: &StepBasis) {
        if self.window != Some(basis.window) {
            self.weights = self
                .ps
                .iter()
                .map(|&p| basis.window.sites().map(|n| site_power(n, p)).collect())
                .collect();
            self.window = Some(basis.window);
        }
    }

    fn eval(&self, basis: &StepBasis, tau: f64, out: &mut [f64]) {
        let psi = basis.support_state_at(tau);
        let prob: Vec<f64> = psi.iter().map(|v| v.norm_sqr()).collect();
        let t = basis.t0 + tau;
        let nt = self.ts.len();
        for (pi, w) in self.weights.iter().enumerate() {
            let m: f64 = w[basis.support()]
                .iter()
                .zip(&prob)
                .map(|(a, b)| a * b)
                .sum();
            for (ti, &big_t) in self.ts.iter().enumerate() {
                out[pi * nt + ti] = m * (2.0 / big_t) * (-2.0 * t / big_t).exp();
            }
        }
    }
}

fn check_inputs(ps: &[f64], t_grid: &[f64]) -> Result<()> {
    if ps.is_empty() || t_grid.is_empty() {
        return Err(Error::arg("p/T grid", "must be nonempty"));
    }
    if ps.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::arg("p", "moment orders must be finite and >= 0"));
    }
    if t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::arg("T", "time scales must be finite and positive"));
    }
    Ok(())
}

/// Upper bound on the discarded Abel tail `int_{t_max}^inf (2/T) e^{-2t/T} M_p(t) dt`,
/// assuming `M_p(t) <= |phi|^2 (R0 + v t)^p` with `R0` the support radius plus
/// the light-cone guard.
fn tail_bound(p: f64, big_t: f64, t_max: f64, tail_tol: f64, norm_sq: f64, r0: f64, v: f64) -> f64 {
    let cp = if p > 1.0 { 2f64.powf(p - 1.0) } else { 1.0 };
    // Gamma(p + 1) <= (p + 1)^p for p >= 0.
    let gamma = (p + 1.0).powf(p);
    tail_tol * norm_sq * cp * ((r0 + v * t_max).powf(p) + v.powf(p) * gamma * (0.5 * big_t).powf(p))
}

/// Moments for every `p` in `ps` and `T` in `t_grid` from one trajectory
/// started on `window`.
pub fn abel_moments_on(
    spec: &OperatorSpec,
    phi: &StateVector,
    window: Window,
    ps: &[f64],
    t_grid: &[f64],
    opts: &DynamicsOptions,
) -> Result<Vec<MomentSeries>> {
    check_inputs(ps, t_grid)?;
    let psi0 = phi.embed(&window)?;
    let mut traj = Trajectory::new(spec, window, psi0, opts.trajectory)?;
    let t_max: Vec<f64> = t_grid.iter().map(|&t| opts.abel_horizon(t)).collect();
    let horizons: Vec<f64> = ps.iter().flat_map(|_| t_max.iter().copied()).collect();
    let mut integrand = MomentIntegrand {
        ps: ps.to_vec(),
        ts: t_grid.to_vec(),
        window: None,
        weights: Vec::new(),
    };
    let res = integrate_along(&mut traj, &horizons, &mut integrand, opts)?;
    let v = spec.lieb_robinson_speed();
    let norm_sq = phi.norm() * phi.norm();
    let fw = res.final_window;
    let w_radius = fw.lo().abs().max(fw.hi().abs()) as f64;
    let nt = t_grid.len();
    Ok(ps
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let values = res.values[pi * nt..(pi + 1) * nt].to_vec();
            let error_bars = (0..nt)
                .map(|ti| {
                    let r0 = phi.support_radius() as f64
                        + light_cone_guard(v, t_max[ti], spec.bandwidth());
                    res.errors[pi * nt + ti]
                        + tail_bound(p, t_grid[ti], t_max[ti], opts.abel_tail_tol, norm_sq, r0, v)
                        + res.edge_mass * w_radius.powf(p)
                })
                .collect();
            MomentSeries {
                p,
                t_grid: t_grid.to_vec(),
                values,
                error_bars,
                t_max: t_max.clone(),
                nodes: res.evaluations,
                leak: res.edge_mass,
                final_window: (fw.lo(), fw.hi()),
                depth_limited: res.depth_limited,
            }
        })
        .collect())
}

/// Moments on windows that follow the packet from the support of `phi`.
pub fn abel_moments(
    spec: &OperatorSpec,
    phi: &StateVector,
    ps: &[f64],
    t_grid: &[f64],
    opts: &DynamicsOptions,
) -> Result<Vec<MomentSeries>> {
    let pad = 2 * spec.bandwidth() as i64 + 8;
    let w = phi.padded_window(pad);
    let w = Window::with_intent(w.lo(), w.hi(), WindowIntent::FullLineTruncated)?;
    abel_moments_on(spec, phi, w, ps, t_grid, opts)
}

/// `(2/T) int_0^inf e^{-2t/T} sum_n |n|^p |(e^{-itH} phi, delta_n)|^2 dt`.
pub fn abel_moment(
    spec: &OperatorSpec,
    phi: &StateVector,
    p: f64,
    t: f64,
    opts: &DynamicsOptions,
) -> Result<AbelMoment> {
    let s = abel_moments(spec, phi, &[p], &[t], opts)?.remove(0);
    Ok(AbelMoment {
        p,
        t,
        value: s.values[0],
        error_bar: s.error_bars[0],
    })
}

/// Finite-`T` estimate of the upper transport exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub p: f64,
    /// Slope of `ln <|X|^p>/p` against `ln T` on the upper envelope of the points.
    pub beta_hat: f64,
    /// Ordinary least-squares slope over the same points.
    pub beta_plain: f64,
    pub fit_window: (f64, f64),
    /// RMS residual of the plain fit.
    pub residual: f64,
    pub points: usize,
    /// Every moment in the fit window vanished; `beta_hat = 0` exactly.
    pub exact_zero: bool,
}

pub(crate) fn check_geometric_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 5 {
        return Err(Error::arg(
            "T_grid",
            format!("exponent fit needs at least 5 points, got {}", t_grid.len()),
        ));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::arg("T_grid", "time scales must be positive"));
    }
    let q = t_grid[1] / t_grid[0];
    if !(q > 1.0)
        || t_grid
            .windows(2)
            .any(|w| ((w[1] / w[0]) / q - 1.0).abs() > 1e-6)
    {
        return Err(Error::arg("T_grid", "must be increasing and geometric"));
    }
    Ok(())
}

impl ExponentEstimate {
    /// Fit over the largest decade of the grid, `T in [T_max/10, T_max]`.
    pub fn fit(series: &MomentSeries) -> Result<Self> {
        if !(series.p > 0.0) {
            return Err(Error::arg("p", "exponent needs p > 0"));
        }
        let t_hi = series
            .t_grid
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let t_lo = t_hi / 10.0 * (1.0 - 1e-12);
        let in_window: Vec<(f64, f64)> = series
            .t_grid
            .iter()
            .zip(&series.values)
            .filter(|(t, _)| **t >= t_lo)
            .map(|(t, v)| (*t, *v))
            .collect();
        let fit_window = (
            in_window.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            t_hi,
        );
        let pts: Vec<(f64, f64)> = in_window
            .iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(t, v)| (t.ln(), v.ln() / series.p))
            .collect();
        if pts.is_empty() {
            return Ok(Self {
                p: series.p,
                beta_hat: 0.0,
                beta_plain: 0.0,
                fit_window,
                residual: 0.0,
                points: 0,
                exact_zero: true,
            });
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let plain = linear_fit(&xs, &ys)?;
        let hull = upper_hull(&pts);
        let hx: Vec<f64> = hull.iter().map(|p| p.0).collect();
        let hy: Vec<f64> = hull.iter().map(|p| p.1).collect();
        let envelope = linear_fit(&hx, &hy)?;
        Ok(Self {
            p: series.p,
            beta_hat: envelope.slope,
            beta_plain: plain.slope,
            fit_window,
            residual: plain.rms_residual,
            points: pts.len(),
            exact_zero: false,
        })
    }
}

/// `beta_hat` for one `p` over a geometric `T` grid of at least 5 points.
pub fn transport_exponent(
    spec: &OperatorSpec,
    phi: &StateVector,
    p: f64,
    t_grid: &[f64],
    opts: &DynamicsOptions,
) -> Result<(ExponentEstimate, MomentSeries)> {
    check_geometric_grid(t_grid)?;
    let series = abel_moments(spec, phi, &[p], t_grid, opts)?.remove(0);
    Ok((ExponentEstimate::fit(&series)?, series))
}

#[derive(Debug, Clone, Serialize)]
pub struct BallisticReport {
    pub tolerance: f64,
    pub estimates: Vec<ExponentEstimate>,
    #[serde(skip)]
    pub series: Vec<MomentSeries>,
    pub pass: bool,
}

/// `beta_hat(p) <= 1 + tol` for every `p` in `p_list`.
pub fn ballistic_check(
    spec: &OperatorSpec,
    phi: &StateVector,
    p_list: &[f64],
    t_grid: &[f64],
    tol: f64,
    opts: &DynamicsOptions,
) -> Result<BallisticReport> {
    check_geometric_grid(t_grid)?;
    let series = abel_moments(spec, phi, p_list, t_grid, opts)?;
    let estimates = series
        .iter()
        .map(ExponentEstimate::fit)
        .collect::<Result<Vec<_>>>()?;
    let pass = estimates.iter().all(|e| e.beta_hat <= 1.0 + tol);
    Ok(BallisticReport {
        tolerance: tol,
        estimates,
        series,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub estimates: Vec<ExponentEstimate>,
    #[serde(skip)]
    pub series: Vec<MomentSeries>,
    /// Smallest `beta(p_{i+1}) - beta(p_i)`.
    pub raw_margin: f64,
    /// Smallest `beta(p_{i+1}) - beta(p_i) + residual_i + residual_{i+1} + MONOTONICITY_FLOOR`.
    pub worst_margin: f64,
    pub pass: bool,
}

/// Absolute slack added to the residual slack. Fits over a finite range of
/// `T` carry an offset bias of order `1/ln T` times the subleading term, which
/// can tilt exact-power moments (free hopping) by ~1e-5 with near-zero residuals.
pub const MONOTONICITY_FLOOR: f64 = 1e-3;

/// `beta_hat(p)` nondecreasing in `p` up to the sum of neighbouring fit
/// residuals plus [`MONOTONICITY_FLOOR`].
pub fn beta_monotonicity_check(
    spec: &OperatorSpec,
    phi: &StateVector,
    p_grid: &[f64],
    t_grid: &[f64],
    opts: &DynamicsOptions,
) -> Result<MonotonicityReport> {
    if p_grid.len() < 3 {
        return Err(Error::arg("p_grid", "needs at least 3 orders"));
    }
    check_geometric_grid(t_grid)?;
    let mut ps = p_grid.to_vec();
    ps.sort_by(f64::total_cmp);
    let series = abel_moments(spec, phi, &ps, t_grid, opts)?;
    let estimates = series
        .iter()
        .map(ExponentEstimate::fit)
        .collect::<Result<Vec<_>>>()?;
    let raw_margin = estimates
        .windows(2)
        .map(|w| w[1].beta_hat - w[0].beta_hat)
        .fold(f64::INFINITY, f64::min);
    let worst_margin = estimates
        .windows(2)
        .map(|w| w[1].beta_hat - w[0].beta_hat + w[0].residual + w[1].residual + MONOTONICITY_FLOOR)
        .fold(f64::INFINITY, f64::min);
    Ok(MonotonicityReport {
        estimates,
        series,
        raw_margin,
        worst_margin,
        pass: worst_margin >= 0.0,
    })
}
