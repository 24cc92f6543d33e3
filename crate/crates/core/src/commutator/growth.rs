use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::{decompose_entries, kernel_pairs, MomentumOperator, WeightSequence};
use crate::chebyshev::{StepBasis, Trajectory};
use crate::dynamics::{DynamicsOptions, StateVector};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::lattice_operator::{OperatorSpec, Window, WindowIntent};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthOptions {
    /// The fitted slope of `ln ||X phi_t||` against `ln t` may exceed the
    /// order `N` by `N * growth_tol`.
    pub growth_tol: f64,
    pub dynamics: DynamicsOptions,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            growth_tol: 0.05,
            dynamics: DynamicsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub order: u32,
    pub t_grid: Vec<f64>,
    /// `||X phi_t||` at each grid time.
    pub norms: Vec<f64>,
    pub initial_norm: f64,
    /// `||-i[H0, X] phi_t||` with `H0` the hopping part only.
    pub hat_norms_free: Vec<f64>,
    /// `||-i[H, X] phi_t||` with the full operator.
    pub hat_norms_full: Vec<f64>,
    /// `int_0^t ||-i[H0, X] phi_s|| ds`.
    pub integral_free: Vec<f64>,
    /// `int_0^t ||-i[H, X] phi_s|| ds`.
    pub integral_full: Vec<f64>,
    pub slope: f64,
    pub slope_bound: f64,
    pub pass: bool,
    /// `||X phi_t|| <= ||X phi|| + int_0^t ||-i[H, X] phi_s|| ds` at every grid time.
    pub audit_full: bool,
    /// The same inequality with the free commutator.
    pub audit_free: bool,
}

/// Applies `X`, `-i[H0, X]` and `-i[H, X]` on the window of a state.
struct Probe {
    x: MomentumOperator,
    parts: Vec<MomentumOperator>,
    potential: Vec<f64>,
    window: Option<Window>,
    spec: OperatorSpec,
    bad_site: Option<i64>,
}

impl Probe {
    fn set_window(&mut self, w: &Window) {
        if self.window == Some(*w) {
            return;
        }
        self.potential = w
            .sites()
            .map(|n| match self.spec.diagonal_at(n) {
                Ok(v) => v,
                Err(_) => {
                    self.bad_site.get_or_insert(n);
                    0.0
                }
            })
            .collect();
        self.window = Some(*w);
    }

    /// `(||X u||, ||-i[H0, X] u||, ||-i[H, X] u||)`.
    fn norms(&self, w: &Window, u: &[Complex64]) -> (f64, f64, f64) {
        let xu = self.x.apply(w, u);
        let mut free = vec![Complex64::new(0.0, 0.0); u.len()];
        for part in &self.parts {
            for (f, v) in free.iter_mut().zip(part.apply(w, u)) {
                *f += v;
            }
        }
        // -i (X V - V X) u: (X V u)_n - V_n (X u)_n.
        let vu: Vec<Complex64> = u.iter().zip(&self.potential).map(|(a, v)| a * v).collect();
        let xvu = self.x.apply(w, &vu);
        let full: Vec<Complex64> = free
            .iter()
            .zip(xvu.iter().zip(&xu).zip(&self.potential))
            .map(|(f, ((xv, x), v))| f + Complex64::new(0.0, -1.0) * (xv - x * v))
            .collect();
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (norm(&xu), norm(&free), norm(&full))
    }
}

struct HatIntegrand {
    probe: Probe,
    nt: usize,
}

impl crate::dynamics::StepIntegrand for HatIntegrand {
    fn ncomp(&self) -> usize {
        2 * self.nt
    }

    fn begin_step(&mut self, basis: &StepBasis) {
        self.probe.set_window(&basis.window);
    }

    fn eval(&self, basis: &StepBasis, tau: f64, out: &mut [f64]) {
        let (_, free, full) = self.probe.norms(&basis.window, &basis.state_at(tau));
        for i in 0..self.nt {
            out[i] = free;
            out[self.nt + i] = full;
        }
    }
}

/// Growth of `||X^gamma_N e^{-itH} phi||` over `t_grid`, with the
/// integral audit `X(t) phi = X phi + int_0^t Xhat(s) phi ds`.
pub fn heisenberg_moment_growth(
    spec: &OperatorSpec,
    gamma: &WeightSequence,
    order: u32,
    phi: &StateVector,
    t_grid: &[f64],
    opts: &GrowthOptions,
) -> Result<GrowthReport> {
    if order == 0 {
        return Err(Error::arg("N", "order must be >= 1"));
    }
    if t_grid.len() < 2
        || t_grid.iter().any(|t| !(*t > 0.0))
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::arg(
            "t_grid",
            "need at least 2 increasing positive times",
        ));
    }
    let parts = decompose_entries(&kernel_pairs(&spec.kernel, spec.coupling), gamma, order)?
        .into_iter()
        .enumerate()
        .map(|(j, g)| MomentumOperator::new(j as u32, g))
        .collect();
    let mut probe = Probe {
        x: MomentumOperator::new(order, gamma.clone()),
        parts,
        potential: Vec::new(),
        window: None,
        spec: spec.clone(),
        bad_site: None,
    };
    let pad = (spec.bandwidth() + gamma.radius()) as i64 + 8;
    let w0 = phi.padded_window(pad);
    let w0 = Window::with_intent(w0.lo(), w0.hi(), WindowIntent::FullLineTruncated)?;
    let psi0 = phi.embed(&w0)?;

    let mut traj = Trajectory::new(spec, w0, psi0.clone(), opts.dynamics.trajectory)?;
    probe.set_window(&w0);
    let initial_norm = probe.norms(&w0, &psi0).0;
    let mut norms = Vec::with_capacity(t_grid.len());
    let mut hat_norms_free = Vec::with_capacity(t_grid.len());
    let mut hat_norms_full = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        traj.advance_to(t)?;
        let w = *traj.window();
        probe.set_window(&w);
        let (x, f, h) = probe.norms(&w, traj.state());
        norms.push(x);
        hat_norms_free.push(f);
        hat_norms_full.push(h);
    }

    let mut traj = Trajectory::new(spec, w0, psi0, opts.dynamics.trajectory)?;
    let nt = t_grid.len();
    let mut integrand = HatIntegrand { probe, nt };
    let horizons: Vec<f64> = t_grid.iter().chain(t_grid).copied().collect();
    let integral =
        crate::dynamics::integrate_along(&mut traj, &horizons, &mut integrand, &opts.dynamics)?;
    if let Some(n) = integrand.probe.bad_site {
        return Err(Error::PotentialOutOfRange { site: n });
    }
    let integral_free = integral.values[..nt].to_vec();
    let integral_full = integral.values[nt..].to_vec();

    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(&norms)
        .filter(|(_, n)| **n > 0.0)
        .map(|(t, n)| (t.ln(), n.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&xs, &ys)?.slope
    } else {
        0.0
    };
    let slope_bound = order as f64 * (1.0 + opts.growth_tol);
    let audit = |integ: &[f64], errs: &[f64]| {
        norms
            .iter()
            .zip(integ.iter().zip(errs))
            .all(|(n, (i, e))| *n <= (initial_norm + i + e) * (1.0 + 1e-9) + 1e-12)
    };
    let audit_full = audit(&integral_full, &integral.errors[nt..]);
    let audit_free = audit(&integral_free, &integral.errors[..nt]);
    Ok(GrowthReport {
        order,
        t_grid: t_grid.to_vec(),
        norms,
        initial_norm,
        hat_norms_free,
        hat_norms_full,
        integral_free,
        integral_full,
        slope,
        slope_bound,
        pass: slope <= slope_bound,
        audit_full,
        audit_free,
    })
}

/// Columns `N, t, norm, slope`.
pub fn write_growth_csv<W: Write>(out: W, report: &GrowthReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "t", "norm", "slope"])?;
    for (t, n) in report.t_grid.iter().zip(&report.norms) {
        w.write_record([
            report.order.to_string(),
            format!("{t:e}"),
            format!("{n:e}"),
            format!("{:e}", report.slope),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::StateVector;
    use crate::lattice_operator::PotentialLaw;

    #[test]
    fn diagonal_operator_has_no_growth() {
        let spec = OperatorSpec::diagonal(PotentialLaw::constant(0.4));
        let r = heisenberg_moment_growth(
            &spec,
            &WeightSequence::delta(),
            2,
            &StateVector::delta(3),
            &[1.0, 10.0, 100.0],
            &GrowthOptions::default(),
        )
        .unwrap();
        assert!(r.norms.iter().all(|n| (n - 9.0).abs() < 1e-9));
        assert!(r.slope.abs() < 1e-9 && r.pass && r.audit_full);
    }

    #[test]
    fn free_first_order_is_linear() {
        // sum n^2 J_n(2t)^2 = 2 t^2.
        let r = heisenberg_moment_growth(
            &OperatorSpec::free_laplacian(),
            &WeightSequence::delta(),
            1,
            &StateVector::delta(0),
            &[10.0, 20.0, 40.0, 80.0],
            &GrowthOptions::default(),
        )
        .unwrap();
        for (t, n) in r.t_grid.iter().zip(&r.norms) {
            assert!((n - 2f64.sqrt() * t).abs() < 1e-8 * t, "t={t}: {n}");
        }
        assert!(r.pass && r.audit_full && r.audit_free);
        // -i[H0, X] is the current; its norm on delta_0 evolved stays sqrt(2).
        assert!(r
            .hat_norms_free
            .iter()
            .all(|h| (h - 2f64.sqrt()).abs() < 1e-9));
    }
}
