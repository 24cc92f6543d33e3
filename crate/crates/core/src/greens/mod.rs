//! Restricted Green's functions `G_Lambda(z) = (H_Lambda - z)^{-1}` and the
//! diagnostics built on them: good boxes, bad-box counts, the two-block
//! resolvent identity, the three-stage barrier chain and Combes-Thomas decay.

mod barrier;
mod combes_thomas;
mod dump;
mod good_box;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use barrier::{
    barrier_chain, barrier_series, fit_barrier_constants, BarrierCertificate, BarrierConstants,
    BarrierParams, BarrierSeries, StageRecord, Verdict,
};
pub use combes_thomas::{combes_thomas_check, CombesThomasReport};
pub use dump::{read_matrix_dump, write_matrix_dump, DUMP_MAGIC};
pub use good_box::{
    bad_box_count, good_box, scan_good_boxes, BadBoxReport, GoodBoxReport, ScanReport,
};

use crate::error::{Error, Result};
use crate::lattice_operator::{OperatorSpec, Window};
use crate::linalg::{unit_vector, BandLu};

/// Complex energy `z = E + i eta` in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub e: f64,
    pub eta: f64,
}

impl Energy {
    pub fn new(e: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() || !e.is_finite() {
            return Err(Error::arg(
                "eta",
                format!("need finite E and eta > 0, got E={e}, eta={eta}"),
            ));
        }
        Ok(Self { e, eta })
    }

    /// `z = E + i/T`.
    pub fn at_time_scale(e: f64, t: f64) -> Result<Self> {
        Self::new(e, 1.0 / t)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e, self.eta)
    }

    pub fn conj_z(&self) -> Complex64 {
        Complex64::new(self.e, -self.eta)
    }
}

static RESOLVENT_BOUND_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);
static RESOLVENT_BOUND_CHECKS: AtomicUsize = AtomicUsize::new(0);

/// Relative slack on `|G(m, n)| <= 1/eta` for rounding.
pub const RESOLVENT_BOUND_SLACK: f64 = 1e-12;

/// Number of computed Green's function columns, rows or matrices whose largest
/// entry exceeded `1/eta` since process start.
pub fn resolvent_bound_violations() -> usize {
    RESOLVENT_BOUND_VIOLATIONS.load(Ordering::Relaxed)
}

/// Number of resolvent-bound checks performed since process start.
pub fn resolvent_bound_checks() -> usize {
    RESOLVENT_BOUND_CHECKS.load(Ordering::Relaxed)
}

fn record_bound<'a>(values: impl IntoIterator<Item = &'a Complex64>, eta: f64) -> f64 {
    let max = values.into_iter().map(|v| v.norm()).fold(0.0, f64::max);
    RESOLVENT_BOUND_CHECKS.fetch_add(1, Ordering::Relaxed);
    if max > (1.0 + RESOLVENT_BOUND_SLACK) / eta {
        RESOLVENT_BOUND_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
    max
}

/// Factored `H_Lambda - z` serving individual columns and rows of `G_Lambda(z)`.
#[derive(Debug, Clone)]
pub struct GreensSolver {
    window: Window,
    z: Energy,
    lu: BandLu,
}

impl GreensSolver {
    pub fn new(spec: &OperatorSpec, window: &Window, z: Energy) -> Result<Self> {
        let mut a = spec.band(window)?;
        a.shift_diagonal(z.z());
        Ok(Self {
            window: *window,
            z,
            lu: BandLu::factor(a)?,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn energy(&self) -> Energy {
        self.z
    }

    fn index(&self, n: i64) -> Result<usize> {
        self.window.index(n).ok_or_else(|| {
            Error::arg(
                "site",
                format!("{n} outside [{}, {}]", self.window.lo(), self.window.hi()),
            )
        })
    }

    /// `G(., n)` indexed by window position.
    pub fn column(&self, n: i64) -> Result<Vec<Complex64>> {
        let i = self.index(n)?;
        let col = self.lu.solve_refined(&unit_vector(self.window.size(), i))?;
        record_bound(&col, self.z.eta);
        Ok(col)
    }

    /// `G(m, .)` indexed by window position, from `(H - z)^T x = e_m`.
    pub fn row(&self, m: i64) -> Result<Vec<Complex64>> {
        let i = self.index(m)?;
        let row = self
            .lu
            .solve_transpose_refined(&unit_vector(self.window.size(), i))?;
        record_bound(&row, self.z.eta);
        Ok(row)
    }

    /// Solve `(H - z) x = b` for an arbitrary right-hand side.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.lu.solve_refined(b)
    }
}

/// Dense `G_Lambda(z)` indexed by lattice sites.
#[derive(Debug, Clone)]
pub struct GreensMatrix {
    pub window: Window,
    pub z: Energy,
    pub entries: DMatrix<Complex64>,
}

impl GreensMatrix {
    /// `G(m, n)` for lattice sites `m, n`.
    pub fn get(&self, m: i64, n: i64) -> Option<Complex64> {
        Some(self.entries[(self.window.index(m)?, self.window.index(n)?)])
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |G(m, n)| <= 1/eta`.
    pub fn satisfies_resolvent_bound(&self) -> bool {
        self.max_abs() <= (1.0 + RESOLVENT_BOUND_SLACK) / self.z.eta
    }
}

/// Dense Green's function of `H` restricted to `window`.
pub fn greens(spec: &OperatorSpec, window: &Window, z: Energy) -> Result<GreensMatrix> {
    let solver = GreensSolver::new(spec, window, z)?;
    let n = window.size();
    let mut entries = DMatrix::zeros(n, n);
    for (j, site) in window.sites().enumerate() {
        let col = solver.column(site)?;
        entries.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    record_bound(entries.iter(), z.eta);
    Ok(GreensMatrix {
        window: *window,
        z,
        entries,
    })
}

/// Largest violation of the two-block resolvent identity
/// `G_L(m,n) = G_1(m,n) chi_1(n) - sum G_1(m,n1) coupling a_{n1-n2} G_L(n2,n)`
/// over `m` in the left block `[lo, split]` and `n` in the whole window.
pub fn resolvent_identity_residual(
    spec: &OperatorSpec,
    window: &Window,
    split: i64,
    z: Energy,
) -> Result<f64> {
    if split < window.lo() || split >= window.hi() {
        return Err(Error::arg(
            "split",
            format!("{split} must lie in [{}, {})", window.lo(), window.hi()),
        ));
    }
    let left = Window::finite(window.lo(), split)?;
    let g = greens(spec, window, z)?;
    let g1 = greens(spec, &left, z)?;
    let n1 = left.size();
    let n2 = window.size() - n1;
    let r = spec.bandwidth();
    // Coupling block between the two halves; only the last `r` rows of the left
    // block reach across the split.
    let mut gamma = DMatrix::<Complex64>::zeros(n1, n2);
    for i in n1.saturating_sub(r)..n1 {
        for k in 0..n2.min(r) {
            let d = left.site(i) - (split + 1 + k as i64);
            gamma[(i, k)] = spec.hopping(d);
        }
    }
    let g_lower = g.entries.rows(n1, n2);
    let correction = &g1.entries * gamma * g_lower;
    let mut worst: f64 = 0.0;
    for m in 0..n1 {
        for n in 0..window.size() {
            let chi = if n < n1 {
                g1.entries[(m, n)]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let res = g.entries[(m, n)] - chi + correction[(m, n)];
            worst = worst.max(res.norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_operator::{assemble, HoppingKernel, PotentialLaw};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_inverse() {
        let spec = OperatorSpec::diagonal(PotentialLaw::constant(2.0));
        let g = greens(
            &spec,
            &Window::finite(0, 0).unwrap(),
            Energy::new(1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!((g.get(0, 0).unwrap() - c(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn two_site_laplacian_at_i() {
        // H^2 = I gives (H - i)^{-1} = (H + i)/2.
        let g = greens(
            &OperatorSpec::free_laplacian(),
            &Window::finite(0, 1).unwrap(),
            Energy::new(0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!((g.get(0, 1).unwrap() - c(0.5, 0.0)).norm() < 1e-14);
        assert!((g.get(0, 0).unwrap() - c(0.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn matches_dense_inverse_and_is_complex_symmetric() {
        let spec = OperatorSpec::long_range_cosine(0.1);
        let w = Window::finite(5, 68).unwrap();
        let z = Energy::new(0.3, 0.01).unwrap();
        let g = greens(&spec, &w, z).unwrap();
        let mut a = assemble(&spec, &w).unwrap();
        for i in 0..w.size() {
            a[(i, i)] -= z.z();
        }
        let inv = a.try_inverse().unwrap();
        assert!(
            (&g.entries - &inv)
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
                < 1e-9
        );
        assert!(
            (&g.entries - g.entries.transpose())
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
                < 1e-9
        );
        assert!(g.satisfies_resolvent_bound());
    }

    #[test]
    fn resolvent_identity_decoupled_and_coupled() {
        let z = Energy::new(0.5, 0.1).unwrap();
        let diag = OperatorSpec::diagonal(PotentialLaw::explicit(
            0,
            (0..16).map(|i| i as f64 * 0.3).collect(),
        ));
        let w = Window::finite(0, 15).unwrap();
        assert!(resolvent_identity_residual(&diag, &w, 7, z).unwrap() <= 1e-12);

        let nn = OperatorSpec::free_laplacian();
        let w = Window::finite(0, 63).unwrap();
        assert!(resolvent_identity_residual(&nn, &w, 31, z).unwrap() <= 1e-10);

        let lr = OperatorSpec::new(
            HoppingKernel::exponential(1.0, 1.0, 1e-14).unwrap(),
            PotentialLaw::constant(0.0),
            1.0,
        );
        let w = Window::finite(0, 127).unwrap();
        assert!(resolvent_identity_residual(&lr, &w, 63, z).unwrap() <= 1e-9);
    }

    #[test]
    fn solver_rows_and_columns_agree() {
        let spec = OperatorSpec::long_range_cosine(0.4);
        let w = Window::finite(-20, 20).unwrap();
        let s = GreensSolver::new(&spec, &w, Energy::new(-0.7, 0.05).unwrap()).unwrap();
        let col = s.column(3).unwrap();
        let row = s.row(-4).unwrap();
        assert!((col[w.index(-4).unwrap()] - row[w.index(3).unwrap()]).norm() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_eta() {
        assert!(Energy::new(0.0, 0.0).is_err());
        assert!(Energy::new(0.0, -1.0).is_err());
    }
}
