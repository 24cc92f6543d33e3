//! Chebyshev expansion of `exp(-i s H)` on banded windows that grow with the
//! wave packet.
//!
//! With `H' = H / r` and `sigma(H) in [-r, r]`,
//! `exp(-i s H) = sum_k (2 - delta_k0) (-i)^k J_k(r s) T_k(H')`.
//! The vectors `T_k(H') psi` are kept for one step, which gives the state at
//! any intermediate time of that step for the cost of one weighted sum.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice_operator::{spectrum_bound, OperatorSpec, Window};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `J_0(x), ..., J_kmax(x)` by Miller's backward recurrence, normalised with
/// `J_0 + 2 sum_{k>=1} J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = kmax.max(ax as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let mut next = 0.0f64; // J_{k+1}
    let mut cur = 1e-300f64; // J_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        // `cur` now holds J_{k-1}.
        let idx = k - 1;
        if idx <= kmax {
            out[idx] = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Number of Chebyshev terms needed for argument `x`: the first `k > x` with
/// `|J_k(x)| < 1e-18`, plus one.
pub fn chebyshev_order(x: f64) -> usize {
    let guess = (x.abs() + 12.0 * x.abs().cbrt() + 30.0) as usize;
    let j = bessel_j_sequence(x, guess);
    for k in (x.abs().ceil() as usize)..=guess {
        if j[k].abs() < 1e-18 && j.get(k + 1).is_none_or(|v| v.abs() < 1e-18) {
            return k + 1;
        }
    }
    guess + 1
}

/// `H` on a window in a form suited to repeated matrix-vector products.
#[derive(Debug, Clone)]
pub struct BandedHamiltonian {
    window: Window,
    diag: Vec<f64>,
    /// `(d, H(i, i + d))` for every non-zero off-diagonal.
    hops: Vec<(isize, Complex64)>,
}

impl BandedHamiltonian {
    pub fn new(spec: &OperatorSpec, window: &Window) -> Result<Self> {
        let diag = window
            .sites()
            .map(|n| spec.diagonal_at(n))
            .collect::<Result<Vec<_>>>()?;
        let r = spec.bandwidth() as isize;
        let hops = (-r..=r)
            .filter(|&d| d != 0)
            .map(|d| (d, spec.hopping(-(d as i64))))
            .filter(|(_, h)| h.norm() != 0.0)
            .collect();
        Ok(Self {
            window: *window,
            diag,
            hops,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn reach(&self) -> usize {
        self.hops
            .iter()
            .map(|(d, _)| d.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// `y = alpha H x + beta z`.
    pub fn apply(
        &self,
        x: &[Complex64],
        alpha: f64,
        z: Option<(&[Complex64], f64)>,
        y: &mut [Complex64],
    ) {
        self.apply_rows(x, alpha, z, y, 0..x.len());
    }

    /// As [`apply`](Self::apply) for the rows in `rows` only; other rows of `y` are untouched.
    pub fn apply_rows(
        &self,
        x: &[Complex64],
        alpha: f64,
        z: Option<(&[Complex64], f64)>,
        y: &mut [Complex64],
        rows: Range<usize>,
    ) {
        let n = x.len();
        let start = rows.start;
        y[rows]
            .par_chunks_mut(4096)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = start + c * 4096;
                for (o, yi) in chunk.iter_mut().enumerate() {
                    let i = base + o;
                    let mut s = x[i] * self.diag[i];
                    for &(d, h) in &self.hops {
                        let j = i as isize + d;
                        if j >= 0 && (j as usize) < n {
                            s += h * x[j as usize];
                        }
                    }
                    let mut v = s * alpha;
                    if let Some((zv, beta)) = z {
                        v += zv[i] * beta;
                    }
                    *yi = v;
                }
            });
    }
}

/// Amplitudes below this fraction of the largest one are set to zero, which
/// keeps exponentially small tails from spreading the support.
const FLUSH_RATIO: f64 = 1e-150;

fn flush_negligible(x: &mut [Complex64]) {
    let max = x.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let cut = max * FLUSH_RATIO * FLUSH_RATIO;
    for v in x.iter_mut() {
        if v.norm_sqr() < cut {
            *v = ZERO;
        }
    }
}

/// Smallest index range holding every non-zero entry.
fn nonzero_range(x: &[Complex64]) -> Range<usize> {
    let first = x.iter().position(|v| *v != ZERO);
    match first {
        None => 0..0,
        Some(a) => {
            let b = x.iter().rposition(|v| *v != ZERO).expect("nonempty");
            a..b + 1
        }
    }
}

/// Coefficients of `exp(-i tau H)` in the basis `T_k(H / r)`.
pub fn propagator_coefficients(r: f64, tau: f64, order: usize) -> Vec<Complex64> {
    let j = bessel_j_sequence(r * tau, order.saturating_sub(1));
    let mut phase = Complex64::new(1.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    j.iter()
        .enumerate()
        .map(|(k, &jk)| {
            let c = phase * jk * if k == 0 { 1.0 } else { 2.0 };
            phase *= minus_i;
            c
        })
        .collect()
}

/// The vectors `T_k(H / r) psi(t0)` of one step.
#[derive(Debug, Clone)]
pub struct StepBasis {
    pub t0: f64,
    pub span: f64,
    pub window: Window,
    radius: f64,
    vectors: Vec<Vec<Complex64>>,
    support: Range<usize>,
}

impl StepBasis {
    pub fn order(&self) -> usize {
        self.vectors.len()
    }

    /// Window positions outside which every basis vector vanishes.
    pub fn support(&self) -> Range<usize> {
        self.support.clone()
    }

    /// `psi(t0 + tau)` restricted to [`support`](Self::support).
    pub fn support_state_at(&self, tau: f64) -> Vec<Complex64> {
        let coef = propagator_coefficients(self.radius, tau, self.order());
        let mut out = vec![ZERO; self.support.len()];
        for (c, v) in coef.iter().zip(&self.vectors) {
            if c.norm() == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(&v[self.support.clone()]) {
                *o += c * x;
            }
        }
        out
    }

    /// `psi(t0 + tau)` for `0 <= tau <= span`.
    pub fn state_at(&self, tau: f64) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.window.size()];
        out[self.support.clone()].copy_from_slice(&self.support_state_at(tau));
        out
    }

    /// Amplitudes of `psi(t0 + tau)` at the given window positions only.
    pub fn amplitudes_at(&self, tau: f64, idx: &[usize]) -> Vec<Complex64> {
        let coef = propagator_coefficients(self.radius, tau, self.order());
        idx.iter()
            .map(|&i| coef.iter().zip(&self.vectors).map(|(c, v)| c * v[i]).sum())
            .collect()
    }
}

/// Options for a [`Trajectory`].
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOptions {
    /// Target `r * step`, the Bessel argument per step.
    pub step_argument: f64,
    /// Largest amplitude norm tolerated in the outer strip of the window
    /// before it is enlarged.
    pub edge_amplitude_tol: f64,
    /// Window size limit.
    pub max_sites: usize,
    /// Keep the initial window; the truncated operator is then the object.
    pub fixed_window: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            step_argument: 20.0,
            edge_amplitude_tol: 1e-14,
            max_sites: 1 << 21,
            fixed_window: false,
        }
    }
}

/// A state evolved step by step under `exp(-i t H)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    spec: OperatorSpec,
    ham: BandedHamiltonian,
    psi: Vec<Complex64>,
    t: f64,
    radius: f64,
    order: usize,
    step: f64,
    opts: TrajectoryOptions,
    /// Largest squared amplitude norm found in the outer strip before a step.
    edge_mass: f64,
}

impl Trajectory {
    pub fn new(
        spec: &OperatorSpec,
        window: Window,
        psi: Vec<Complex64>,
        opts: TrajectoryOptions,
    ) -> Result<Self> {
        if psi.len() != window.size() {
            return Err(Error::arg("psi", "length differs from the window size"));
        }
        let k = spectrum_bound(spec) - 1.0;
        let radius = if k > 0.0 { k } else { 1.0 };
        let step = opts.step_argument / radius;
        let order = chebyshev_order(opts.step_argument);
        Ok(Self {
            spec: spec.clone(),
            ham: BandedHamiltonian::new(spec, &window)?,
            psi,
            t: 0.0,
            radius,
            order,
            step,
            opts,
            edge_mass: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn window(&self) -> &Window {
        self.ham.window()
    }

    pub fn state(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn max_step(&self) -> f64 {
        self.step
    }

    pub fn edge_mass(&self) -> f64 {
        self.edge_mass
    }

    /// Sites a single step can move amplitude by.
    fn strip(&self) -> usize {
        self.order * self.ham.reach().max(1) + 1
    }

    fn edge_masses(&self) -> (f64, f64) {
        let n = self.psi.len();
        let w = self.strip().min(n);
        let left = self.psi[..w].iter().map(|v| v.norm_sqr()).sum();
        let right = self.psi[n - w..].iter().map(|v| v.norm_sqr()).sum();
        (left, right)
    }

    fn grow(&mut self, left: usize, right: usize) -> Result<()> {
        let w = *self.window();
        let size = w.size() + left + right;
        if size > self.opts.max_sites {
            return Err(Error::WindowTooSmall(format!(
                "wave packet needs more than {} sites at t = {:.3}",
                self.opts.max_sites, self.t
            )));
        }
        let nw = Window::with_intent(w.lo() - left as i64, w.hi() + right as i64, w.intent())?;
        let mut psi = vec![ZERO; size];
        psi[left..left + w.size()].copy_from_slice(&self.psi);
        self.psi = psi;
        self.ham = BandedHamiltonian::new(&self.spec, &nw)?;
        Ok(())
    }

    /// Make sure a step cannot carry amplitude past the window edge.
    fn ensure_room(&mut self) -> Result<()> {
        let tol = self.opts.edge_amplitude_tol * self.opts.edge_amplitude_tol;
        loop {
            let (l, r) = self.edge_masses();
            if self.opts.fixed_window || (l <= tol && r <= tol) {
                self.edge_mass = self.edge_mass.max(l.max(r));
                return Ok(());
            }
            let add = (4 * self.strip()).max(self.psi.len() / 4);
            self.grow(if l > tol { add } else { 0 }, if r > tol { add } else { 0 })?;
        }
    }

    /// Advance by `span <= max_step()` and return the basis for dense output
    /// over the step.
    pub fn step(&mut self, span: f64) -> Result<StepBasis> {
        if !(span > 0.0) || span > self.step * (1.0 + 1e-12) {
            return Err(Error::arg(
                "span",
                format!("must lie in (0, {}]", self.step),
            ));
        }
        self.ensure_room()?;
        let n = self.psi.len();
        let inv_r = 1.0 / self.radius;
        let reach = self.ham.reach();
        let src = nonzero_range(&self.psi);
        let widen = |r: &Range<usize>| {
            if r.is_empty() {
                r.clone()
            } else {
                r.start.saturating_sub(reach)..(r.end + reach).min(n)
            }
        };
        let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(self.order);
        vectors.push(self.psi.clone());
        let mut rows = src;
        if self.order > 1 {
            rows = widen(&rows);
            let mut v1 = vec![ZERO; n];
            self.ham
                .apply_rows(&vectors[0], inv_r, None, &mut v1, rows.clone());
            vectors.push(v1);
        }
        for k in 2..self.order {
            rows = widen(&rows);
            let mut vk = vec![ZERO; n];
            self.ham.apply_rows(
                &vectors[k - 1],
                2.0 * inv_r,
                Some((&vectors[k - 2], -1.0)),
                &mut vk,
                rows.clone(),
            );
            vectors.push(vk);
        }
        let basis = StepBasis {
            t0: self.t,
            span,
            window: *self.window(),
            radius: self.radius,
            vectors,
            support: rows,
        };
        self.psi = basis.state_at(span);
        flush_negligible(&mut self.psi);
        self.t += span;
        Ok(basis)
    }

    /// Advance to time `t_end` without dense output.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end {
            let span = (t_end - self.t).min(self.step);
            self.step(span)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_operator::{assemble, PotentialLaw};
    use crate::linalg::HermitianEigen;

    #[test]
    fn bessel_reference_values() {
        // Reference values from an independent Bessel implementation.
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j[2] - 0.114_903_484_931_900_5).abs() < 1e-15);
        let j = bessel_j_sequence(20.0, 30);
        assert!((j[0] - 0.167_024_664_340_583_2).abs() < 1e-14);
        assert!((j[30] - 1.240_153_636_035_431e-4).abs() < 1e-15);
    }

    #[test]
    fn propagates_like_dense_exponential() {
        let spec = OperatorSpec::long_range_cosine(0.7);
        let w = Window::finite(-30, 30).unwrap();
        let mut psi = vec![ZERO; w.size()];
        psi[w.index(0).unwrap()] = Complex64::new(1.0, 0.0);
        let opts = TrajectoryOptions {
            fixed_window: true,
            ..Default::default()
        };
        let mut traj = Trajectory::new(&spec, w, psi.clone(), opts).unwrap();
        let t = 7.3;
        traj.advance_to(t).unwrap();

        let h = assemble(&spec, &w).unwrap();
        let eig = HermitianEigen::new(&h).unwrap();
        let u = &eig.eigenvectors;
        let c = u.adjoint() * nalgebra::DVector::from_vec(psi);
        let ph = nalgebra::DVector::from_fn(c.len(), |k, _| {
            c[k] * Complex64::new(0.0, -eig.eigenvalues[k] * t).exp()
        });
        let exact = u * ph;
        for i in 0..w.size() {
            assert!((traj.state()[i] - exact[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn window_grows_with_the_packet() {
        let spec = OperatorSpec::free_laplacian();
        let w = Window::finite(-2, 2).unwrap();
        let mut psi = vec![ZERO; 5];
        psi[2] = Complex64::new(1.0, 0.0);
        let mut traj = Trajectory::new(&spec, w, psi, TrajectoryOptions::default()).unwrap();
        traj.advance_to(50.0).unwrap();
        assert!(traj.window().size() > 200);
        let norm: f64 = traj.state().iter().map(|v| v.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        // Free evolution from the origin: psi_n(t) = (-i)^n J_n(2t).
        let j = bessel_j_sequence(100.0, 10);
        let i0 = traj.window().index(0).unwrap();
        assert!((traj.state()[i0].norm() - j[0].abs()).abs() < 1e-12);
        assert!((traj.state()[i0 + 7].norm() - j[7].abs()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_operator_only_rotates_phase() {
        let spec = OperatorSpec::diagonal(PotentialLaw::constant(0.0));
        let w = Window::finite(0, 0).unwrap();
        let mut traj = Trajectory::new(
            &spec,
            w,
            vec![Complex64::new(1.0, 0.0)],
            TrajectoryOptions::default(),
        )
        .unwrap();
        traj.advance_to(3.0).unwrap();
        let i0 = traj.window().index(0).unwrap();
        assert!((traj.state()[i0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
