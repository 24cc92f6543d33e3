//! Long-range quasiperiodic operators `H = coupling * A + V` on `l^2(Z)`
//! and their finite restrictions.
//!
//! `(H u)_n = coupling * sum_k a_{n-k} u_k + V_n u_n`, where `a` is a
//! Hermitian Toeplitz kernel with exponential decay.

mod diophantine;
mod kernel;
mod potential;
mod window;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use diophantine::{diophantine_check, dist_to_integer, DiophantineParams, DiophantineReport};
pub use kernel::{kernel_decay_fit, DecayFit, HoppingKernel, KERNEL_TAIL_TOL};
pub use potential::{PotentialLaw, TrigPolynomial, GOLDEN_MEAN};
pub use window::{Window, WindowIntent};

use crate::error::Result;
use crate::linalg::BandMatrix;

/// Full description of `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kernel: HoppingKernel,
    pub potential: PotentialLaw,
    pub coupling: f64,
}

impl OperatorSpec {
    pub fn new(kernel: HoppingKernel, potential: PotentialLaw, coupling: f64) -> Self {
        Self {
            kernel,
            potential,
            coupling,
        }
    }

    /// Free nearest-neighbour Laplacian, `a_{±1} = 1`, `V = 0`.
    pub fn free_laplacian() -> Self {
        Self::new(
            HoppingKernel::nearest_neighbor(1.0),
            PotentialLaw::constant(0.0),
            1.0,
        )
    }

    /// Purely diagonal operator with the given potential.
    pub fn diagonal(potential: PotentialLaw) -> Self {
        Self::new(HoppingKernel::zero(), potential, 0.0)
    }

    /// `v = 2 cos(2 pi x)`, golden-mean frequency, `theta = 0`, kernel
    /// `a_n = e^{-|n|}` at the given coupling.
    pub fn long_range_cosine(coupling: f64) -> Self {
        let kernel =
            HoppingKernel::exponential(1.0, 1.0, KERNEL_TAIL_TOL).expect("valid constants");
        let potential = PotentialLaw::quasiperiodic(TrigPolynomial::cosine(2.0), 0.0, GOLDEN_MEAN)
            .expect("golden mean lies in [0,1)");
        Self::new(kernel, potential, coupling)
    }

    /// Matrix element `H(m, n)` for `m != n` (and the kernel part of the diagonal).
    #[inline]
    pub fn hopping(&self, d: i64) -> Complex64 {
        self.kernel.get(d) * self.coupling
    }

    /// Diagonal entry `V_n + coupling * a_0`.
    pub fn diagonal_at(&self, n: i64) -> Result<f64> {
        Ok(self.potential.value(n)? + self.coupling * self.kernel.get(0).re)
    }

    /// Number of non-zero off-diagonals on each side.
    pub fn bandwidth(&self) -> usize {
        if self.coupling == 0.0 {
            0
        } else {
            self.kernel.radius()
        }
    }

    /// `H` is real symmetric (kernel real).
    pub fn is_real(&self) -> bool {
        self.kernel.is_real()
    }

    /// `|coupling| * sum |n a_n|`, a bound on the group velocity.
    pub fn lieb_robinson_speed(&self) -> f64 {
        self.coupling.abs() * self.kernel.first_moment()
    }

    /// Operator reflected about the origin, `u_n -> u_{-n}`.
    pub fn reflected(&self) -> Self {
        Self::new(
            self.kernel.reflected(),
            self.potential.reflected(),
            self.coupling,
        )
    }

    /// `H_Lambda` as a band matrix.
    pub fn band(&self, window: &Window) -> Result<BandMatrix> {
        let n = window.size();
        let r = self.bandwidth().min(n.saturating_sub(1));
        let mut m = BandMatrix::zeros(n, r, r);
        for i in 0..n {
            m.set(i, i, Complex64::new(self.diagonal_at(window.site(i))?, 0.0));
            for d in 1..=r {
                if i + d < n {
                    // M[i][i+d] = coupling * a_{-d}; lower triangle by conjugation.
                    let h = self.hopping(-(d as i64));
                    m.set(i, i + d, h);
                    m.set(i + d, i, h.conj());
                }
            }
        }
        Ok(m)
    }
}

/// Dense matrix of `H` restricted to `window`, built from the upper triangle
/// so that it equals its conjugate transpose bit for bit.
pub fn assemble(spec: &OperatorSpec, window: &Window) -> Result<DMatrix<Complex64>> {
    let n = window.size();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let r = spec.bandwidth();
    for i in 0..n {
        m[(i, i)] = Complex64::new(spec.diagonal_at(window.site(i))?, 0.0);
        for j in (i + 1)..n.min(i + r + 1) {
            let h = spec.hopping(i as i64 - j as i64);
            m[(i, j)] = h;
            m[(j, i)] = h.conj();
        }
    }
    Ok(m)
}

/// `K = |coupling| sum |a_n| + sup |V| + 1`, so that `sigma(H)` lies in
/// `[-K + 1, K - 1]`.
pub fn spectrum_bound(spec: &OperatorSpec) -> f64 {
    spec.coupling.abs() * spec.kernel.abs_sum() + spec.potential.bound() + 1.0
}
