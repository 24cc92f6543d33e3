//! Band storage, pivot-free band LU and dense Hermitian eigendecomposition.
//!
//! Every matrix factored here has the form `H - z` with `H` Hermitian and
//! `Im z > 0`. Each leading principal block is then invertible and every
//! Schur complement keeps an anti-Hermitian part bounded by `-Im z`, so
//! elimination without pivoting never meets a pivot smaller than `Im z`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square band matrix with `kl` sub- and `ku` super-diagonals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![ZERO; n * (kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            ZERO
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    /// Subtract `z` from the diagonal.
    pub fn shift_diagonal(&mut self, z: Complex64) {
        for i in 0..self.n {
            let o = self.offset(i, i);
            self.data[o] -= z;
        }
    }

    #[inline]
    fn col_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.col_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        for i in 0..self.n {
            for j in self.col_range(i) {
                y[j] += self.get(i, j) * x[i];
            }
        }
        y
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.col_range(i)
                    .map(|j| self.get(i, j).norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// `A = L U` without pivoting, stored in place of `A`.
#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    lu: BandMatrix,
}

/// Maximum absolute residual accepted by refined solves.
pub const SOLVE_TOL: f64 = 1e-10;

impl BandLu {
    pub fn factor(a: BandMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        for k in 0..n {
            let pivot = lu.get(k, k);
            if pivot.norm() == 0.0 || !pivot.is_finite() {
                return Err(Error::ZeroPivot { row: k });
            }
            let inv = pivot.inv();
            let i_end = (k + lu.kl + 1).min(n);
            let j_end = (k + lu.ku + 1).min(n);
            for i in (k + 1)..i_end {
                let oik = lu.offset(i, k);
                let l = lu.data[oik] * inv;
                lu.data[oik] = l;
                if l == ZERO {
                    continue;
                }
                for j in (k + 1)..j_end {
                    let okj = lu.offset(k, j);
                    let oij = lu.offset(i, j);
                    let ukj = lu.data[okj];
                    lu.data[oij] -= l * ukj;
                }
            }
        }
        Ok(Self { a, lu })
    }

    pub fn n(&self) -> usize {
        self.lu.n
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.a
    }

    /// Solve `A x = b` (no refinement).
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let lu = &self.lu;
        let n = lu.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(lu.kl)..i {
                s -= lu.data[lu.offset(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..(i + lu.ku + 1).min(n) {
                s -= lu.data[lu.offset(i, j)] * x[j];
            }
            x[i] = s / lu.data[lu.offset(i, i)];
        }
        x
    }

    /// Solve `A^T x = b` (no refinement). `A^T = U^T L^T`.
    pub fn solve_transpose(&self, b: &[Complex64]) -> Vec<Complex64> {
        let lu = &self.lu;
        let n = lu.n;
        let mut x = b.to_vec();
        // U^T w = b, forward.
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(lu.ku)..i {
                s -= lu.data[lu.offset(j, i)] * x[j];
            }
            x[i] = s / lu.data[lu.offset(i, i)];
        }
        // L^T y = w, backward, unit diagonal.
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..(i + lu.kl + 1).min(n) {
                s -= lu.data[lu.offset(j, i)] * x[j];
            }
            x[i] = s;
        }
        x
    }

    /// Solve with one step of iterative refinement and a residual check.
    pub fn solve_refined(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.refine(b, false)
    }

    pub fn solve_transpose_refined(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.refine(b, true)
    }

    fn refine(&self, b: &[Complex64], transpose: bool) -> Result<Vec<Complex64>> {
        let apply = |x: &[Complex64]| {
            if transpose {
                self.a.matvec_transpose(x)
            } else {
                self.a.matvec(x)
            }
        };
        let solve = |r: &[Complex64]| {
            if transpose {
                self.solve_transpose(r)
            } else {
                self.solve(r)
            }
        };
        let mut x = solve(b);
        let r: Vec<Complex64> = apply(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let d = solve(&r);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        let residual = apply(&x)
            .iter()
            .zip(b)
            .map(|(ax, bi)| (bi - ax).norm())
            .fold(0.0, f64::max);
        if !(residual <= SOLVE_TOL) {
            let xmax = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
            return Err(Error::Solver {
                residual,
                tolerance: SOLVE_TOL,
                condition: self.a.norm_inf() * xmax,
            });
        }
        Ok(x)
    }
}

pub fn unit_vector(n: usize, i: usize) -> Vec<Complex64> {
    let mut e = vec![ZERO; n];
    e[i] = Complex64::new(1.0, 0.0);
    e
}

/// Eigenpairs `H = U diag(lambda) U*` of a dense Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    /// Uses the real symmetric solver when every entry is real.
    pub fn new(m: &DMatrix<Complex64>) -> Result<Self> {
        let real = m.iter().all(|z| z.im == 0.0);
        let (eigenvalues, eigenvectors) = if real {
            let r = m.map(|z| z.re);
            let eig = r.try_symmetric_eigen(f64::EPSILON, 0).ok_or(Error::Eigen)?;
            (
                eig.eigenvalues,
                eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
            )
        } else {
            let eig = m
                .clone()
                .try_symmetric_eigen(f64::EPSILON, 0)
                .ok_or(Error::Eigen)?;
            (eig.eigenvalues, eig.eigenvectors)
        };
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}
