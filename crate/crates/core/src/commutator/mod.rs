//! Weighted momentum operators `(X u)_n = n^p sum_k gamma_k u_{n-k}`, their
//! commutators with the free hopping operator, and the growth of
//! `|| X e^{-itH} phi ||` that bounds transport from above.

mod growth;
mod weights;

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

pub use growth::{heisenberg_moment_growth, write_growth_csv, GrowthOptions, GrowthReport};
pub use weights::{EnvelopeFit, WeightSequence};

use crate::error::{Error, Result};
use crate::lattice_operator::{HoppingKernel, Window};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The bracket used throughout: `[B1, B2] = B2 B1 - B1 B2`.
pub const BRACKET_CONVENTION: &str = "[B1, B2] = B2 B1 - B1 B2";

/// `[b1, b2]` in the convention of [`BRACKET_CONVENTION`].
pub fn bracket(b1: &DMatrix<Complex64>, b2: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    b2 * b1 - b1 * b2
}

/// `X^gamma` of order `p`: `(X u)_n = n^p sum_k gamma_k u_{n-k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumOperator {
    pub order: u32,
    pub weights: WeightSequence,
}

impl MomentumOperator {
    pub fn new(order: u32, weights: WeightSequence) -> Self {
        Self { order, weights }
    }

    /// `X u` on `window`, taking `u = 0` outside it.
    pub fn apply(&self, window: &Window, u: &[Complex64]) -> Vec<Complex64> {
        let n = window.size();
        (0..n)
            .map(|i| {
                let site = window.site(i);
                let s: Complex64 = self
                    .weights
                    .iter()
                    .filter_map(|(k, g)| {
                        let j = i as i64 - k;
                        (0..n as i64).contains(&j).then(|| g * u[j as usize])
                    })
                    .sum();
                s * (site as f64).powi(self.order as i32)
            })
            .collect()
    }
}

/// `M[i][j] = (lo + i)^p gamma_{i - j}`.
pub fn momentum_matrix(op: &MomentumOperator, window: &Window) -> DMatrix<Complex64> {
    let n = window.size();
    DMatrix::from_fn(n, n, |i, j| {
        let site = window.site(i) as f64;
        op.weights.get(i as i64 - j as i64) * site.powi(op.order as i32)
    })
}

fn free_matrix(kernel: &[(i64, Complex64)], window: &Window) -> DMatrix<Complex64> {
    let n = window.size();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        for &(l, a) in kernel {
            let j = i as i64 - l;
            if (0..n as i64).contains(&j) {
                m[(i, j as usize)] += a;
            }
        }
    }
    m
}

fn binomial(p: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (p - i) as f64 / (i + 1) as f64)
}

/// `gamma^j_m = i binom(p, j) sum_l (-l)^{p-j} a_l gamma_{m-l}` for `j < p`.
pub(crate) fn decompose_entries(
    kernel: &[(i64, Complex64)],
    gamma: &WeightSequence,
    p: u32,
) -> Result<Vec<WeightSequence>> {
    if p == 0 {
        return Err(Error::arg("p", "decomposition needs p >= 1"));
    }
    let ra = kernel
        .iter()
        .map(|(l, _)| l.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let r = (ra + gamma.radius()) as i64;
    let rate = kernel_rate(kernel).min(gamma.c_rate);
    (0..p)
        .map(|j| {
            let c = Complex64::new(0.0, binomial(p, j));
            let q = (p - j) as i32;
            let entries = (-r..=r)
                .map(|m| {
                    let s: Complex64 = kernel
                        .iter()
                        .map(|&(l, a)| a * gamma.get(m - l) * (-(l as f64)).powi(q))
                        .sum();
                    c * s
                })
                .collect();
            WeightSequence::new(entries, rate)
        })
        .collect()
}

fn kernel_rate(kernel: &[(i64, Complex64)]) -> f64 {
    let pts: Vec<(f64, f64)> = kernel
        .iter()
        .filter(|(l, a)| *l > 0 && a.norm() > 0.0)
        .map(|(l, a)| (*l as f64, a.norm().ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    crate::fit::linear_fit(&xs, &ys).map_or(0.0, |f| (-f.slope).max(0.0))
}

fn kernel_pairs(kernel: &HoppingKernel, coupling: f64) -> Vec<(i64, Complex64)> {
    kernel
        .iter()
        .filter(|(_, a)| a.norm() != 0.0)
        .map(|(l, a)| (l, a * coupling))
        .collect()
}

/// Sequences `gamma^0..gamma^{p-1}` with `-i [H0, X^gamma_p] = sum_j X^{gamma^j}_j`,
/// `H0` the hopping operator of `kernel`.
pub fn commutator_decompose(
    kernel: &HoppingKernel,
    gamma: &WeightSequence,
    p: u32,
) -> Result<Vec<WeightSequence>> {
    decompose_entries(&kernel_pairs(kernel, 1.0), gamma, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorResidual {
    pub p: u32,
    /// Largest interior entry of `-i[H0, X] - sum_j X^{gamma^j}_j`.
    pub absolute: f64,
    /// `absolute` divided by the largest interior entry of `-i[H0, X]`.
    pub relative: f64,
    pub collar: usize,
    pub interior: (i64, i64),
}

/// Residual of the decomposition on the rows of `window` at least
/// `kernel radius + weight radius` sites from either edge.
pub fn commutator_residual(
    kernel: &HoppingKernel,
    gamma: &WeightSequence,
    p: u32,
    window: &Window,
) -> Result<CommutatorResidual> {
    let pairs = kernel_pairs(kernel, 1.0);
    let parts = decompose_entries(&pairs, gamma, p)?;
    let collar = kernel.radius() + gamma.radius();
    if 2 * collar >= window.size() {
        return Err(Error::WindowTooSmall(format!(
            "collar {collar} leaves no interior in {} sites",
            window.size()
        )));
    }
    let x = momentum_matrix(&MomentumOperator::new(p, gamma.clone()), window);
    let h0 = free_matrix(&pairs, window);
    let hat = bracket(&h0, &x) * Complex64::new(0.0, -1.0);
    let mut sum = DMatrix::from_element(window.size(), window.size(), ZERO);
    for (j, g) in parts.into_iter().enumerate() {
        sum += momentum_matrix(&MomentumOperator::new(j as u32, g), window);
    }
    let rows = collar..window.size() - collar;
    let mut absolute: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in rows.clone() {
        for j in 0..window.size() {
            absolute = absolute.max((hat[(i, j)] - sum[(i, j)]).norm());
            scale = scale.max(hat[(i, j)].norm());
        }
    }
    Ok(CommutatorResidual {
        p,
        absolute,
        relative: if scale > 0.0 {
            absolute / scale
        } else {
            absolute
        },
        collar,
        interior: (window.site(rows.start), window.site(rows.end - 1)),
    })
}

#[derive(Serialize)]
struct DecompositionLine {
    j: usize,
    offsets: Vec<i64>,
    values: Vec<[f64; 2]>,
    envelope: Option<EnvelopeFit>,
}

/// One JSON object per line: `{j, offsets, values, envelope}` for each nonzero entry set.
pub fn write_decomposition_jsonl<W: Write>(mut out: W, parts: &[WeightSequence]) -> Result<()> {
    for (j, g) in parts.iter().enumerate() {
        let (offsets, values): (Vec<i64>, Vec<[f64; 2]>) = g
            .iter()
            .filter(|(_, v)| v.norm() != 0.0)
            .map(|(k, v)| (k, [v.re, v.im]))
            .unzip();
        let line = DecompositionLine {
            j,
            offsets,
            values,
            envelope: g.envelope_fit(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
