//! Gauss-Kronrod (7/15) quadrature for vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod nodes mapped to `[a, b]`, in ascending order.
pub fn gk15_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [0.0; 15];
    for k in 0..7 {
        out[k] = c - h * XGK[k];
        out[14 - k] = c + h * XGK[k];
    }
    out[7] = c;
    out
}

/// Kronrod estimate and `|K - G|` per component from values at [`gk15_nodes`].
pub fn gk15_combine(a: f64, b: f64, values: &[Vec<f64>], ncomp: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; ncomp];
    let mut gauss = vec![0.0; ncomp];
    for c in 0..ncomp {
        let mut k = WGK[7] * values[7][c];
        let mut g = WG[3] * values[7][c];
        for j in 0..7 {
            let pair = values[j][c] + values[14 - j][c];
            k += WGK[j] * pair;
            if j % 2 == 1 {
                g += WG[j / 2] * pair;
            }
        }
        kron[c] = k * h;
        gauss[c] = g * h;
    }
    let err = kron
        .iter()
        .zip(&gauss)
        .map(|(k, g)| (k - g).abs())
        .collect();
    (kron, err)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-300,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
    pub intervals: usize,
    pub converged: bool,
}

impl QuadResult {
    /// Largest `error / max(rel_tol |value|, abs_tol)` over components, in units of the tolerance.
    pub fn worst_relative_error(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.errors)
            .map(|(v, e)| if *v == 0.0 { *e } else { e / v.abs() })
            .fold(0.0, f64::max)
    }
}

struct Piece {
    a: f64,
    b: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
    score: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score)
    }
}

fn eval_piece<F: Fn(f64, &mut [f64]) + Sync>(
    f: &F,
    a: f64,
    b: f64,
    ncomp: usize,
) -> (Vec<f64>, Vec<f64>) {
    let nodes = gk15_nodes(a, b);
    let values: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&x| {
            let mut out = vec![0.0; ncomp];
            f(x, &mut out);
            out
        })
        .collect();
    gk15_combine(a, b, &values, ncomp)
}

/// Globally adaptive integration of `f: R -> R^ncomp` over `[a, b]`.
///
/// Stops when every component satisfies `err <= max(rel_tol |I|, abs_tol)`.
/// The 15 nodes of each piece are evaluated in parallel.
pub fn integrate<F>(f: F, a: f64, b: f64, ncomp: usize, opts: QuadOptions) -> QuadResult
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    integrate_breaks(f, &[a, b], ncomp, opts)
}

/// As [`integrate`], starting from the partition given by `breaks` (ascending).
pub fn integrate_breaks<F>(f: F, breaks: &[f64], ncomp: usize, opts: QuadOptions) -> QuadResult
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    let mut heap = BinaryHeap::new();
    let mut total = vec![0.0; ncomp];
    let mut total_err = vec![0.0; ncomp];
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (values, errors) = eval_piece(&f, w[0], w[1], ncomp);
        evaluations += 15;
        for c in 0..ncomp {
            total[c] += values[c];
            total_err[c] += errors[c];
        }
        heap.push(Piece {
            a: w[0],
            b: w[1],
            values,
            errors,
            score: f64::INFINITY,
        });
    }
    let tol_of = |tot: &[f64], c: usize| (opts.rel_tol * tot[c].abs()).max(opts.abs_tol);
    let mut converged = false;
    loop {
        if (0..ncomp).all(|c| total_err[c] <= tol_of(&total, c)) {
            converged = true;
            break;
        }
        if heap.len() >= opts.max_intervals {
            break;
        }
        let Some(piece) = heap.pop() else { break };
        if piece.score < 0.0 {
            // Every remaining piece is too short to split.
            heap.push(piece);
            break;
        }
        let mid = 0.5 * (piece.a + piece.b);
        if !(mid > piece.a && mid < piece.b) {
            heap.push(Piece {
                score: -1.0,
                ..piece
            });
            continue;
        }
        for c in 0..ncomp {
            total[c] -= piece.values[c];
            total_err[c] -= piece.errors[c];
        }
        for (lo, hi) in [(piece.a, mid), (mid, piece.b)] {
            let (values, errors) = eval_piece(&f, lo, hi, ncomp);
            evaluations += 15;
            for c in 0..ncomp {
                total[c] += values[c];
                total_err[c] += errors[c];
            }
            let score = (0..ncomp)
                .map(|c| errors[c] / tol_of(&total, c))
                .fold(0.0, f64::max);
            heap.push(Piece {
                a: lo,
                b: hi,
                values,
                errors,
                score,
            });
        }
    }
    // Re-sum from the pieces in a fixed order to shed the running-sum rounding.
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut values = vec![0.0; ncomp];
    let mut errors = vec![0.0; ncomp];
    let intervals = pieces.len();
    for p in pieces {
        for c in 0..ncomp {
            values[c] += p.values[c];
            errors[c] += p.errors[c];
        }
    }
    QuadResult {
        values,
        errors,
        evaluations,
        intervals,
        converged,
    }
}

/// `int_a^inf f`, via `x = a + (1 - s) / s` on `s in (0, 1]`.
pub fn integrate_to_infinity<F>(f: F, a: f64, ncomp: usize, opts: QuadOptions) -> QuadResult
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    integrate(
        |s, out| {
            let x = a + (1.0 - s) / s;
            f(x, out);
            let jac = 1.0 / (s * s);
            for v in out.iter_mut() {
                *v *= jac;
            }
        },
        0.0,
        1.0,
        ncomp,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(
            |x, o| o[0] = x.powi(5) - 3.0 * x * x,
            -1.0,
            2.0,
            1,
            QuadOptions::default(),
        );
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.values[0] - exact).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn peaked_integrand_converges() {
        // int_{-1}^{1} eta / (x^2 + eta^2) dx = 2 atan(1/eta)
        let eta = 1e-3;
        let r = integrate(
            |x, o| o[0] = eta / (x * x + eta * eta),
            -1.0,
            1.0,
            1,
            QuadOptions::default(),
        );
        let exact = 2.0 * (1.0 / eta).atan();
        assert!(((r.values[0] - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_lorentzian_tail() {
        let r = integrate_to_infinity(
            |x, o| o[0] = 1.0 / (1.0 + x * x),
            1.0,
            1,
            QuadOptions::default(),
        );
        let exact = std::f64::consts::FRAC_PI_2 - 1.0f64.atan();
        assert!((r.values[0] - exact).abs() < 1e-10);
    }
}
