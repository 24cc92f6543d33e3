use serde::Serialize;

use super::{Energy, GreensSolver};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::lattice_operator::{spectrum_bound, OperatorSpec, Window};

/// Decay of `|G(j, n)|` away from the spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct CombesThomasReport {
    pub energy: Energy,
    pub j: i64,
    /// `-slope` of `ln |G(j, n)|` against `|n - j|`; infinite when every entry vanishes.
    pub decay_rate_fit: f64,
    pub residual: f64,
    pub points: usize,
    pub pass: bool,
}

/// Fit the exponential decay of `G(j, n)` for `n` in `n_range` and require a
/// rate of at least `c_ct`.
///
/// Requires `|E| >= K`, which puts `z` at distance at least 1 from the
/// spectrum. The Green's function is taken on a window extending `pad`
/// sites past `j` and `n_range` on both sides.
pub fn combes_thomas_check(
    spec: &OperatorSpec,
    z: Energy,
    j: i64,
    n_range: (i64, i64),
    c_ct: f64,
    pad: i64,
) -> Result<CombesThomasReport> {
    let k = spectrum_bound(spec);
    if z.e.abs() < k {
        return Err(Error::Precondition(format!(
            "|E| = {} is below the spectral bound K = {k:.6}",
            z.e.abs()
        )));
    }
    if !(c_ct > 0.0) {
        return Err(Error::arg("c_ct", "must be positive"));
    }
    let (a, b) = n_range;
    if a > b {
        return Err(Error::EmptyWindow { lo: a, hi: b });
    }
    let window = Window::finite(j.min(a) - pad, j.max(b) + pad)?;
    let solver = GreensSolver::new(spec, &window, z)?;
    let row = solver.row(j)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in a..=b {
        if n == j {
            continue;
        }
        let v = row[window.index(n).expect("inside window")].norm();
        if v > 0.0 {
            xs.push((n - j).abs() as f64);
            ys.push(v.ln());
        }
    }
    if xs.is_empty() {
        return Ok(CombesThomasReport {
            energy: z,
            j,
            decay_rate_fit: f64::INFINITY,
            residual: 0.0,
            points: 0,
            pass: true,
        });
    }
    let line = linear_fit(&xs, &ys)?;
    Ok(CombesThomasReport {
        energy: z,
        j,
        decay_rate_fit: -line.slope,
        residual: line.rms_residual,
        points: xs.len(),
        pass: -line.slope >= c_ct,
    })
}
