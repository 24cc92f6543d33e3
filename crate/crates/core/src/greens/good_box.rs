use rayon::prelude::*;
use serde::Serialize;

use super::{greens, Energy};
use crate::error::{Error, Result};
use crate::lattice_operator::{OperatorSpec, Window};

/// Off-diagonal decay test of `G_I` on one interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodBoxReport {
    pub lo: i64,
    pub hi: i64,
    pub energy: Energy,
    pub delta: f64,
    /// `exp(-|I|^delta)` with `|I|` the site count.
    pub threshold: f64,
    /// Minimum tested `|n - n'|`, `ceil(|I| / 20)`.
    pub separation: i64,
    pub max_offdiag: f64,
    pub pass: bool,
    pub witness: (i64, i64),
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(
            "delta",
            format!("must satisfy 0 < delta < 1, got {delta}"),
        ));
    }
    Ok(())
}

/// Is `I` a good box: `|G_I(n, n')| <= exp(-|I|^delta)` whenever
/// `|n - n'| >= |I| / 20`?
pub fn good_box(
    spec: &OperatorSpec,
    interval: &Window,
    z: Energy,
    delta: f64,
) -> Result<GoodBoxReport> {
    check_delta(delta)?;
    let size = interval.size();
    if size < 2 {
        return Err(Error::arg("interval", "needs at least two sites"));
    }
    let g = greens(spec, interval, z)?;
    let threshold = (-(size as f64).powf(delta)).exp();
    let separation = (size as i64 + 19) / 20;
    let mut max_offdiag = 0.0;
    let mut witness = (interval.lo(), interval.hi());
    for i in 0..size {
        for j in 0..size {
            if (i as i64 - j as i64).abs() < separation {
                continue;
            }
            let v = g.entries[(i, j)].norm();
            if v > max_offdiag {
                max_offdiag = v;
                witness = (interval.site(i), interval.site(j));
            }
        }
    }
    Ok(GoodBoxReport {
        lo: interval.lo(),
        hi: interval.hi(),
        energy: z,
        delta,
        threshold,
        separation,
        max_offdiag,
        pass: max_offdiag <= threshold,
        witness,
    })
}

/// All candidate boxes on both sides of the origin.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub n: i64,
    pub ell: i64,
    pub reports: Vec<GoodBoxReport>,
    pub right_pass: bool,
    pub left_pass: bool,
}

impl ScanReport {
    pub fn any_pass(&self) -> bool {
        self.right_pass || self.left_pass
    }

    pub fn passing(&self) -> impl Iterator<Item = &GoodBoxReport> {
        self.reports.iter().filter(|r| r.pass)
    }
}

fn check_scan(n: i64, delta: f64, ell: i64) -> Result<()> {
    check_delta(delta)?;
    if ell < 1 {
        return Err(Error::arg("ell", "must be at least 1"));
    }
    if n < 8 * ell {
        return Err(Error::arg(
            "N",
            format!("need N >= 8 ell, got N={n}, ell={ell}"),
        ));
    }
    if ((2 * ell + 1) as f64) < (n as f64).powf(delta) {
        return Err(Error::arg(
            "ell",
            format!(
                "box of {} sites is smaller than N^delta = {:.2}",
                2 * ell + 1,
                (n as f64).powf(delta)
            ),
        ));
    }
    Ok(())
}

/// Slide `[b - ell, b + ell]` with stride `ell` across `[N/4, N/2]` and its
/// mirror `[-N/2, -N/4]`. Right-side boxes come first, both in increasing `b`.
pub fn scan_good_boxes(
    spec: &OperatorSpec,
    n: i64,
    z: Energy,
    delta: f64,
    ell: i64,
) -> Result<ScanReport> {
    check_scan(n, delta, ell)?;
    let mut centres = Vec::new();
    let (lo, hi) = (n / 4, n / 2);
    let mut b = lo + ell;
    while b + ell <= hi {
        centres.push(b);
        b += ell;
    }
    let mirrored: Vec<i64> = centres.iter().rev().map(|b| -b).collect();
    let right = centres.len();
    centres.extend(mirrored);
    let reports = centres
        .par_iter()
        .map(|&b| good_box(spec, &Window::finite(b - ell, b + ell)?, z, delta))
        .collect::<Result<Vec<_>>>()?;
    let right_pass = reports[..right].iter().any(|r| r.pass);
    let left_pass = reports[right..].iter().any(|r| r.pass);
    Ok(ScanReport {
        n,
        ell,
        reports,
        right_pass,
        left_pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BadBoxReport {
    pub n: i64,
    pub ell: i64,
    pub candidates: usize,
    pub count: usize,
    pub delta0: f64,
    /// `count <= N^{1 - delta0}`.
    pub sublinear_pass: bool,
    /// `1 - ln(count) / ln(N)`, absent when no box fails.
    pub delta0_fit: Option<f64>,
}

/// Count centres `|b| <= N` whose box `[b - ell, b + ell]` is not good.
pub fn bad_box_count(
    spec: &OperatorSpec,
    n: i64,
    z: Energy,
    ell: i64,
    delta: f64,
    delta0: f64,
) -> Result<BadBoxReport> {
    check_scan(n, delta, ell)?;
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(Error::arg("delta0", "must satisfy 0 < delta0 < 1"));
    }
    let fails = (-n..=n)
        .into_par_iter()
        .map(|b| Ok(!good_box(spec, &Window::finite(b - ell, b + ell)?, z, delta)?.pass))
        .collect::<Result<Vec<bool>>>()?;
    let count = fails.iter().filter(|f| **f).count();
    let nf = n as f64;
    Ok(BadBoxReport {
        n,
        ell,
        candidates: fails.len(),
        count,
        delta0,
        sublinear_pass: (count as f64) <= nf.powf(1.0 - delta0),
        delta0_fit: (count >= 1).then(|| 1.0 - (count as f64).ln() / nf.ln()),
    })
}
