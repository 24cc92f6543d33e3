//! Three-stage barrier chain: decay across a good box on a truncated
//! half-line, transfer to the initial support, and the full-line entry
//! `G(j, target)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Energy, GreensSolver};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::lattice_operator::{OperatorSpec, Window, WindowIntent};

/// Bound `C T^{2k} exp(-c_rate s^{c_pow})` for stage `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierConstants {
    pub c_const: f64,
    pub c_rate: f64,
    pub c_pow: f64,
}

impl BarrierConstants {
    pub fn ln_bound(&self, t_power: i32, t: f64, scale: f64) -> f64 {
        self.c_const.ln() + t_power as f64 * t.ln() - self.c_rate * scale.powf(self.c_pow)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub constants: BarrierConstants,
    /// Tolerance that sets the padding beyond the target site.
    pub trunc_tol: f64,
    /// Decay rate assumed when sizing the padding.
    pub c_trunc: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            constants: BarrierConstants {
                c_const: 1.0,
                c_rate: 0.5,
                c_pow: 1.0,
            },
            trunc_tol: 1e-12,
            c_trunc: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Pass only if every verdict passes, fail if any fails.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: u8,
    /// Power of `T` in the bound (2, 4, 6).
    pub t_power: i32,
    /// `ell` for stages 1 and 2, `|target|` for stage 3.
    pub scale: f64,
    pub window_lo: i64,
    pub window_hi: i64,
    pub measured_max: f64,
    pub witness: (i64, i64),
    /// Bound on the change of any measured entry caused by cutting the line.
    pub truncation_budget: f64,
    pub constants: BarrierConstants,
    pub ln_bound: f64,
    pub verdict: Verdict,
}

impl StageRecord {
    /// Re-evaluate the verdict against new constants.
    pub fn judge(&mut self, constants: BarrierConstants, t: f64) {
        self.constants = constants;
        self.ln_bound = constants.ln_bound(self.t_power, t, self.scale);
        let hi = self.measured_max + self.truncation_budget;
        let lo = self.measured_max - self.truncation_budget;
        self.verdict = if hi == 0.0 || hi.ln() <= self.ln_bound {
            Verdict::Pass
        } else if lo > 0.0 && lo.ln() > self.ln_bound {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierCertificate {
    pub lo: i64,
    pub hi: i64,
    pub ell: i64,
    pub energy: Energy,
    pub k1: i64,
    pub target: i64,
    pub stages: Vec<StageRecord>,
    pub verdict: Verdict,
}

impl BarrierCertificate {
    pub fn rejudge(&mut self, constants: &[BarrierConstants; 3]) {
        let t = 1.0 / self.energy.eta;
        for (s, c) in self.stages.iter_mut().zip(constants) {
            s.judge(*c, t);
        }
        self.verdict = Verdict::combine(self.stages.iter().map(|s| s.verdict));
    }
}

/// `(1/eta) |coupling| sum_{n1} |G_t(m, n1)| (sum of |a_k| reaching past the cut)`.
fn cut_budget(
    spec: &OperatorSpec,
    row: &[Complex64],
    left_cut: bool,
    right_cut: bool,
    eta: f64,
) -> f64 {
    let r = spec.bandwidth();
    let n = row.len();
    let kernel = &spec.kernel;
    let mut sum = 0.0;
    for i in 0..n.min(r) {
        if left_cut {
            sum += row[i].norm() * kernel.tail_from(i as i64 + 1);
        }
    }
    for i in n.saturating_sub(r)..n {
        if right_cut {
            sum += row[i].norm() * kernel.tail_from((n - 1 - i) as i64 + 1);
        }
    }
    sum * spec.coupling.abs() / eta
}

struct Measured {
    max: f64,
    witness: (i64, i64),
    budget: f64,
}

/// Maximum `|G(m, n)|` over rows `ms` and admissible columns, with the truncation budget.
fn measure_rows(
    spec: &OperatorSpec,
    solver: &GreensSolver,
    ms: impl Iterator<Item = i64>,
    cols: &dyn Fn(i64) -> Vec<i64>,
    cuts: (bool, bool),
) -> Result<Measured> {
    let w = *solver.window();
    let eta = solver.energy().eta;
    let mut out = Measured {
        max: 0.0,
        witness: (0, 0),
        budget: 0.0,
    };
    let mut first = true;
    for m in ms {
        let row = solver.row(m)?;
        out.budget = out.budget.max(cut_budget(spec, &row, cuts.0, cuts.1, eta));
        for n in cols(m) {
            let v = row[w.index(n).expect("column inside window")].norm();
            if first || v > out.max {
                out.max = v;
                out.witness = (m, n);
                first = false;
            }
        }
    }
    Ok(out)
}

/// Run the three stages for the box `interval = [b - ell, b + ell]`, initial
/// support `|j| <= k1` and target site `target`.
///
/// The box must sit in `[target/4, target/2]` (or its mirror for negative
/// targets). Negative targets are handled by reflecting the operator.
pub fn barrier_chain(
    spec: &OperatorSpec,
    interval: &Window,
    z: Energy,
    k1: i64,
    target: i64,
    params: &BarrierParams,
) -> Result<BarrierCertificate> {
    if target < 0 {
        let mut cert = barrier_chain(
            &spec.reflected(),
            &interval.reflected(),
            z,
            k1,
            -target,
            params,
        )?;
        cert.lo = interval.lo();
        cert.hi = interval.hi();
        cert.target = target;
        for s in cert.stages.iter_mut() {
            s.witness = (-s.witness.0, -s.witness.1);
            (s.window_lo, s.window_hi) = (-s.window_hi, -s.window_lo);
        }
        return Ok(cert);
    }
    if interval.size().is_multiple_of(2) || interval.size() < 3 {
        return Err(Error::arg(
            "interval",
            "needs an odd number of sites, at least 3",
        ));
    }
    let ell = (interval.size() as i64 - 1) / 2;
    let b = interval.lo() + ell;
    if 4 * interval.lo() < target || 2 * interval.hi() > target {
        return Err(Error::arg(
            "interval",
            format!(
                "[{}, {}] must lie inside [target/4, target/2] for target {target}",
                interval.lo(),
                interval.hi()
            ),
        ));
    }
    if k1 < 0 || k1 >= interval.lo() {
        return Err(Error::arg(
            "k1",
            format!("support radius {k1} must be below the box"),
        ));
    }
    if !(params.trunc_tol > 0.0) || !(params.c_trunc > 0.0) {
        return Err(Error::arg("trunc_tol/c_trunc", "must be positive"));
    }
    let eta = z.eta;
    let t = 1.0 / eta;
    let pad = ((1.0 / (eta * params.trunc_tol)).ln() / params.c_trunc)
        .ceil()
        .max(1.0) as i64;
    let d = (ell + 9) / 10;

    // Stages 1 and 2 share the truncated half-line (-inf, b + ell].
    let len = (4 * (b.abs() + ell)).max(target.abs() + pad);
    let half = Window::with_intent(b + ell - len, b + ell, WindowIntent::LeftHalflineTruncated)?;
    let half_solver = GreensSolver::new(spec, &half, z)?;

    let (ilo, ihi) = (interval.lo(), interval.hi());
    let s1 = measure_rows(
        spec,
        &half_solver,
        (b - ell + d)..=(b + ell),
        &|m| (ilo..=ihi).filter(|n| (m - n).abs() >= d).collect(),
        (true, false),
    )?;
    let near_edge = (b + ell - ell / 10)..=(b + ell);
    let s2 = measure_rows(
        spec,
        &half_solver,
        -k1..=k1,
        &|_| near_edge.clone().collect(),
        (true, false),
    )?;

    let full_len = target.abs() + pad;
    let full = Window::with_intent(-full_len, full_len, WindowIntent::FullLineTruncated)?;
    let full_solver = GreensSolver::new(spec, &full, z)?;
    let s3 = measure_rows(
        spec,
        &full_solver,
        -k1..=k1,
        &|_| vec![target],
        (true, true),
    )?;

    let mut stages = Vec::with_capacity(3);
    for (k, (m, w, scale)) in [
        (s1, half, ell as f64),
        (s2, half, ell as f64),
        (s3, full, target.abs() as f64),
    ]
    .into_iter()
    .enumerate()
    {
        let mut rec = StageRecord {
            stage: k as u8 + 1,
            t_power: 2 * (k as i32 + 1),
            scale,
            window_lo: w.lo(),
            window_hi: w.hi(),
            measured_max: m.max,
            witness: m.witness,
            truncation_budget: m.budget,
            constants: params.constants,
            ln_bound: 0.0,
            verdict: Verdict::Inconclusive,
        };
        rec.judge(params.constants, t);
        stages.push(rec);
    }
    let verdict = Verdict::combine(stages.iter().map(|s| s.verdict));
    Ok(BarrierCertificate {
        lo: ilo,
        hi: ihi,
        ell,
        energy: z,
        k1,
        target,
        stages,
        verdict,
    })
}

/// Fit `ln(measured + budget) - t_power ln T = ln C - c_rate s^{c_pow}` over
/// a grid of `c_pow`, keep the smallest residual with `c_rate > 0`, then raise
/// `ln C` to the upper envelope so every sample satisfies its bound.
pub fn fit_barrier_constants(
    records: &[&StageRecord],
    t: f64,
    c_pow_grid: &[f64],
) -> Result<BarrierConstants> {
    let pts: Vec<(f64, f64, i32)> = records
        .iter()
        .filter(|r| r.measured_max + r.truncation_budget > 0.0)
        .map(|r| {
            (
                r.scale,
                (r.measured_max + r.truncation_budget).ln(),
                r.t_power,
            )
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} stage sample(s) with a nonzero maximum",
            pts.len()
        )));
    }
    let mut best: Option<(f64, BarrierConstants)> = None;
    for &c_pow in c_pow_grid {
        let xs: Vec<f64> = pts.iter().map(|p| p.0.powf(c_pow)).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1 - p.2 as f64 * t.ln()).collect();
        let Ok(line) = linear_fit(&xs, &ys) else {
            continue;
        };
        let c_rate = -line.slope;
        if !(c_rate > 0.0) {
            continue;
        }
        let ln_c = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| y + c_rate * x)
            .fold(f64::NEG_INFINITY, f64::max)
            + 1e-9;
        let cand = BarrierConstants {
            c_const: ln_c.exp(),
            c_rate,
            c_pow,
        };
        if best.as_ref().is_none_or(|(r, _)| line.rms_residual < *r) {
            best = Some((line.rms_residual, cand));
        }
    }
    best.map(|b| b.1)
        .ok_or_else(|| Error::DegenerateFit("no c_pow in the grid gives a decaying fit".into()))
}

/// Certificates over several boxes plus per-stage constants fitted to them.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierSeries {
    pub certificates: Vec<BarrierCertificate>,
    pub constants: [BarrierConstants; 3],
}

/// Run [`barrier_chain`] for each `(interval, target)`, fit one set of
/// constants per stage and re-judge every certificate against them.
pub fn barrier_series(
    spec: &OperatorSpec,
    boxes: &[(Window, i64)],
    z: Energy,
    k1: i64,
    params: &BarrierParams,
    c_pow_grid: &[f64],
) -> Result<BarrierSeries> {
    use rayon::prelude::*;
    let mut certificates = boxes
        .par_iter()
        .map(|(w, target)| barrier_chain(spec, w, z, k1, *target, params))
        .collect::<Result<Vec<_>>>()?;
    let t = 1.0 / z.eta;
    let mut constants = [params.constants; 3];
    for (k, c) in constants.iter_mut().enumerate() {
        let recs: Vec<&StageRecord> = certificates.iter().map(|cert| &cert.stages[k]).collect();
        *c = fit_barrier_constants(&recs, t, c_pow_grid)?;
    }
    for cert in certificates.iter_mut() {
        cert.rejudge(&constants);
    }
    Ok(BarrierSeries {
        certificates,
        constants,
    })
}
