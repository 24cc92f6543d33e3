use std::io::Write;

use super::{Correlator, ExponentEstimate, MomentSeries};
use crate::error::Result;

/// Columns `p, T, value, error_bar`, one row per grid point.
pub fn write_moment_csv<W: Write>(out: W, series: &[MomentSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "T", "value", "error_bar"])?;
    for s in series {
        for ((t, v), e) in s.t_grid.iter().zip(&s.values).zip(&s.error_bars) {
            w.write_record([fmt(s.p), fmt(*t), fmt(*v), fmt(*e)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `j, n, T, a_time, a_energy, residual`.
pub fn write_correlator_csv<W: Write>(out: W, rows: &[Correlator]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "n", "T", "a_time", "a_energy", "residual"])?;
    for c in rows {
        w.write_record([
            c.j.to_string(),
            c.n.to_string(),
            fmt(c.t),
            fmt(c.a_time),
            fmt(c.a_energy),
            fmt(c.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON array of `{p, beta_hat, fit_window, residual, ...}`.
pub fn write_exponent_json<W: Write>(mut out: W, estimates: &[ExponentEstimate]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, estimates)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Shortest round-trip representation, so equal values give equal bytes.
fn fmt(x: f64) -> String {
    format!("{x:e}")
}
