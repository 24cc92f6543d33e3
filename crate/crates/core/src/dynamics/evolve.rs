use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DVector;
use num_complex::Complex64;

use super::{DynamicsOptions, StateVector};
use crate::error::{Error, Result};
use crate::lattice_operator::{assemble, OperatorSpec, Window, WindowIntent};
use crate::linalg::HermitianEigen;

/// Largest window handled by dense eigendecomposition.
pub const MAX_DENSE_SITES: usize = 4096;

const CACHE_CAPACITY: usize = 8;

/// Eigendecompositions keyed by `(spec, window)`, shared across threads.
pub struct SpectralCache {
    map: RwLock<HashMap<(String, i64, i64), Arc<HermitianEigen>>>,
}

impl SpectralCache {
    pub fn global() -> &'static SpectralCache {
        static CACHE: OnceLock<SpectralCache> = OnceLock::new();
        CACHE.get_or_init(|| SpectralCache {
            map: RwLock::new(HashMap::new()),
        })
    }

    pub fn get(&self, spec: &OperatorSpec, window: &Window) -> Result<Arc<HermitianEigen>> {
        if window.size() > MAX_DENSE_SITES {
            return Err(Error::WindowTooSmall(format!(
                "{} sites exceed the dense limit of {MAX_DENSE_SITES}",
                window.size()
            )));
        }
        let key = (serde_json::to_string(spec)?, window.lo(), window.hi());
        if let Some(e) = self.map.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(e));
        }
        let eig = Arc::new(HermitianEigen::new(&assemble(spec, window)?)?);
        let mut map = self.map.write().expect("cache lock");
        if map.len() >= CACHE_CAPACITY {
            map.clear();
        }
        Ok(Arc::clone(map.entry(key).or_insert(eig)))
    }
}

/// Distance beyond `K1 + v t` outside which the probability is negligible:
/// the front of a ballistic packet has an Airy tail of width `~ (v t)^{1/3}`.
pub fn light_cone_guard(v_max: f64, t: f64, radius: usize) -> f64 {
    8.0 * (v_max * t).cbrt() + 2.0 * radius as f64 + 8.0
}

fn propagate(eig: &HermitianEigen, psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let u = &eig.eigenvectors;
    let c = u.adjoint() * DVector::from_column_slice(psi);
    let phased = DVector::from_fn(c.len(), |k, _| {
        c[k] * Complex64::new(0.0, -eig.eigenvalues[k] * t).exp()
    });
    (u * phased).iter().copied().collect()
}

fn edge_probability(psi: &[Complex64], width: usize) -> f64 {
    let n = psi.len();
    let w = width.min(n / 2);
    psi[..w]
        .iter()
        .chain(&psi[n - w..])
        .map(|v| v.norm_sqr())
        .sum()
}

/// `exp(-i t H) phi` by dense eigendecomposition of `H` on `window`.
///
/// A `finite` window is the object itself. For truncated intents the
/// probability within `2 R + 8` sites of either edge must stay below
/// `leak_tol`; otherwise the window is doubled once and the evolution redone.
pub fn evolve(
    spec: &OperatorSpec,
    window: &Window,
    phi: &StateVector,
    t: f64,
    opts: &DynamicsOptions,
) -> Result<StateVector> {
    if !t.is_finite() {
        return Err(Error::arg("t", "must be finite"));
    }
    let mut w = *window;
    for attempt in 0..2 {
        let psi0 = phi.embed(&w)?;
        let eig = SpectralCache::global().get(spec, &w)?;
        let psi = propagate(&eig, &psi0, t);
        if w.intent() == WindowIntent::Finite {
            return StateVector::new(w, psi);
        }
        let leak = edge_probability(&psi, (spec.bandwidth() + 4).min(w.size() / 4));
        if leak <= opts.leak_tol {
            return StateVector::new(w, psi);
        }
        if attempt == 0 {
            let extra = (w.size() / 2) as i64 + 1;
            w = Window::with_intent(w.lo() - extra, w.hi() + extra, w.intent())?;
        } else {
            return Err(Error::WindowTooSmall(format!(
                "probability {leak:.3e} near the edge of [{}, {}] after enlargement",
                w.lo(),
                w.hi()
            )));
        }
    }
    unreachable!("loop returns on its second pass")
}
