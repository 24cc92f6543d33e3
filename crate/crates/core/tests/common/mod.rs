#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qdbounds::lattice_operator::{
    HoppingKernel, OperatorSpec, PotentialLaw, TrigPolynomial, GOLDEN_MEAN,
};

/// Hermitian kernel `|a_n| <= e^{-a|n|}` with random phases, cut where the
/// envelope drops below 1e-14.
pub fn random_kernel(rng: &mut ChaCha8Rng) -> HoppingKernel {
    let a: f64 = rng.random_range(0.5..2.0);
    let radius = (1e14f64.ln() / a).ceil() as i64;
    let mut pairs = vec![(0, Complex64::new(rng.random_range(-1.0..1.0), 0.0))];
    for n in 1..=radius {
        let modulus = rng.random_range(0.0..1.0) * (-a * n as f64).exp();
        pairs.push((
            n,
            Complex64::from_polar(modulus, rng.random_range(0.0..std::f64::consts::TAU)),
        ));
    }
    HoppingKernel::from_table(&pairs, 1.0, a).expect("valid random kernel")
}

pub fn random_potential(rng: &mut ChaCha8Rng) -> PotentialLaw {
    let degree = rng.random_range(1..=3);
    let cos = (0..=degree).map(|_| rng.random_range(-2.0..2.0)).collect();
    let sin = (0..degree).map(|_| rng.random_range(-1.0..1.0)).collect();
    let theta = rng.random_range(0.0..1.0);
    PotentialLaw::quasiperiodic(TrigPolynomial { cos, sin }, theta, GOLDEN_MEAN)
        .expect("valid potential")
}

pub fn random_spec(rng: &mut ChaCha8Rng) -> OperatorSpec {
    let kernel = random_kernel(rng);
    let potential = random_potential(rng);
    OperatorSpec::new(kernel, potential, rng.random_range(0.1..2.0))
}

/// `count` points from `lo` to `hi` with equal ratios.
pub fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}
