mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdbounds::commutator::{
    commutator_decompose, commutator_residual, MomentumOperator, WeightSequence,
};
use qdbounds::dynamics::{abel_moments, evolve, light_cone_guard, DynamicsOptions, StateVector};
use qdbounds::greens::{
    good_box, greens, read_matrix_dump, resolvent_identity_residual, write_matrix_dump, Energy,
};
use qdbounds::lattice_operator::{
    assemble, spectrum_bound, OperatorSpec, PotentialLaw, TrigPolynomial, Window, GOLDEN_MEAN,
};
use qdbounds::linalg::HermitianEigen;

use common::{random_kernel, random_potential, random_spec};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(r: &mut ChaCha8Rng, radius: i64) -> StateVector {
    let w = Window::finite(-radius, radius).unwrap();
    let amps = (0..w.size())
        .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    StateVector::new(w, amps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assembled_matrix_is_exactly_hermitian(seed in any::<u64>(), lo in -300i64..300, size in 1i64..90) {
        let spec = random_spec(&mut rng(seed));
        let m = assemble(&spec, &Window::finite(lo, lo + size - 1).unwrap()).unwrap();
        prop_assert_eq!(&m, &m.adjoint());
    }

    #[test]
    fn constant_potential_assembly_is_translation_invariant(
        seed in any::<u64>(), lo in -300i64..300, size in 1i64..60, shift in -5000i64..5000, v in -3.0f64..3.0,
    ) {
        let mut r = rng(seed);
        let spec = OperatorSpec::new(random_kernel(&mut r), PotentialLaw::constant(v), r.random_range(0.1..2.0));
        let w = Window::finite(lo, lo + size - 1).unwrap();
        prop_assert_eq!(assemble(&spec, &w).unwrap(), assemble(&spec, &w.shifted(shift)).unwrap());
    }

    #[test]
    fn quasiperiodic_potential_is_phase_covariant(
        seed in any::<u64>(), theta in 0.0f64..1.0, alpha in 0.01f64..0.99, lo in -500i64..500,
    ) {
        let mut r = rng(seed);
        let v = match random_potential(&mut r) {
            PotentialLaw::Quasiperiodic { v, .. } => v,
            _ => unreachable!(),
        };
        let a = PotentialLaw::quasiperiodic(v.clone(), theta, alpha).unwrap();
        let b = PotentialLaw::quasiperiodic(v.clone(), (theta + alpha).rem_euclid(1.0), alpha).unwrap();
        // v is Lipschitz with constant 2 pi sum k |c_k|; phases agree to rounding.
        let lip: f64 = 2.0 * std::f64::consts::PI
            * v.cos.iter().chain(&v.sin).enumerate().map(|(k, c)| (k + 1) as f64 * c.abs()).sum::<f64>();
        for n in lo..lo + 20 {
            let (x, y) = (a.value(n + 1).unwrap(), b.value(n).unwrap());
            prop_assert!((x - y).abs() <= lip * 1e-12, "site {n}: {x} vs {y}");
        }
    }

    #[test]
    fn resolvent_bound_holds(seed in any::<u64>(), lo in -100i64..100, size in 1i64..80, eta_exp in -3.0f64..1.0) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r);
        let k = spectrum_bound(&spec);
        let eta = 10f64.powf(eta_exp);
        let z = Energy::new(r.random_range(-k..k), eta).unwrap();
        let g = greens(&spec, &Window::finite(lo, lo + size - 1).unwrap(), z).unwrap();
        prop_assert!(g.max_abs() <= (1.0 / eta) * (1.0 + 1e-10), "{} > {}", g.max_abs(), 1.0 / eta);
        prop_assert!(g.satisfies_resolvent_bound());
    }

    #[test]
    fn two_block_resolvent_identity_is_exact(seed in any::<u64>(), size in 2i64..120, eta_exp in -2.0f64..0.0) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r);
        let lo = r.random_range(-50..50);
        let split = r.random_range(lo..lo + size - 1);
        let k = spectrum_bound(&spec);
        let z = Energy::new(r.random_range(-k..k), 10f64.powf(eta_exp)).unwrap();
        let res = resolvent_identity_residual(&spec, &Window::finite(lo, lo + size - 1).unwrap(), split, z).unwrap();
        prop_assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn matrix_dump_round_trips(seed in any::<u64>(), rows in 0usize..12, cols in 0usize..12) {
        let mut r = rng(seed);
        let m = DMatrix::from_fn(rows, cols, |_, _| Complex64::new(r.random_range(-1e3..1e3), r.random_range(-1e3..1e3)));
        let mut buf = Vec::new();
        write_matrix_dump(&mut buf, &m).unwrap();
        prop_assert_eq!(read_matrix_dump(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn commutator_decomposition_is_exact(seed in any::<u64>(), p in 1u32..=4) {
        let mut r = rng(seed);
        let kernel = random_kernel(&mut r);
        let gamma = WeightSequence::exponential(r.random_range(0.5..2.0), r.random_range(0.5..2.0), r.random_range(0..=10)).unwrap();
        let collar = (kernel.radius() + gamma.radius()) as i64;
        let w = Window::finite(-2 * collar - 4, 2 * collar + 4).unwrap();
        let res = commutator_residual(&kernel, &gamma, p, &w).unwrap();
        prop_assert!(res.relative <= 1e-12, "relative residual {}", res.relative);
        // Orders 0..p-1 only.
        prop_assert_eq!(commutator_decompose(&kernel, &gamma, p).unwrap().len(), p as usize);
    }

    #[test]
    fn momentum_norm_matches_position_moment(seed in any::<u64>(), order in 0u32..=4) {
        let mut r = rng(seed);
        let phi = random_state(&mut r, 12);
        let x = MomentumOperator::new(order, WeightSequence::delta());
        let xu = x.apply(phi.window(), phi.amplitudes());
        let lhs: f64 = xu.iter().map(|v| v.norm_sqr()).sum();
        let rhs: f64 = phi
            .window()
            .sites()
            .map(|n| (n as f64).powi(2 * order as i32) * phi.get(n).norm_sqr())
            .sum();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.max(1.0), "{lhs} vs {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectrum_lies_inside_bound(seed in any::<u64>(), size in 1i64..160) {
        let spec = random_spec(&mut rng(seed));
        let eig = HermitianEigen::new(&assemble(&spec, &Window::finite(0, size - 1).unwrap()).unwrap()).unwrap();
        let k = spectrum_bound(&spec);
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        prop_assert!(top <= k - 1.0 + 1e-10, "{top} > K - 1 = {}", k - 1.0);
    }

    #[test]
    fn decoupled_windows_nest_exactly(seed in any::<u64>(), lo in -50i64..50, inner in 1i64..30, pad in 0i64..20) {
        let mut r = rng(seed);
        let spec = OperatorSpec::new(random_kernel(&mut r), random_potential(&mut r), 0.0);
        let z = Energy::new(r.random_range(-3.0..3.0), 0.05).unwrap();
        let i = Window::finite(lo, lo + inner - 1).unwrap();
        let big = Window::finite(lo - pad, lo + inner - 1 + pad).unwrap();
        let (gi, gb) = (greens(&spec, &i, z).unwrap(), greens(&spec, &big, z).unwrap());
        for m in i.sites() {
            for n in i.sites() {
                prop_assert_eq!(gi.get(m, n), gb.get(m, n));
            }
        }
    }

    #[test]
    fn coupled_windows_differ_by_at_most_the_boundary_term(seed in any::<u64>(), inner in 2i64..30, pad in 1i64..20) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r);
        let eta = 0.2;
        let z = Energy::new(r.random_range(-2.0..2.0), eta).unwrap();
        let i = Window::finite(0, inner - 1).unwrap();
        let big = Window::finite(-pad, inner - 1 + pad).unwrap();
        let (gi, gb) = (greens(&spec, &i, z).unwrap(), greens(&spec, &big, z).unwrap());
        // G_big - (G_I + G_rest) = -G_split Gamma G_big with ||Gamma|| <= |coupling| sum_{n != 0} |a_n|.
        let kernel_sum = spec.kernel.abs_sum() - spec.kernel.get(0).norm();
        let bound = spec.coupling.abs() * kernel_sum / (eta * eta);
        for m in i.sites() {
            for n in i.sites() {
                let d = (gi.get(m, n).unwrap() - gb.get(m, n).unwrap()).norm();
                prop_assert!(d <= bound * (1.0 + 1e-10), "{d} > {bound}");
            }
        }
    }

    #[test]
    fn good_box_verdict_is_reflection_invariant(seed in any::<u64>(), lo in -60i64..60, ell in 2i64..12) {
        let mut r = rng(seed);
        // Real symmetric kernel.
        let a: f64 = r.random_range(0.5..2.0);
        let kernel = qdbounds::lattice_operator::HoppingKernel::exponential(1.0, a, 1e-14).unwrap();
        let spec = OperatorSpec::new(kernel, random_potential(&mut r), r.random_range(0.05..0.5));
        let z = Energy::new(r.random_range(-2.0..2.0), 0.01).unwrap();
        let w = Window::finite(lo, lo + 2 * ell).unwrap();
        let a = good_box(&spec, &w, z, 0.3).unwrap();
        let b = good_box(&spec.reflected(), &w.reflected(), z, 0.3).unwrap();
        let rel = (a.max_offdiag - b.max_offdiag).abs() / a.max_offdiag.max(1e-300);
        prop_assert!(rel <= 1e-6, "{} vs {}", a.max_offdiag, b.max_offdiag);
        if (a.max_offdiag / a.threshold - 1.0).abs() > 1e-6 {
            prop_assert_eq!(a.pass, b.pass);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_is_unitary(seed in any::<u64>(), t in 0.0f64..40.0) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r);
        let phi = random_state(&mut r, 3);
        let w = Window::centered(512).unwrap();
        let out = evolve(&spec, &w, &phi, t, &DynamicsOptions::default()).unwrap();
        prop_assert!((out.norm() - phi.norm()).abs() <= 1e-10 * phi.norm(), "{} vs {}", out.norm(), phi.norm());
    }

    #[test]
    fn probability_stays_inside_the_light_cone(seed in any::<u64>(), t in 1.0f64..30.0) {
        let mut r = rng(seed);
        let spec = OperatorSpec::new(random_kernel(&mut r), random_potential(&mut r), r.random_range(0.1..1.0));
        let k1 = 2;
        let phi = random_state(&mut r, k1);
        let opts = DynamicsOptions::default();
        let w = Window::centered(1024).unwrap();
        let out = evolve(&spec, &w, &phi, t, &opts).unwrap();
        let v = spec.lieb_robinson_speed();
        let reach = k1 as f64 + v * t + light_cone_guard(v, t, spec.kernel.radius());
        let outside: f64 = w
            .sites()
            .filter(|n| (*n as f64).abs() > reach)
            .map(|n| out.get(n).norm_sqr())
            .sum();
        prop_assert!(outside <= opts.leak_tol * phi.norm().powi(2), "mass {outside} beyond {reach}");
    }

    #[test]
    fn moments_scale_quadratically_and_respect_reflection(seed in any::<u64>()) {
        let mut r = rng(seed);
        let kernel = random_kernel(&mut r);
        let v = TrigPolynomial { cos: vec![0.0, 2.0], sin: vec![r.random_range(-0.5..0.5)] };
        let potential = PotentialLaw::quasiperiodic(v, r.random_range(0.0..1.0), GOLDEN_MEAN).unwrap();
        let spec = OperatorSpec::new(kernel, potential, 0.2);
        let phi = random_state(&mut r, 2);
        let opts = DynamicsOptions::default();
        let ts = [5.0, 10.0, 20.0];
        let base = abel_moments(&spec, &phi, &[2.0], &ts, &opts).unwrap().remove(0);
        let twice = abel_moments(&spec, &phi.scaled(Complex64::new(2.0, 0.0)), &[2.0], &ts, &opts).unwrap().remove(0);
        let refl = abel_moments(&spec.reflected(), &phi.reflected(), &[2.0], &ts, &opts).unwrap().remove(0);
        for i in 0..ts.len() {
            let (m, m2, mr) = (base.values[i], twice.values[i], refl.values[i]);
            prop_assert!((m2 - 4.0 * m).abs() <= 1e-5 * m2, "scaling: {m2} vs 4 * {m}");
            prop_assert!((mr - m).abs() <= 1e-5 * m, "reflection: {mr} vs {m}");
        }
        // Same shape, so the same log-log slope.
        let slope = |v: &[f64]| (v[2] / v[0]).ln() / 4f64.ln();
        prop_assert!((slope(&twice.values) - slope(&base.values)).abs() <= 1e-5);
    }
}

#[test]
fn diagonal_operator_nests_bit_for_bit() {
    let spec = OperatorSpec::diagonal(PotentialLaw::constant(0.7));
    let z = Energy::new(0.2, 0.1).unwrap();
    let g1 = greens(&spec, &Window::finite(0, 0).unwrap(), z).unwrap();
    let g2 = greens(&spec, &Window::finite(-5, 5).unwrap(), z).unwrap();
    assert_eq!(g1.get(0, 0), g2.get(0, 0));
    let exact = Complex64::new(1.0, 0.0) / (Complex64::new(0.7, 0.0) - z.z());
    assert!((g1.get(0, 0).unwrap() - exact).norm() <= 1e-15 * exact.norm());
}
