//! Acceptance run. Prints one line per criterion and exits non-zero if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdbounds::cli::{self, Experiment, Scenario};
use qdbounds::commutator::{commutator_decompose, commutator_residual, WeightSequence};
use qdbounds::dynamics::{
    ballistic_check, beta_monotonicity_check, correlator_decay_check, DynamicsOptions,
    MonotonicityReport, StateVector,
};
use qdbounds::greens::{
    barrier_series, combes_thomas_check, greens, resolvent_bound_checks,
    resolvent_bound_violations, resolvent_identity_residual, scan_good_boxes, BarrierParams,
    Energy,
};
use qdbounds::lattice_operator::{
    spectrum_bound, HoppingKernel, OperatorSpec, PotentialLaw, Window, KERNEL_TAIL_TOL,
};

use common::{geometric, random_kernel, random_spec};

type Check = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed.as_secs_f64() < limit_s as f64
}

fn t_grid() -> Vec<f64> {
    geometric(100.0, 1000.0, 7)
}

fn localized() -> OperatorSpec {
    OperatorSpec::long_range_cosine(0.1)
}

fn resolvent_identity() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut bound_ok = true;
    for _ in 0..100 {
        let spec = random_spec(&mut rng);
        let size = rng.random_range(2..=256i64);
        let lo = rng.random_range(-200..=200i64);
        let w = Window::finite(lo, lo + size - 1).map_err(err)?;
        let split = rng.random_range(lo..lo + size - 1);
        let k = spectrum_bound(&spec);
        let eta = rng.random_range(0.01f64.ln()..0.0).exp();
        let z = Energy::new(rng.random_range(-k - 1.0..k + 1.0), eta).map_err(err)?;
        worst = worst.max(resolvent_identity_residual(&spec, &w, split, z).map_err(err)?);
        bound_ok &= greens(&spec, &w, z)
            .map_err(err)?
            .satisfies_resolvent_bound();
    }
    let el = start.elapsed();
    Ok((
        worst <= 1e-8 && bound_ok && within(el, 60),
        format!("worst residual {worst:.2e} over 100 random splits"),
    ))
}

fn resolvent_bound() -> Check {
    let checks = resolvent_bound_checks();
    let violations = resolvent_bound_violations();
    Ok((
        checks > 0 && violations == 0,
        format!("{violations} violations in {checks} Green's matrices computed by this run"),
    ))
}

fn parseval() -> Check {
    let exp: Experiment = toml::from_str("kind = \"parseval\"\ntrials = 50").map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, text) in cli::BUNDLED {
        let mut s = cli::load(text, &[]).map_err(err)?;
        s.experiments = vec![exp.clone()];
        let dir = tempfile::tempdir().map_err(err)?;
        let start = Instant::now();
        let m = cli::run(&s, Some(dir.path())).map_err(err)?;
        let el = start.elapsed();
        let rec = &m.experiments[0];
        let worst = rec.summary["worst_relative_residual"].as_f64();
        match (worst, &rec.error) {
            (Some(w), None) => {
                ok &= w <= 1e-4 && rec.summary["trials"] == 50 && within(el, 600);
                parts.push(format!("{name} {w:.1e} ({:.0} s)", el.as_secs_f64()));
            }
            (_, e) => {
                ok = false;
                parts.push(format!("{name} error {e:?}"));
            }
        }
    }
    Ok((
        ok,
        format!("worst relative residual per scenario: {}", parts.join(", ")),
    ))
}

fn commutator() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst: f64 = 0.0;
    let mut min_rate = f64::INFINITY;
    for _ in 0..50 {
        let kernel = random_kernel(&mut rng);
        let gamma = WeightSequence::exponential(
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0..=12),
        )
        .map_err(err)?;
        let collar = (kernel.radius() + gamma.radius()) as i64;
        let w = Window::finite(-2 * collar - 8, 2 * collar + 8).map_err(err)?;
        for p in 1..=4 {
            worst = worst.max(
                commutator_residual(&kernel, &gamma, p, &w)
                    .map_err(err)?
                    .relative,
            );
            for part in commutator_decompose(&kernel, &gamma, p).map_err(err)? {
                if part.is_zero() {
                    continue;
                }
                let rate = part.envelope_fit().map_or(f64::NAN, |f| f.rate);
                min_rate = min_rate.min(rate);
            }
        }
    }
    Ok((
        worst <= 1e-12 && min_rate > 0.0,
        format!("worst relative residual {worst:.1e}, smallest fitted envelope rate {min_rate:.3} over 50 trials, p = 1..4"),
    ))
}

fn ballistic_long_range() -> Check {
    let kernel = HoppingKernel::exponential(1.0, 1.0, KERNEL_TAIL_TOL).map_err(err)?;
    let spec = OperatorSpec::new(kernel, PotentialLaw::constant(0.0), 1.0);
    let start = Instant::now();
    let r = ballistic_check(
        &spec,
        &StateVector::delta(0),
        &[2.0, 4.0],
        &t_grid(),
        0.05,
        &DynamicsOptions::default(),
    )
    .map_err(err)?;
    let el = start.elapsed();
    let sites = r
        .series
        .iter()
        .map(|s| (s.final_window.1 - s.final_window.0 + 1) as usize)
        .min()
        .unwrap_or(0);
    let betas: Vec<String> = r
        .estimates
        .iter()
        .map(|e| format!("{:.4}", e.beta_hat))
        .collect();
    let ok = r.estimates.iter().all(|e| e.beta_hat <= 1.05) && sites >= 2048 && within(el, 900);
    Ok((
        ok,
        format!("beta(2), beta(4) = {} on {sites} sites", betas.join(", ")),
    ))
}

fn free_ballistic(free: &MonotonicityReport) -> Check {
    let sel: Vec<_> = free
        .estimates
        .iter()
        .filter(|e| e.p == 2.0 || e.p == 4.0)
        .collect();
    let ok = sel.len() == 2 && sel.iter().all(|e| (0.9..=1.05).contains(&e.beta_hat));
    let betas: Vec<String> = sel.iter().map(|e| format!("{:.4}", e.beta_hat)).collect();
    Ok((
        ok,
        format!("nearest-neighbour beta(2), beta(4) = {}", betas.join(", ")),
    ))
}

fn localization(loc: &MonotonicityReport, loc_elapsed: Duration) -> Check {
    let start = Instant::now();
    let spec = localized();
    let k = spectrum_bound(&spec);
    let energies: Vec<f64> = (0..21).map(|i| -k + 2.0 * k * i as f64 / 20.0).collect();
    let mut with_box = 0;
    for &e in &energies {
        let scan =
            scan_good_boxes(&spec, 400, Energy::new(e, 0.01).map_err(err)?, 0.3, 5).map_err(err)?;
        with_box += usize::from(scan.any_pass());
    }
    let fraction = with_box as f64 / energies.len() as f64;

    let boxes = [20i64, 40, 80]
        .iter()
        .map(|&ell| {
            let target = 8 * ell;
            let lo = (target + 3) / 4;
            Window::finite(lo, lo + 2 * ell).map(|w| (w, target))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let series = barrier_series(
        &spec,
        &boxes,
        Energy::new(0.3, 0.01).map_err(err)?,
        2,
        &BarrierParams::default(),
        &[0.5, 0.625, 0.75, 0.875, 1.0],
    )
    .map_err(err)?;
    let stage3: Vec<f64> = series
        .certificates
        .iter()
        .map(|c| c.stages[2].measured_max)
        .collect();
    let decreasing = stage3.windows(2).all(|w| w[1] < w[0]);

    let beta2 = loc
        .estimates
        .iter()
        .find(|e| e.p == 2.0)
        .map_or(f64::NAN, |e| e.beta_hat);
    let el = start.elapsed() + loc_elapsed;
    let ok = fraction >= 0.8 && decreasing && beta2 <= 0.15 && within(el, 1800);
    Ok((
        ok,
        format!(
            "(a) good box at {with_box}/21 energies; (b) stage-3 maxima {:.1e}, {:.1e}, {:.1e}; (c) beta(2) = {beta2:.2e}; {:.0} s with the moment sweep",
            stage3[0],
            stage3[1],
            stage3[2],
            el.as_secs_f64()
        ),
    ))
}

fn combes_thomas() -> Check {
    let oracle = 1.5f64.acosh();
    let free = combes_thomas_check(
        &OperatorSpec::free_laplacian(),
        Energy::new(3.0, 0.01).map_err(err)?,
        0,
        (5, 40),
        1e-6,
        64,
    )
    .map_err(err)?;
    let rel = (free.decay_rate_fit - oracle).abs() / oracle;
    let lr_kernel = HoppingKernel::exponential(1.0, 1.0, KERNEL_TAIL_TOL).map_err(err)?;
    let specs = [
        OperatorSpec::new(lr_kernel, PotentialLaw::constant(0.0), 1.0),
        OperatorSpec::long_range_cosine(0.1),
        OperatorSpec::long_range_cosine(1.0),
    ];
    let mut min_rate = f64::INFINITY;
    for spec in &specs {
        let k = spectrum_bound(spec);
        for e in [1.05 * k, -1.05 * k] {
            let r = combes_thomas_check(
                spec,
                Energy::new(e, 0.01).map_err(err)?,
                0,
                (5, 40),
                1e-6,
                64,
            )
            .map_err(err)?;
            min_rate = min_rate.min(r.decay_rate_fit);
        }
    }
    Ok((
        rel <= 0.05 && min_rate > 0.0,
        format!(
            "nearest-neighbour rate {:.5} vs arccosh(1.5) = {oracle:.5} ({:.1e} relative); long-range minimum rate {min_rate:.3}",
            free.decay_rate_fit, rel
        ),
    ))
}

fn correlator_shape() -> Check {
    let r = correlator_decay_check(
        &localized(),
        0,
        100.0,
        (1, 40),
        &[0.5, 0.625, 0.75, 0.875, 1.0],
        0.5,
    )
    .map_err(err)?;
    let good: Vec<_> = r
        .fits
        .iter()
        .filter(|f| f.slope < 0.0 && f.residual <= 0.5)
        .collect();
    let best = good.iter().min_by(|a, b| a.residual.total_cmp(&b.residual));
    Ok((
        !good.is_empty(),
        match best {
            Some(f) => format!(
                "{} of {} exponents fit; best c = {}, slope {:.3}, residual {:.3}",
                good.len(),
                r.fits.len(),
                f.c_pow,
                f.slope,
                f.residual
            ),
            None => {
                "no exponent in [0.5, 1] gives a negative slope within the residual bound".into()
            }
        },
    ))
}

fn monotonicity(free: &MonotonicityReport, loc: &MonotonicityReport) -> Check {
    let show = |r: &MonotonicityReport| {
        r.estimates
            .iter()
            .map(|e| format!("{:.4}", e.beta_hat))
            .collect::<Vec<_>>()
            .join(" <= ")
    };
    Ok((
        free.pass && loc.pass,
        format!(
            "free {} (margin {:.1e}); localized {} (margin {:.1e})",
            show(free),
            free.worst_margin,
            show(loc),
            loc.worst_margin
        ),
    ))
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("run directory") {
        let path = entry.expect("entry").path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, fs::read(&path).expect("csv"));
        }
    }
    out
}

fn determinism() -> Check {
    // The two long scenarios run with shortened time grids and site ranges.
    let short_t = "{ min = 50.0, max = 150.0, points = 5 }";
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("barrier_demo", vec![]),
        ("commutator_audit", vec![]),
        ("parseval_audit", vec![]),
        (
            "free_ballistic",
            vec![
                format!("experiment.0.t_grid={short_t}"),
                format!("experiment.1.t_grid={short_t}"),
            ],
        ),
        (
            "supercritical_localized",
            vec![
                format!("experiment.2.t_grid={short_t}"),
                format!("experiment.3.t_grid={short_t}"),
                "experiment.4.n_range=[1, 8]".into(),
            ],
        ),
    ];
    let mut compared = 0;
    let mut differing = Vec::new();
    for (name, overrides) in &cases {
        let s: Scenario = cli::load(
            cli::bundled(name).ok_or("missing bundled scenario")?,
            overrides,
        )
        .map_err(err)?;
        let (a, b) = (
            tempfile::tempdir().map_err(err)?,
            tempfile::tempdir().map_err(err)?,
        );
        cli::run(&s, Some(a.path())).map_err(err)?;
        cli::run(&s, Some(b.path())).map_err(err)?;
        let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
        if fa.keys().ne(fb.keys()) {
            differing.push(format!("{name}: file sets differ"));
        }
        for (file, bytes) in &fa {
            compared += 1;
            if fb.get(file) != Some(bytes) {
                differing.push(format!("{name}/{file}"));
            }
        }
    }
    Ok((
        differing.is_empty() && compared > 0,
        if differing.is_empty() {
            format!("{compared} CSV files byte-identical across two runs of each bundled scenario")
        } else {
            format!("differing: {}", differing.join(", "))
        },
    ))
}

fn report(id: &str, title: &str, start: Instant, result: Check) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "[{}] {id:>2} {title}: {detail} [{secs:.1} s]",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn main() {
    let mut all = true;
    let mut run = |id: &str, title: &str, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        all &= report(id, title, start, f());
    };

    let opts = DynamicsOptions::default();
    let t = t_grid();
    let phi = StateVector::delta(0);
    let start = Instant::now();
    let free = beta_monotonicity_check(
        &OperatorSpec::free_laplacian(),
        &phi,
        &[1.0, 2.0, 4.0],
        &t,
        &opts,
    );
    let free_elapsed = start.elapsed();
    let start = Instant::now();
    let loc = beta_monotonicity_check(&localized(), &phi, &[1.0, 2.0, 4.0], &t, &opts);
    let loc_elapsed = start.elapsed();
    println!(
        "moment sweeps for p = 1, 2, 4 over T in [100, 1000]: free {:.0} s, localized {:.0} s",
        free_elapsed.as_secs_f64(),
        loc_elapsed.as_secs_f64()
    );

    run("1", "resolvent identity", &mut resolvent_identity);
    run("3", "Parseval audit", &mut parseval);
    run("4", "commutator decomposition", &mut commutator);
    run(
        "5",
        "ballistic bound, long-range kernel",
        &mut ballistic_long_range,
    );
    run(
        "6",
        "ballistic lower sanity, nearest-neighbour",
        &mut || free.as_ref().map_err(err).and_then(free_ballistic),
    );
    run("7", "localization surrogate", &mut || {
        loc.as_ref()
            .map_err(err)
            .and_then(|l| localization(l, loc_elapsed))
    });
    run("8", "Combes-Thomas decay", &mut combes_thomas);
    run("9", "correlator decay shape", &mut correlator_shape);
    run("10", "beta monotone in p", &mut || match (&free, &loc) {
        (Ok(f), Ok(l)) => monotonicity(f, l),
        (Err(e), _) | (_, Err(e)) => Err(err(e)),
    });
    run("11", "determinism", &mut determinism);
    run("2", "resolvent bound", &mut resolvent_bound);

    if !all {
        std::process::exit(1);
    }
}
