//! Scenario documents.
//!
//! A scenario is a TOML document with a name, an optional seed and output
//! directory, one `[operator]` table and a list of `[[experiment]]` tables
//! selected by `kind`. Unknown keys are rejected everywhere.
//!
//! ```toml
//! name = "example"
//! seed = 7
//!
//! [operator]
//! coupling = 0.1
//! kernel = { type = "exp", A1 = 1.0, a = 1.0 }          # or "nn", "table"
//! potential = { type = "quasiperiodic", fourier_coeffs = [0.0, 2.0], theta = 0.0, alpha = "golden" }
//!
//! [[experiment]]
//! kind = "exponent_sweep"
//! p = [2.0]
//! t_grid = { min = 100.0, max = 1000.0, points = 7 }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_operator::{
    HoppingKernel, OperatorSpec, PotentialLaw, TrigPolynomial, GOLDEN_MEAN, KERNEL_TAIL_TOL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub operator: OperatorConfig,
    #[serde(rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kernel: KernelConfig,
    pub potential: PotentialConfig,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    /// `a_n = A1 exp(-a |n|)`, cut at `radius` or where the envelope drops
    /// below `tail_tol`.
    Exp {
        #[serde(rename = "A1")]
        a1: f64,
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_tol: Option<f64>,
    },
    /// `a_{±1} = hopping`.
    Nn {
        #[serde(default = "one")]
        hopping: f64,
    },
    /// Explicit entries `[offset, re, im]`; one-sided offsets are mirrored.
    Table {
        #[serde(rename = "A1")]
        a1: f64,
        a: f64,
        entries: Vec<(i64, f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Constant {
        value: f64,
    },
    /// `V_n = v(theta + n alpha)` with `v(x) = sum_k c_k cos(2 pi k x) + sum_k s_k sin(2 pi k x)`.
    Quasiperiodic {
        fourier_coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        sin_coeffs: Vec<f64>,
        theta: f64,
        /// A number in `[0, 1)` or `"golden"`.
        alpha: Frequency,
    },
    /// `V_n = table[n - lo]`, undefined outside.
    Table {
        lo: i64,
        table: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

/// Either an explicit list or `points` values from `min` to `max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Geometric spacing; the default depends on the field (times are geometric).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<bool>,
}

impl Grid {
    pub fn values(&self, log_default: bool) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => {
                let log = r.log.unwrap_or(log_default);
                if r.points == 1 {
                    return vec![r.min];
                }
                let m = (r.points - 1) as f64;
                (0..r.points)
                    .map(|k| {
                        let s = k as f64 / m;
                        if k + 1 == r.points {
                            r.max
                        } else if log {
                            r.min * (r.max / r.min).powf(s)
                        } else {
                            r.min + (r.max - r.min) * s
                        }
                    })
                    .collect()
            }
        }
    }
}

/// How energies in a grid are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyUnit {
    #[default]
    Absolute,
    /// Multiples of the spectrum bound `K`.
    #[serde(rename = "K")]
    K,
}

/// `gamma_k = amp exp(-rate |k|)` for `|k| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    #[serde(default = "one")]
    pub amp: f64,
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default)]
    pub radius: usize,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            amp: 1.0,
            rate: 1.0,
            radius: 0,
        }
    }
}

macro_rules! defaults {
    ($($name:ident: $ty:ty = $v:expr;)*) => {
        $(fn $name() -> $ty { $v })*
    };
}

defaults! {
    d_min_fraction: f64 = 0.8;
    d_target_factor: i64 = 8;
    d_c_pow_grid: Vec<f64> = vec![0.5, 0.625, 0.75, 0.875, 1.0];
    d_trunc_tol: f64 = 1e-12;
    d_pad: i64 = 64;
    d_rate_tol: f64 = 0.05;
    d_tolerance: f64 = 0.05;
    d_window_size: usize = 1024;
    d_site_range: [i64; 2] = [-20, 20];
    d_t_range: [f64; 2] = [5.0, 100.0];
    d_parseval_tol: f64 = 1e-4;
    d_fit_tol: f64 = 0.5;
    d_commutator_tol: f64 = 1e-12;
    d_envelope_slack: f64 = 0.1;
    d_growth_tol: f64 = 0.05;
    d_max_window: usize = 256;
    d_identity_tol: f64 = 1e-8;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    GoodBoxScan(GoodBoxScan),
    BadBoxCount(BadBoxCount),
    Barrier(Barrier),
    CombesThomas(CombesThomas),
    ExponentSweep(ExponentSweep),
    BallisticCheck(BallisticCheck),
    Monotonicity(Monotonicity),
    Parseval(Parseval),
    CorrelatorDecay(CorrelatorDecay),
    CommutatorAudit(CommutatorAudit),
    HeisenbergGrowth(HeisenbergGrowth),
    ResolventIdentity(ResolventIdentity),
}

/// Good boxes in `[N/4, N/2]` and its mirror, per energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodBoxScan {
    pub n: i64,
    pub ell: i64,
    pub delta: f64,
    pub eta: f64,
    pub energies: Grid,
    #[serde(default)]
    pub energy_unit: EnergyUnit,
    /// Fraction of energies that must have at least one good box.
    #[serde(default = "d_min_fraction")]
    pub min_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadBoxCount {
    pub n: i64,
    pub ell: i64,
    pub delta: f64,
    pub delta0: f64,
    pub eta: f64,
    pub energies: Grid,
    #[serde(default)]
    pub energy_unit: EnergyUnit,
}

/// Barrier chains for boxes `[T/4, T/4 + 2 ell]` with target `T = target_factor * ell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Barrier {
    pub ells: Vec<i64>,
    pub energy: f64,
    pub eta: f64,
    pub k1: i64,
    #[serde(default = "d_target_factor")]
    pub target_factor: i64,
    #[serde(default = "d_c_pow_grid")]
    pub c_pow_grid: Vec<f64>,
    #[serde(default = "d_trunc_tol")]
    pub trunc_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombesThomas {
    pub energy: f64,
    pub eta: f64,
    #[serde(default)]
    pub j: i64,
    pub n_range: [i64; 2],
    /// Smallest acceptable fitted rate.
    pub min_rate: f64,
    #[serde(default = "d_pad")]
    pub pad: i64,
    /// Optional reference rate; the fit must then match it within `rate_tol` (relative).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_rate: Option<f64>,
    #[serde(default = "d_rate_tol")]
    pub rate_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSweep {
    pub p: Vec<f64>,
    pub t_grid: Grid,
    #[serde(default)]
    pub site: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallisticCheck {
    pub p: Vec<f64>,
    pub t_grid: Grid,
    #[serde(default)]
    pub site: i64,
    /// `beta_hat <= 1 + tolerance`.
    #[serde(default = "d_tolerance")]
    pub tolerance: f64,
    /// Optional lower sanity bound on every `beta_hat`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monotonicity {
    pub p: Vec<f64>,
    pub t_grid: Grid,
    #[serde(default)]
    pub site: i64,
}

/// Random `(j, n, T)` triples compared on a fixed centred window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parseval {
    pub trials: usize,
    #[serde(default = "d_window_size")]
    pub window_size: usize,
    #[serde(default = "d_site_range")]
    pub site_range: [i64; 2],
    /// `T` is drawn log-uniformly from this range.
    #[serde(default = "d_t_range")]
    pub t_range: [f64; 2],
    #[serde(default = "d_parseval_tol")]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorDecay {
    #[serde(default)]
    pub j: i64,
    pub t: f64,
    pub n_range: [i64; 2],
    #[serde(default = "d_c_pow_grid")]
    pub c_pow_grid: Vec<f64>,
    #[serde(default = "d_fit_tol")]
    pub fit_tol: f64,
}

/// Decomposition residuals for the scenario kernel (trial 0) and for random
/// exponential kernels and weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorAudit {
    pub trials: usize,
    pub p_max: u32,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default = "d_commutator_tol")]
    pub tol: f64,
    #[serde(default = "d_envelope_slack")]
    pub envelope_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergGrowth {
    pub orders: Vec<u32>,
    #[serde(default)]
    pub gamma: GammaConfig,
    pub t_grid: Grid,
    #[serde(default)]
    pub site: i64,
    #[serde(default = "d_growth_tol")]
    pub growth_tol: f64,
}

/// Random windows, split points and energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventIdentity {
    pub trials: usize,
    #[serde(default = "d_max_window")]
    pub max_window: usize,
    #[serde(default = "d_identity_tol")]
    pub tol: f64,
    /// Replace the scenario kernel by a random exponential kernel per trial.
    #[serde(default)]
    pub random_kernels: bool,
    /// Also write each trial's full-window Green's matrix as a binary dump.
    #[serde(default)]
    pub dump_matrices: bool,
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::GoodBoxScan(_) => "good_box_scan",
            Experiment::BadBoxCount(_) => "bad_box_count",
            Experiment::Barrier(_) => "barrier",
            Experiment::CombesThomas(_) => "combes_thomas",
            Experiment::ExponentSweep(_) => "exponent_sweep",
            Experiment::BallisticCheck(_) => "ballistic_check",
            Experiment::Monotonicity(_) => "monotonicity",
            Experiment::Parseval(_) => "parseval",
            Experiment::CorrelatorDecay(_) => "correlator_decay",
            Experiment::CommutatorAudit(_) => "commutator_audit",
            Experiment::HeisenbergGrowth(_) => "heisenberg_growth",
            Experiment::ResolventIdentity(_) => "resolvent_identity",
        }
    }
}

impl OperatorConfig {
    /// Strict parse of a standalone operator table (`coupling`, `kernel`, `potential`).
    pub fn parse(text: &str) -> Result<OperatorConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<OperatorSpec> {
        let kernel = match &self.kernel {
            KernelConfig::Exp {
                a1,
                a,
                radius: Some(r),
                tail_tol: None,
            } => HoppingKernel::exponential_with_radius(*a1, *a, *r)?,
            KernelConfig::Exp {
                radius: Some(_), ..
            } => {
                return Err(Error::Config(
                    "operator.kernel: give `radius` or `tail_tol`, not both".into(),
                ))
            }
            KernelConfig::Exp {
                a1, a, tail_tol, ..
            } => HoppingKernel::exponential(*a1, *a, tail_tol.unwrap_or(KERNEL_TAIL_TOL))?,
            KernelConfig::Nn { hopping } => HoppingKernel::nearest_neighbor(*hopping),
            KernelConfig::Table { a1, a, entries } => {
                let pairs: Vec<_> = entries
                    .iter()
                    .map(|&(n, re, im)| (n, num_complex::Complex64::new(re, im)))
                    .collect();
                HoppingKernel::from_table(&pairs, *a1, *a)?
            }
        };
        let potential = match &self.potential {
            PotentialConfig::Constant { value } => PotentialLaw::constant(*value),
            PotentialConfig::Quasiperiodic {
                fourier_coeffs,
                sin_coeffs,
                theta,
                alpha,
            } => {
                let alpha = match alpha {
                    Frequency::Value(x) => *x,
                    Frequency::Named(s) if s == "golden" => GOLDEN_MEAN,
                    Frequency::Named(s) => {
                        return Err(Error::Config(format!(
                            "operator.potential.alpha: expected a number or \"golden\", got \"{s}\""
                        )))
                    }
                };
                let v = TrigPolynomial {
                    cos: fourier_coeffs.clone(),
                    sin: sin_coeffs.clone(),
                };
                PotentialLaw::quasiperiodic(v, *theta, alpha)?
            }
            PotentialConfig::Table { lo, table } => PotentialLaw::explicit(*lo, table.clone()),
        };
        if !self.coupling.is_finite() {
            return Err(Error::Config("operator.coupling: must be finite".into()));
        }
        Ok(OperatorSpec::new(kernel, potential, self.coupling))
    }
}

/// Collects the first violated constraint with its field path.
struct Checker<'a> {
    prefix: &'a str,
}

impl Checker<'_> {
    fn fail(&self, field: &str, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{}.{field}: {msg}", self.prefix))
    }

    fn positive(&self, field: &str, x: f64) -> Result<()> {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(self.fail(field, format!("must be positive, got {x}")))
        }
    }

    fn open_unit(&self, field: &str, x: f64) -> Result<()> {
        if x > 0.0 && x < 1.0 {
            Ok(())
        } else {
            Err(self.fail(field, format!("must satisfy 0 < {field} < 1, got {x}")))
        }
    }

    fn nonempty<T>(&self, field: &str, v: &[T]) -> Result<()> {
        if v.is_empty() {
            Err(self.fail(field, "must not be empty"))
        } else {
            Ok(())
        }
    }

    fn grid(&self, field: &str, g: &Grid, log_default: bool) -> Result<Vec<f64>> {
        if let Grid::Range(r) = g {
            if r.points == 0 {
                return Err(self.fail(field, "points must be >= 1"));
            }
            if !(r.min <= r.max) {
                return Err(self.fail(field, format!("min {} exceeds max {}", r.min, r.max)));
            }
            if r.log.unwrap_or(log_default) && !(r.min > 0.0) {
                return Err(self.fail(field, "geometric grid needs min > 0"));
            }
        }
        let v = g.values(log_default);
        self.nonempty(field, &v)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(self.fail(field, "values must be finite"));
        }
        Ok(v)
    }

    /// Time grid for an exponent fit: at least 5 increasing positive points.
    fn t_grid(&self, g: &Grid) -> Result<()> {
        let v = self.grid("t_grid", g, true)?;
        if v.len() < 5 {
            return Err(self.fail(
                "t_grid",
                format!("exponent fit needs at least 5 points, got {}", v.len()),
            ));
        }
        if v[0] <= 0.0 || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(self.fail("t_grid", "times must be positive and increasing"));
        }
        Ok(())
    }

    fn orders(&self, p: &[f64]) -> Result<()> {
        self.nonempty("p", p)?;
        for &x in p {
            self.positive("p", x)?;
        }
        Ok(())
    }
}

impl Scenario {
    /// Strict parse of a scenario document.
    pub fn parse(text: &str) -> Result<Scenario> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical document: the effective scenario re-serialized.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Full grid and tolerance sanity without running anything.
    pub fn validate(&self) -> Result<OperatorSpec> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("name: must not be empty".into()));
        }
        let spec = self.operator.build().map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(format!("operator: {other}")),
        })?;
        if self.experiments.is_empty() {
            return Err(Error::Config(
                "experiment: at least one experiment block is required".into(),
            ));
        }
        for (i, e) in self.experiments.iter().enumerate() {
            let prefix = format!("experiment[{i}] ({})", e.kind());
            validate_experiment(e, &Checker { prefix: &prefix })?;
        }
        Ok(spec)
    }
}

fn validate_experiment(e: &Experiment, c: &Checker) -> Result<()> {
    match e {
        Experiment::GoodBoxScan(x) => {
            c.open_unit("delta", x.delta)?;
            c.positive("eta", x.eta)?;
            c.grid("energies", &x.energies, false)?;
            if x.ell < 1 || x.n < 8 * x.ell {
                return Err(c.fail(
                    "ell",
                    format!("need 1 <= ell and N >= 8 ell, got ell={} N={}", x.ell, x.n),
                ));
            }
            if !(x.min_fraction > 0.0 && x.min_fraction <= 1.0) {
                return Err(c.fail("min_fraction", "must lie in (0, 1]"));
            }
        }
        Experiment::BadBoxCount(x) => {
            c.open_unit("delta", x.delta)?;
            c.open_unit("delta0", x.delta0)?;
            c.positive("eta", x.eta)?;
            c.grid("energies", &x.energies, false)?;
            if x.ell < 1 || x.n < 1 {
                return Err(c.fail("ell", "ell and N must be >= 1"));
            }
        }
        Experiment::Barrier(x) => {
            c.nonempty("ells", &x.ells)?;
            if x.ells.iter().any(|&l| l < 1) {
                return Err(c.fail("ells", "every ell must be >= 1"));
            }
            c.positive("eta", x.eta)?;
            if x.k1 < 0 {
                return Err(c.fail("k1", "must be >= 0"));
            }
            if x.target_factor < 8 {
                return Err(c.fail(
                    "target_factor",
                    "must be >= 8 so the box fits in [T/4, T/2]",
                ));
            }
            c.nonempty("c_pow_grid", &x.c_pow_grid)?;
            c.positive("trunc_tol", x.trunc_tol)?;
        }
        Experiment::CombesThomas(x) => {
            c.positive("eta", x.eta)?;
            if x.n_range[0] > x.n_range[1] {
                return Err(c.fail("n_range", "must be increasing"));
            }
            if !(x.min_rate >= 0.0) {
                return Err(c.fail("min_rate", "must be >= 0"));
            }
            c.positive("rate_tol", x.rate_tol)?;
            if x.pad < 0 {
                return Err(c.fail("pad", "must be >= 0"));
            }
        }
        Experiment::ExponentSweep(x) => {
            c.orders(&x.p)?;
            c.t_grid(&x.t_grid)?;
        }
        Experiment::BallisticCheck(x) => {
            c.orders(&x.p)?;
            c.t_grid(&x.t_grid)?;
            c.positive("tolerance", x.tolerance)?;
        }
        Experiment::Monotonicity(x) => {
            c.orders(&x.p)?;
            if x.p.len() < 3 {
                return Err(c.fail("p", "needs at least 3 orders"));
            }
            c.t_grid(&x.t_grid)?;
        }
        Experiment::Parseval(x) => {
            if x.trials == 0 {
                return Err(c.fail("trials", "must be >= 1"));
            }
            if x.window_size < 2 {
                return Err(c.fail("window_size", "must be >= 2"));
            }
            if x.site_range[0] > x.site_range[1] {
                return Err(c.fail("site_range", "must be increasing"));
            }
            let half = (x.window_size / 2) as i64;
            if x.site_range[0] < -half || x.site_range[1] >= half {
                return Err(c.fail("site_range", "must lie inside the window"));
            }
            c.positive("t_range", x.t_range[0])?;
            if x.t_range[1] < x.t_range[0] {
                return Err(c.fail("t_range", "must be increasing"));
            }
            c.positive("rel_tol", x.rel_tol)?;
        }
        Experiment::CorrelatorDecay(x) => {
            c.positive("t", x.t)?;
            if x.n_range[0] > x.n_range[1] || (x.n_range[0]..=x.n_range[1]).contains(&x.j) {
                return Err(c.fail("n_range", "must be increasing and exclude j"));
            }
            c.nonempty("c_pow_grid", &x.c_pow_grid)?;
            for &p in &x.c_pow_grid {
                c.positive("c_pow_grid", p)?;
            }
            c.positive("fit_tol", x.fit_tol)?;
        }
        Experiment::CommutatorAudit(x) => {
            if !(1..=8).contains(&x.p_max) {
                return Err(c.fail("p_max", "must lie in 1..=8"));
            }
            c.positive("tol", x.tol)?;
            check_gamma(c, &x.gamma)?;
        }
        Experiment::HeisenbergGrowth(x) => {
            c.nonempty("orders", &x.orders)?;
            if x.orders.contains(&0) {
                return Err(c.fail("orders", "orders must be >= 1"));
            }
            let v = c.grid("t_grid", &x.t_grid, true)?;
            if v.len() < 2 || v[0] <= 0.0 || v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(c.fail("t_grid", "need at least 2 increasing positive times"));
            }
            c.positive("growth_tol", x.growth_tol)?;
            check_gamma(c, &x.gamma)?;
        }
        Experiment::ResolventIdentity(x) => {
            if x.trials == 0 {
                return Err(c.fail("trials", "must be >= 1"));
            }
            if x.max_window < 4 {
                return Err(c.fail("max_window", "must be >= 4"));
            }
            c.positive("tol", x.tol)?;
        }
    }
    Ok(())
}

fn check_gamma(c: &Checker, g: &GammaConfig) -> Result<()> {
    c.positive("gamma.amp", g.amp)?;
    if !(g.rate >= 0.0) {
        return Err(c.fail("gamma.rate", "must be >= 0"));
    }
    Ok(())
}

/// Apply `key=value` overrides to a parsed document. Keys are dotted paths;
/// numeric segments index arrays (`experiment.0.delta=0.4`). Values are read
/// as TOML values, falling back to a bare string.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}`: expected key=value")))?;
        let value = parse_value(raw.trim());
        let path: Vec<&str> = key.trim().split('.').collect();
        if path.iter().any(|s| s.is_empty()) {
            return Err(Error::Config(format!(
                "override `{item}`: empty key segment"
            )));
        }
        set_path(doc, &path, value)
            .map_err(|m| Error::Config(format!("override `{item}`: {m}")))?;
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(
    table: &mut toml::Table,
    path: &[&str],
    value: toml::Value,
) -> std::result::Result<(), String> {
    let (head, rest) = path.split_first().expect("nonempty path");
    if rest.is_empty() {
        table.insert(head.to_string(), value);
        return Ok(());
    }
    let next = table
        .entry(head.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    set_value(next, rest, value)
}

fn set_value(
    node: &mut toml::Value,
    path: &[&str],
    value: toml::Value,
) -> std::result::Result<(), String> {
    match node {
        toml::Value::Table(t) => set_path(t, path, value),
        toml::Value::Array(a) => {
            let (head, rest) = path.split_first().expect("nonempty path");
            let i: usize = head
                .parse()
                .map_err(|_| format!("`{head}` is not an array index"))?;
            let len = a.len();
            let slot = a
                .get_mut(i)
                .ok_or_else(|| format!("index {i} out of range (len {len})"))?;
            if rest.is_empty() {
                *slot = value;
                Ok(())
            } else {
                set_value(slot, rest, value)
            }
        }
        _ => Err(format!("cannot descend into scalar at `{}`", path[0])),
    }
}
