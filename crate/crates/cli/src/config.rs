//! Scenario configuration files (JSON, versioned).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use parabolic_delay::coefficients::{BoundaryKind, CoefficientSet, DelayMap, ScalarField};
use parabolic_delay::propagator::{PropagatorOptions, Scheme};
use parabolic_delay::scenario::{random_history, RandomScenarioOptions, Scenario};
use parabolic_delay::{HistorySegment, SpaceGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer};

pub const SCHEMA_VERSION: u32 = 1;

/// A config problem, reported with the offending field path.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("config field `{field}`: {msg}"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub horizon: f64,
    #[serde(default = "default_p", deserialize_with = "norm_exponent")]
    pub p: f64,
    pub grid: GridSpec,
    pub coefficients: CoefficientsSpec,
    pub delay: DelayMap,
    pub history: HistorySpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub experiments: ExperimentsSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_p() -> f64 {
    2.0
}

/// A number `≥ 1` or one of the strings `"inf"`, `"infinity"`.
fn norm_exponent<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    let p = match Raw::deserialize(d)? {
        Raw::Num(v) => v,
        Raw::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") => f64::INFINITY,
        Raw::Text(s) => return Err(serde::de::Error::custom(format!("unknown norm exponent {s:?}"))),
    };
    if !(p >= 1.0) {
        return Err(serde::de::Error::custom(format!("norm exponent {p} below 1")));
    }
    Ok(p)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
    pub bc: BoundaryKind,
}

/// Coefficients without the parts fixed by the grid and horizon; omitted
/// lower-order terms are zero.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSpec {
    pub a: Vec<Vec<ScalarField>>,
    #[serde(default)]
    pub a_i: Option<Vec<ScalarField>>,
    #[serde(default)]
    pub b: Option<Vec<ScalarField>>,
    #[serde(default)]
    pub c0: Option<ScalarField>,
    #[serde(default)]
    pub c1: Option<ScalarField>,
    #[serde(default)]
    pub d0: Option<ScalarField>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistorySpec {
    /// `u₀ ≡ value`.
    Constant { value: f64 },
    /// `amplitude·(1 + theta_slope·θ)·Π_i φ_{k_i}(x_i)`, with sines on
    /// Dirichlet grids and cosines otherwise.
    Mode {
        k: Vec<u32>,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        theta_slope: f64,
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
    /// Seeded random combination of low modes; the config seed when absent.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
}

fn one() -> f64 {
    1.0
}

fn default_intervals() -> usize {
    50
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    March,
    Picard,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub scheme: Scheme,
    pub dt: f64,
    #[serde(default)]
    pub positivity_safe: Option<bool>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
}

fn default_method() -> Method {
    Method::March
}

fn default_picard_tol() -> f64 {
    1e-10
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentsSpec {
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub smoothing: SmoothingSpec,
    #[serde(default)]
    pub converge_ic: IcSpec,
    #[serde(default)]
    pub converge_coeff: CoeffSpec,
    #[serde(default)]
    pub converge_delay: DelaySpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_cases")]
    pub cases: usize,
    /// Steps spanned by the kernel used for the positivity check.
    #[serde(default = "default_kernel_steps")]
    pub kernel_steps: usize,
}

fn default_cases() -> usize {
    50
}

fn default_kernel_steps() -> usize {
    50
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            cases: default_cases(),
            kernel_steps: default_kernel_steps(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSpec {
    #[serde(default = "default_smoothing_times")]
    pub times: Vec<f64>,
}

fn default_smoothing_times() -> Vec<f64> {
    vec![0.001, 0.002, 0.004, 0.008, 0.016]
}

impl Default for SmoothingSpec {
    fn default() -> Self {
        SmoothingSpec {
            times: default_smoothing_times(),
        }
    }
}

fn default_ladder() -> Vec<u32> {
    vec![4, 8, 16, 32, 64]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcSpec {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

impl Default for IcSpec {
    fn default() -> Self {
        IcSpec {
            epsilons: default_epsilons(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    /// Start of the comparison window; `T/4` when absent.
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default = "default_ladder")]
    pub ms: Vec<u32>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

impl Default for CoeffSpec {
    fn default() -> Self {
        CoeffSpec {
            t1: None,
            ms: default_ladder(),
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySpec {
    #[serde(default = "default_ladder")]
    pub ms: Vec<u32>,
}

impl Default for DelaySpec {
    fn default() -> Self {
        DelaySpec { ms: default_ladder() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_sweep_count")]
    pub count: usize,
    #[serde(default = "default_sweep_cells")]
    pub cells: usize,
    #[serde(default = "default_sweep_dt")]
    pub dt: f64,
    #[serde(default = "default_sweep_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_sweep_coupling")]
    pub max_coupling: f64,
}

fn default_sweep_count() -> usize {
    20
}

fn default_sweep_cells() -> usize {
    32
}

fn default_sweep_dt() -> f64 {
    0.01
}

fn default_sweep_scheme() -> Scheme {
    Scheme::BackwardEuler
}

fn default_sweep_coupling() -> f64 {
    2.0
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            count: default_sweep_count(),
            cells: default_sweep_cells(),
            dt: default_sweep_dt(),
            scheme: default_sweep_scheme(),
            max_coupling: default_sweep_coupling(),
        }
    }
}

impl SweepSpec {
    pub fn random_options(&self, horizon: f64) -> RandomScenarioOptions {
        RandomScenarioOptions {
            cells: self.cells,
            dt: self.dt,
            horizon,
            scheme: self.scheme,
            max_coupling: self.max_coupling,
        }
    }
}

/// Parses a config, reporting the JSON path of the first offending field.
pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        field_error(if path.is_empty() { "." } else { &path }, e.inner())
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(field_error(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
        ));
    }
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(field_error("horizon", "T must be positive"));
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

impl ScenarioConfig {
    pub fn grid(&self) -> Result<SpaceGrid, ConfigError> {
        SpaceGrid::new(self.grid.lengths.clone(), self.grid.cells.clone(), self.grid.bc)
            .map_err(|e| field_error("grid", e))
    }

    pub fn coefficients(&self) -> Result<CoefficientSet, ConfigError> {
        let grid = self.grid()?;
        let dim = grid.dim();
        let spec = &self.coefficients;
        let vector = |field: &str, v: &Option<Vec<ScalarField>>| -> Result<Vec<ScalarField>, ConfigError> {
            match v {
                None => Ok(vec![ScalarField::ZERO; dim]),
                Some(v) if v.len() == dim => Ok(v.clone()),
                Some(v) => Err(field_error(field, format!("{} entries for a {dim}-D grid", v.len()))),
            }
        };
        if spec.a.len() != dim || spec.a.iter().any(|row| row.len() != dim) {
            return Err(field_error("coefficients.a", format!("expected a {dim}×{dim} matrix")));
        }
        let a = CoefficientSet {
            dim,
            domain: grid.lengths.clone(),
            horizon: self.horizon,
            diffusion: spec.a.clone(),
            flux_drift: vector("coefficients.a_i", &spec.a_i)?,
            drift: vector("coefficients.b", &spec.b)?,
            c0: spec.c0.clone().unwrap_or(ScalarField::ZERO),
            c1: spec.c1.clone().unwrap_or(ScalarField::ZERO),
            d0: spec.d0.clone().unwrap_or(ScalarField::ZERO),
            bc: grid.bc,
        };
        a.validate().map_err(|e| field_error("coefficients", e))?;
        Ok(a)
    }

    pub fn delay(&self) -> Result<DelayMap, ConfigError> {
        self.delay.validate().map_err(|e| field_error("delay", e))?;
        Ok(self.delay.clone())
    }

    pub fn options(&self) -> Result<PropagatorOptions, ConfigError> {
        let s = &self.solver;
        if !(s.dt > 0.0 && s.dt <= self.horizon) {
            return Err(field_error("solver.dt", format!("{} outside (0, T]", s.dt)));
        }
        let steps = self.horizon / s.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(field_error("solver.dt", "horizon is not a whole number of steps"));
        }
        if !(s.picard_tol > 0.0) {
            return Err(field_error("solver.picard_tol", "must be positive"));
        }
        Ok(PropagatorOptions {
            scheme: s.scheme,
            dt: s.dt,
            positivity_safe: s.positivity_safe.unwrap_or(s.scheme == Scheme::BackwardEuler),
        })
    }

    pub fn history(&self, grid: &SpaceGrid) -> Result<HistorySegment, ConfigError> {
        let err = |e| field_error("history", e);
        match &self.history {
            HistorySpec::Constant { value } => Ok(HistorySegment::constant(grid.sample(|_| *value))),
            HistorySpec::Mode {
                k,
                amplitude,
                theta_slope,
                intervals,
            } => {
                if k.len() != grid.dim() {
                    return Err(field_error("history.k", "one mode index per axis"));
                }
                let sine = grid.bc == BoundaryKind::Dirichlet;
                let lengths = grid.lengths.clone();
                let k = k.clone();
                HistorySegment::from_fn(grid, *intervals, move |th, x| {
                    let space: f64 = k
                        .iter()
                        .zip(&lengths)
                        .zip(x)
                        .map(|((&ki, &l), &xi)| {
                            let arg = ki as f64 * PI * xi / l;
                            if sine {
                                arg.sin()
                            } else {
                                arg.cos()
                            }
                        })
                        .product();
                    amplitude * (1.0 + theta_slope * th) * space
                })
                .map_err(err)
            }
            HistorySpec::Random { seed, intervals } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(self.seed));
                random_history(&mut rng, grid, *intervals).map_err(err)
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let grid = self.grid()?;
        Ok(Scenario {
            id: self.id.clone(),
            coefficients: self.coefficients()?,
            history: self.history(&grid)?,
            grid,
            delay: self.delay()?,
            options: self.options()?,
        })
    }

    /// Norm exponent for paths that need an exact operator norm.
    pub fn exact_p(&self) -> Result<f64, ConfigError> {
        if self.p == 1.0 || self.p == 2.0 || self.p.is_infinite() {
            Ok(self.p)
        } else {
            Err(field_error(
                "p",
                format!("{} not in {{1, 2, inf}} as this command requires", self.p),
            ))
        }
    }
}
