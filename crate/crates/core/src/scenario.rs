//! Benchmark problems and seeded random scenario generators.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::{BoundaryKind, CoefficientSet, DelayMap, ScalarField, SpaceProfile, SpaceSamples};
use crate::delay_solver::{march_with, picard_with, HistorySegment, PicardOptions, PicardSolution, Trajectory};
use crate::discretization::SpaceGrid;
use crate::error::Result;
use crate::propagator::{Propagator, PropagatorOptions, Scheme};

/// A complete delay problem on `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub coefficients: CoefficientSet,
    pub grid: SpaceGrid,
    pub delay: DelayMap,
    pub history: HistorySegment,
    pub options: PropagatorOptions,
}

impl Scenario {
    pub fn horizon(&self) -> f64 {
        self.coefficients.horizon
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(&self.coefficients, &self.grid, self.options)
    }

    pub fn solve_march(&self) -> Result<Trajectory> {
        self.solve_march_with(&self.propagator()?)
    }

    pub fn solve_march_with(&self, prop: &Propagator) -> Result<Trajectory> {
        march_with(
            prop,
            &self.coefficients,
            &self.history,
            &self.delay,
            (0.0, self.horizon()),
        )
    }

    pub fn solve_picard(&self, picard: &PicardOptions) -> Result<PicardSolution> {
        let prop = self.propagator()?;
        picard_with(
            &prop,
            &self.coefficients,
            &self.history,
            &self.delay,
            (0.0, self.horizon()),
            picard,
        )
    }

    /// The same problem with another history.
    pub fn with_history(&self, history: HistorySegment) -> Scenario {
        Scenario {
            history,
            ..self.clone()
        }
    }
}

/// History `g(θ)·profile(x)` sampled on `intervals` uniform steps.
pub fn separable_history(
    grid: &SpaceGrid,
    intervals: usize,
    g: impl Fn(f64) -> f64,
    profile: impl Fn(&[f64]) -> f64,
) -> Result<HistorySegment> {
    HistorySegment::from_fn(grid, intervals, |th, x| g(th) * profile(x))
}

/// 1D Dirichlet heat with constant delay coupling:
/// `u_t = α u_xx + c1 u(t − r)` on `(0, 1)`, history `(1 + θ/2)·sin(πx)`.
pub fn heat_delay_benchmark(cells: usize, options: PropagatorOptions) -> Result<Scenario> {
    let horizon = 1.0;
    let grid = SpaceGrid::unit_interval(cells, BoundaryKind::Dirichlet)?;
    let coefficients =
        CoefficientSet::heat(vec![1.0], horizon, BoundaryKind::Dirichlet, 0.1).with_c1(ScalarField::constant(1.0));
    coefficients.validate()?;
    let history = separable_history(&grid, 50, |th| 1.0 + 0.5 * th, |x| (PI * x[0]).sin())?;
    Ok(Scenario {
        id: "heat_delay_1d".into(),
        coefficients,
        grid,
        delay: DelayMap::constant(0.3)?,
        history,
        options,
    })
}

/// Dirichlet heat on `(0, 1)` whose first mode obeys `x' = −π²x + c·x(t − r)`,
/// with history `history_poly(θ)·sin(πx)`.
pub fn eigenmode_delay_benchmark(
    cells: usize,
    coupling: f64,
    delay: f64,
    horizon: f64,
    history_poly: &[f64],
    options: PropagatorOptions,
) -> Result<Scenario> {
    let grid = SpaceGrid::unit_interval(cells, BoundaryKind::Dirichlet)?;
    let coefficients =
        CoefficientSet::heat(vec![1.0], horizon, BoundaryKind::Dirichlet, 1.0).with_c1(ScalarField::constant(coupling));
    let poly = history_poly.to_vec();
    let g = move |th: f64| poly.iter().rev().fold(0.0, |acc, &c| acc * th + c);
    let history = separable_history(&grid, 200, g, |x| (PI * x[0]).sin())?;
    Ok(Scenario {
        id: "eigenmode_delay".into(),
        coefficients,
        grid,
        delay: DelayMap::constant(delay)?,
        history,
        options,
    })
}

/// Knobs for [`random_scenario`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomScenarioOptions {
    pub cells: usize,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Upper bound on `|c1|`.
    pub max_coupling: f64,
}

impl Default for RandomScenarioOptions {
    fn default() -> Self {
        RandomScenarioOptions {
            cells: 32,
            dt: 0.01,
            horizon: 1.0,
            scheme: Scheme::BackwardEuler,
            max_coupling: 2.0,
        }
    }
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_bc(rng: &mut ChaCha8Rng) -> BoundaryKind {
    match rng.gen_range(0..3) {
        0 => BoundaryKind::Dirichlet,
        1 => BoundaryKind::Neumann,
        _ => BoundaryKind::Robin,
    }
}

/// Smooth positive spatial profile sampled on 9 points per axis.
fn random_profile(rng: &mut ChaCha8Rng, domain: &[f64], lo: f64, hi: f64) -> SpaceProfile {
    let shape: Vec<usize> = domain.iter().map(|_| 9).collect();
    let count: usize = shape.iter().product();
    let (phase, freq) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(1.0..3.0));
    let values = (0..count)
        .map(|i| {
            let s = (i % 9) as f64 / 8.0 + (i / 9) as f64 / 8.0;
            lo + (hi - lo) * 0.5 * (1.0 + (freq * PI * s + phase).sin())
        })
        .collect();
    SpaceProfile::Sampled(SpaceSamples {
        shape,
        extent: domain.to_vec(),
        values,
    })
}

/// Random coefficient set: positive diffusion (spatially varying, a12 = 0),
/// first-order terms in `[−1, 1]`, the given `c0` range, Robin `d0 ∈ [0, 2]`.
pub fn random_coefficients(
    rng: &mut ChaCha8Rng,
    dim: usize,
    bc: BoundaryKind,
    horizon: f64,
    c0_range: (f64, f64),
) -> CoefficientSet {
    let domain = vec![1.0; dim];
    let mut a = CoefficientSet::heat(domain.clone(), horizon, bc, 1.0);
    for d in 0..dim {
        let profile = random_profile(rng, &domain, 0.3, 1.5);
        let omega = rng.gen_range(0.0..6.0);
        a.diffusion[d][d] = ScalarField::SinusoidTime {
            base: 1.0,
            amplitude: rng.gen_range(0.0..0.3),
            angular_frequency: omega,
            phase: 0.0,
            spatial_profile: Some(profile),
        };
        a.drift[d] = ScalarField::constant(rng.gen_range(-1.0..1.0));
        a.flux_drift[d] = ScalarField::sinusoid(rng.gen_range(-0.5..0.5), rng.gen_range(0.0..0.3), omega, 1.0);
    }
    a.c0 = ScalarField::constant(rng.gen_range(c0_range.0..=c0_range.1));
    if bc == BoundaryKind::Robin {
        a.d0 = ScalarField::constant(rng.gen_range(0.0..2.0));
    }
    a
}

/// Random delay map with values in `[0, 1]`.
fn random_delay(rng: &mut ChaCha8Rng) -> DelayMap {
    match rng.gen_range(0..3) {
        0 => DelayMap::Constant {
            r: rng.gen_range(0.0..1.0),
        },
        1 => {
            let mean = rng.gen_range(0.2..0.8);
            DelayMap::SinusoidTime {
                mean,
                amplitude: rng.gen_range(0.0..mean.min(1.0 - mean)),
                angular_frequency: rng.gen_range(1.0..10.0),
                phase: rng.gen_range(0.0..2.0 * PI),
            }
        }
        _ => DelayMap::PiecewiseConstantTime {
            breakpoints: vec![0.5],
            values: vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)],
        },
    }
}

/// Random smooth history `Σ_j a_j (1 + b_j θ) φ_j(x)` from low Fourier modes.
pub fn random_history(rng: &mut ChaCha8Rng, grid: &SpaceGrid, intervals: usize) -> Result<HistorySegment> {
    let terms: Vec<(f64, f64, f64)> = (1..=3)
        .map(|j| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), j as f64))
        .collect();
    HistorySegment::from_fn(grid, intervals, |th, x| {
        terms
            .iter()
            .map(|&(a, b, j)| {
                let space: f64 = x
                    .iter()
                    .zip(&grid.lengths)
                    .map(|(&xi, &l)| (j * PI * xi / l).sin() + 0.3 * (j * PI * xi / l).cos())
                    .product();
                a * (1.0 + b * th) * space
            })
            .sum()
    })
}

/// The `index`-th scenario of the 1D randomized suite drawn from `seed`.
pub fn random_scenario(seed: u64, index: u64, opts: &RandomScenarioOptions) -> Result<Scenario> {
    let mut rng = rng_for(seed, index);
    let bc = random_bc(&mut rng);
    let grid = SpaceGrid::unit_interval(opts.cells, bc)?;
    let mut coefficients = random_coefficients(&mut rng, 1, bc, opts.horizon, (-1.0, 0.5));
    let k = opts.max_coupling;
    coefficients.c1 = ScalarField::sinusoid(
        rng.gen_range(-k / 2.0..k / 2.0),
        rng.gen_range(0.0..k / 2.0),
        rng.gen_range(0.0..8.0),
        rng.gen_range(0.0..2.0 * PI),
    );
    coefficients.validate()?;
    let delay = random_delay(&mut rng);
    let history = random_history(&mut rng, &grid, 40)?;
    let options = PropagatorOptions {
        scheme: opts.scheme,
        dt: opts.dt,
        positivity_safe: opts.scheme == Scheme::BackwardEuler,
    };
    Ok(Scenario {
        id: format!("random_{seed}_{index}"),
        coefficients,
        grid,
        delay,
        history,
        options,
    })
}

/// Random flattened coefficient set for the kernel positivity suite:
/// `c0 ≤ 0`, no mixed derivatives, dimension 1 or 2.
pub fn random_positivity_set(seed: u64, index: u64) -> Result<(CoefficientSet, SpaceGrid)> {
    let mut rng = rng_for(seed, index);
    let dim = if rng.gen_bool(0.3) { 2 } else { 1 };
    let bc = random_bc(&mut rng);
    let cells = if dim == 1 {
        rng.gen_range(16..48)
    } else {
        rng.gen_range(6..12)
    };
    let grid = SpaceGrid::new(vec![1.0; dim], vec![cells; dim], bc)?;
    let a = random_coefficients(&mut rng, dim, bc, 1.0, (-2.0, 0.0));
    a.validate()?;
    Ok((a, grid))
}
