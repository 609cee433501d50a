use serde::{Deserialize, Serialize};

use crate::coefficients::{phi, CoefficientSet, DelayMap};
use crate::delay_solver::history::{interpolate, HistorySegment};
use crate::delay_solver::trajectory::{glue, Trajectory};
use crate::delay_solver::{multiply_c1_into, picard_theta0};
use crate::discretization::{discrete_norm, SpaceGrid, State};
use crate::error::{Error, Result};
use crate::propagator::{Propagator, PropagatorOptions};

/// Hard cap on 𝔊 applications per chunk.
pub const PICARD_MAX_ITERATIONS: usize = 100;

/// Node values `c1(t_k, x_i)`, cached when `c1` does not depend on time.
struct DelayCoupling<'a> {
    a: &'a CoefficientSet,
    grid: &'a SpaceGrid,
    frozen: Option<Vec<f64>>,
}

impl<'a> DelayCoupling<'a> {
    fn new(a: &'a CoefficientSet, grid: &'a SpaceGrid) -> Self {
        let frozen = a.c1.is_time_independent().then(|| {
            (0..grid.node_count())
                .map(|i| a.c1.eval(0.0, &grid.node_point(i)))
                .collect()
        });
        DelayCoupling { a, grid, frozen }
    }

    fn is_zero(&self) -> bool {
        self.a.c1.is_identically_zero()
    }

    /// `v ← v + dt·c1(t)·w`.
    fn add_scaled(&self, t: f64, dt: f64, w: &State, v: &mut [f64]) -> Result<()> {
        match &self.frozen {
            Some(c) => {
                for ((vi, ci), wi) in v.iter_mut().zip(c).zip(w.iter()) {
                    *vi += dt * (ci * wi);
                }
                Ok(())
            }
            None => {
                let mut cw = vec![0.0; w.len()];
                multiply_c1_into(self.a, self.grid, t, w, &mut cw)?;
                for (vi, ci) in v.iter_mut().zip(&cw) {
                    *vi += dt * ci;
                }
                Ok(())
            }
        }
    }
}

/// `Φ(t)`, rejecting arguments ahead of `t`.
fn delayed_time(delay: &DelayMap, t: f64, horizon: f64) -> Result<f64> {
    let tau = phi(delay, t, horizon)?;
    if tau > t {
        return Err(Error::Causality { tau, frontier: t });
    }
    Ok(tau)
}

struct Setup {
    first: usize,
    last: usize,
    history: HistorySegment,
}

fn prepare(
    prop: &Propagator,
    a: &CoefficientSet,
    u0: &HistorySegment,
    delay: &DelayMap,
    horizon: (f64, f64),
) -> Result<Setup> {
    if a.flatten() != *prop.coefficients() {
        return Err(Error::Precondition(
            "propagator built for a different principal part".into(),
        ));
    }
    delay.validate()?;
    let (s, t) = horizon;
    if s > t {
        return Err(Error::Precondition(format!("horizon [{s}, {t}] is empty")));
    }
    let (first, last) = (prop.step_index(s)?, prop.step_index(t)?);
    if u0.node_count() != prop.grid().node_count() {
        return Err(Error::Dimension(format!(
            "history has {} nodes, grid has {}",
            u0.node_count(),
            prop.grid().node_count()
        )));
    }
    let start = prop.time_of(first);
    let history = if u0.origin() == start {
        u0.clone()
    } else {
        u0.rebased(start)
    };
    Ok(Setup { first, last, history })
}

/// Mild solution by time marching:
/// `u_{k+1} = S_k(u_k + dt·c1(t_k)·u(Φ(t_k)))` with `S_k` the propagator's
/// one-step map, i.e. left-rectangle quadrature of the memory integral.
pub fn mild_solve_march(
    a: &CoefficientSet,
    grid: &SpaceGrid,
    u0: &HistorySegment,
    delay: &DelayMap,
    horizon: (f64, f64),
    opts: PropagatorOptions,
) -> Result<Trajectory> {
    let prop = Propagator::new(a, grid, opts)?;
    march_with(&prop, a, u0, delay, horizon)
}

/// [`mild_solve_march`] on a prebuilt propagator of `flatten(a)`.
pub fn march_with(
    prop: &Propagator,
    a: &CoefficientSet,
    u0: &HistorySegment,
    delay: &DelayMap,
    horizon: (f64, f64),
) -> Result<Trajectory> {
    let setup = prepare(prop, a, u0, delay, horizon)?;
    let mut traj = Trajectory::seed(prop.grid(), a, delay, prop.options(), setup.history, setup.first);
    let coupling = DelayCoupling::new(a, prop.grid());
    let dt = prop.dt();
    for k in setup.first..setup.last {
        let mut v = traj.states.last().unwrap().0.clone();
        if !coupling.is_zero() {
            let tk = prop.time_of(k);
            let w = traj.eval(delayed_time(delay, tk, a.horizon)?)?;
            coupling.add_scaled(tk, dt, &w, &mut v)?;
        }
        prop.step_in_place(k, &mut v)?;
        traj.push(State(v));
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Absolute stopping tolerance on the sup-over-chunk change.
    pub tol: f64,
    /// Norm exponent for the stopping test and the growth estimate.
    pub p: f64,
    /// Known `(M, γ)`; estimated from propagator kernels when absent.
    #[serde(default)]
    pub growth: Option<(f64, f64)>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-10,
            p: 2.0,
            growth: None,
        }
    }
}

/// Picard solution with its contraction bookkeeping.
#[derive(Clone, Debug)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub m: f64,
    pub gamma: f64,
    pub k: f64,
    pub theta0: f64,
    /// Steps per chunk (the last chunk may be shorter).
    pub chunk_steps: usize,
    /// 𝔊 applications per chunk.
    pub iterations: Vec<usize>,
    /// `⌈log(tol/r₀)/log(1/2)⌉ + 1` per chunk, `r₀` the first change.
    pub iteration_bounds: Vec<usize>,
}

/// Mild solution by Picard iteration of the contraction map on chunks of
/// length `Θ₀/2`, glued together.
pub fn mild_solve_picard(
    a: &CoefficientSet,
    grid: &SpaceGrid,
    u0: &HistorySegment,
    delay: &DelayMap,
    horizon: (f64, f64),
    opts: PropagatorOptions,
    picard: &PicardOptions,
) -> Result<PicardSolution> {
    let prop = Propagator::new(a, grid, opts)?;
    picard_with(&prop, a, u0, delay, horizon, picard)
}

/// Growth sample pairs `(s, s + j·(t − s)/8)` snapped to the step grid.
pub fn default_growth_pairs(prop: &Propagator, s: f64, t: f64) -> Result<Vec<(f64, f64)>> {
    let (ks, kt) = (prop.step_index(s)?, prop.step_index(t)?);
    let span = kt.saturating_sub(ks).max(1);
    let mut pairs: Vec<(f64, f64)> = (1..=8)
        .map(|j| {
            (
                prop.time_of(ks),
                prop.time_of((ks + (span * j).div_ceil(8)).min(kt.max(ks + 1))),
            )
        })
        .collect();
    pairs.dedup();
    if kt == ks {
        pairs.clear();
        pairs.push((s, s));
    }
    Ok(pairs)
}

/// [`mild_solve_picard`] on a prebuilt propagator of `flatten(a)`.
pub fn picard_with(
    prop: &Propagator,
    a: &CoefficientSet,
    u0: &HistorySegment,
    delay: &DelayMap,
    horizon: (f64, f64),
    picard: &PicardOptions,
) -> Result<PicardSolution> {
    if !(picard.tol > 0.0) {
        return Err(Error::Domain(format!(
            "Picard tolerance {} must be positive",
            picard.tol
        )));
    }
    let setup = prepare(prop, a, u0, delay, horizon)?;
    let grid = prop.grid();
    let coupling = DelayCoupling::new(a, grid);
    let k_bound = a.sup_bound_k();
    let (m, gamma) = match picard.growth {
        Some(g) => g,
        None if coupling.is_zero() => (1.0, 0.0),
        None => prop.estimate_m_gamma(picard.p, &default_growth_pairs(prop, horizon.0, horizon.1)?)?,
    };
    let theta0 = picard_theta0(m, k_bound, gamma, a.horizon);
    let dt = prop.dt();
    let total = setup.last - setup.first;
    let chunk_steps = if coupling.is_zero() {
        total.max(1)
    } else {
        (((0.5 * theta0) / dt * (1.0 + 1e-9)).floor() as usize).clamp(1, total.max(1))
    };

    let mut whole = Trajectory::seed(grid, a, delay, prop.options(), setup.history, setup.first);
    let mut iterations = Vec::new();
    let mut iteration_bounds = Vec::new();
    let mut c0 = setup.first;
    while c0 < setup.last {
        let c1 = (c0 + chunk_steps).min(setup.last);
        let history = whole.history_at(prop.time_of(c0))?;
        let mut chunk = Trajectory::seed(grid, a, delay, prop.options(), history, c0);
        let start = chunk.states[0].clone();
        let times: Vec<f64> = (c0..=c1).map(|k| prop.time_of(k)).collect();
        let mut iterate: Vec<State> = vec![start.clone(); times.len()];
        let mut count = 0;
        let mut first_change = None;
        loop {
            count += 1;
            if count > PICARD_MAX_ITERATIONS {
                return Err(Error::invariant(
                    "picard_contraction",
                    format!(
                        "Picard iteration on [{}, {}] did not reach tolerance {} within {} iterations",
                        times[0],
                        times[times.len() - 1],
                        picard.tol,
                        PICARD_MAX_ITERATIONS
                    ),
                ));
            }
            let next = apply_contraction(prop, a, &coupling, &chunk, &times, &iterate, &start)?;
            if coupling.is_zero() {
                iterate = next;
                break;
            }
            let mut change: f64 = 0.0;
            for (x, y) in next.iter().zip(&iterate) {
                change = change.max(discrete_norm(&x.sub(y), grid, picard.p)?);
            }
            iterate = next;
            first_change.get_or_insert(change);
            if change < picard.tol {
                break;
            }
        }
        iterations.push(count);
        iteration_bounds.push(match first_change {
            Some(r0) if r0 > picard.tol => ((picard.tol / r0).ln() / 0.5f64.ln()).ceil() as usize + 1,
            _ => 1,
        });
        for state in iterate.into_iter().skip(1) {
            chunk.push(state);
        }
        whole = glue(&whole, &chunk)?;
        c0 = c1;
    }

    Ok(PicardSolution {
        trajectory: whole,
        m,
        gamma,
        k: k_bound,
        theta0,
        chunk_steps,
        iterations,
        iteration_bounds,
    })
}

/// One application of 𝔊 on a chunk: the left-rectangle mild recursion with
/// delayed values read from the chunk history or from the previous iterate.
fn apply_contraction(
    prop: &Propagator,
    a: &CoefficientSet,
    coupling: &DelayCoupling,
    chunk: &Trajectory,
    times: &[f64],
    iterate: &[State],
    start: &State,
) -> Result<Vec<State>> {
    let dt = prop.dt();
    let first = chunk.first_step;
    let mut out = Vec::with_capacity(times.len());
    out.push(start.clone());
    for (j, &tk) in times[..times.len() - 1].iter().enumerate() {
        let mut v = out[j].0.clone();
        if !coupling.is_zero() {
            let tau = delayed_time(chunk.delay(), tk, a.horizon)?;
            let w = if tau <= times[0] {
                chunk.eval(tau)?
            } else {
                interpolate(times, iterate, tau)
            };
            coupling.add_scaled(tk, dt, &w, &mut v)?;
        }
        prop.step_in_place(first + j, &mut v)?;
        out.push(State(v));
    }
    Ok(out)
}
