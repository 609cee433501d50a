//! Mild solutions of the full delay problem.
//!
//! Two independent strategies produce a [`Trajectory`]: direct marching of
//! the Volterra form ([`mild_solve_march`]) and Picard iteration of the
//! contraction map on short chunks that are glued together
//! ([`mild_solve_picard`]).

mod history;
mod solve;
mod trajectory;

pub use history::HistorySegment;
pub use solve::{
    default_growth_pairs, march_with, mild_solve_march, mild_solve_picard, picard_with, PicardOptions, PicardSolution,
    PICARD_MAX_ITERATIONS,
};
pub use trajectory::{glue, Trajectory};

use crate::coefficients::CoefficientSet;
use crate::discretization::{SpaceGrid, State};
use crate::error::{Error, Result};

/// `(C¹(t)v)_i = c1(t, x_i)·v_i`.
pub fn multiply_c1(a: &CoefficientSet, grid: &SpaceGrid, t: f64, v: &State) -> Result<State> {
    let mut out = vec![0.0; v.len()];
    multiply_c1_into(a, grid, t, v, &mut out)?;
    Ok(State(out))
}

pub(crate) fn multiply_c1_into(a: &CoefficientSet, grid: &SpaceGrid, t: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
    if v.len() != grid.node_count() {
        return Err(Error::Dimension(format!(
            "state has {} entries, grid has {} nodes",
            v.len(),
            grid.node_count()
        )));
    }
    if a.c1.is_identically_zero() {
        out.iter_mut().for_each(|o| *o = 0.0);
        return Ok(());
    }
    for (i, (o, vi)) in out.iter_mut().zip(v).enumerate() {
        *o = a.evaluate(&a.c1, t, &grid.node_point(i))? * vi;
    }
    Ok(())
}

/// `u(τ)` read from the history or the computed states.
pub fn evaluate_delayed(traj: &Trajectory, tau: f64) -> Result<State> {
    traj.eval(tau)
}

/// Local existence time `Θ₀ = 1/(2MK e^{γT})`, or `T` without delay coupling.
pub fn picard_theta0(m: f64, k: f64, gamma: f64, horizon: f64) -> f64 {
    if k == 0.0 {
        return horizon;
    }
    (1.0 / (2.0 * m * k * (gamma * horizon).exp())).min(horizon)
}

#[cfg(test)]
mod tests;
