use crate::coefficients::{CoefficientSet, DelayMap};
use crate::delay_solver::history::{interpolate, HistorySegment};
use crate::discretization::{SpaceGrid, State};
use crate::error::{Error, Result};
use crate::propagator::{step_index, PropagatorOptions};

/// A computed mild solution on `[s, T₀]` together with its history on `[s − 1, s]`.
///
/// Node times are `t_k = k·dt` on the propagator's global grid, so
/// trajectories cut and glued at nodes reproduce identical time stamps.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub(crate) grid: SpaceGrid,
    pub(crate) coefficients: CoefficientSet,
    pub(crate) delay: DelayMap,
    pub(crate) options: PropagatorOptions,
    pub(crate) history: HistorySegment,
    pub(crate) first_step: usize,
    pub(crate) times: Vec<f64>,
    pub(crate) states: Vec<State>,
}

impl Trajectory {
    /// The one-node trajectory at `s = first_step·dt` holding the seam value.
    pub(crate) fn seed(
        grid: &SpaceGrid,
        coefficients: &CoefficientSet,
        delay: &DelayMap,
        options: PropagatorOptions,
        history: HistorySegment,
        first_step: usize,
    ) -> Self {
        let seam = history.states().last().unwrap().clone();
        Trajectory {
            grid: grid.clone(),
            coefficients: coefficients.clone(),
            delay: delay.clone(),
            options,
            history,
            first_step,
            times: vec![first_step as f64 * options.dt],
            states: vec![seam],
        }
    }

    pub(crate) fn push(&mut self, state: State) {
        let k = self.first_step + self.times.len();
        self.times.push(k as f64 * self.options.dt);
        self.states.push(state);
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    /// Current frontier `T₀`.
    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn first_step(&self) -> usize {
        self.first_step
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn history(&self) -> &HistorySegment {
        &self.history
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coefficients
    }

    pub fn delay(&self) -> &DelayMap {
        &self.delay
    }

    pub fn options(&self) -> PropagatorOptions {
        self.options
    }

    /// `u(τ)` for `τ ∈ [s − 1, T₀]`: history up to `s`, computed states after.
    pub fn eval(&self, tau: f64) -> Result<State> {
        let slack = 1e-12 * self.end().abs().max(1.0);
        let lo = self.history.times()[0];
        if tau > self.end() + slack {
            return Err(Error::Causality {
                tau,
                frontier: self.end(),
            });
        }
        if tau < lo - slack {
            return Err(Error::Domain(format!("time {tau} before the history start {lo}")));
        }
        if tau <= self.start() {
            Ok(interpolate(self.history.times(), self.history.states(), tau))
        } else {
            Ok(interpolate(&self.times, &self.states, tau))
        }
    }

    /// Every stored node on `[s − 1, T₀]` in time order, seam counted once.
    pub fn timeline(&self) -> impl Iterator<Item = (f64, &State)> + '_ {
        let h = self.history.times().len() - 1;
        self.history.times()[..h]
            .iter()
            .copied()
            .zip(&self.history.states()[..h])
            .chain(self.times.iter().copied().zip(&self.states))
    }

    fn node_index(&self, t: f64) -> Result<usize> {
        let k = step_index(t, self.options.dt, usize::MAX / 2)?;
        if k < self.first_step || k - self.first_step >= self.times.len() {
            return Err(Error::Domain(format!(
                "time {t} outside the trajectory [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        Ok(k - self.first_step)
    }

    /// The solution on `[s₁ − 1, s₁]` as a history for a restart at node `s₁`.
    pub fn history_at(&self, s1: f64) -> Result<HistorySegment> {
        let i1 = self.node_index(s1)?;
        let s1 = self.times[i1];
        let left = s1 - 1.0;
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (t, u) in self.timeline() {
            if t > s1 {
                break;
            }
            if t >= left {
                times.push(t);
                states.push(u.clone());
            }
        }
        if times.first() != Some(&left) {
            times.insert(0, left);
            states.insert(0, self.eval(left)?);
        }
        HistorySegment::from_absolute(times, states)
    }

    /// The trajectory on `[s₁, t₁]` with its own history on `[s₁ − 1, s₁]`.
    pub fn restrict(&self, s1: f64, t1: f64) -> Result<Trajectory> {
        if s1 > t1 {
            return Err(Error::Precondition(format!("restriction [{s1}, {t1}] is empty")));
        }
        let (i0, i1) = (self.node_index(s1)?, self.node_index(t1)?);
        Ok(Trajectory {
            history: self.history_at(s1)?,
            first_step: self.first_step + i0,
            times: self.times[i0..=i1].to_vec(),
            states: self.states[i0..=i1].to_vec(),
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> Trajectory {
        Trajectory {
            grid: self.grid.clone(),
            coefficients: self.coefficients.clone(),
            delay: self.delay.clone(),
            options: self.options,
            history: self.history.clone(),
            first_step: self.first_step,
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    /// Seam continuity: the first state equals the last history sample bitwise.
    pub fn seam_is_continuous(&self) -> bool {
        self.history.origin() == self.start() && self.history.states().last() == self.states.first()
    }
}

/// Concatenates `v1` on `[s − 1, s₁]` and `v2` on `[s₁ − 1, s₂]`, where `v2`
/// was started from the tail of `v1`.
pub fn glue(v1: &Trajectory, v2: &Trajectory) -> Result<Trajectory> {
    if v1.grid != v2.grid || v1.coefficients != v2.coefficients || v1.delay != v2.delay || v1.options != v2.options {
        return Err(Error::Precondition(
            "glued trajectories solve different problems".into(),
        ));
    }
    if v2.first_step != v1.first_step + v1.times.len() - 1 {
        return Err(Error::Precondition(format!(
            "second piece starts at {}, first ends at {}",
            v2.start(),
            v1.end()
        )));
    }
    if v1.history_at(v2.start())? != v2.history {
        return Err(Error::Precondition(
            "history of the second piece differs from the tail of the first".into(),
        ));
    }
    let mut out = v1.clone();
    out.times.extend_from_slice(&v2.times[1..]);
    out.states.extend_from_slice(&v2.states[1..]);
    Ok(out)
}
