use serde::{Deserialize, Serialize};

use crate::discretization::{SpaceGrid, State};
use crate::error::{Error, Result};

/// Initial data `u₀` on `[s − 1, s]`, stored at absolute sample times.
///
/// Constructors take offsets `θ ∈ [−1, 0]` and place the segment at origin 0;
/// [`HistorySegment::rebased`] moves it to another start time. Histories cut
/// from a computed trajectory keep that trajectory's node times verbatim, so a
/// restarted solve reads bitwise the same values as the original.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistorySegment {
    times: Vec<f64>,
    states: Vec<State>,
}

impl HistorySegment {
    /// Samples at offsets `θ_0 = −1 < … < θ_K = 0`.
    pub fn new(offsets: Vec<f64>, states: Vec<State>) -> Result<Self> {
        if offsets.len() < 2 || offsets.len() != states.len() {
            return Err(Error::Domain(format!(
                "history needs at least two samples and one state per sample, got {} times and {} states",
                offsets.len(),
                states.len()
            )));
        }
        let first = offsets[0];
        let last = *offsets.last().unwrap();
        if (first + 1.0).abs() > 1e-12 || last.abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "history offsets span [{first}, {last}], expected [−1, 0]"
            )));
        }
        let mut times = offsets;
        times[0] = -1.0;
        *times.last_mut().unwrap() = 0.0;
        Self::from_absolute(times, states)
    }

    pub(crate) fn from_absolute(times: Vec<f64>, states: Vec<State>) -> Result<Self> {
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("history sample times must increase strictly".into()));
        }
        let n = states[0].len();
        if states.iter().any(|s| s.len() != n) {
            return Err(Error::Dimension("history states have different lengths".into()));
        }
        Ok(HistorySegment { times, states })
    }

    /// `K + 1` states at uniform offsets `θ_i = −1 + i/K`.
    pub fn uniform(states: Vec<State>) -> Result<Self> {
        let k = states.len().saturating_sub(1).max(1);
        let offsets = (0..states.len()).map(|i| i as f64 / k as f64 - 1.0).collect();
        Self::new(offsets, states)
    }

    /// History constant in time.
    pub fn constant(state: State) -> Self {
        HistorySegment {
            times: vec![-1.0, 0.0],
            states: vec![state.clone(), state],
        }
    }

    /// Samples `f(θ, x)` on `intervals + 1` uniform offsets.
    pub fn from_fn(grid: &SpaceGrid, intervals: usize, f: impl Fn(f64, &[f64]) -> f64) -> Result<Self> {
        let k = intervals.max(1);
        let states = (0..=k)
            .map(|i| {
                let theta = i as f64 / k as f64 - 1.0;
                grid.sample(|x| f(theta, x))
            })
            .collect();
        Self::uniform(states)
    }

    /// The same samples placed on `[origin − 1, origin]`.
    pub fn rebased(&self, origin: f64) -> Self {
        let shift = origin - self.origin();
        if shift == 0.0 {
            return self.clone();
        }
        let offsets = self.times.iter().map(|&t| t - self.origin());
        let mut times: Vec<f64> = offsets.map(|th| origin + th).collect();
        *times.last_mut().unwrap() = origin;
        HistorySegment {
            times,
            states: self.states.clone(),
        }
    }

    /// Time of the last sample, `s`.
    pub fn origin(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn node_count(&self) -> usize {
        self.states[0].len()
    }

    /// Offsets `θ_i = t_i − s`.
    pub fn offsets(&self) -> Vec<f64> {
        let s = self.origin();
        self.times.iter().map(|t| t - s).collect()
    }

    /// `u₀(s + θ)` by linear interpolation, `θ ∈ [−1, 0]`.
    pub fn eval(&self, theta: f64) -> Result<State> {
        if !(-1.0 - 1e-12..=1e-12).contains(&theta) {
            return Err(Error::Domain(format!("history offset {theta} outside [−1, 0]")));
        }
        Ok(interpolate(&self.times, &self.states, self.origin() + theta))
    }

    /// `sup_θ ‖u₀(θ)‖` over the samples with a caller-supplied norm.
    pub fn sup_norm(&self, norm: impl Fn(&State) -> f64) -> f64 {
        self.states.iter().map(norm).fold(0.0, f64::max)
    }

    /// `α·self + β·other` on identical sample times.
    pub fn combine(&self, alpha: f64, other: &HistorySegment, beta: f64) -> Result<HistorySegment> {
        if self.times != other.times {
            return Err(Error::Precondition("histories sampled at different times".into()));
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| {
                let mut s = a.scaled(alpha);
                s.axpy(beta, b);
                s
            })
            .collect();
        Ok(HistorySegment {
            times: self.times.clone(),
            states,
        })
    }
}

/// Linear interpolation on ascending `times`, clamped at both ends. An exact
/// node hit returns that node's state untouched.
pub(crate) fn interpolate(times: &[f64], states: &[State], tau: f64) -> State {
    let i = times.partition_point(|&t| t <= tau);
    if i == 0 {
        return states[0].clone();
    }
    if i == times.len() || times[i - 1] == tau {
        return states[i - 1].clone();
    }
    let w = (tau - times[i - 1]) / (times[i] - times[i - 1]);
    State::lerp(&states[i - 1], &states[i], w)
}
