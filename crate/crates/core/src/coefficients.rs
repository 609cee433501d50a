//! Coefficient sets, delay maps and the convergent families used by the
//! continuity experiments.
//!
//! Every coefficient is a closed-form or tabulated [`ScalarField`] descriptor,
//! so essential-sup bounds and ellipticity constants can be computed directly
//! from the descriptor instead of being supplied from outside.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform samples of a function on the box `[0, extent_0] × … × [0, extent_{N-1}]`,
/// endpoints included, stored with the first axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSamples {
    pub shape: Vec<usize>,
    pub extent: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpaceSamples {
    fn validate(&self) -> Result<()> {
        if self.shape.is_empty() || self.shape.len() != self.extent.len() {
            return Err(Error::InvalidCoefficients(
                "sampled profile: shape and extent must have one entry per axis".into(),
            ));
        }
        if self.shape.iter().any(|&s| s < 2) || self.extent.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidCoefficients(
                "sampled profile: need at least two samples and a positive extent per axis".into(),
            ));
        }
        if self.shape.iter().product::<usize>() != self.values.len() {
            return Err(Error::InvalidCoefficients(
                "sampled profile: value count does not match shape".into(),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoefficients("sampled profile: non-finite value".into()));
        }
        Ok(())
    }

    /// Multilinear interpolation, clamped at the box edges.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dims = self.shape.len();
        let mut base = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for d in 0..dims.min(2) {
            let n = self.shape[d];
            let xi = x.get(d).copied().unwrap_or(0.0).clamp(0.0, self.extent[d]);
            let pos = xi / self.extent[d] * (n - 1) as f64;
            let i = (pos.floor() as usize).min(n - 2);
            base[d] = i;
            frac[d] = pos - i as f64;
        }
        if dims == 1 {
            let v = &self.values;
            let i = base[0];
            (1.0 - frac[0]) * v[i] + frac[0] * v[i + 1]
        } else {
            let nx = self.shape[0];
            let at = |i: usize, j: usize| self.values[i + nx * j];
            let (i, j) = (base[0], base[1]);
            let (fx, fy) = (frac[0], frac[1]);
            (1.0 - fy) * ((1.0 - fx) * at(i, j) + fx * at(i + 1, j))
                + fy * ((1.0 - fx) * at(i, j + 1) + fx * at(i + 1, j + 1))
        }
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A spatial profile: either a single number or sampled values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceProfile {
    Uniform(f64),
    Sampled(SpaceSamples),
}

impl SpaceProfile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SpaceProfile::Uniform(v) => *v,
            SpaceProfile::Sampled(s) => s.eval(x),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            SpaceProfile::Uniform(v) => v.abs(),
            SpaceProfile::Sampled(s) => s.max_abs(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SpaceProfile::Uniform(v) if !v.is_finite() => {
                Err(Error::InvalidCoefficients("non-finite profile value".into()))
            }
            SpaceProfile::Uniform(_) => Ok(()),
            SpaceProfile::Sampled(s) => s.validate(),
        }
    }
}

impl From<f64> for SpaceProfile {
    fn from(v: f64) -> Self {
        SpaceProfile::Uniform(v)
    }
}

/// A bounded measurable function on `[0, T] × D̄`, given by a descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `(base + amplitude·sin(ω t + phase))·profile(x)`.
    SinusoidTime {
        base: f64,
        amplitude: f64,
        angular_frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spatial_profile: Option<SpaceProfile>,
    },
    /// `values[i]` on `[breakpoints[i-1], breakpoints[i])`, with open ends.
    PiecewiseConstantTime {
        breakpoints: Vec<f64>,
        values: Vec<SpaceProfile>,
    },
    /// Nearest node in time, linear in space.
    SampledGrid {
        time_nodes: Vec<f64>,
        space_arrays: Vec<SpaceProfile>,
    },
    /// Pointwise sum of descriptors.
    Sum {
        terms: Vec<ScalarField>,
    },
}

impl ScalarField {
    pub const ZERO: ScalarField = ScalarField::Constant { value: 0.0 };

    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn sinusoid(base: f64, amplitude: f64, angular_frequency: f64, phase: f64) -> Self {
        ScalarField::SinusoidTime {
            base,
            amplitude,
            angular_frequency,
            phase,
            spatial_profile: None,
        }
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        ScalarField::PiecewiseConstantTime {
            breakpoints,
            values: values.into_iter().map(SpaceProfile::Uniform).collect(),
        }
    }

    /// `alpha·f` as a descriptor.
    pub fn scaled(&self, alpha: f64) -> ScalarField {
        let scale_profile = |p: &SpaceProfile| match p {
            SpaceProfile::Uniform(v) => SpaceProfile::Uniform(alpha * v),
            SpaceProfile::Sampled(s) => {
                let mut s = s.clone();
                s.values.iter_mut().for_each(|v| *v *= alpha);
                SpaceProfile::Sampled(s)
            }
        };
        match self {
            ScalarField::Constant { value } => ScalarField::Constant { value: alpha * value },
            ScalarField::SinusoidTime {
                base,
                amplitude,
                angular_frequency,
                phase,
                spatial_profile,
            } => ScalarField::SinusoidTime {
                base: alpha * base,
                amplitude: alpha * amplitude,
                angular_frequency: *angular_frequency,
                phase: *phase,
                spatial_profile: spatial_profile.clone(),
            },
            ScalarField::PiecewiseConstantTime { breakpoints, values } => ScalarField::PiecewiseConstantTime {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(scale_profile).collect(),
            },
            ScalarField::SampledGrid {
                time_nodes,
                space_arrays,
            } => ScalarField::SampledGrid {
                time_nodes: time_nodes.clone(),
                space_arrays: space_arrays.iter().map(scale_profile).collect(),
            },
            ScalarField::Sum { terms } => ScalarField::Sum {
                terms: terms.iter().map(|f| f.scaled(alpha)).collect(),
            },
        }
    }

    /// Raw descriptor evaluation; callers are responsible for range checks.
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::SinusoidTime {
                base,
                amplitude,
                angular_frequency,
                phase,
                spatial_profile,
            } => {
                let time_part = if *amplitude == 0.0 {
                    *base
                } else {
                    base + amplitude * (angular_frequency * t + phase).sin()
                };
                match spatial_profile {
                    Some(p) => time_part * p.eval(x),
                    None => time_part,
                }
            }
            ScalarField::PiecewiseConstantTime { breakpoints, values } => {
                let piece = breakpoints.partition_point(|&b| b <= t);
                values[piece].eval(x)
            }
            ScalarField::SampledGrid {
                time_nodes,
                space_arrays,
            } => space_arrays[nearest_node(time_nodes, t)].eval(x),
            ScalarField::Sum { terms } => terms.iter().map(|f| f.eval(t, x)).sum(),
        }
    }

    /// Upper bound on the essential supremum of `|f|` over `[0, T] × D`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            ScalarField::Constant { value } => value.abs(),
            ScalarField::SinusoidTime {
                base,
                amplitude,
                spatial_profile,
                ..
            } => {
                let scale = spatial_profile.as_ref().map_or(1.0, SpaceProfile::max_abs);
                (base.abs() + amplitude.abs()) * scale
            }
            ScalarField::PiecewiseConstantTime { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.max_abs())),
            ScalarField::SampledGrid { space_arrays, .. } => space_arrays.iter().fold(0.0, |m, v| m.max(v.max_abs())),
            ScalarField::Sum { terms } => terms.iter().map(ScalarField::sup_bound).sum(),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            ScalarField::Constant { .. } => true,
            ScalarField::SinusoidTime {
                amplitude,
                angular_frequency,
                ..
            } => *amplitude == 0.0 || *angular_frequency == 0.0,
            ScalarField::PiecewiseConstantTime { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
            ScalarField::SampledGrid { space_arrays, .. } => space_arrays.windows(2).all(|w| w[0] == w[1]),
            ScalarField::Sum { terms } => terms.iter().all(ScalarField::is_time_independent),
        }
    }

    /// True when the descriptor is the constant zero.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            ScalarField::Constant { value } => *value == 0.0,
            ScalarField::Sum { terms } => terms.iter().all(ScalarField::is_identically_zero),
            _ => self.sup_bound() == 0.0,
        }
    }

    /// Times at which the descriptor changes non-smoothly.
    pub fn time_breakpoints(&self) -> Vec<f64> {
        match self {
            ScalarField::PiecewiseConstantTime { breakpoints, .. } => breakpoints.clone(),
            ScalarField::SampledGrid { time_nodes, .. } => time_nodes.clone(),
            ScalarField::Sum { terms } => terms.iter().flat_map(|f| f.time_breakpoints()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarField::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidCoefficients("non-finite constant".into()))
            }
            ScalarField::Constant { .. } => Ok(()),
            ScalarField::SinusoidTime {
                base,
                amplitude,
                angular_frequency,
                phase,
                spatial_profile,
            } => {
                if ![*base, *amplitude, *angular_frequency, *phase]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    return Err(Error::InvalidCoefficients("non-finite sinusoid parameter".into()));
                }
                spatial_profile.as_ref().map_or(Ok(()), SpaceProfile::validate)
            }
            ScalarField::PiecewiseConstantTime { breakpoints, values } => {
                check_ascending(breakpoints, "piecewise breakpoints")?;
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::InvalidCoefficients(format!(
                        "piecewise field: {} breakpoints need {} values, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        values.len()
                    )));
                }
                values.iter().try_for_each(SpaceProfile::validate)
            }
            ScalarField::SampledGrid {
                time_nodes,
                space_arrays,
            } => {
                if time_nodes.is_empty() || time_nodes.len() != space_arrays.len() {
                    return Err(Error::InvalidCoefficients(
                        "sampled field: need one space array per (non-empty) time node".into(),
                    ));
                }
                check_ascending(time_nodes, "sampled time nodes")?;
                space_arrays.iter().try_for_each(SpaceProfile::validate)
            }
            ScalarField::Sum { terms } => terms.iter().try_for_each(ScalarField::validate),
        }
    }
}

fn nearest_node(nodes: &[f64], t: f64) -> usize {
    let k = nodes.partition_point(|&n| n < t);
    if k == 0 {
        0
    } else if k == nodes.len() {
        nodes.len() - 1
    } else if t - nodes[k - 1] <= nodes[k] - t {
        k - 1
    } else {
        k
    }
}

fn check_ascending(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCoefficients(format!(
            "{what} must be finite and strictly ascending"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin,
}

/// One element `a` of the coefficient space: every coefficient of the
/// equation plus the Robin boundary field, over `[0, horizon] × D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub dim: usize,
    /// Side lengths of the box `D = (0, L_0) × … × (0, L_{N-1})`.
    pub domain: Vec<f64>,
    pub horizon: f64,
    /// Principal part `a_ij`.
    #[serde(rename = "a")]
    pub diffusion: Vec<Vec<ScalarField>>,
    /// Divergence-form first-order part `a_i`.
    #[serde(rename = "a_i")]
    pub flux_drift: Vec<ScalarField>,
    /// Non-divergence first-order part `b_i`.
    #[serde(rename = "b")]
    pub drift: Vec<ScalarField>,
    pub c0: ScalarField,
    pub c1: ScalarField,
    #[serde(default = "zero_field")]
    pub d0: ScalarField,
    pub bc: BoundaryKind,
}

fn zero_field() -> ScalarField {
    ScalarField::ZERO
}

impl CoefficientSet {
    /// Isotropic heat operator `diffusivity·Δ` with every other coefficient zero.
    pub fn heat(domain: Vec<f64>, horizon: f64, bc: BoundaryKind, diffusivity: f64) -> Self {
        let dim = domain.len();
        let diffusion = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| ScalarField::constant(if i == j { diffusivity } else { 0.0 }))
                    .collect()
            })
            .collect();
        CoefficientSet {
            dim,
            domain,
            horizon,
            diffusion,
            flux_drift: vec![ScalarField::ZERO; dim],
            drift: vec![ScalarField::ZERO; dim],
            c0: ScalarField::ZERO,
            c1: ScalarField::ZERO,
            d0: ScalarField::ZERO,
            bc,
        }
    }

    pub fn with_c0(mut self, f: ScalarField) -> Self {
        self.c0 = f;
        self
    }

    pub fn with_c1(mut self, f: ScalarField) -> Self {
        self.c1 = f;
        self
    }

    pub fn with_d0(mut self, f: ScalarField) -> Self {
        self.d0 = f;
        self
    }

    pub fn with_drift(mut self, axis: usize, f: ScalarField) -> Self {
        self.drift[axis] = f;
        self
    }

    pub fn with_flux_drift(mut self, axis: usize, f: ScalarField) -> Self {
        self.flux_drift[axis] = f;
        self
    }

    pub fn with_diffusion(mut self, i: usize, j: usize, f: ScalarField) -> Self {
        self.diffusion[i][j] = f;
        self
    }

    fn all_fields(&self) -> impl Iterator<Item = &ScalarField> {
        self.diffusion
            .iter()
            .flatten()
            .chain(&self.flux_drift)
            .chain(&self.drift)
            .chain([&self.c0, &self.c1, &self.d0])
    }

    /// Structural checks plus sampled ellipticity and Robin sign; returns the
    /// sampled ellipticity constant α₀.
    pub fn validate(&self) -> Result<f64> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::Dimension(format!("dimension {} not in {{1, 2}}", self.dim)));
        }
        if self.domain.len() != self.dim
            || self.diffusion.len() != self.dim
            || self.diffusion.iter().any(|row| row.len() != self.dim)
            || self.flux_drift.len() != self.dim
            || self.drift.len() != self.dim
        {
            return Err(Error::Dimension(format!(
                "coefficient arrays do not match dimension {}",
                self.dim
            )));
        }
        if self.domain.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidCoefficients("domain lengths must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidCoefficients("horizon must be positive".into()));
        }
        self.all_fields().try_for_each(ScalarField::validate)?;

        let alpha0 = self.ellipticity_constant(&self.verification_samples(9, 17))?;
        if !(alpha0 > 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "principal part is not uniformly elliptic (sampled α₀ = {alpha0})"
            )));
        }
        if self.bc == BoundaryKind::Robin {
            for (t, x) in self.boundary_samples(17, 17) {
                let v = self.d0.eval(t, &x);
                if v < 0.0 {
                    return Err(Error::InvalidCoefficients(format!(
                        "Robin coefficient d0 = {v} < 0 at t = {t}, x = {x:?}"
                    )));
                }
            }
        }
        Ok(alpha0)
    }

    /// Range-checked field evaluation on `[0, T] × D̄`.
    pub fn evaluate(&self, field: &ScalarField, t: f64, x: &[f64]) -> Result<f64> {
        let slack = 1e-12 * self.horizon.max(1.0);
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::Domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim
            )));
        }
        for (xi, &l) in x.iter().zip(&self.domain) {
            if !(*xi >= -1e-12 * l && *xi <= l * (1.0 + 1e-12)) {
                return Err(Error::Domain(format!("point {x:?} outside the closed domain")));
            }
        }
        Ok(field.eval(t, x))
    }

    /// The flattening: the same set with the delay coefficient `c1` zeroed.
    pub fn flatten(&self) -> Self {
        CoefficientSet {
            c1: ScalarField::ZERO,
            ..self.clone()
        }
    }

    pub fn is_flat(&self) -> bool {
        self.c1.is_identically_zero()
    }

    /// Bound `K` on `ess sup_t ‖c1(t, ·)‖_∞`, the norm of the multiplication operator.
    pub fn sup_bound_k(&self) -> f64 {
        self.c1.sup_bound()
    }

    /// Whether the delay-free part (everything except `c1`) is time independent.
    pub fn is_autonomous(&self) -> bool {
        self.diffusion
            .iter()
            .flatten()
            .chain(&self.flux_drift)
            .chain(&self.drift)
            .chain([&self.c0, &self.d0])
            .all(ScalarField::is_time_independent)
    }

    /// Minimum over `samples` of the smallest eigenvalue of `[a_ij(t, x)]`.
    pub fn ellipticity_constant(&self, samples: &[(f64, Vec<f64>)]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Precondition("empty ellipticity sample set".into()));
        }
        if self.dim == 2 && self.diffusion[0][1] != self.diffusion[1][0] {
            return Err(Error::invariant("symmetry", "a_12 and a_21 descriptors differ"));
        }
        let a = &self.diffusion;
        let mut min_eig = f64::INFINITY;
        for (t, x) in samples {
            let eig = match self.dim {
                1 => a[0][0].eval(*t, x),
                _ => {
                    let p = a[0][0].eval(*t, x);
                    let q = a[1][1].eval(*t, x);
                    let r = a[0][1].eval(*t, x);
                    0.5 * (p + q) - (0.25 * (p - q) * (p - q) + r * r).sqrt()
                }
            };
            min_eig = min_eig.min(eig);
        }
        Ok(min_eig)
    }

    fn sample_times(&self, time_points: usize) -> Vec<f64> {
        let mut times: Vec<f64> = (0..time_points)
            .map(|k| self.horizon * k as f64 / (time_points - 1).max(1) as f64)
            .collect();
        for f in self.all_fields() {
            times.extend(
                f.time_breakpoints()
                    .into_iter()
                    .filter(|b| (0.0..=self.horizon).contains(b)),
            );
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    /// Descriptor breakpoints plus a uniform space-time lattice.
    pub fn verification_samples(&self, per_axis: usize, time_points: usize) -> Vec<(f64, Vec<f64>)> {
        let per_axis = per_axis.max(2);
        let axis = |d: usize| -> Vec<f64> {
            (0..per_axis)
                .map(|i| self.domain[d] * i as f64 / (per_axis - 1) as f64)
                .collect()
        };
        let points: Vec<Vec<f64>> = match self.dim {
            1 => axis(0).into_iter().map(|x| vec![x]).collect(),
            _ => {
                let (xs, ys) = (axis(0), axis(1));
                ys.iter().flat_map(|&y| xs.iter().map(move |&x| vec![x, y])).collect()
            }
        };
        let mut out = Vec::new();
        for t in self.sample_times(time_points) {
            for p in &points {
                out.push((t, p.clone()));
            }
        }
        out
    }

    fn boundary_samples(&self, per_edge: usize, time_points: usize) -> Vec<(f64, Vec<f64>)> {
        self.verification_samples(per_edge, time_points)
            .into_iter()
            .filter(|(_, x)| x.iter().zip(&self.domain).any(|(&xi, &l)| xi == 0.0 || xi == l))
            .collect()
    }

    /// `a_m`: the same set with `c1` replaced by `c1 + amplitude·sin(2π m t / T)`.
    ///
    /// The family converges weak-* to `self` as `m → ∞` while every member
    /// shares the flattening of `self`.
    pub fn oscillatory_family(&self, m: u32, amplitude: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("oscillation index m must be positive".into()));
        }
        if !amplitude.is_finite() {
            return Err(Error::Domain("non-finite oscillation amplitude".into()));
        }
        if amplitude == 0.0 {
            return Ok(self.clone());
        }
        let omega = 2.0 * PI * m as f64 / self.horizon;
        let wave = ScalarField::sinusoid(0.0, amplitude, omega, 0.0);
        Ok(CoefficientSet {
            c1: ScalarField::Sum {
                terms: vec![self.c1.clone(), wave],
            },
            ..self.clone()
        })
    }
}

/// Delay map `R` with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DelayMap {
    Constant {
        r: f64,
    },
    PiecewiseConstantTime {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Linear interpolation between nodes, constant beyond the ends.
    SampledTime {
        nodes: Vec<f64>,
        values: Vec<f64>,
    },
    SinusoidTime {
        mean: f64,
        amplitude: f64,
        angular_frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl DelayMap {
    pub fn constant(r: f64) -> Result<Self> {
        let map = DelayMap::Constant { r };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |v: f64| (0.0..=1.0).contains(&v);
        let ok = match self {
            DelayMap::Constant { r } => in_range(*r),
            DelayMap::PiecewiseConstantTime { breakpoints, values } => {
                check_ascending(breakpoints, "delay breakpoints")?;
                values.len() == breakpoints.len() + 1 && values.iter().all(|&v| in_range(v))
            }
            DelayMap::SampledTime { nodes, values } => {
                check_ascending(nodes, "delay nodes")?;
                !nodes.is_empty() && nodes.len() == values.len() && values.iter().all(|&v| in_range(v))
            }
            DelayMap::SinusoidTime {
                mean,
                amplitude,
                angular_frequency,
                phase,
            } => {
                angular_frequency.is_finite()
                    && phase.is_finite()
                    && in_range(mean - amplitude.abs())
                    && in_range(mean + amplitude.abs())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "delay map {self:?} leaves [0, 1] or is malformed"
            )))
        }
    }

    /// `R(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DelayMap::Constant { r } => *r,
            DelayMap::PiecewiseConstantTime { breakpoints, values } => values[breakpoints.partition_point(|&b| b <= t)],
            DelayMap::SampledTime { nodes, values } => {
                let k = nodes.partition_point(|&n| n <= t);
                if k == 0 {
                    values[0]
                } else if k == nodes.len() {
                    values[k - 1]
                } else {
                    let w = (t - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
                    (1.0 - w) * values[k - 1] + w * values[k]
                }
            }
            DelayMap::SinusoidTime {
                mean,
                amplitude,
                angular_frequency,
                phase,
            } => mean + amplitude * (angular_frequency * t + phase).sin(),
        }
    }

    /// Relative time delay `Φ(t) = t − R(t)` without range checks.
    pub fn relative_time(&self, t: f64) -> f64 {
        t - self.eval(t)
    }

    /// `R_m = min(1, R + shift)` for constant maps; other variants shift every value.
    pub fn shifted(&self, shift: f64) -> Self {
        let s = |v: f64| (v + shift).clamp(0.0, 1.0);
        match self {
            DelayMap::Constant { r } => DelayMap::Constant { r: s(*r) },
            DelayMap::PiecewiseConstantTime { breakpoints, values } => DelayMap::PiecewiseConstantTime {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|&v| s(v)).collect(),
            },
            DelayMap::SampledTime { nodes, values } => DelayMap::SampledTime {
                nodes: nodes.clone(),
                values: values.iter().map(|&v| s(v)).collect(),
            },
            DelayMap::SinusoidTime {
                mean,
                amplitude,
                angular_frequency,
                phase,
            } => {
                // keep the range inside [0, 1] by shrinking the amplitude if needed
                let new_mean = s(*mean);
                let room = new_mean.min(1.0 - new_mean);
                DelayMap::SinusoidTime {
                    mean: new_mean,
                    amplitude: amplitude.signum() * amplitude.abs().min(room),
                    angular_frequency: *angular_frequency,
                    phase: *phase,
                }
            }
        }
    }
}

/// `Φ(t) = t − R(t)` for `t ∈ [0, T]`.
pub fn phi(delay: &DelayMap, t: f64, horizon: f64) -> Result<f64> {
    let slack = 1e-12 * horizon.max(1.0);
    if !(t >= -slack && t <= horizon + slack) {
        return Err(Error::Domain(format!("time {t} outside [0, {horizon}]")));
    }
    Ok(delay.relative_time(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat1() -> CoefficientSet {
        CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Dirichlet, 1.0)
    }

    #[test]
    fn constant_and_zero_amplitude_fields() {
        assert_eq!(ScalarField::constant(3.0).eval(0.4, &[0.2]), 3.0);
        let s = ScalarField::sinusoid(1.0, 0.0, 5.0, 0.0);
        for t in [0.0, 0.3, 0.77] {
            assert_eq!(s.eval(t, &[0.5]), 1.0);
        }
    }

    #[test]
    fn piecewise_lookup() {
        let f = ScalarField::piecewise(vec![0.5], vec![2.0, 7.0]);
        assert_eq!(f.eval(0.25, &[0.1]), 2.0);
        assert_eq!(f.eval(0.75, &[0.1]), 7.0);
    }

    #[test]
    fn sampled_grid_nearest_time_linear_space() {
        let arr = |a: f64, b: f64| {
            SpaceProfile::Sampled(SpaceSamples {
                shape: vec![2],
                extent: vec![1.0],
                values: vec![a, b],
            })
        };
        let f = ScalarField::SampledGrid {
            time_nodes: vec![0.0, 1.0],
            space_arrays: vec![arr(0.0, 1.0), arr(10.0, 20.0)],
        };
        assert!((f.eval(0.2, &[0.25]) - 0.25).abs() < 1e-15);
        assert!((f.eval(0.8, &[0.5]) - 15.0).abs() < 1e-15);
        // clamped outside the box
        assert!((f.eval(0.8, &[2.0]) - 20.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_out_of_range() {
        let a = heat1();
        assert!(a.evaluate(&a.c0, 1.5, &[0.5]).is_err());
        assert!(a.evaluate(&a.c0, 0.5, &[-0.1]).is_err());
        assert!(a.evaluate(&a.c0, 0.5, &[0.5, 0.5]).is_err());
        assert_eq!(a.evaluate(&a.diffusion[0][0], 1.0, &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn flatten_zeroes_c1_only() {
        let a = heat1()
            .with_c1(ScalarField::constant(4.0))
            .with_c0(ScalarField::constant(-1.0));
        let f = a.flatten();
        assert_eq!(f.c1, ScalarField::constant(0.0));
        assert_eq!(f.c0, a.c0);
        assert_eq!(f.diffusion, a.diffusion);
        assert_eq!(f.flatten(), f);
        let already = heat1();
        assert_eq!(already.flatten(), already);
    }

    #[test]
    fn phi_examples() {
        let zero = DelayMap::constant(0.0).unwrap();
        assert_eq!(phi(&zero, 0.7, 1.0).unwrap(), 0.7);
        let one = DelayMap::constant(1.0).unwrap();
        assert!((phi(&one, 0.3, 1.0).unwrap() + 0.7).abs() < 1e-15);
        let ramp = DelayMap::SampledTime {
            nodes: vec![0.0, 1.0],
            values: vec![0.0, 1.0],
        };
        ramp.validate().unwrap();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!(phi(&ramp, t, 1.0).unwrap().abs() < 1e-15);
        }
        assert!(phi(&zero, 1.5, 1.0).is_err());
    }

    #[test]
    fn delay_validation() {
        assert!(DelayMap::constant(1.2).is_err());
        assert!(DelayMap::constant(-0.1).is_err());
        let bad = DelayMap::SinusoidTime {
            mean: 0.9,
            amplitude: 0.2,
            angular_frequency: 1.0,
            phase: 0.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sup_bounds() {
        let a = heat1().with_c1(ScalarField::constant(-2.0));
        assert_eq!(a.sup_bound_k(), 2.0);
        let a = heat1().with_c1(ScalarField::sinusoid(1.0, 0.5, 3.0, 0.0));
        assert_eq!(a.sup_bound_k(), 1.5);
        let grid = ScalarField::SampledGrid {
            time_nodes: vec![0.0, 0.5, 1.0],
            space_arrays: vec![0.1.into(), (-0.9).into(), 0.4.into()],
        };
        assert_eq!(heat1().with_c1(grid).sup_bound_k(), 0.9);
    }

    #[test]
    fn ellipticity_examples() {
        let a = heat1();
        let samples = a.verification_samples(5, 3);
        assert_eq!(a.ellipticity_constant(&samples).unwrap(), 1.0);

        let b = CoefficientSet::heat(vec![1.0, 1.0], 1.0, BoundaryKind::Dirichlet, 1.0);
        assert_eq!(b.ellipticity_constant(&b.verification_samples(3, 2)).unwrap(), 1.0);

        let c = b
            .clone()
            .with_diffusion(0, 0, ScalarField::constant(2.0))
            .with_diffusion(0, 1, ScalarField::constant(0.5))
            .with_diffusion(1, 0, ScalarField::constant(0.5));
        let alpha = c.ellipticity_constant(&c.verification_samples(3, 2)).unwrap();
        assert!((alpha - (3.0 - 2f64.sqrt()) / 2.0).abs() < 1e-14);

        let asym = b.with_diffusion(0, 1, ScalarField::constant(0.1));
        assert!(matches!(
            asym.ellipticity_constant(&asym.verification_samples(3, 2)),
            Err(Error::Invariant { tag: "symmetry", .. })
        ));
    }

    #[test]
    fn validate_rejects_bad_sets() {
        let neg = CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Dirichlet, -1.0);
        assert!(neg.validate().is_err());
        let robin = CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Robin, 1.0).with_d0(ScalarField::constant(-0.5));
        assert!(robin.validate().is_err());
        let robin_ok =
            CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Robin, 1.0).with_d0(ScalarField::constant(0.5));
        assert_eq!(robin_ok.validate().unwrap(), 1.0);
    }

    #[test]
    fn oscillatory_family_basics() {
        let a = heat1().with_c1(ScalarField::constant(1.0));
        assert_eq!(a.oscillatory_family(3, 0.0).unwrap(), a);
        assert!(a.oscillatory_family(0, 1.0).is_err());
        let am = a.oscillatory_family(2, 1.0).unwrap();
        assert_eq!(am.flatten(), a.flatten());
        // sin(2π·2·0.125) = 1
        assert!((am.c1.eval(0.125, &[0.3]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn oscillation_against_linear_test_function() {
        // ∫₀¹ sin(4πt)·t dt = −1/(4π), by parts; checked with composite Simpson.
        let a = heat1();
        let am = a.oscillatory_family(2, 1.0).unwrap();
        let n = 2000;
        let h = 1.0 / n as f64;
        let g = |t: f64| (am.c1.eval(t, &[0.5]) - a.c1.eval(t, &[0.5])) * t;
        let mut s = g(0.0) + g(1.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        let integral = s * h / 3.0;
        assert!((integral + 1.0 / (4.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn serde_round_trip_of_a_set() {
        let a = heat1()
            .with_c1(ScalarField::piecewise(vec![0.5], vec![1.0, -1.0]))
            .with_drift(0, ScalarField::sinusoid(0.0, 1.0, 2.0, 0.1));
        let text = serde_json::to_string(&a).unwrap();
        let back: CoefficientSet = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
    }
}
