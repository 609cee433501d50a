//! The discrete evolution family `U(t, s)` of the delay-free equation.
//!
//! The time grid `t_k = k·dt` is part of the propagator's identity: every
//! propagation between grid-aligned times runs the same sequence of one-step
//! maps, so the cocycle identity `U(t₂,t₁)U(t₁,s) = U(t₂,s)` holds bitwise.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSet, ScalarField};
use crate::discretization::{
    assemble_operator, inner_product, operator_pq_norm, BandLu, BandMatrix, DenseMatrix, SpaceGrid, State,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    pub scheme: Scheme,
    pub dt: f64,
    #[serde(default)]
    pub positivity_safe: bool,
}

impl PropagatorOptions {
    pub fn backward_euler(dt: f64) -> Self {
        PropagatorOptions {
            scheme: Scheme::BackwardEuler,
            dt,
            positivity_safe: true,
        }
    }

    pub fn crank_nicolson(dt: f64) -> Self {
        PropagatorOptions {
            scheme: Scheme::CrankNicolson,
            dt,
            positivity_safe: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointMode {
    /// Transposed step matrices applied in reverse order: the exact discrete dual.
    Transpose,
    /// Backward march of the assembled adjoint equation.
    BackwardPde,
}

/// One step `t_k → t_{k+1}`: `u ← L⁻¹ (R u)` with `R = I` for backward Euler.
struct Step {
    lhs: BandLu,
    rhs: Option<BandMatrix>,
}

impl Step {
    fn apply(&self, u: &mut Vec<f64>) {
        if let Some(r) = &self.rhs {
            *u = r.matvec(u);
        }
        self.lhs.solve(u);
    }

    fn apply_block(&self, block: &mut Vec<f64>, ncols: usize) {
        if let Some(r) = &self.rhs {
            *block = r.matmul_block(block, ncols);
        }
        self.lhs.solve_block(block, ncols);
    }

    fn apply_transpose(&self, v: &mut Vec<f64>) {
        self.lhs.solve_transpose(v);
        if let Some(r) = &self.rhs {
            *v = r.transpose().matvec(v);
        }
    }
}

/// Cached step maps beyond this many stored band entries are rebuilt on demand.
const CACHE_BUDGET_ENTRIES: usize = 64 << 20;

/// Discrete evolution family for a flattened coefficient set.
pub struct Propagator {
    a0: CoefficientSet,
    grid: SpaceGrid,
    opts: PropagatorOptions,
    steps_total: usize,
    autonomous: Option<OnceLock<Arc<Step>>>,
    per_step: Vec<OnceLock<Arc<Step>>>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("grid", &self.grid)
            .field("opts", &self.opts)
            .field("steps_total", &self.steps_total)
            .finish()
    }
}

impl Propagator {
    /// Builds the propagator of `flatten(a)`; the delay coefficient is ignored.
    pub fn new(a: &CoefficientSet, grid: &SpaceGrid, opts: PropagatorOptions) -> Result<Self> {
        if !(opts.dt > 0.0 && opts.dt.is_finite()) {
            return Err(Error::Domain(format!("time step {} must be positive", opts.dt)));
        }
        let a0 = a.flatten();
        // cheap structural check; full assembly errors surface on first use
        assemble_operator(&a0, grid, 0.0, opts.positivity_safe)?;
        let ratio = a0.horizon / opts.dt;
        let steps_total = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
            ratio.round() as usize
        } else {
            ratio.floor() as usize
        };
        let autonomous = a0.is_autonomous().then(OnceLock::new);
        let band = if grid.dim() == 1 {
            3
        } else {
            2 * grid.nodes_on_axis(0) + 3
        };
        let per_step_entries = band * grid.node_count();
        let cache = autonomous.is_none() && per_step_entries * steps_total <= CACHE_BUDGET_ENTRIES;
        let per_step = if cache {
            (0..steps_total).map(|_| OnceLock::new()).collect()
        } else {
            Vec::new()
        };
        Ok(Propagator {
            a0,
            grid: grid.clone(),
            opts,
            steps_total,
            autonomous,
            per_step,
        })
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn options(&self) -> PropagatorOptions {
        self.opts
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.a0
    }

    pub fn dt(&self) -> f64 {
        self.opts.dt
    }

    /// Number of steps from `0` to the horizon.
    pub fn steps_total(&self) -> usize {
        self.steps_total
    }

    /// Grid time `t_k = k·dt`.
    pub fn time_of(&self, k: usize) -> f64 {
        k as f64 * self.opts.dt
    }

    /// Index `k` with `t = k·dt`, or a misalignment error.
    pub fn step_index(&self, t: f64) -> Result<usize> {
        step_index(t, self.opts.dt, self.steps_total)
    }

    fn build_step(&self, a0: &CoefficientSet, k: usize) -> Result<Step> {
        let dt = self.opts.dt;
        let safe = self.opts.positivity_safe;
        let (t0, t1) = (self.time_of(k), self.time_of(k + 1).min(a0.horizon));
        match self.opts.scheme {
            Scheme::BackwardEuler => {
                let a1 = assemble_operator(a0, &self.grid, t1, safe)?;
                Ok(Step {
                    lhs: BandLu::factor(&a1.matrix.shifted_scaled(1.0, -dt))?,
                    rhs: None,
                })
            }
            Scheme::CrankNicolson => {
                let a1 = assemble_operator(a0, &self.grid, t1, safe)?;
                let a_prev = assemble_operator(a0, &self.grid, t0, safe)?;
                Ok(Step {
                    lhs: BandLu::factor(&a1.matrix.shifted_scaled(1.0, -0.5 * dt))?,
                    rhs: Some(a_prev.matrix.shifted_scaled(1.0, 0.5 * dt)),
                })
            }
        }
    }

    fn step(&self, k: usize) -> Result<Arc<Step>> {
        if let Some(cell) = &self.autonomous {
            if let Some(s) = cell.get() {
                return Ok(s.clone());
            }
            let s = Arc::new(self.build_step(&self.a0, 0)?);
            return Ok(cell.get_or_init(|| s).clone());
        }
        if let Some(cell) = self.per_step.get(k) {
            if let Some(s) = cell.get() {
                return Ok(s.clone());
            }
            let s = Arc::new(self.build_step(&self.a0, k)?);
            return Ok(cell.get_or_init(|| s).clone());
        }
        Ok(Arc::new(self.build_step(&self.a0, k)?))
    }

    /// Applies the step map `t_k → t_{k+1}` in place.
    pub fn step_in_place(&self, k: usize, u: &mut Vec<f64>) -> Result<()> {
        if k >= self.steps_total {
            return Err(Error::Domain(format!("step {k} beyond the horizon")));
        }
        self.step(k)?.apply(u);
        Ok(())
    }

    fn check_pair(&self, s: f64, t: f64) -> Result<(usize, usize)> {
        if s > t {
            return Err(Error::Precondition(format!("start {s} after end {t}")));
        }
        Ok((self.step_index(s)?, self.step_index(t)?))
    }

    fn check_state(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.node_count() {
            return Err(Error::Dimension(format!(
                "state has {} entries, grid has {} nodes",
                u.len(),
                self.grid.node_count()
            )));
        }
        Ok(())
    }

    /// `U(t, s) u`.
    pub fn propagate(&self, s: f64, t: f64, u: &State) -> Result<State> {
        let (ks, kt) = self.check_pair(s, t)?;
        self.check_state(u)?;
        let mut v = u.0.clone();
        for k in ks..kt {
            self.step(k)?.apply(&mut v);
        }
        Ok(State(v))
    }

    /// `‖U(t2,t1)U(t1,s)u − U(t2,s)u‖₂ / ‖u‖₂`.
    pub fn verify_cocycle(&self, s: f64, t1: f64, t2: f64, u: &State) -> Result<f64> {
        if !(s <= t1 && t1 <= t2) {
            return Err(Error::Precondition("cocycle needs s ≤ t1 ≤ t2".into()));
        }
        let composed = self.propagate(t1, t2, &self.propagate(s, t1, u)?)?;
        let direct = self.propagate(s, t2, u)?;
        let num: f64 = composed.sub(&direct).dot(&composed.sub(&direct));
        let den = u.dot(u);
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    /// Dense kernel of `U(t, s)`: column `j` is `U(t, s) e_j`.
    pub fn propagate_kernel(&self, s: f64, t: f64) -> Result<DenseMatrix> {
        let (ks, kt) = self.check_pair(s, t)?;
        let n = self.grid.node_count();
        let mut block = DenseMatrix::identity(n).into_vec();
        for k in ks..kt {
            self.step(k)?.apply_block(&mut block, n);
        }
        Ok(DenseMatrix::from_row_major(n, n, block))
    }

    /// Marches a dense kernel through the step maps `[from, to)`.
    fn advance_kernel(&self, kernel: DenseMatrix, from: usize, to: usize) -> Result<DenseMatrix> {
        let n = kernel.rows();
        let mut block = kernel.into_vec();
        for k in from..to {
            self.step(k)?.apply_block(&mut block, n);
        }
        Ok(DenseMatrix::from_row_major(n, n, block))
    }

    /// The adjoint `U*(s, t) v` for `s ≤ t`.
    pub fn adjoint_propagate(&self, t: f64, s: f64, v: &State, mode: AdjointMode) -> Result<State> {
        let (ks, kt) = self.check_pair(s, t)?;
        self.check_state(v)?;
        let mut w = v.0.clone();
        match mode {
            AdjointMode::Transpose => {
                for k in (ks..kt).rev() {
                    self.step(k)?.apply_transpose(&mut w);
                }
            }
            AdjointMode::BackwardPde => {
                let adj = adjoint_coefficients(&self.a0);
                // the backward problem in reversed time τ = T − t is a forward one
                let dt = self.opts.dt;
                let safe = self.opts.positivity_safe;
                for k in (ks..kt).rev() {
                    let (t_lo, t_hi) = (self.time_of(k), self.time_of(k + 1).min(adj.horizon));
                    match self.opts.scheme {
                        Scheme::BackwardEuler => {
                            let op = assemble_operator(&adj, &self.grid, t_lo, safe)?;
                            BandLu::factor(&op.matrix.shifted_scaled(1.0, -dt))?.solve(&mut w);
                        }
                        Scheme::CrankNicolson => {
                            let lo = assemble_operator(&adj, &self.grid, t_lo, safe)?;
                            let hi = assemble_operator(&adj, &self.grid, t_hi, safe)?;
                            w = hi.matrix.shifted_scaled(1.0, 0.5 * dt).matvec(&w);
                            BandLu::factor(&lo.matrix.shifted_scaled(1.0, -0.5 * dt))?.solve(&mut w);
                        }
                    }
                }
            }
        }
        Ok(State(w))
    }

    /// `|⟨U(t,s)u, v⟩ − ⟨u, U*(s,t)v⟩| / (‖u‖‖v‖)` in the discrete `L_2` pairing.
    pub fn duality_residual(&self, s: f64, t: f64, u: &State, v: &State) -> Result<f64> {
        let fwd = self.propagate(s, t, u)?;
        let adj = self.adjoint_propagate(t, s, v, AdjointMode::Transpose)?;
        let g = &self.grid;
        let lhs = inner_product(&fwd, v, g);
        let rhs = inner_product(u, &adj, g);
        let scale = (inner_product(u, u, g) * inner_product(v, v, g)).sqrt();
        Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
    }

    /// Growth constants `(M, γ)` with `‖U(t,s)‖_{p→p} ≤ M e^{γ(t−s)}` on the sampled pairs.
    ///
    /// `γ` is the descriptor bound of `c0⁺`; `M` is the largest observed
    /// `‖U(t,s)‖ e^{−γ(t−s)}`, never below one.
    pub fn estimate_m_gamma(&self, p: f64, sample_pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
        if sample_pairs.is_empty() {
            return Err(Error::Precondition("no sample pairs for (M, γ)".into()));
        }
        if !(p == 1.0 || p == 2.0 || p.is_infinite()) {
            return Err(Error::UnsupportedNorm { p, q: p });
        }
        let gamma = growth_rate(&self.a0.c0);
        let mut pairs = sample_pairs
            .iter()
            .map(|&(s, t)| self.check_pair(s, t))
            .collect::<Result<Vec<_>>>()?;
        pairs.sort_unstable();
        pairs.dedup();

        let mut m: f64 = 1.0;
        let mut current: Option<(usize, usize, DenseMatrix)> = None;
        let n = self.grid.node_count();
        for (ks, kt) in pairs {
            let kernel = match current.take() {
                Some((s0, t0, k)) if s0 == ks && t0 <= kt => self.advance_kernel(k, t0, kt)?,
                _ => self.advance_kernel(DenseMatrix::identity(n), ks, kt)?,
            };
            let norm = operator_pq_norm(&kernel, &self.grid, p, p)?;
            let elapsed = self.time_of(kt) - self.time_of(ks);
            m = m.max(norm * (-gamma * elapsed).exp());
            current = Some((ks, kt, kernel));
        }
        Ok((m, gamma))
    }

    /// Least-squares slope of `log ‖U(t,0)‖_{1→∞}` against `log t`.
    pub fn smoothing_exponent_fit(&self, times: &[f64]) -> Result<SmoothingFit> {
        let h = self.grid.min_spacing();
        let resolved_from = 4.0 * h * h;
        let mut sorted = times.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut fit = SmoothingFit {
            resolved_from,
            ..SmoothingFit::default()
        };
        let n = self.grid.node_count();
        let mut kernel = DenseMatrix::identity(n);
        let mut at = 0usize;
        for t in sorted {
            if !(t > 0.0) || t < resolved_from {
                fit.flagged.push(t);
                continue;
            }
            let k = self.step_index(t)?;
            kernel = self.advance_kernel(kernel, at, k)?;
            at = k;
            let norm = operator_pq_norm(&kernel, &self.grid, 1.0, f64::INFINITY)?;
            fit.times.push(t);
            fit.norms.push(norm);
        }
        if fit.times.len() < 2 {
            return Err(Error::Precondition(
                "need at least two resolved times (t ≥ 4h²) for a smoothing fit".into(),
            ));
        }
        let xs: Vec<f64> = fit.times.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = fit.norms.iter().map(|v| v.ln()).collect();
        let (slope, intercept) = least_squares(&xs, &ys);
        fit.slope = slope;
        fit.intercept = intercept;
        Ok(fit)
    }
}

/// Result of a log-log fit of the `L¹ → L^∞` norm of `U(t, 0)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothingFit {
    pub slope: f64,
    pub intercept: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Requested times below the resolved window, left out of the fit.
    pub flagged: Vec<f64>,
    pub resolved_from: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `γ = max(0, sup c0)` from the descriptor.
fn growth_rate(c0: &ScalarField) -> f64 {
    match c0 {
        ScalarField::Constant { value } => value.max(0.0),
        other => other.sup_bound(),
    }
}

/// Coefficients of the adjoint equation: `((a_ji), −(b_i), −(a_i), c0, d0)`,
/// i.e. the roles of the two first-order terms swap with a sign change.
pub fn adjoint_coefficients(a0: &CoefficientSet) -> CoefficientSet {
    let n = a0.dim;
    let transposed = (0..n)
        .map(|i| (0..n).map(|j| a0.diffusion[j][i].clone()).collect())
        .collect();
    let negate = |f: &ScalarField| f.scaled(-1.0);
    CoefficientSet {
        diffusion: transposed,
        flux_drift: a0.drift.iter().map(negate).collect(),
        drift: a0.flux_drift.iter().map(negate).collect(),
        ..a0.flatten()
    }
}

/// `k` with `t = k·dt` (up to rounding), bounded by `max_steps`.
pub fn step_index(t: f64, dt: f64, max_steps: usize) -> Result<usize> {
    let ratio = t / dt;
    let k = ratio.round();
    if !(k >= 0.0) || (ratio - k).abs() > 1e-6 || k as usize > max_steps {
        return Err(Error::Misaligned { t, dt });
    }
    Ok(k as usize)
}

/// Convenience: whether kernels of this propagator are expected to be nonnegative.
pub fn positivity_expected(p: &Propagator) -> bool {
    let a = p.coefficients();
    p.options().scheme == Scheme::BackwardEuler
        && p.options().positivity_safe
        && (a.dim == 1 || (a.diffusion[0][1].is_identically_zero() && a.diffusion[1][0].is_identically_zero()))
}
