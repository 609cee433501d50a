//! Reference solutions computed independently of the finite-difference solver.
//!
//! [`heat_mode_solution`] is the separated-variables amplitude of one heat
//! eigenmode. [`delay_ode_steps`] integrates the scalar delay equation
//! `x' = −λx + c·x(t − r)` by the method of steps, evaluating the
//! variation-of-constants integral by quadrature instead of implicit stepping.

use serde::{Deserialize, Serialize};

use crate::coefficients::BoundaryKind;
use crate::error::{Error, Result};

/// A single separable eigenmode of the constant-coefficient heat operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenmodeSpec {
    pub bc: BoundaryKind,
    pub lengths: Vec<f64>,
    /// Mode index per axis: `sin(kπx/L)` for Dirichlet, `cos(kπx/L)` for Neumann.
    pub modes: Vec<u32>,
    pub diffusion: f64,
    pub c0: f64,
}

impl EigenmodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bc == BoundaryKind::Robin {
            return Err(Error::Domain(
                "eigenmodes are tabulated for Dirichlet and Neumann only".into(),
            ));
        }
        if self.lengths.is_empty() || self.lengths.len() != self.modes.len() {
            return Err(Error::Dimension("one mode index per axis is required".into()));
        }
        if self.bc == BoundaryKind::Dirichlet && self.modes.contains(&0) {
            return Err(Error::Domain("Dirichlet modes start at k = 1".into()));
        }
        if !(self.diffusion > 0.0) || self.lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("diffusion and lengths must be positive".into()));
        }
        Ok(())
    }

    /// `λ_k = α·Σ(k_i π / L_i)²`.
    pub fn eigenvalue(&self) -> f64 {
        self.diffusion
            * self
                .modes
                .iter()
                .zip(&self.lengths)
                .map(|(&k, &l)| (k as f64 * std::f64::consts::PI / l).powi(2))
                .sum::<f64>()
    }

    /// Spatial profile of the mode at `x`.
    pub fn profile(&self, x: &[f64]) -> f64 {
        let pi = std::f64::consts::PI;
        self.modes
            .iter()
            .zip(&self.lengths)
            .zip(x)
            .map(|((&k, &l), &xi)| {
                let arg = k as f64 * pi * xi / l;
                match self.bc {
                    BoundaryKind::Neumann => arg.cos(),
                    _ => arg.sin(),
                }
            })
            .product()
    }
}

/// Amplitude `e^{(−λ_k + c0) t}` of the mode at time `t ≥ 0`.
pub fn heat_mode_solution(spec: &EigenmodeSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time {t} must be nonnegative")));
    }
    Ok(((-spec.eigenvalue() + spec.c0) * t).exp())
}

/// History of the scalar delay equation on `[−r, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarHistory {
    /// `g(θ) = Σ coeffs[i]·θ^i`.
    Polynomial { coeffs: Vec<f64> },
    /// Uniform samples from `θ = −r` to `θ = 0`, interpolated by cubics.
    Sampled { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayOdeSpec {
    pub lambda: f64,
    pub coupling: f64,
    pub delay: f64,
    pub history: ScalarHistory,
}

impl DelayOdeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain("decay rate must be nonnegative".into()));
        }
        if !(self.delay > 0.0 && self.delay <= 1.0) {
            return Err(Error::Domain(format!("delay {} outside (0, 1]", self.delay)));
        }
        if let ScalarHistory::Sampled { values } = &self.history {
            if values.len() < 4 {
                return Err(Error::Domain("sampled history needs at least 4 samples".into()));
            }
        }
        Ok(())
    }

    /// `g(θ)` for `θ ∈ [−r, 0]`.
    pub fn history_at(&self, theta: f64) -> f64 {
        match &self.history {
            ScalarHistory::Polynomial { coeffs } => horner(coeffs, theta),
            ScalarHistory::Sampled { values } => {
                let h = self.delay / (values.len() - 1) as f64;
                cubic_lookup(values, -self.delay, h, theta)
            }
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Four-point Lagrange interpolation on a uniform grid starting at `t0`.
fn cubic_lookup(values: &[f64], t0: f64, h: f64, t: f64) -> f64 {
    let n = values.len();
    let pos = ((t - t0) / h).clamp(0.0, (n - 1) as f64);
    let i = (pos.floor() as usize).min(n - 2);
    let base = i.saturating_sub(1).min(n.saturating_sub(4));
    let s = pos - base as f64;
    let mut out = 0.0;
    for j in 0..4.min(n) {
        let mut w = 1.0;
        for m in 0..4.min(n) {
            if m != j {
                w *= (s - m as f64) / (j as f64 - m as f64);
            }
        }
        out += w * values[base + j];
    }
    out
}

/// Uniformly sampled scalar function with cubic interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub t0: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn end(&self) -> f64 {
        self.t0 + self.step * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        cubic_lookup(&self.values, self.t0, self.step, t)
    }
}

/// `φ_ℓ(z) = Σ_i z^i/(i+ℓ)!` for `ℓ = 0..=count`.
fn phi_functions(z: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count + 1];
    if z.abs() < 1.0 {
        for (l, slot) in out.iter_mut().enumerate() {
            let mut term = 1.0 / factorial(l);
            let mut sum = term;
            let mut i = 1;
            while term.abs() > 1e-18 * sum.abs() && i < 60 {
                term *= z / (i + l) as f64;
                sum += term;
                i += 1;
            }
            *slot = sum;
        }
    } else {
        out[0] = z.exp();
        for l in 0..count {
            out[l + 1] = (out[l] - 1.0 / factorial(l)) / z;
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `∫_0^t e^{−λ(t−σ)} q(σ) dσ` for the polynomial `q(σ) = p(σ − r)`, via
/// the Taylor coefficients of `q` at 0 and the φ-functions.
fn first_interval_integral(coeffs: &[f64], lambda: f64, r: f64, t: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    // derivatives of q at σ = 0 are derivatives of p at −r
    let degree = coeffs.len() - 1;
    let mut derivs = Vec::with_capacity(degree + 1);
    let mut poly = coeffs.to_vec();
    for _ in 0..=degree {
        derivs.push(horner(&poly, -r));
        poly = poly.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect();
    }
    let phis = phi_functions(-lambda * t, degree + 1);
    derivs
        .iter()
        .enumerate()
        .map(|(k, &d)| d * t.powi(k as i32 + 1) * phis[k + 1])
        .sum()
}

/// Method-of-steps solution of `x' = −λx + c·x(t − r)` on `[0, T]`.
///
/// On each interval `[jr, (j+1)r]` the variation-of-constants formula
/// `x(t) = e^{−λ(t−jr)}x(jr) + c∫_{jr}^t e^{−λ(t−σ)}x(σ−r)dσ` is evaluated on a
/// grid of `substeps` subintervals, the integral by composite Simpson pairs
/// with a one-panel `(5, 8, −1)/12` correction at odd nodes. A polynomial
/// history is integrated in closed form on the first interval.
pub fn delay_ode_steps(spec: &DelayOdeSpec, horizon: f64, substeps: usize) -> Result<SampledFunction> {
    spec.validate()?;
    if !(horizon > 0.0 && horizon <= 10.0) {
        return Err(Error::Domain(format!("horizon {horizon} outside (0, 10]")));
    }
    if substeps < 1000 {
        return Err(Error::Domain(
            "at least 1000 substeps per delay interval are required".into(),
        ));
    }
    let substeps = substeps + substeps % 2;
    let (lambda, c, r) = (spec.lambda, spec.coupling, spec.delay);
    let h = r / substeps as f64;
    let intervals = (horizon / r - 1e-12).ceil().max(1.0) as usize;

    let decay_1 = (-lambda * h).exp();
    let decay_2 = (-2.0 * lambda * h).exp();
    let mut prev: Vec<f64> = (0..=substeps).map(|i| spec.history_at(-r + i as f64 * h)).collect();
    let mut values = vec![spec.history_at(0.0)];

    for j in 0..intervals {
        let x0 = *values.last().unwrap();
        let mut current = vec![0.0; substeps + 1];
        current[0] = x0;
        match (&spec.history, j) {
            (ScalarHistory::Polynomial { coeffs }, 0) => {
                for (i, slot) in current.iter_mut().enumerate().skip(1) {
                    let t = i as f64 * h;
                    *slot = (-lambda * t).exp() * x0 + c * first_interval_integral(coeffs, lambda, r, t);
                }
            }
            _ => {
                // y(σ) = x(σ − r) sampled at the interval's own nodes
                let y = &prev;
                let mut even = 0.0;
                for i in 1..=substeps {
                    let integral = if i % 2 == 0 {
                        even = decay_2 * even + h / 3.0 * (decay_2 * y[i - 2] + 4.0 * decay_1 * y[i - 1] + y[i]);
                        even
                    } else {
                        // i + 1 ≤ substeps since substeps is even
                        let panel = h / 12.0 * (5.0 * decay_1 * y[i - 1] + 8.0 * y[i] - y[i + 1] / decay_1);
                        decay_1 * even + panel
                    };
                    current[i] = (-lambda * i as f64 * h).exp() * x0 + c * integral;
                }
            }
        }
        values.extend_from_slice(&current[1..]);
        prev = current;
    }

    let keep = ((horizon / h).round() as usize).min(values.len() - 1);
    values.truncate(keep + 1);
    Ok(SampledFunction {
        t0: 0.0,
        step: h,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(coeffs: &[f64]) -> ScalarHistory {
        ScalarHistory::Polynomial {
            coeffs: coeffs.to_vec(),
        }
    }

    #[test]
    fn heat_mode_values() {
        let spec = EigenmodeSpec {
            bc: BoundaryKind::Dirichlet,
            lengths: vec![1.0],
            modes: vec![1],
            diffusion: 1.0,
            c0: 0.0,
        };
        assert_eq!(heat_mode_solution(&spec, 0.0).unwrap(), 1.0);
        let v = heat_mode_solution(&spec, 0.1).unwrap();
        assert!((v - 0.372708).abs() < 1e-6);
        let neumann = EigenmodeSpec {
            bc: BoundaryKind::Neumann,
            modes: vec![0],
            ..spec.clone()
        };
        assert_eq!(heat_mode_solution(&neumann, 3.7).unwrap(), 1.0);
        assert!(heat_mode_solution(&spec, -1.0).is_err());
    }

    #[test]
    fn constant_fixed_point() {
        let spec = DelayOdeSpec {
            lambda: 1.0,
            coupling: 1.0,
            delay: 1.0,
            history: poly(&[1.0]),
        };
        let x = delay_ode_steps(&spec, 3.0, 1000).unwrap();
        for v in &x.values {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
        let sampled = DelayOdeSpec {
            history: ScalarHistory::Sampled { values: vec![1.0; 11] },
            ..spec
        };
        let y = delay_ode_steps(&sampled, 3.0, 1000).unwrap();
        for v in &y.values {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn pure_decay_without_coupling() {
        let spec = DelayOdeSpec {
            lambda: 2.5,
            coupling: 0.0,
            delay: 0.3,
            history: poly(&[2.0, 1.0]),
        };
        let x = delay_ode_steps(&spec, 1.0, 2000).unwrap();
        for t in [0.0, 0.25, 0.61, 1.0] {
            assert!((x.eval(t) - 2.0 * (-2.5 * t).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn closed_form_method_of_steps() {
        let spec = DelayOdeSpec {
            lambda: 0.0,
            coupling: 1.0,
            delay: 1.0,
            history: poly(&[1.0]),
        };
        let x = delay_ode_steps(&spec, 2.0, 1000).unwrap();
        for t in [0.1, 0.5, 1.0] {
            assert!((x.eval(t) - (1.0 + t)).abs() < 1e-12);
        }
        for t in [1.2, 1.5, 2.0] {
            let exact = 1.0 + t + (t - 1.0f64).powi(2) / 2.0;
            assert!((x.eval(t) - exact).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn polynomial_closed_form_matches_quadrature() {
        // same history given as samples goes through the quadrature path
        let coeffs = [0.5, -1.0, 0.75];
        let r = 0.4;
        let values: Vec<f64> = (0..=4000)
            .map(|i| horner(&coeffs, -r + i as f64 * r / 4000.0))
            .collect();
        let a = DelayOdeSpec {
            lambda: 3.0,
            coupling: -2.0,
            delay: r,
            history: poly(&coeffs),
        };
        let b = DelayOdeSpec {
            history: ScalarHistory::Sampled { values },
            ..a.clone()
        };
        let xa = delay_ode_steps(&a, 2.0, 2000).unwrap();
        let xb = delay_ode_steps(&b, 2.0, 2000).unwrap();
        for t in [0.1, 0.37, 0.9, 1.55, 2.0] {
            assert!((xa.eval(t) - xb.eval(t)).abs() < 1e-10, "{t}");
        }
    }

    #[test]
    fn self_convergence_under_doubling() {
        let cases = [
            (1.0, 1.0, 1.0, vec![1.0, 0.5]),
            (9.8696, 8.0, 0.4, vec![1.0, 1.0]),
            (0.5, -3.0, 0.25, vec![0.2, 0.0, 1.0]),
        ];
        for (lambda, coupling, delay, coeffs) in cases {
            let spec = DelayOdeSpec {
                lambda,
                coupling,
                delay,
                history: poly(&coeffs),
            };
            let a = delay_ode_steps(&spec, 3.0, 1000).unwrap();
            let b = delay_ode_steps(&spec, 3.0, 2000).unwrap();
            let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..=60 {
                let t = 3.0 * k as f64 / 60.0;
                assert!((a.eval(t) - b.eval(t)).abs() <= 1e-8 * scale, "{lambda} {t}");
            }
        }
    }

    #[test]
    fn phi_functions_agree_across_branches() {
        for z in [-0.999, -1.001, 0.5, -3.0] {
            let p = phi_functions(z, 4);
            // φ_1(z) = (e^z − 1)/z
            assert!((p[1] - (z.exp() - 1.0) / z).abs() < 1e-14);
            assert!((p[2] - (z.exp() - 1.0 - z) / (z * z)).abs() < 1e-12);
        }
    }
}
