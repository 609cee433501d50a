use super::*;
use crate::coefficients::{BoundaryKind, DelayMap, ScalarField};
use crate::discretization::discrete_norm;
use crate::oracle::{delay_ode_steps, DelayOdeSpec, ScalarHistory};
use crate::propagator::{Propagator, PropagatorOptions};
use std::f64::consts::PI;

fn heat(horizon: f64) -> CoefficientSet {
    CoefficientSet::heat(vec![1.0], horizon, BoundaryKind::Dirichlet, 1.0)
}

fn mode_history(grid: &SpaceGrid, g: impl Fn(f64) -> f64) -> HistorySegment {
    HistorySegment::from_fn(grid, 20, |th, x| g(th) * (PI * x[0]).sin()).unwrap()
}

/// Discrete Dirichlet eigenvalue of the 3-point Laplacian for `sin(πx)`.
fn discrete_lambda(cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    4.0 / (h * h) * (PI * h / 2.0).sin().powi(2)
}

#[test]
fn multiply_c1_examples() {
    let grid = SpaceGrid::unit_interval(16, BoundaryKind::Dirichlet).unwrap();
    let v = grid.sample(|x| x[0] - 0.3);
    let zero = multiply_c1(&heat(1.0), &grid, 0.5, &v).unwrap();
    assert!(zero.iter().all(|&z| z == 0.0));
    let a = heat(1.0).with_c1(ScalarField::constant(2.0));
    assert_eq!(multiply_c1(&a, &grid, 0.5, &v).unwrap(), v.scaled(2.0));
    assert!(multiply_c1(&a, &grid, 1.5, &v).is_err());
    let b = heat(1.0).with_c1(ScalarField::sinusoid(0.5, 1.5, 7.0, 0.2));
    let k = b.sup_bound_k();
    for p in [1.0, 2.0, f64::INFINITY] {
        for t in [0.0, 0.31, 0.9] {
            let w = multiply_c1(&b, &grid, t, &v).unwrap();
            let lhs = discrete_norm(&w, &grid, p).unwrap();
            assert!(lhs <= k * discrete_norm(&v, &grid, p).unwrap() + 1e-14);
        }
    }
}

#[test]
fn theta0_examples() {
    assert_eq!(picard_theta0(1.0, 1.0, 0.0, 1.0), 0.5);
    assert_eq!(picard_theta0(2.0, 1.0, 0.0, 1.0), 0.25);
    assert_eq!(picard_theta0(1.0, 0.0, 0.0, 1.0), 1.0);
}

#[test]
fn delayed_lookup_and_seam() {
    let grid = SpaceGrid::unit_interval(8, BoundaryKind::Dirichlet).unwrap();
    let a = heat(1.0).with_c1(ScalarField::constant(1.0));
    let h = mode_history(&grid, |th| 1.0 + th);
    let delay = DelayMap::constant(0.5).unwrap();
    let traj = mild_solve_march(
        &a,
        &grid,
        &h,
        &delay,
        (0.0, 0.1),
        PropagatorOptions::backward_euler(0.01),
    )
    .unwrap();
    assert_eq!(evaluate_delayed(&traj, -1.0).unwrap(), h.states()[0]);
    let mid = evaluate_delayed(&traj, -1.0 + 0.025).unwrap();
    let (s0, s1) = (&h.states()[0], &h.states()[1]);
    for i in 0..mid.len() {
        assert!((mid[i] - 0.5 * (s0[i] + s1[i])).abs() < 1e-15);
    }
    assert!(traj.seam_is_continuous());
    assert_eq!(evaluate_delayed(&traj, 0.0).unwrap(), traj.states()[0]);
    assert!(matches!(evaluate_delayed(&traj, 0.2), Err(Error::Causality { .. })));
}

#[test]
fn march_without_coupling_is_the_propagator() {
    let grid = SpaceGrid::unit_interval(32, BoundaryKind::Neumann).unwrap();
    let a = CoefficientSet::heat(vec![1.0], 0.5, BoundaryKind::Neumann, 0.7).with_drift(0, ScalarField::constant(0.4));
    let h = HistorySegment::from_fn(&grid, 10, |th, x| (3.0 * x[0] + th).cos()).unwrap();
    let opts = PropagatorOptions::crank_nicolson(0.01);
    let traj = mild_solve_march(&a, &grid, &h, &DelayMap::constant(0.3).unwrap(), (0.0, 0.5), opts).unwrap();
    let prop = Propagator::new(&a, &grid, opts).unwrap();
    let u0 = h.states().last().unwrap();
    for (t, u) in traj.times().iter().zip(traj.states()) {
        assert_eq!(*u, prop.propagate(0.0, *t, u0).unwrap());
    }
}

#[test]
fn constant_mode_of_the_delay_equation() {
    // x' = −x + x(t−1) with x ≡ 1: c0 cancels all but one unit of decay
    let cells = 64;
    let grid = SpaceGrid::unit_interval(cells, BoundaryKind::Dirichlet).unwrap();
    let a = heat(2.0)
        .with_c0(ScalarField::constant(discrete_lambda(cells) - 1.0))
        .with_c1(ScalarField::constant(1.0));
    let h = mode_history(&grid, |_| 1.0);
    let delay = DelayMap::constant(1.0).unwrap();
    let opts = PropagatorOptions::backward_euler(1e-3);
    let march = mild_solve_march(&a, &grid, &h, &delay, (0.0, 2.0), opts).unwrap();
    let picard = mild_solve_picard(&a, &grid, &h, &delay, (0.0, 2.0), opts, &PicardOptions::default()).unwrap();
    let profile = h.states().last().unwrap();
    for traj in [&march, &picard.trajectory] {
        for u in traj.states() {
            let amp = u.dot(profile) / profile.dot(profile);
            assert!((amp - 1.0).abs() < 1e-4, "{amp}");
        }
    }
}

#[test]
fn eigenmode_with_delay_matches_method_of_steps() {
    let cells = 64;
    let (c, r, horizon) = (8.0, 0.4, 1.5);
    let grid = SpaceGrid::unit_interval(cells, BoundaryKind::Dirichlet).unwrap();
    let a = heat(horizon).with_c1(ScalarField::constant(c));
    let h = mode_history(&grid, |th| 1.0 + th);
    let delay = DelayMap::constant(r).unwrap();
    let traj = mild_solve_march(
        &a,
        &grid,
        &h,
        &delay,
        (0.0, horizon),
        PropagatorOptions::crank_nicolson(1e-3),
    )
    .unwrap();
    let oracle = delay_ode_steps(
        &DelayOdeSpec {
            lambda: PI * PI,
            coupling: c,
            delay: r,
            history: ScalarHistory::Polynomial { coeffs: vec![1.0, 1.0] },
        },
        horizon,
        2000,
    )
    .unwrap();
    let (mut err, mut size) = (0.0f64, 0.0f64);
    for (t, u) in traj.times().iter().zip(traj.states()) {
        let x = oracle.eval(*t);
        let exact = grid.sample(|p| x * (PI * p[0]).sin());
        err = err.max(u.sub(&exact).max_abs());
        size = size.max(exact.max_abs());
    }
    assert!(err / size < 1e-2, "{}", err / size);
}

#[test]
fn picard_without_coupling_matches_march_bitwise() {
    let grid = SpaceGrid::unit_interval(20, BoundaryKind::Robin).unwrap();
    let a = CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Robin, 1.0).with_d0(ScalarField::constant(0.5));
    let h = HistorySegment::from_fn(&grid, 4, |th, x| 1.0 + th * x[0]).unwrap();
    let delay = DelayMap::constant(0.2).unwrap();
    let opts = PropagatorOptions::backward_euler(0.02);
    let march = mild_solve_march(&a, &grid, &h, &delay, (0.0, 1.0), opts).unwrap();
    let picard = mild_solve_picard(&a, &grid, &h, &delay, (0.0, 1.0), opts, &PicardOptions::default()).unwrap();
    assert_eq!(picard.iterations, vec![1]);
    assert_eq!(picard.trajectory, march);
}

#[test]
fn picard_agrees_with_march_and_contracts() {
    let grid = SpaceGrid::unit_interval(24, BoundaryKind::Dirichlet).unwrap();
    let a = heat(1.0).with_c1(ScalarField::sinusoid(1.0, 1.0, 3.0, 0.0));
    let h = mode_history(&grid, |th| (2.0 * th).cos());
    let delay = DelayMap::SinusoidTime {
        mean: 0.3,
        amplitude: 0.2,
        angular_frequency: 5.0,
        phase: 0.0,
    };
    let opts = PropagatorOptions::backward_euler(0.005);
    let march = mild_solve_march(&a, &grid, &h, &delay, (0.0, 1.0), opts).unwrap();
    let sol = mild_solve_picard(&a, &grid, &h, &delay, (0.0, 1.0), opts, &PicardOptions::default()).unwrap();
    assert!(sol.iterations.iter().all(|&n| n <= 8), "{:?}", sol.iterations);
    assert!(sol.iterations.iter().zip(&sol.iteration_bounds).all(|(n, b)| n <= b));
    let mut diff = 0.0f64;
    for (u, v) in sol.trajectory.states().iter().zip(march.states()) {
        diff = diff.max(discrete_norm(&u.sub(v), &grid, 2.0).unwrap());
    }
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn glue_restrict_roundtrip_and_associativity() {
    let grid = SpaceGrid::unit_interval(10, BoundaryKind::Neumann).unwrap();
    let a = CoefficientSet::heat(vec![1.0], 2.0, BoundaryKind::Neumann, 1.0).with_c1(ScalarField::constant(-0.5));
    let h = HistorySegment::from_fn(&grid, 7, |th, x| x[0] * x[0] + th).unwrap();
    let delay = DelayMap::constant(0.35).unwrap();
    let v = mild_solve_march(
        &a,
        &grid,
        &h,
        &delay,
        (0.0, 2.0),
        PropagatorOptions::backward_euler(0.05),
    )
    .unwrap();
    let v1 = v.restrict(0.0, 0.5).unwrap();
    let v2 = v.restrict(0.5, 1.5).unwrap();
    let v3 = v.restrict(1.5, 2.0).unwrap();
    assert_eq!(glue(&v1, &v.restrict(0.5, 2.0).unwrap()).unwrap(), v);
    let left = glue(&glue(&v1, &v2).unwrap(), &v3).unwrap();
    let right = glue(&v1, &glue(&v2, &v3).unwrap()).unwrap();
    assert_eq!(left, right);
    assert_eq!(left, v);
    let degenerate = v.restrict(0.0, 0.0).unwrap();
    assert_eq!(glue(&degenerate, &v).unwrap(), v);
    assert!(glue(&v1, &v3).is_err());

    // a restart from the cut history reproduces the tail bitwise
    let restarted = march_with(
        &Propagator::new(&a, &grid, v.options()).unwrap(),
        &a,
        &v.history_at(0.5).unwrap(),
        &delay,
        (0.5, 2.0),
    )
    .unwrap();
    assert_eq!(restarted, v.restrict(0.5, 2.0).unwrap());
    for piece in [&v1, &v2, &v3, &restarted] {
        assert!(piece.seam_is_continuous());
    }
}

#[test]
fn causality_and_delay_map_equivalence() {
    let grid = SpaceGrid::unit_interval(12, BoundaryKind::Dirichlet).unwrap();
    let a = heat(1.0).with_c1(ScalarField::constant(2.0));
    let h = mode_history(&grid, |th| 1.0 - th * th);
    let opts = PropagatorOptions::backward_euler(0.01);
    let base = DelayMap::SampledTime {
        nodes: vec![0.0, 0.5, 1.0],
        values: vec![0.2, 0.6, 0.4],
    };
    let altered = DelayMap::SampledTime {
        nodes: vec![0.0, 0.5, 0.505, 1.0],
        values: vec![0.2, 0.6, 0.95, 0.1],
    };
    let u = mild_solve_march(&a, &grid, &h, &base, (0.0, 1.0), opts).unwrap();
    let w = mild_solve_march(&a, &grid, &h, &altered, (0.0, 1.0), opts).unwrap();
    // the maps agree up to t = 0.5, so the solutions agree through the next node
    assert_eq!(u.states()[..=51], w.states()[..=51]);
    assert_ne!(u.states()[60], w.states()[60]);

    // identical phi values on the step grid give identical trajectories
    let steps: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
    let sampled = DelayMap::SampledTime {
        nodes: steps.clone(),
        values: steps
            .iter()
            .map(|&t| DelayMap::constant(0.3).unwrap().eval(t))
            .collect(),
    };
    let p = mild_solve_march(&a, &grid, &h, &DelayMap::constant(0.3).unwrap(), (0.0, 1.0), opts).unwrap();
    let q = mild_solve_march(&a, &grid, &h, &sampled, (0.0, 1.0), opts).unwrap();
    assert_eq!(p.states(), q.states());
}

#[test]
fn solvers_are_linear_in_the_history() {
    let grid = SpaceGrid::unit_interval(16, BoundaryKind::Robin).unwrap();
    let a = CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Robin, 0.8)
        .with_d0(ScalarField::constant(1.0))
        .with_c1(ScalarField::constant(1.5));
    let f = HistorySegment::from_fn(&grid, 5, |th, x| (x[0] + th).sin()).unwrap();
    let g = HistorySegment::from_fn(&grid, 5, |th, x| 1.0 + x[0] * th).unwrap();
    let (alpha, beta) = (2.5, -0.75);
    let fg = f.combine(alpha, &g, beta).unwrap();
    let delay = DelayMap::constant(0.25).unwrap();
    let opts = PropagatorOptions::crank_nicolson(0.01);
    let picard = PicardOptions::default();
    let solve = |h: &HistorySegment| mild_solve_march(&a, &grid, h, &delay, (0.0, 1.0), opts).unwrap();
    let solve_p = |h: &HistorySegment| {
        mild_solve_picard(&a, &grid, h, &delay, (0.0, 1.0), opts, &picard)
            .unwrap()
            .trajectory
    };
    for run in [&solve as &dyn Fn(&HistorySegment) -> Trajectory, &solve_p] {
        let (uf, ug, ufg) = (run(&f), run(&g), run(&fg));
        for i in 0..ufg.states().len() {
            let mut comb = uf.states()[i].scaled(alpha);
            comb.axpy(beta, &ug.states()[i]);
            let scale = comb.max_abs().max(1.0);
            assert!(comb.sub(&ufg.states()[i]).max_abs() <= 1e-9 * scale);
        }
    }
}

#[test]
fn excessive_delay_is_rejected() {
    let grid = SpaceGrid::unit_interval(8, BoundaryKind::Dirichlet).unwrap();
    let a = heat(1.0).with_c1(ScalarField::constant(1.0));
    let h = mode_history(&grid, |_| 1.0);
    let bad = DelayMap::Constant { r: -0.1 };
    let res = mild_solve_march(&a, &grid, &h, &bad, (0.0, 1.0), PropagatorOptions::backward_euler(0.1));
    assert!(res.is_err());
}
