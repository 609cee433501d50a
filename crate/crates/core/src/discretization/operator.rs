use crate::coefficients::{BoundaryKind, CoefficientSet, ScalarField};
use crate::discretization::{BandMatrix, SpaceGrid};
use crate::error::{Error, Result};

/// The assembled elliptic operator `A(t)` on a grid.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: BandMatrix,
    pub grid: SpaceGrid,
    pub time: f64,
}

impl DiscreteOperator {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.matvec(u)
    }
}

/// Row-wise accumulator that silently drops eliminated (Dirichlet) columns.
struct Rows<'g> {
    grid: &'g SpaceGrid,
    matrix: BandMatrix,
}

impl Rows<'_> {
    fn add(&mut self, row: usize, col: Option<usize>, v: f64) {
        if let Some(c) = col {
            if v != 0.0 {
                self.matrix.add(row, c, v);
            }
        }
    }
}

fn shifted(point: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut p = point.to_vec();
    p[axis] += delta;
    p
}

/// Assembles the flux-form finite-difference operator of the delay-free
/// equation for a flattened coefficient set at time `t`:
///
/// ```text
/// A u = Σ_i ∂_i(Σ_j a_ij ∂_j u + a_i u) + Σ_i b_i ∂_i u + c0 u.
/// ```
///
/// Face coefficients are arithmetic averages of the two adjacent node values.
/// Dirichlet boundary values are eliminated; Neumann and Robin conditions are
/// imposed on cell-centred grids by eliminating a ghost node through the
/// conormal flux condition, `a_i u` term included. Mixed derivatives use
/// centred differences of centred differences, which keeps the diffusive part
/// exactly symmetric on Dirichlet grids.
///
/// With `positivity_safe` the first-order terms are upwinded so that every
/// off-diagonal entry produced by them is nonnegative; together with
/// `a_12 = 0` this makes `I − dt·A` an M-matrix for all `dt` small enough
/// that its diagonal stays positive.
pub fn assemble_operator(
    a0: &CoefficientSet,
    grid: &SpaceGrid,
    t: f64,
    positivity_safe: bool,
) -> Result<DiscreteOperator> {
    if !a0.is_flat() {
        return Err(Error::Precondition(
            "operator assembly expects a flattened coefficient set (c1 ≡ 0)".into(),
        ));
    }
    if a0.dim != grid.dim() {
        return Err(Error::Dimension(format!(
            "coefficient set is {}-D but grid is {}-D",
            a0.dim,
            grid.dim()
        )));
    }
    if a0.bc != grid.bc {
        return Err(Error::Dimension(format!(
            "boundary kinds differ: coefficients {:?}, grid {:?}",
            a0.bc, grid.bc
        )));
    }
    if a0
        .domain
        .iter()
        .zip(&grid.lengths)
        .any(|(a, b)| (a - b).abs() > 1e-12 * a.max(*b))
    {
        return Err(Error::Dimension(
            "grid lengths differ from the coefficient domain".into(),
        ));
    }

    let n = grid.node_count();
    let dim = grid.dim();
    let has_cross =
        dim == 2 && !a0.diffusion[0][1].is_identically_zero() || dim == 2 && !a0.diffusion[1][0].is_identically_zero();
    let band = if dim == 1 {
        1
    } else {
        grid.nodes_on_axis(0) + usize::from(has_cross)
    };
    let mut rows = Rows {
        grid,
        matrix: BandMatrix::zeros(n, band, band),
    };
    let dirichlet = grid.bc == BoundaryKind::Dirichlet;

    for p in 0..n {
        let xp = grid.node_point(p);
        for d in 0..dim {
            let h = grid.spacing(d);
            let a_dd = &a0.diffusion[d][d];
            let drift_flux = &a0.flux_drift[d];
            let a_p = a_dd.eval(t, &xp);
            let g_p = drift_flux.eval(t, &xp);

            // ghost ratio ρ (u_ghost = ρ·u_P) on each side, for Neumann/Robin
            let mut ghost = [1.0f64; 2];

            for (side, dir) in [(0usize, 1i32), (1, -1)] {
                let sigma = dir as f64;
                let q = grid.neighbor(p, d, dir);
                if q.is_some() || dirichlet {
                    let xq = shifted(&xp, d, sigma * h);
                    let a_f = 0.5 * (a_p + a_dd.eval(t, &xq));
                    rows.add(p, Some(p), -a_f / (h * h));
                    rows.add(p, q, a_f / (h * h));

                    let g_f = 0.5 * (g_p + drift_flux.eval(t, &xq));
                    if g_f != 0.0 {
                        // advective flux g_f·u_face (oriented +x_d), enters row p with sign σ/h
                        let w = sigma / h;
                        if positivity_safe {
                            // the upwind value lies on the +x_d side when g_f > 0
                            let upper_is_q = dir > 0;
                            let take_upper = g_f > 0.0;
                            let col = if take_upper == upper_is_q { q } else { Some(p) };
                            rows.add(p, col, w * g_f);
                        } else {
                            rows.add(p, Some(p), 0.5 * w * g_f);
                            rows.add(p, q, 0.5 * w * g_f);
                        }
                    }
                } else {
                    // boundary face: conormal flux equals −d0·u_face (outward)
                    let xb = shifted(&xp, d, sigma * 0.5 * h);
                    let a_b = a_dd.eval(t, &xb);
                    let d0 = if grid.bc == BoundaryKind::Robin {
                        a0.d0.eval(t, &xb)
                    } else {
                        0.0
                    };
                    let beta = sigma * drift_flux.eval(t, &xb) + d0;
                    let k = a_b / h;
                    let denom = k + 0.5 * beta;
                    let w = if denom > 0.5 * k { k / denom } else { 1.0 };
                    ghost[side] = 2.0 * w - 1.0;
                    rows.add(p, Some(p), -d0 * w / h);
                }
            }

            let b = a0.drift[d].eval(t, &xp);
            if b != 0.0 {
                let plus = grid.neighbor(p, d, 1);
                let minus = grid.neighbor(p, d, -1);
                // value at a missing neighbour: 0 (Dirichlet) or ρ·u_P (ghost)
                let add_neighbor = |rows: &mut Rows, q: Option<usize>, side: usize, coef: f64| match q {
                    Some(_) => rows.add(p, q, coef),
                    None if !dirichlet => rows.add(p, Some(p), coef * ghost[side]),
                    None => {}
                };
                if positivity_safe {
                    if b > 0.0 {
                        add_neighbor(&mut rows, plus, 0, b / h);
                        rows.add(p, Some(p), -b / h);
                    } else {
                        rows.add(p, Some(p), b / h);
                        add_neighbor(&mut rows, minus, 1, -b / h);
                    }
                } else {
                    add_neighbor(&mut rows, plus, 0, b / (2.0 * h));
                    add_neighbor(&mut rows, minus, 1, -b / (2.0 * h));
                }
            }
        }

        if has_cross {
            add_cross_term(&mut rows, p, 0, 1, &a0.diffusion[0][1], t);
            add_cross_term(&mut rows, p, 1, 0, &a0.diffusion[1][0], t);
        }

        let c0 = a0.c0.eval(t, &xp);
        rows.add(p, Some(p), c0);
    }

    Ok(DiscreteOperator {
        matrix: rows.matrix,
        grid: grid.clone(),
        time: t,
    })
}

/// Adds the row-`p` stencil of `D_outer(a · D_inner u)` with centred differences.
///
/// Outside a Dirichlet grid all values vanish. On cell-centred grids a missing
/// inner neighbour is reflected (`u_ghost = u_Q`) and a missing outer value is
/// mirrored with opposite sign, so the tangential flux through a boundary face
/// is zero; the boundary condition then carries the whole conormal flux.
fn add_cross_term(rows: &mut Rows, p: usize, outer: usize, inner: usize, coef: &ScalarField, t: f64) {
    let grid = rows.grid;
    let dirichlet = grid.bc == BoundaryKind::Dirichlet;
    let (ho, hi) = (grid.spacing(outer), grid.spacing(inner));
    let scale = 1.0 / (4.0 * ho * hi);

    // contributions of v(Q) = a(Q)·(u(Q+e_inner) − u(Q−e_inner)) with weight `w`
    let push_v = |rows: &mut Rows, q: usize, w: f64| {
        let aq = coef.eval(t, &grid.node_point(q));
        if aq == 0.0 {
            return;
        }
        for (dir, sign) in [(1, 1.0), (-1, -1.0)] {
            match grid.neighbor(q, inner, dir) {
                Some(r) => rows.add(p, Some(r), w * sign * aq),
                None if !dirichlet => rows.add(p, Some(q), w * sign * aq),
                None => {}
            }
        }
    };

    for (dir, sign) in [(1, 1.0), (-1, -1.0)] {
        match grid.neighbor(p, outer, dir) {
            Some(q) => push_v(rows, q, sign * scale),
            // mirrored: v_ghost = −v_P
            None if !dirichlet => push_v(rows, p, -sign * scale),
            None => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::inner_product;
    use std::f64::consts::PI;

    fn laplace_1d(n: usize, bc: BoundaryKind) -> (CoefficientSet, SpaceGrid) {
        let a = CoefficientSet::heat(vec![1.0], 1.0, bc, 1.0);
        let g = SpaceGrid::unit_interval(n, bc).unwrap();
        (a, g)
    }

    #[test]
    fn dirichlet_stencil_by_hand() {
        let (a, g) = laplace_1d(4, BoundaryKind::Dirichlet);
        let op = assemble_operator(&a, &g, 0.0, false).unwrap();
        let m = op.matrix.to_dense();
        for i in 0..3 {
            assert_eq!(m[(i, i)], -32.0);
            if i + 1 < 3 {
                assert_eq!(m[(i, i + 1)], 16.0);
                assert_eq!(m[(i + 1, i)], 16.0);
            }
        }
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn zero_coefficients_give_zero_matrix() {
        let (a, g) = laplace_1d(8, BoundaryKind::Neumann);
        let a = a.with_diffusion(0, 0, ScalarField::ZERO);
        let op = assemble_operator(&a, &g, 0.0, true).unwrap();
        assert_eq!(op.matrix.max_abs(), 0.0);
    }

    #[test]
    fn rejects_unflattened_and_mismatched_inputs() {
        let (a, g) = laplace_1d(8, BoundaryKind::Dirichlet);
        let with_delay = a.clone().with_c1(ScalarField::constant(1.0));
        assert!(matches!(
            assemble_operator(&with_delay, &g, 0.0, false),
            Err(Error::Precondition(_))
        ));
        let g2 = SpaceGrid::unit_square(8, BoundaryKind::Dirichlet).unwrap();
        assert!(matches!(
            assemble_operator(&a, &g2, 0.0, false),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn second_order_consistency_on_sine() {
        let mut errors = Vec::new();
        for n in [32, 64, 128] {
            let (a, g) = laplace_1d(n, BoundaryKind::Dirichlet);
            let op = assemble_operator(&a, &g, 0.0, false).unwrap();
            let u = g.sample(|x| (PI * x[0]).sin());
            let au = op.apply(&u);
            let err = au
                .iter()
                .zip(u.iter())
                .map(|(l, s)| (l + PI * PI * s).abs())
                .fold(0.0, f64::max);
            errors.push(err);
        }
        assert!(errors[1] <= 0.3 * errors[0], "{errors:?}");
        assert!(errors[2] <= 0.3 * errors[1], "{errors:?}");
    }

    fn variable_principal(dim: usize, bc: BoundaryKind) -> CoefficientSet {
        let domain = vec![1.0; dim];
        let mut a = CoefficientSet::heat(domain, 1.0, bc, 1.0).with_c0(ScalarField::sinusoid(-0.5, 0.3, 2.0, 0.1));
        let profile = crate::coefficients::SpaceProfile::Sampled(crate::coefficients::SpaceSamples {
            shape: vec![3; dim],
            extent: vec![1.0; dim],
            values: (0..3usize.pow(dim as u32)).map(|k| 1.0 + 0.2 * k as f64).collect(),
        });
        a.diffusion[0][0] = ScalarField::SinusoidTime {
            base: 1.0,
            amplitude: 0.2,
            angular_frequency: 3.0,
            phase: 0.0,
            spatial_profile: Some(profile),
        };
        if dim == 2 {
            a.diffusion[1][1] = ScalarField::constant(0.7);
            a.diffusion[0][1] = ScalarField::constant(0.2);
            a.diffusion[1][0] = ScalarField::constant(0.2);
        }
        a
    }

    #[test]
    fn divergence_form_is_symmetric() {
        for (dim, bc) in [
            (1, BoundaryKind::Dirichlet),
            (1, BoundaryKind::Neumann),
            (2, BoundaryKind::Dirichlet),
        ] {
            let a = variable_principal(dim, bc);
            let g = SpaceGrid::new(vec![1.0; dim], vec![9; dim], bc).unwrap();
            let m = assemble_operator(&a, &g, 0.3, false).unwrap().matrix.to_dense();
            let scale = m.max_abs();
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * scale, "{dim} {bc:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn pairing_is_self_adjoint_for_random_vectors() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = variable_principal(2, BoundaryKind::Dirichlet);
        let g = SpaceGrid::unit_square(10, BoundaryKind::Dirichlet).unwrap();
        let op = assemble_operator(&a, &g, 0.5, false).unwrap();
        for _ in 0..5 {
            let u: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = inner_product(&op.apply(&u), &v, &g);
            let rhs = inner_product(&u, &op.apply(&v), &g);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn neumann_constants_are_in_the_kernel() {
        // Conservative flux form with zero normal flux: A·1 = 0 when b = c0 = 0,
        // also with a divergence-form drift a_i.
        for dim in [1, 2] {
            let a = CoefficientSet::heat(vec![1.0; dim], 1.0, BoundaryKind::Neumann, 0.8)
                .with_flux_drift(0, ScalarField::constant(0.6));
            let g = SpaceGrid::new(vec![1.0; dim], vec![12; dim], BoundaryKind::Neumann).unwrap();
            for safe in [false, true] {
                let op = assemble_operator(&a, &g, 0.0, safe).unwrap();
                // column sums vanish (conservation); constants are steady for pure diffusion
                let m = op.matrix.to_dense();
                for j in 0..m.cols() {
                    let s: f64 = (0..m.rows()).map(|i| m[(i, j)]).sum();
                    assert!(s.abs() < 1e-10, "column {j} sum {s}");
                }
            }
            let pure = CoefficientSet::heat(vec![1.0; dim], 1.0, BoundaryKind::Neumann, 0.8);
            let op = assemble_operator(&pure, &g, 0.0, false).unwrap();
            let ones = vec![1.0; g.node_count()];
            assert!(op.apply(&ones).iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn upwinding_gives_nonnegative_off_diagonals() {
        let a = CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Robin, 0.01)
            .with_flux_drift(0, ScalarField::sinusoid(0.0, 3.0, 1.0, 0.0))
            .with_drift(0, ScalarField::constant(-4.0))
            .with_c0(ScalarField::constant(-1.0))
            .with_d0(ScalarField::constant(0.5));
        let g = SpaceGrid::unit_interval(16, BoundaryKind::Robin).unwrap();
        for t in [0.2, 2.0, 4.0] {
            let op = assemble_operator(&a, &g, t, true).unwrap();
            for (i, j, v) in op.matrix.entries() {
                if i != j {
                    assert!(v >= 0.0, "A[{i},{j}] = {v}");
                }
            }
        }
        // central differencing violates the sign pattern at this Péclet number
        let op = assemble_operator(&a, &g, 0.2, false).unwrap();
        assert!(op.matrix.entries().any(|(i, j, v)| i != j && v < 0.0));
    }

    #[test]
    fn m_matrix_under_positivity_safe() {
        let a = CoefficientSet::heat(vec![1.0, 1.0], 1.0, BoundaryKind::Dirichlet, 0.5)
            .with_drift(0, ScalarField::constant(2.0))
            .with_drift(1, ScalarField::constant(-1.0))
            .with_flux_drift(1, ScalarField::constant(0.7))
            .with_c0(ScalarField::constant(0.5));
        let g = SpaceGrid::unit_square(8, BoundaryKind::Dirichlet).unwrap();
        let op = assemble_operator(&a, &g, 0.0, true).unwrap();
        for dt in [1e-3, 0.1, 1.0] {
            if dt * 0.5 >= 1.0 {
                continue;
            }
            let lhs = op.matrix.shifted_scaled(1.0, -dt).to_dense();
            for i in 0..lhs.rows() {
                let mut off = 0.0;
                for j in 0..lhs.cols() {
                    if i != j {
                        assert!(lhs[(i, j)] <= 0.0);
                        off += lhs[(i, j)].abs();
                    }
                }
                assert!(lhs[(i, i)] > off, "row {i}: diag {} off {off}", lhs[(i, i)]);
            }
        }
    }

    #[test]
    fn robin_row_matches_ghost_elimination_by_hand() {
        // 1D, a = 1, d0 = 2, h = 1/4: left face w = (1/h)/(1/h + 1) = 4/5.
        let a = CoefficientSet::heat(vec![1.0], 1.0, BoundaryKind::Robin, 1.0).with_d0(ScalarField::constant(2.0));
        let g = SpaceGrid::unit_interval(4, BoundaryKind::Robin).unwrap();
        let m = assemble_operator(&a, &g, 0.0, false).unwrap().matrix.to_dense();
        let expected = -16.0 - 2.0 * 0.8 * 4.0;
        assert!((m[(0, 0)] - expected).abs() < 1e-12);
        assert_eq!(m[(0, 1)], 16.0);
    }
}
