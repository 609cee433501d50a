use crate::discretization::{DenseMatrix, SpaceGrid};
use crate::error::{Error, Result};

/// Weighted discrete `L_p` norm `(Σ |u_i|^p h^N)^{1/p}`, or `max |u_i|` for `p = ∞`.
pub fn discrete_norm(u: &[f64], grid: &SpaceGrid, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("norm exponent p = {p} < 1")));
    }
    if p.is_infinite() {
        return Ok(u.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let w = grid.cell_volume();
    let sum: f64 = if p == 1.0 {
        u.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        u.iter().map(|v| v * v).sum()
    } else {
        u.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok(if p == 2.0 {
        (sum * w).sqrt()
    } else {
        (sum * w).powf(1.0 / p)
    })
}

/// Discrete `L_2` pairing `Σ u_i v_i h^N`.
pub fn inner_product(u: &[f64], v: &[f64], grid: &SpaceGrid) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume()
}

/// Largest singular value by power iteration on `KᵀK`, to relative tolerance `1e-8`.
pub fn spectral_norm(kernel: &DenseMatrix) -> f64 {
    let n = kernel.cols();
    if n == 0 || kernel.rows() == 0 {
        return 0.0;
    }
    // deterministic start with no special symmetry
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662).fract())
        .collect();
    let mut estimate = 0.0;
    for _ in 0..20_000 {
        let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= norm_x);
        let y = kernel.matvec(&x);
        let z = kernel.matvec_transpose(&y);
        // Rayleigh quotient of KᵀK
        let next = x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
        x = z;
        if (next - estimate).abs() <= 1e-8 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Induced norm of `kernel : L_p → L_q` with the weighted discrete norms.
///
/// Supported pairs: `(1,1)`, `(2,2)`, `(∞,∞)` and `(1,∞)`.
pub fn operator_pq_norm(kernel: &DenseMatrix, grid: &SpaceGrid, p: f64, q: f64) -> Result<f64> {
    match (p, q) {
        (p, q) if p == 1.0 && q == 1.0 => Ok(kernel.max_abs_column_sum()),
        (p, q) if p.is_infinite() && q.is_infinite() => Ok(kernel.max_abs_row_sum()),
        (p, q) if p == 1.0 && q.is_infinite() => Ok(kernel.max_abs() / grid.cell_volume()),
        (p, q) if p == 2.0 && q == 2.0 => Ok(spectral_norm(kernel)),
        _ => Err(Error::UnsupportedNorm { p, q }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::BoundaryKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norm_examples() {
        let g = SpaceGrid::unit_interval(8, BoundaryKind::Dirichlet).unwrap();
        let ones = vec![1.0; g.node_count()];
        let h = g.spacing(0);
        assert!((discrete_norm(&ones, &g, 2.0).unwrap() - (1.0 - h).sqrt()).abs() < 1e-15);
        let cc = SpaceGrid::unit_interval(8, BoundaryKind::Neumann).unwrap();
        assert!((discrete_norm(&[1.0; 8], &cc, 2.0).unwrap() - 1.0).abs() < 1e-15);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(discrete_norm(&[0.0; 7], &g, p).unwrap(), 0.0);
        }
        let unit = SpaceGrid::new(vec![3.0], vec![3], BoundaryKind::Dirichlet).unwrap();
        assert_eq!(discrete_norm(&[3.0, -4.0], &unit, f64::INFINITY).unwrap(), 4.0);
        assert!(discrete_norm(&[1.0], &g, 0.5).is_err());
    }

    #[test]
    fn identity_and_scalar_kernels() {
        let g = SpaceGrid::unit_interval(6, BoundaryKind::Dirichlet).unwrap();
        let id = DenseMatrix::identity(5);
        assert!((operator_pq_norm(&id, &g, 2.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let unit = SpaceGrid::new(vec![3.0], vec![3], BoundaryKind::Neumann).unwrap();
        let k = DenseMatrix::from_row_major(1, 1, vec![2.0]);
        assert_eq!(operator_pq_norm(&k, &unit, 1.0, f64::INFINITY).unwrap(), 2.0);
        assert!(operator_pq_norm(&k, &unit, 2.0, f64::INFINITY).is_err());
    }

    fn brute_force(kernel: &DenseMatrix, grid: &SpaceGrid, p: f64, q: f64) -> f64 {
        // Extreme points: basis vectors for p = 1, sign vectors for p = ∞.
        let n = kernel.cols();
        let mut best: f64 = 0.0;
        if p == 1.0 {
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let ratio = discrete_norm(&kernel.matvec(&e), grid, q).unwrap() / discrete_norm(&e, grid, p).unwrap();
                best = best.max(ratio);
            }
        } else {
            for mask in 0..(1u32 << n) {
                let s: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
                best = best.max(discrete_norm(&kernel.matvec(&s), grid, q).unwrap());
            }
        }
        best
    }

    #[test]
    fn exact_norms_match_extreme_point_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = SpaceGrid::unit_interval(4, BoundaryKind::Dirichlet).unwrap();
        for _ in 0..10 {
            let k = DenseMatrix::from_row_major(3, 3, (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect());
            for (p, q) in [(1.0, 1.0), (1.0, f64::INFINITY), (f64::INFINITY, f64::INFINITY)] {
                let exact = operator_pq_norm(&k, &g, p, q).unwrap();
                assert!((exact - brute_force(&k, &g, p, q)).abs() < 1e-12 * exact.max(1.0));
            }
            let h = g.cell_volume();
            assert!((operator_pq_norm(&k, &g, 1.0, f64::INFINITY).unwrap() * h - k.max_abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn spectral_norm_against_closed_form_2x2() {
        // Singular values of [[a, b], [c, d]] from the 2x2 formula.
        let (a, b, c, d) = (1.0f64, 2.0f64, -0.5f64, 0.3f64);
        let s1 = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let top = ((s1 + (s1 * s1 - 4.0 * det * det).sqrt()) / 2.0).sqrt();
        let k = DenseMatrix::from_row_major(2, 2, vec![a, b, c, d]);
        assert!((spectral_norm(&k) - top).abs() < 1e-7 * top);
    }
}
