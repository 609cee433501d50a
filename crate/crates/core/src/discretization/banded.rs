use crate::discretization::DenseMatrix;
use crate::error::{Error, Result};

/// Square band matrix with `lower` sub- and `upper` super-diagonals, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(n.saturating_sub(1));
        let upper = upper.min(n.saturating_sub(1));
        BandMatrix {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BandMatrix::zeros(n, 0, 0);
        m.data.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`; panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band ({}, {})",
            self.lower,
            self.upper
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Columns of row `i` that lie inside the band.
    fn row_range(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        i.saturating_sub(self.lower)..=(i + self.upper).min(self.n - 1)
    }

    /// `alpha·I + beta·self`.
    pub fn shifted_scaled(&self, alpha: f64, beta: f64) -> BandMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= beta);
        for i in 0..self.n {
            out.add(i, i, alpha);
        }
        out
    }

    pub fn transpose(&self) -> BandMatrix {
        let mut t = BandMatrix::zeros(self.n, self.upper, self.lower);
        for i in 0..self.n {
            for j in self.row_range(i) {
                let v = self.get(i, j);
                if v != 0.0 {
                    t.add(j, i, v);
                }
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.data[self.slot(i, j)] * x[j]).sum())
            .collect()
    }

    /// `Y = self·X` for a row-major block with `ncols` columns.
    pub fn matmul_block(&self, x: &[f64], ncols: usize) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for i in 0..self.n {
            let out = &mut y[i * ncols..(i + 1) * ncols];
            for j in self.row_range(i) {
                let a = self.data[self.slot(i, j)];
                if a != 0.0 {
                    let src = &x[j * ncols..(j + 1) * ncols];
                    out.iter_mut().zip(src).for_each(|(o, s)| *o += a * s);
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.row_range(i) {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Iterator over stored `(row, col, value)` triples inside the band.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row_range(i).map(move |j| (i, j, self.get(i, j))))
    }
}

/// LU factorization of a band matrix without pivoting.
///
/// The systems factored here are `I − θ·dt·A` with `A` a discretized
/// elliptic operator, which keep a dominant diagonal; a pivot below
/// `1e-14·max|entry|` is reported as singular.
#[derive(Clone, Debug)]
pub struct BandLu {
    lu: BandMatrix,
}

impl BandLu {
    pub fn factor(matrix: &BandMatrix) -> Result<Self> {
        let mut lu = matrix.clone();
        let n = lu.n;
        let scale = lu.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let pivot = lu.data[lu.slot(k, k)];
            if !(pivot.abs() > 1e-14 * scale) {
                return Err(Error::SingularPivot { row: k, pivot });
            }
            let last_row = (k + lu.lower).min(n - 1);
            let last_col = (k + lu.upper).min(n - 1);
            for i in k + 1..=last_row {
                let s = lu.slot(i, k);
                let l = lu.data[s] / pivot;
                lu.data[s] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let (dst, src) = (lu.slot(i, j), lu.slot(k, j));
                        lu.data[dst] -= l * lu.data[src];
                    }
                }
            }
        }
        Ok(BandLu { lu })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.lu.data[self.lu.slot(i, j)]
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, lower, upper) = (self.lu.n, self.lu.lower, self.lu.upper);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(lower)..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + upper).min(n - 1) {
                s -= self.at(i, j) * b[j];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solves `Aᵀ x = b` in place.
    pub fn solve_transpose(&self, b: &mut [f64]) {
        let (n, lower, upper) = (self.lu.n, self.lu.lower, self.lu.upper);
        // Uᵀ y = b
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(upper)..i {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + lower).min(n - 1) {
                s -= self.at(j, i) * b[j];
            }
            b[i] = s;
        }
    }

    /// Solves `A X = B` in place for a row-major block with `ncols` columns.
    pub fn solve_block(&self, b: &mut [f64], ncols: usize) {
        let (n, lower, upper) = (self.lu.n, self.lu.lower, self.lu.upper);
        for i in 0..n {
            let (head, tail) = b.split_at_mut(i * ncols);
            let row = &mut tail[..ncols];
            for k in i.saturating_sub(lower)..i {
                let l = self.at(i, k);
                if l != 0.0 {
                    let src = &head[k * ncols..(k + 1) * ncols];
                    row.iter_mut().zip(src).for_each(|(r, s)| *r -= l * s);
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = b.split_at_mut((i + 1) * ncols);
            let row = &mut head[i * ncols..];
            let last = (i + upper).min(n - 1);
            for j in i + 1..=last {
                let u = self.at(i, j);
                if u != 0.0 {
                    let off = (j - i - 1) * ncols;
                    let src = &tail[off..off + ncols];
                    row.iter_mut().zip(src).for_each(|(r, s)| *r -= u * s);
                }
            }
            let d = self.at(i, i);
            row.iter_mut().for_each(|r| *r /= d);
        }
    }
}
