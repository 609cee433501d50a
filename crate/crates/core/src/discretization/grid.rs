use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::coefficients::BoundaryKind;
use crate::error::{Error, Result};

/// Uniform grid on `(0, L_0)` or `(0, L_0) × (0, L_1)`.
///
/// Dirichlet grids carry the interior vertices `i·h`, `i = 1..n-1`, the
/// boundary values being eliminated. Neumann and Robin grids are
/// cell-centred: nodes at `(i + ½)·h`, `i = 0..n-1`, so boundary faces sit
/// half a cell away and every node carries the same weight `h^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
    pub bc: BoundaryKind,
}

impl SpaceGrid {
    pub fn new(lengths: Vec<f64>, cells: Vec<usize>, bc: BoundaryKind) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 || lengths.len() != cells.len() {
            return Err(Error::Dimension(format!(
                "grid needs 1 or 2 axes with matching lengths/cells, got {} and {}",
                lengths.len(),
                cells.len()
            )));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Domain("grid lengths must be positive".into()));
        }
        if cells.iter().any(|&n| n < 3) {
            return Err(Error::Domain("grid needs at least 3 cells per axis".into()));
        }
        Ok(SpaceGrid { lengths, cells, bc })
    }

    pub fn unit_interval(cells: usize, bc: BoundaryKind) -> Result<Self> {
        SpaceGrid::new(vec![1.0], vec![cells], bc)
    }

    pub fn unit_square(cells: usize, bc: BoundaryKind) -> Result<Self> {
        SpaceGrid::new(vec![1.0, 1.0], vec![cells, cells], bc)
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).fold(f64::INFINITY, f64::min)
    }

    /// `h^N`, the weight of every node in discrete integrals.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).product()
    }

    pub fn nodes_on_axis(&self, axis: usize) -> usize {
        match self.bc {
            BoundaryKind::Dirichlet => self.cells[axis] - 1,
            BoundaryKind::Neumann | BoundaryKind::Robin => self.cells[axis],
        }
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim()).map(|d| self.nodes_on_axis(d)).product()
    }

    /// Coordinate of node `i` on `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        match self.bc {
            BoundaryKind::Dirichlet => (i + 1) as f64 * h,
            BoundaryKind::Neumann | BoundaryKind::Robin => (i as f64 + 0.5) * h,
        }
    }

    /// Multi-index of a flat node index (first axis fastest).
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        let nx = self.nodes_on_axis(0);
        [idx % nx, idx / nx]
    }

    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        mi[0] + self.nodes_on_axis(0) * mi[1]
    }

    pub fn node_point(&self, idx: usize) -> Vec<f64> {
        let mi = self.multi_index(idx);
        (0..self.dim()).map(|d| self.coordinate(d, mi[d])).collect()
    }

    /// Neighbour of `idx` one step along `axis` in direction `dir` (±1), if it is a grid node.
    pub fn neighbor(&self, idx: usize, axis: usize, dir: i32) -> Option<usize> {
        let mut mi = self.multi_index(idx);
        let n = self.nodes_on_axis(axis) as i64;
        let moved = mi[axis] as i64 + dir as i64;
        if moved < 0 || moved >= n {
            return None;
        }
        mi[axis] = moved as usize;
        Some(self.flat_index(mi))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> State {
        State((0..self.node_count()).map(|i| f(&self.node_point(i))).collect())
    }
}

/// A spatial profile `u(t, ·)` stored node by node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn zeros(n: usize) -> Self {
        State(vec![0.0; n])
    }

    pub fn basis(n: usize, j: usize) -> Self {
        let mut s = State::zeros(n);
        s.0[j] = 1.0;
        s
    }

    /// `self ← self + alpha·x`.
    pub fn axpy(&mut self, alpha: f64, x: &State) {
        for (y, xi) in self.0.iter_mut().zip(&x.0) {
            *y += alpha * xi;
        }
    }

    pub fn scaled(&self, alpha: f64) -> State {
        State(self.0.iter().map(|v| alpha * v).collect())
    }

    /// `(1 − w)·a + w·b`.
    pub fn lerp(a: &State, b: &State, w: f64) -> State {
        State(a.0.iter().zip(&b.0).map(|(x, y)| (1.0 - w) * x + w * y).collect())
    }

    pub fn sub(&self, other: &State) -> State {
        State(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn dot(&self, other: &State) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for State {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for State {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for State {
    fn from(v: Vec<f64>) -> Self {
        State(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_conventions() {
        let d = SpaceGrid::unit_interval(4, BoundaryKind::Dirichlet).unwrap();
        assert_eq!(d.node_count(), 3);
        assert_eq!(d.coordinate(0, 0), 0.25);
        let n = SpaceGrid::unit_interval(4, BoundaryKind::Neumann).unwrap();
        assert_eq!(n.node_count(), 4);
        assert_eq!(n.coordinate(0, 0), 0.125);
        let sq = SpaceGrid::unit_square(5, BoundaryKind::Dirichlet).unwrap();
        assert_eq!(sq.node_count(), 16);
        assert_eq!(sq.node_point(5), vec![0.4, 0.4]);
        assert_eq!(sq.neighbor(0, 0, -1), None);
        assert_eq!(sq.neighbor(0, 1, 1), Some(4));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(SpaceGrid::unit_interval(2, BoundaryKind::Dirichlet).is_err());
        assert!(SpaceGrid::new(vec![0.0], vec![8], BoundaryKind::Neumann).is_err());
        assert!(SpaceGrid::new(vec![1.0; 3], vec![4; 3], BoundaryKind::Neumann).is_err());
    }
}
