//! Spatial discretization: structured grids on intervals and rectangles,
//! the flux-form finite-difference operator `A(t)`, banded storage with
//! factorization, and the discrete `L_p` norms.

mod banded;
mod dense;
mod grid;
mod norms;
mod operator;

pub use banded::{BandLu, BandMatrix};
pub use dense::DenseMatrix;
pub use grid::{SpaceGrid, State};
pub use norms::{discrete_norm, inner_product, operator_pq_norm, spectral_norm};
pub use operator::{assemble_operator, DiscreteOperator};
