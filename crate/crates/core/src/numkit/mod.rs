//! Minimal dense autodiff: a tape of matrix ops with hand-written adjoints,
//! plus Adam.

mod adam;
pub mod gradcheck;
mod tape;

pub use adam::Adam;
pub use tape::{Gradients, Matrix, Tape, Var, BN_EPS};

use rand::Rng;

/// Glorot-uniform initialization on `[-r, r]` with `r = sqrt(6 / (in + out))`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let r = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_shape_simple_fn((rows, cols), || rng.random_range(-r..=r))
}
