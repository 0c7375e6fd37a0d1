//! Dense matrix arithmetic, decompositions, and seeded random sampling.

mod csv;
mod matrix;
mod rng;
mod svd;

pub use csv::{read_matrix_csv, write_matrix_csv};
pub use matrix::{matmul, matmul_a_bt, matmul_at_b, Matrix};
pub use rng::{sample_gaussian, sample_uniform, RngStream};
pub use svd::{condition_number, svd, Svd};
