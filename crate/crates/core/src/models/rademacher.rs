//! Fixed random-projection hashing of observations into discrete side
//! information: a +/-1 projection matrix sends each point to an orthant of an
//! N-dimensional sketch space, and the orthant's bit pattern is the label.

use crate::ndmath::{Matrix, RngStream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RademacherHasher {
    /// `n_bits x d_x` projection with entries in {-1, +1}.
    pub a: Matrix,
    pub n_bits: usize,
}

impl RademacherHasher {
    /// Number of distinct labels, `2^n_bits`.
    pub fn k(&self) -> usize {
        1usize << self.n_bits
    }

    pub fn d_x(&self) -> usize {
        self.a.cols()
    }
}

/// Sample the projection once; it stays fixed afterwards. Entries are i.i.d.
/// +1 or -1 with equal probability.
pub fn build_rademacher_hasher(
    n_bits: usize,
    d_x: usize,
    rng: &mut RngStream,
) -> Result<RademacherHasher> {
    if !(1..=20).contains(&n_bits) {
        return Err(Error::InvalidArgument(format!(
            "bit count must lie in [1, 20], got {n_bits}"
        )));
    }
    let a = Matrix::from_fn(n_bits, d_x, |_, _| {
        if rng.next_u64() & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    });
    Ok(RademacherHasher { a, n_bits })
}

/// Label each row of `x`: project with `A`, take the sign pattern
/// (`sign(0)` counts as +1), and read the bits as an integer in `[0, 2^N)`.
pub fn hash_u(hasher: &RademacherHasher, x: &Matrix) -> Result<Vec<usize>> {
    if x.cols() != hasher.d_x() {
        return Err(Error::ShapeMismatch(format!(
            "hasher projects from {} dims, rows have {}",
            hasher.d_x(),
            x.cols()
        )));
    }
    let mut labels = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mut u = 0usize;
        for bit in 0..hasher.n_bits {
            let h: f64 = hasher.a.row(bit).iter().zip(row).map(|(a, b)| a * b).sum();
            if h >= 0.0 {
                u |= 1 << bit;
            }
        }
        labels.push(u);
    }
    Ok(labels)
}
