#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tuckeriga::oracle::dense_vector;
use tuckeriga::{BandedMatrix, DenseTensor3, TuckerOperator3, TuckerTensor3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

pub fn random_tucker(rng: &mut ChaCha8Rng, n: [usize; 3], r: [usize; 3]) -> TuckerTensor3 {
    let core = DenseTensor3::from_fn(r, |_, _, _| uniform(rng));
    let factors = std::array::from_fn(|t| DMatrix::from_fn(n[t], r[t], |_, _| uniform(rng)));
    TuckerTensor3::new(core, factors).unwrap()
}

/// Random shape with `n_t <= nmax` and `r_t <= min(rmax, n_t)`.
pub fn random_shape(rng: &mut ChaCha8Rng, nmax: usize, rmax: usize) -> ([usize; 3], [usize; 3]) {
    let n: [usize; 3] = std::array::from_fn(|_| rng.random_range(1..=nmax));
    let r = std::array::from_fn(|t| rng.random_range(1..=rmax.min(n[t])));
    (n, r)
}

/// Random operator with banded factors of the given bandwidth.
pub fn random_operator(
    rng: &mut ChaCha8Rng,
    rows: [usize; 3],
    cols: [usize; 3],
    r: [usize; 3],
    bw: usize,
) -> TuckerOperator3 {
    let core = DenseTensor3::from_fn(r, |_, _, _| uniform(rng));
    let factors = std::array::from_fn(|t| {
        (0..r[t])
            .map(|_| {
                let d = DMatrix::from_fn(
                    rows[t],
                    cols[t],
                    |i, j| if i.abs_diff(j) <= bw { uniform(rng) } else { 0.0 },
                );
                BandedMatrix::from_dense(&d, 0.0)
            })
            .collect()
    });
    TuckerOperator3::new(core, factors).unwrap()
}

pub fn dense(x: &TuckerTensor3) -> DVector<f64> {
    dense_vector(x).unwrap()
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}
