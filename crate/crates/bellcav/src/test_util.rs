//! Random states and operators shared by the test suites.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{adjoint, vec_norm, CMatrix, CVector};

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
    CMatrix::from_shape_fn((n, n), |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
    let g = random_matrix(rng, n);
    (&g + &adjoint(&g)).mapv(|x| x * C64::new(0.5, 0.0))
}

pub fn random_pure_state(rng: &mut ChaCha8Rng, n: usize) -> CVector<f64> {
    let mut v = Array1::from_shape_fn(n, |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = vec_norm(&v);
    v.mapv_inplace(|x| x / C64::new(norm, 0.0));
    v
}

/// Random full-rank mixed state via the Ginibre construction G G† / Tr.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
    let g = random_matrix(rng, n);
    let gg = g.dot(&adjoint(&g));
    let tr: C64 = gg.diag().iter().sum();
    gg.mapv(|x| x / tr)
}
