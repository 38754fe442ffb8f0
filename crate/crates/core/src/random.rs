//! Random states and unitaries for property checks and Monte-Carlo estimates.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linops::{CMatrix, C64};
use crate::quantum::DensityMatrix;

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary (Gram-Schmidt on a complex Ginibre matrix).
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    CMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Haar-random pure state vector (normalised complex Gaussian).
pub fn random_ket(d: usize, rng: &mut impl Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Random full-rank mixed state `G G^dagger / tr(G G^dagger)`.
pub fn random_density_matrix(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let m = &g * &g.adjoint();
    DensityMatrix::from_unnormalised(&m).expect("G G^dagger is positive")
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| gaussian(rng)).hermitian_part()
}
