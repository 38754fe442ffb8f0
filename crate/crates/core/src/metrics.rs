//! Entropies, fidelities and the Haar-averaged bit-flip figure of merit.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::feedback::FeedbackProtocol;
use crate::linops::{inner, vector_norm, C64, HERMITIAN_TOL};
use crate::quantum::{pauli_x, DensityMatrix};
use crate::random::random_ket;

/// Default number of quadrature points per axis.
pub const DEFAULT_NODES: usize = 32;

/// `-Σ λ ln λ`, divided by `ln d` when `normalised`.
pub fn von_neumann_entropy(rho: &DensityMatrix, normalised: bool) -> f64 {
    let s = rho.eigenvalues().iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum::<f64>().max(0.0);
    let d = rho.dim();
    match (normalised, d) {
        (false, _) => s,
        (true, 1) => 0.0,
        (true, _) => s / (d as f64).ln(),
    }
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// `1 - tr ρ²`
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - rho.purity()
}

/// `<ψ|ρ|ψ>`
pub fn fidelity_to_pure(rho: &DensityMatrix, psi: &[C64]) -> Result<f64> {
    if psi.len() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: psi.len() });
    }
    let norm = vector_norm(psi);
    if (norm - 1.0).abs() > HERMITIAN_TOL {
        return Err(Error::NotNormalised(norm));
    }
    Ok(inner(psi, &rho.matrix().matvec(psi)).re)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Qubit state with Bloch coordinates `u = cos χ` and azimuth `φ`.
fn bloch_ket(u: f64, phi: f64) -> [C64; 2] {
    [C64::new(((1.0 + u) / 2.0).sqrt(), 0.0), C64::from_polar(((1.0 - u) / 2.0).sqrt(), phi)]
}

fn check_bitflip_protocol(p: &FeedbackProtocol) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: p.dim() });
    }
    if !p.noise().is_identity() {
        return Err(Error::InvalidProtocol("bit-flip fidelity requires a noiseless system".into()));
    }
    Ok(())
}

fn bitflip_fidelity(p: &FeedbackProtocol, psi: &[C64]) -> f64 {
    let rho = DensityMatrix::pure(psi).expect("normalised ket");
    let out = p.apply_linear(rho.matrix());
    let flipped = pauli_x().matvec(psi);
    inner(&flipped, &out.matvec(&flipped)).re
}

/// Average over pure inputs of `<ψ_X|ρ_out|ψ_X>` with `ψ_X = σx ψ`, using
/// Gauss-Legendre in `cos χ` and the trapezoid rule in `φ`.
pub fn haar_avg_bitflip_fidelity(p: &FeedbackProtocol, nodes: usize) -> Result<f64> {
    if nodes < 4 {
        return Err(Error::TooFewNodes(nodes));
    }
    check_bitflip_protocol(p)?;
    let (us, ws) = gauss_legendre(nodes);
    let dphi = 2.0 * PI / nodes as f64;
    let mut acc = 0.0;
    for (&u, &w) in us.iter().zip(&ws) {
        let ring: f64 = (0..nodes).map(|k| bitflip_fidelity(p, &bloch_ket(u, dphi * k as f64))).sum();
        acc += w * ring * dphi;
    }
    Ok(acc / (4.0 * PI))
}

/// Monte-Carlo estimate of [`haar_avg_bitflip_fidelity`]; returns the mean
/// and its standard error.
pub fn haar_avg_bitflip_fidelity_mc(p: &FeedbackProtocol, samples: usize, rng: &mut impl Rng) -> Result<(f64, f64)> {
    check_bitflip_protocol(p)?;
    if samples < 2 {
        return Err(Error::TooFewNodes(samples));
    }
    let values: Vec<f64> = (0..samples).map(|_| bitflip_fidelity(p, &random_ket(2, rng))).collect();
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}
