//! Weak-coupling expansion of the loop and the Lie algebra its generators span.
//!
//! With `τ = cos²(dθ)` on both couplings and no noise, one cycle acts as
//! `ρ -> ρ - i[h, ρ] dθ + O(dθ²)` where `h = Λ(η) + η` and `Λ` is the
//! in-loop controller map.

use crate::error::{Error, Result};
use crate::feedback::{FeedbackProtocol, InLoopStage};
use crate::linops::{commutator, numerical_rank, CMatrix, C64, HERMITIAN_TOL, I};
use crate::quantum::{DensityMatrix, KrausChannel};

/// Singular values below this are treated as zero when measuring span dimension.
pub const RANK_TOL: f64 = 1e-9;

/// First-order generator of one weakly coupled cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    h: CMatrix,
}

impl EffectiveHamiltonian {
    pub fn new(h: CMatrix) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { h: h.hermitian_part() })
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn into_matrix(self) -> CMatrix {
        self.h
    }
}

/// `h = Σ_j K_j η K_j^dagger + η` for the stage's controller operators `K_j`.
pub fn effective_hamiltonian(eta: &DensityMatrix, stage: &InLoopStage) -> Result<EffectiveHamiltonian> {
    if stage.dim() != eta.dim() {
        return Err(Error::DimensionMismatch { expected: eta.dim(), found: stage.dim() });
    }
    let mut h = eta.matrix().clone();
    for k in stage.controller_kraus() {
        h += &eta.matrix().conjugate_by(&k);
    }
    EffectiveHamiltonian::new(h)
}

/// Largest deviation, over matrix units `E`, between one cycle at
/// `τ = cos²(dθ)` and the first-order update `E - i[h, E] dθ`.
/// Uses the controller state and stage of `p`; `p` must be noiseless.
pub fn first_order_defect(p: &FeedbackProtocol, dtheta: f64) -> Result<f64> {
    if dtheta.is_nan() || dtheta < 0.0 {
        return Err(Error::ParameterOutOfRange { name: "dtheta", value: dtheta });
    }
    if !p.noise().is_identity() {
        return Err(Error::InvalidProtocol("weak-coupling expansion assumes no noise".into()));
    }
    if dtheta == 0.0 {
        return Ok(0.0);
    }
    let d = p.dim();
    let tau = dtheta.cos().powi(2);
    let weak = FeedbackProtocol::symmetric(KrausChannel::identity(d), tau, p.eta().clone(), p.stage().clone())?;
    let h = effective_hamiltonian(p.eta(), p.stage())?.into_matrix();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let e = CMatrix::unit(d, i, j);
            let predicted = &e - &commutator(&h, &e).scale(I * dtheta);
            worst = worst.max(weak.apply_linear(&e).max_abs_diff(&predicted));
        }
    }
    Ok(worst)
}

/// Orthonormal (under `tr(AB)`) Hermitian basis: identity, then the
/// symmetric, antisymmetric and diagonal generalised Gell-Mann matrices.
pub fn gell_mann_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = vec![CMatrix::identity(d).scale_real(1.0 / (d as f64).sqrt())];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = C64::new(r, 0.0);
            s[(k, j)] = C64::new(r, 0.0);
            basis.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = C64::new(0.0, -r);
            a[(k, j)] = C64::new(0.0, r);
            basis.push(a);
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![norm; l];
        diag.push(-(l as f64) * norm);
        diag.resize(d, 0.0);
        basis.push(CMatrix::from_real_diag(&diag));
    }
    basis
}

/// Real coordinates of a Hermitian matrix in [`gell_mann_basis`].
fn coordinates(basis: &[CMatrix], h: &CMatrix) -> Vec<f64> {
    basis.iter().map(|g| g.data().iter().zip(h.data()).map(|(a, b)| (a.conj() * b).re).sum()).collect()
}

fn from_coordinates(basis: &[CMatrix], c: &[f64]) -> CMatrix {
    let d = basis[0].rows();
    let mut out = CMatrix::zeros(d, d);
    for (g, &x) in basis.iter().zip(c) {
        out += &g.scale_real(x);
    }
    out
}

fn normalised(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > RANK_TOL).then(|| v.into_iter().map(|x| x / n).collect())
}

/// Adds `v` to the orthonormal set `q` if it is independent of it.
fn extend_orthonormal(q: &mut Vec<Vec<f64>>, v: &[f64]) {
    let Some(mut r) = normalised(v.to_vec()) else { return };
    for _ in 0..2 {
        for u in q.iter() {
            let dot: f64 = u.iter().zip(&r).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(u).for_each(|(x, y)| *x -= dot * y);
        }
    }
    if let Some(u) = normalised(r) {
        q.push(u);
    }
}

/// Real dimension of the smallest span containing the identity and the
/// generators that is closed under `(a, b) -> -i[a, b]`.
pub fn lie_closure_dim(generators: &[CMatrix]) -> Result<usize> {
    let d = match generators.first() {
        Some(g) => g.rows(),
        None => return Err(Error::InvalidProtocol("no generators".into())),
    };
    for g in generators {
        if g.rows() != d || g.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: g.rows() });
        }
        let defect = g.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
    }
    let basis = gell_mann_basis(d);
    let mut span: Vec<Vec<f64>> = Vec::new();
    let identity = coordinates(&basis, &CMatrix::identity(d));
    for c in std::iter::once(identity).chain(generators.iter().map(|g| coordinates(&basis, g))) {
        extend_orthonormal(&mut span, &c);
    }
    loop {
        let elements: Vec<CMatrix> = span.iter().map(|c| from_coordinates(&basis, c)).collect();
        let mut candidates = span.clone();
        for (a, ea) in elements.iter().enumerate() {
            for eb in &elements[a + 1..] {
                let bracket = commutator(ea, eb).scale(-I);
                if let Some(c) = normalised(coordinates(&basis, &bracket)) {
                    candidates.push(c);
                }
            }
        }
        let rank = numerical_rank(&candidates, RANK_TOL);
        let before = span.len();
        if rank == before {
            return Ok(rank);
        }
        for c in &candidates[before..] {
            extend_orthonormal(&mut span, c);
        }
        if span.len() == before {
            return Ok(rank);
        }
    }
}
