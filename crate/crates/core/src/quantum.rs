//! States, channels and the two-qudit partial-swap coupling.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{check_unit_interval, Error, Result};
use crate::linops::{hermitian_eigs, kron, vector_norm, CMatrix, C64, HERMITIAN_TOL, I, ONE, ZERO};

/// Trace tolerance for a valid density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated (and clipped) in a density matrix.
pub const NEGATIVITY_TOL: f64 = 1e-8;
/// Completeness tolerance `|sum K^dagger K - I|` for Kraus channels.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates `m` and symmetrises away Hermiticity defects below tolerance.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let m = m.hermitian_part();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = *hermitian_eigs(&m)?.values.last().expect("non-empty spectrum");
        if min < -NEGATIVITY_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix: m })
    }

    /// Cleans up an unnormalised state produced by a CP map: symmetrise,
    /// clip eigenvalues in `[-1e-8, 0)` to zero and renormalise the trace.
    pub fn from_unnormalised(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        let h = m.hermitian_part();
        let tr = h.trace().re;
        if tr.is_nan() || tr <= 0.0 {
            return Err(Error::InvalidTrace(tr));
        }
        let h = h.scale_real(1.0 / tr);
        let eig = hermitian_eigs(&h)?;
        let min = *eig.values.last().expect("non-empty spectrum");
        if min < -NEGATIVITY_TOL {
            return Err(Error::NotPositive(min));
        }
        let matrix = if min < 0.0 {
            let clipped = eig.reconstruct_with(|x| x.max(0.0));
            let t = clipped.trace().re;
            clipped.scale_real(1.0 / t)
        } else {
            h
        };
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: CMatrix::identity(d).scale_real(1.0 / d as f64) }
    }

    /// `|k><k|` in dimension `d`.
    pub fn basis_state(d: usize, k: usize) -> Self {
        Self { matrix: CMatrix::unit(d, k, k) }
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = vector_norm(psi);
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::NotNormalised(norm));
        }
        Ok(Self { matrix: CMatrix::outer(psi, psi) })
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        if let Some(&p) = probs.iter().find(|&&p| p < -NEGATIVITY_TOL) {
            return Err(Error::NotPositive(p));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(s));
        }
        Ok(Self { matrix: CMatrix::from_real_diag(probs) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Spectrum in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigs(&self.matrix).expect("density matrices are Hermitian").values
    }

    /// Real diagonal entry `<k|ρ|k>`.
    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.data().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        Self::from_unnormalised(&self.matrix.conjugate_by(u))
    }
}

/// A completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let dim = check_kraus_completeness(&kraus)?;
        Ok(Self { dim, kraus })
    }

    pub fn identity(d: usize) -> Self {
        Self { dim: d, kraus: vec![CMatrix::identity(d)] }
    }

    /// `ρ -> λρ + (1-λ) I/d`, written with the `d²` Weyl operators `X^a Z^b`.
    pub fn depolarizing(d: usize, lambda: f64) -> Result<Self> {
        check_unit_interval("lambda", lambda)?;
        let dd = (d * d) as f64;
        let shift = shift_operator(d, 1);
        let clock = clock_operator(d);
        let mut kraus = Vec::with_capacity(d * d);
        let mut xa = CMatrix::identity(d);
        for a in 0..d {
            let mut xz = xa.clone();
            for b in 0..d {
                let weight = if a == 0 && b == 0 { lambda + (1.0 - lambda) / dd } else { (1.0 - lambda) / dd };
                if weight > 0.0 {
                    kraus.push(xz.scale_real(weight.sqrt()));
                }
                xz = &xz * &clock;
            }
            xa = &xa * &shift;
        }
        Self::new(kraus)
    }

    /// Qubit decay towards `|0>`: `E0 = √γ |0><1|`, `E1 = √(1-γ) |1><1| + |0><0|`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit_interval("gamma", gamma)?;
        let e0 = CMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]])?;
        let e1 = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]])?;
        Self::new(vec![e0, e1])
    }

    /// Maps every input to `|target><target|`.
    pub fn reset(d: usize, target: usize) -> Result<Self> {
        if target >= d {
            return Err(Error::DimensionMismatch { expected: d, found: target });
        }
        Self::new((0..d).map(|j| CMatrix::unit(d, target, j)).collect())
    }

    /// Removes all coherences in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        Self { dim: d, kraus: (0..d).map(|k| CMatrix::unit(d, k, k)).collect() }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &KrausChannel) -> Result<Self> {
        if next.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: next.dim });
        }
        let kraus = next.kraus.iter().flat_map(|b| self.kraus.iter().map(move |a| b * a)).collect();
        Self::new(kraus)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `sum_k K ρ K^dagger` on an arbitrary operator (no validation).
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        if let [only] = self.kraus.as_slice() {
            if only.is_identity(0.0) {
                return m.clone();
            }
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += &m.conjugate_by(k);
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        apply_channel(rho, self)
    }

    /// Whether the channel acts as the identity on every matrix unit.
    pub fn is_identity(&self) -> bool {
        (0..self.dim).all(|i| {
            (0..self.dim).all(|j| {
                let e = CMatrix::unit(self.dim, i, j);
                self.apply_matrix(&e).max_abs_diff(&e) <= 1e-12
            })
        })
    }
}

/// Returns the common dimension of a complete Kraus list.
pub(crate) fn check_kraus_completeness(kraus: &[CMatrix]) -> Result<usize> {
    let first = kraus.first().ok_or_else(|| Error::InvalidProtocol("empty Kraus list".into()))?;
    let d = first.rows();
    let mut sum = CMatrix::zeros(d, d);
    for k in kraus {
        if k.rows() != d || k.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: k.rows().max(k.cols()) });
        }
        sum += &(&k.adjoint() * k);
    }
    let defect = sum.max_abs_diff(&CMatrix::identity(d));
    if defect > COMPLETENESS_TOL {
        return Err(Error::IncompleteKraus(defect));
    }
    Ok(d)
}

/// Applies a channel and cleans the output.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix> {
    if rho.dim() != ch.dim {
        return Err(Error::DimensionMismatch { expected: ch.dim, found: rho.dim() });
    }
    DensityMatrix::from_unnormalised(&ch.apply_matrix(rho.matrix()))
}

/// `λρ + (1-λ) I/d`, evaluated directly.
pub fn depolarize(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    check_unit_interval("lambda", lambda)?;
    let d = rho.dim();
    let mixed = CMatrix::identity(d).scale_real((1.0 - lambda) / d as f64);
    Ok(DensityMatrix { matrix: &rho.matrix.scale_real(lambda) + &mixed })
}

/// Qubit amplitude damping with decay probability `gamma`.
pub fn amplitude_damp(rho: &DensityMatrix, gamma: f64) -> Result<DensityMatrix> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
    }
    apply_channel(rho, &KrausChannel::amplitude_damping(gamma)?)
}

/// The swap operator on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// `U_s = √τ I - i √(1-τ) S`.
pub fn partial_swap(d: usize, tau: f64) -> Result<CMatrix> {
    check_unit_interval("tau", tau)?;
    let id = CMatrix::identity(d * d).scale_real(tau.sqrt());
    let s = swap_operator(d).scale(-I * (1.0 - tau).sqrt());
    Ok(&id + &s)
}

/// Cyclic shift `|j> -> |j + k mod d>`.
pub fn shift_operator(d: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        m[((j + k) % d, j)] = ONE;
    }
    m
}

/// `|j> -> ω^j |j>` with `ω = exp(2πi/d)`.
pub fn clock_operator(d: usize) -> CMatrix {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    CMatrix::from_diag(&(0..d).map(|j| C64::from_polar(1.0, w * j as f64)).collect::<Vec<_>>())
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2")
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_vec(2, 2, vec![ZERO, -I, I, ZERO]).expect("2x2")
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real_diag(&[1.0, -1.0])
}

/// `cos χ I + i sin χ σ_y = [[cos χ, sin χ], [-sin χ, cos χ]]`.
pub fn rotation_y(chi: f64) -> CMatrix {
    let (s, c) = chi.sin_cos();
    CMatrix::from_real_rows(&[&[c, s], &[-s, c]]).expect("2x2")
}

/// General SU(2) element
/// `[[e^{iφ1} cos χ, e^{iφ2} sin χ], [-e^{-iφ2} sin χ, e^{-iφ1} cos χ]]`.
pub fn su2(chi: f64, phi1: f64, phi2: f64) -> CMatrix {
    let (s, c) = chi.sin_cos();
    CMatrix::from_vec(
        2,
        2,
        vec![C64::from_polar(c, phi1), C64::from_polar(s, phi2), -C64::from_polar(s, -phi2), C64::from_polar(c, -phi1)],
    )
    .expect("2x2")
}

/// `(|0> + |1>)/√2`
pub fn ket_plus() -> Vec<C64> {
    vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]
}

/// Computational basis ket `|k>` in dimension `d`.
pub fn ket(d: usize, k: usize) -> Vec<C64> {
    (0..d).map(|j| if j == k { ONE } else { ZERO }).collect()
}

/// Controller reset state.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    /// Maximally mixed `I/d`.
    Noisy,
    /// Pure `|0><0|`.
    Clean,
    /// Qubit `diag(η0, 1-η0)`.
    Eta0(f64),
    General(DensityMatrix),
}

impl ControllerSpec {
    pub fn state(&self, d: usize) -> Result<DensityMatrix> {
        match self {
            Self::Noisy => Ok(DensityMatrix::maximally_mixed(d)),
            Self::Clean => Ok(DensityMatrix::basis_state(d, 0)),
            Self::Eta0(eta0) => {
                check_unit_interval("eta0", *eta0)?;
                if d != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, found: d });
                }
                DensityMatrix::diagonal(&[*eta0, 1.0 - eta0])
            }
            Self::General(rho) => {
                if rho.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: rho.dim() });
                }
                Ok(rho.clone())
            }
        }
    }
}

/// `ρ ⊗ η`
pub fn tensor(rho: &DensityMatrix, eta: &DensityMatrix) -> CMatrix {
    kron(rho.matrix(), eta.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{partial_trace, Keep};

    fn state(rows: &[&[f64]]) -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_real_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(DensityMatrix::new(CMatrix::from_real_diag(&[0.5, 0.6])), Err(Error::InvalidTrace(_))));
        assert!(matches!(DensityMatrix::new(CMatrix::from_real_diag(&[1.5, -0.5])), Err(Error::NotPositive(_))));
        assert!(matches!(
            DensityMatrix::new(CMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]).unwrap()),
            Err(Error::NotHermitian(_))
        ));
        // tiny asymmetry is silently symmetrised
        let m = CMatrix::from_real_rows(&[&[0.5, 0.1 + 1e-12], &[0.1, 0.5]]).unwrap();
        let rho = DensityMatrix::new(m).unwrap();
        assert_eq!(rho.matrix().hermiticity_defect(), 0.0);
    }

    #[test]
    fn hygiene_clips_small_negative_eigenvalues() {
        let m = CMatrix::from_real_diag(&[1.0 + 5e-9, -5e-9]);
        let rho = DensityMatrix::from_unnormalised(&m).unwrap();
        assert!(rho.eigenvalues()[1] >= 0.0);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        let bad = CMatrix::from_real_diag(&[1.1, -0.1]);
        assert!(matches!(DensityMatrix::from_unnormalised(&bad), Err(Error::NotPositive(_))));
    }

    #[test]
    fn depolarize_examples() {
        let rho = state(&[&[0.7, 0.2], &[0.2, 0.3]]);
        assert_eq!(depolarize(&rho, 1.0).unwrap().matrix(), rho.matrix());
        let mixed = depolarize(&rho, 0.0).unwrap();
        assert!(mixed.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
        let half = depolarize(&DensityMatrix::basis_state(2, 0), 0.5).unwrap();
        assert!(half.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.75, 0.25])) < 1e-15);
        assert!(matches!(depolarize(&rho, 1.5), Err(Error::ParameterOutOfRange { .. })));
    }

    #[test]
    fn depolarizing_kraus_form_matches_affine_formula() {
        for d in [2, 3, 4] {
            let ch = KrausChannel::depolarizing(d, 0.37).unwrap();
            let rho = DensityMatrix::new(CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    C64::new(1.0 / d as f64, 0.0)
                } else {
                    C64::new(0.02 * (i + j) as f64, 0.01 * (i as f64 - j as f64))
                }
            }))
            .unwrap();
            let a = ch.apply(&rho).unwrap();
            let b = depolarize(&rho, 0.37).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_examples() {
        let rho = state(&[&[0.4, 0.3], &[0.3, 0.6]]);
        assert!(amplitude_damp(&rho, 0.0).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let excited = DensityMatrix::basis_state(2, 1);
        let out = amplitude_damp(&excited, 1.0).unwrap();
        assert!(out.matrix().max_abs_diff(DensityMatrix::basis_state(2, 0).matrix()) < 1e-15);
        let out = amplitude_damp(&excited, 0.8).unwrap();
        assert!(out.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.8, 0.2])) < 1e-15);
        // off-diagonals scale by √(1-γ)
        let out = amplitude_damp(&rho, 0.36).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.3 * 0.8).abs() < 1e-15);
        assert!((out.population(1) - 0.6 * 0.64).abs() < 1e-15);
        assert!(matches!(
            amplitude_damp(&DensityMatrix::maximally_mixed(3), 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reset_channel_and_identity() {
        let rho = state(&[&[0.3, 0.1], &[0.1, 0.7]]);
        let out = KrausChannel::reset(2, 0).unwrap().apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(DensityMatrix::basis_state(2, 0).matrix()) < 1e-15);
        let same = KrausChannel::identity(2).apply(&rho).unwrap();
        assert_eq!(same.matrix(), rho.matrix());
        assert!(KrausChannel::identity(3).is_identity());
        assert!(!KrausChannel::depolarizing(2, 0.9).unwrap().is_identity());
    }

    #[test]
    fn composition_and_dephasing() {
        let rho = state(&[&[0.3, 0.2], &[0.2, 0.7]]);
        let deph = KrausChannel::dephasing(2).apply(&rho).unwrap();
        assert!(deph.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.3, 0.7])) < 1e-15);
        let both = KrausChannel::dephasing(2).then(&KrausChannel::depolarizing(2, 0.5).unwrap()).unwrap();
        let out = both.apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.4, 0.6])) < 1e-15);
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let k = vec![CMatrix::from_real_diag(&[1.0, 0.5])];
        assert!(matches!(KrausChannel::new(k), Err(Error::IncompleteKraus(_))));
    }

    #[test]
    fn partial_swap_limits() {
        for d in [2, 3] {
            assert!(partial_swap(d, 1.0).unwrap().is_identity(0.0));
            let full = partial_swap(d, 0.0).unwrap();
            assert!(full.max_abs_diff(&swap_operator(d).scale(-I)) < 1e-15);
            for tau in [0.0, 0.2, 0.5, 0.9] {
                let u = partial_swap(d, tau).unwrap();
                assert!(u.unitarity_defect() < 1e-12);
                let s = swap_operator(d);
                assert!((&(&s * &u) * &s).max_abs_diff(&u) < 1e-12);
            }
        }
        assert!(partial_swap(2, -0.1).is_err());
    }

    #[test]
    fn full_swap_and_double_half_swap_transfer_controller_state() {
        let rho = state(&[&[0.6, 0.2], &[0.2, 0.4]]);
        let eta = DensityMatrix::basis_state(2, 1);
        let joint = tensor(&rho, &eta);
        let out = partial_trace(&joint.conjugate_by(&partial_swap(2, 0.0).unwrap()), 2, 2, Keep::A).unwrap();
        assert!(out.max_abs_diff(eta.matrix()) < 1e-14);
        let half = partial_swap(2, 0.5).unwrap();
        let twice = &half * &half;
        let out = partial_trace(&joint.conjugate_by(&twice), 2, 2, Keep::A).unwrap();
        assert!(out.max_abs_diff(eta.matrix()) < 1e-14);
    }

    #[test]
    fn controller_presets() {
        assert_eq!(ControllerSpec::Noisy.state(3).unwrap(), DensityMatrix::maximally_mixed(3));
        assert_eq!(ControllerSpec::Clean.state(2).unwrap(), DensityMatrix::basis_state(2, 0));
        let eta = ControllerSpec::Eta0(0.3).state(2).unwrap();
        assert!((eta.population(0) - 0.3).abs() < 1e-15);
        assert!(ControllerSpec::Eta0(0.3).state(3).is_err());
        assert!(ControllerSpec::Eta0(1.3).state(2).is_err());
    }

    #[test]
    fn named_unitaries_are_unitary() {
        for u in [
            pauli_x(),
            pauli_y(),
            pauli_z(),
            rotation_y(0.4),
            su2(0.3, 1.1, -0.7),
            shift_operator(4, 3),
            clock_operator(3),
        ] {
            assert!(u.unitarity_defect() < 1e-14);
        }
        // rotation_y(π/2) maps |0> to -|1>
        let v = rotation_y(std::f64::consts::FRAC_PI_2).matvec(&ket(2, 0));
        assert!((v[1] + ONE).norm() < 1e-15);
    }
}
