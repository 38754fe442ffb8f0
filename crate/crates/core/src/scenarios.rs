//! Ready-made protocols for the standard cooling, protection and bit-flip setups.

use std::f64::consts::FRAC_PI_2;

use crate::error::Result;
use crate::feedback::{FeedbackProtocol, InLoopStage};
use crate::linops::CMatrix;
use crate::quantum::{pauli_x, rotation_y, su2, ControllerSpec, DensityMatrix, KrausChannel};

/// Depolarising noise, measurement in the computational basis, every outcome
/// rotated onto `|target>`.
pub fn mf_cooling(d: usize, tau: f64, lambda: f64, eta: &ControllerSpec, target: usize) -> Result<FeedbackProtocol> {
    FeedbackProtocol::symmetric(
        KrausChannel::depolarizing(d, lambda)?,
        tau,
        eta.state(d)?,
        InLoopStage::reset_to(d, target)?,
    )
}

/// Depolarising noise and a coherent loop with in-loop unitary `v`.
pub fn cf_cooling(d: usize, tau: f64, lambda: f64, eta: &ControllerSpec, v: CMatrix) -> Result<FeedbackProtocol> {
    FeedbackProtocol::symmetric(KrausChannel::depolarizing(d, lambda)?, tau, eta.state(d)?, InLoopStage::coherent(v)?)
}

/// Qubit controller `diag(η0, 1-η0)` with measurement feedback onto its
/// dominant eigenvector.
pub fn mf_eta(tau: f64, lambda: f64, eta0: f64) -> Result<FeedbackProtocol> {
    let target = if eta0 >= 0.5 { 0 } else { 1 };
    mf_cooling(2, tau, lambda, &ControllerSpec::Eta0(eta0), target)
}

/// Pure qubit controller with the in-loop rotation `su2(χ, φ1, φ2)`.
pub fn cf_clean_rotation(tau: f64, lambda: f64, chi: f64, phi1: f64, phi2: f64) -> Result<FeedbackProtocol> {
    cf_cooling(2, tau, lambda, &ControllerSpec::Clean, su2(chi, phi1, phi2))
}

/// Same loop as [`cf_clean_rotation`] with the system dephased in the
/// computational basis before every cycle.
pub fn cf_clean_rotation_dephased(tau: f64, lambda: f64, chi: f64, phi1: f64, phi2: f64) -> Result<FeedbackProtocol> {
    let noise = KrausChannel::dephasing(2).then(&KrausChannel::depolarizing(2, lambda)?)?;
    FeedbackProtocol::symmetric(
        noise,
        tau,
        DensityMatrix::basis_state(2, 0),
        InLoopStage::coherent(su2(chi, phi1, phi2))?,
    )
}

/// Amplitude damping, maximally mixed controller, coherent loop `rotation_y(chi)`.
pub fn ad_cf(tau: f64, gamma: f64, chi: f64) -> Result<FeedbackProtocol> {
    FeedbackProtocol::symmetric(
        KrausChannel::amplitude_damping(gamma)?,
        tau,
        DensityMatrix::maximally_mixed(2),
        InLoopStage::coherent(rotation_y(chi))?,
    )
}

/// Amplitude damping, maximally mixed controller, both outcomes sent to `|1>`.
pub fn ad_mf(tau: f64, gamma: f64) -> Result<FeedbackProtocol> {
    FeedbackProtocol::symmetric(
        KrausChannel::amplitude_damping(gamma)?,
        tau,
        DensityMatrix::maximally_mixed(2),
        InLoopStage::projective(vec![rotation_y(FRAC_PI_2), CMatrix::identity(2)])?,
    )
}

/// Noiseless qubit, coherent `σx` in the loop.
pub fn bitflip_cf(tau: f64, eta: &ControllerSpec) -> Result<FeedbackProtocol> {
    FeedbackProtocol::symmetric(KrausChannel::identity(2), tau, eta.state(2)?, InLoopStage::coherent(pauli_x())?)
}

/// Noiseless qubit, computational-basis measurement followed by `σx` on either outcome.
pub fn bitflip_mf(tau: f64, eta: &ControllerSpec) -> Result<FeedbackProtocol> {
    FeedbackProtocol::symmetric(
        KrausChannel::identity(2),
        tau,
        eta.state(2)?,
        InLoopStage::projective(vec![pauli_x(), pauli_x()])?,
    )
}

/// Noiseless qubit, measurement `K0 = σx diag(a, b)`, `K1 = σx diag(√(1-a²), √(1-b²))`.
pub fn bitflip_povm(tau: f64, a: f64, b: f64, eta: &ControllerSpec) -> Result<FeedbackProtocol> {
    crate::error::check_unit_interval("a", a)?;
    crate::error::check_unit_interval("b", b)?;
    let x = pauli_x();
    let k0 = &x * &CMatrix::from_real_diag(&[a, b]);
    let k1 = &x * &CMatrix::from_real_diag(&[(1.0 - a * a).sqrt(), (1.0 - b * b).sqrt()]);
    FeedbackProtocol::symmetric(KrausChannel::identity(2), tau, eta.state(2)?, InLoopStage::povm(vec![k0, k1])?)
}
