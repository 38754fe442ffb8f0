//! One round of the system/controller collision loop.
//!
//! A cycle applies the noise map to the system, attaches a fresh controller
//! in state `η`, couples the two with a partial swap, acts on the controller
//! (coherently or through a measurement followed by a conditional unitary),
//! couples them again and discards the controller.
//!
//! Internally each protocol is reduced to effective Kraus operators on the
//! system alone, grouped by measurement outcome. The explicit joint-space
//! evolution is kept as [`FeedbackProtocol::joint_branches`] for cross-checks.

mod steady;
mod trajectory;

pub use steady::{
    build_superoperator, iterate_to_fixed_point, steady_state, SteadyState, Superoperator, UNIT_MODULUS_TOL,
};
pub use trajectory::{
    sample_ensemble, sample_trajectory, trajectory_seed, Trajectory, TrajectoryRecord, PROBABILITY_FLOOR,
};

use crate::error::{check_unit_interval, Error, Result};
use crate::linops::{hermitian_eigs, kron, partial_trace, CMatrix, Keep, C64, HERMITIAN_TOL};
use crate::quantum::{check_kraus_completeness, partial_swap, shift_operator, tensor, DensityMatrix, KrausChannel};

/// What happens to the controller between the two couplings.
#[derive(Debug, Clone, PartialEq)]
pub enum InLoopStage {
    /// A fixed unitary `V` on the controller.
    Coherent { unitary: CMatrix },
    /// Projective measurement in the basis given by the columns of `basis`,
    /// followed by `feedback[j]` on outcome `j`.
    Projective { basis: CMatrix, feedback: Vec<CMatrix> },
    /// A general measurement with Kraus operators `K_j`.
    Povm { kraus: Vec<CMatrix> },
}

impl InLoopStage {
    pub fn coherent(unitary: CMatrix) -> Result<Self> {
        check_unitary(&unitary)?;
        Ok(Self::Coherent { unitary })
    }

    /// Computational-basis measurement with per-outcome feedback unitaries.
    pub fn projective(feedback: Vec<CMatrix>) -> Result<Self> {
        let d = feedback.first().map_or(0, CMatrix::rows);
        Self::projective_in_basis(CMatrix::identity(d), feedback)
    }

    pub fn projective_in_basis(basis: CMatrix, feedback: Vec<CMatrix>) -> Result<Self> {
        check_unitary(&basis)?;
        if feedback.len() != basis.rows() {
            return Err(Error::DimensionMismatch { expected: basis.rows(), found: feedback.len() });
        }
        for v in &feedback {
            if v.rows() != basis.rows() {
                return Err(Error::DimensionMismatch { expected: basis.rows(), found: v.rows() });
            }
            check_unitary(v)?;
        }
        Ok(Self::Projective { basis, feedback })
    }

    pub fn povm(kraus: Vec<CMatrix>) -> Result<Self> {
        check_kraus_completeness(&kraus)?;
        Ok(Self::Povm { kraus })
    }

    /// Coherent stage that leaves the controller untouched.
    pub fn identity(d: usize) -> Self {
        Self::Coherent { unitary: CMatrix::identity(d) }
    }

    /// Computational-basis measurement whose feedback rotates every outcome
    /// `|j>` onto `|target>`.
    pub fn reset_to(d: usize, target: usize) -> Result<Self> {
        if target >= d {
            return Err(Error::DimensionMismatch { expected: d, found: target });
        }
        Self::projective((0..d).map(|j| shift_operator(d, (target + d - j) % d)).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Coherent { unitary } => unitary.rows(),
            Self::Projective { basis, .. } => basis.rows(),
            Self::Povm { kraus } => kraus[0].rows(),
        }
    }

    pub fn outcomes(&self) -> usize {
        match self {
            Self::Coherent { .. } => 1,
            Self::Projective { feedback, .. } => feedback.len(),
            Self::Povm { kraus } => kraus.len(),
        }
    }

    /// Controller Kraus operators, one per outcome.
    pub fn controller_kraus(&self) -> Vec<CMatrix> {
        match self {
            Self::Coherent { unitary } => vec![unitary.clone()],
            Self::Projective { basis, feedback } => feedback
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let b = basis.column(j);
                    v * &CMatrix::outer(&b, &b)
                })
                .collect(),
            Self::Povm { kraus } => kraus.clone(),
        }
    }

    /// Whether outcomes carry information (i.e. the stage is a measurement).
    pub fn is_measurement(&self) -> bool {
        !matches!(self, Self::Coherent { .. })
    }
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NotSquare { rows: u.rows(), cols: u.cols() });
    }
    let defect = u.unitarity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

/// A fully specified feedback loop. Immutable once built.
#[derive(Debug, Clone)]
pub struct FeedbackProtocol {
    d: usize,
    noise: KrausChannel,
    tau1: f64,
    tau2: f64,
    eta: DensityMatrix,
    stage: InLoopStage,
    /// Effective system Kraus operators (noise excluded), per outcome.
    branch_kraus: Vec<Vec<CMatrix>>,
}

impl FeedbackProtocol {
    pub fn new(noise: KrausChannel, tau1: f64, tau2: f64, eta: DensityMatrix, stage: InLoopStage) -> Result<Self> {
        check_unit_interval("tau1", tau1)?;
        check_unit_interval("tau2", tau2)?;
        let d = noise.dim();
        for found in [eta.dim(), stage.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        let branch_kraus = effective_kraus(d, tau1, tau2, &eta, &stage)?;
        Ok(Self { d, noise, tau1, tau2, eta, stage, branch_kraus })
    }

    /// Both couplings share the transmissivity `tau`.
    pub fn symmetric(noise: KrausChannel, tau: f64, eta: DensityMatrix, stage: InLoopStage) -> Result<Self> {
        Self::new(noise, tau, tau, eta, stage)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn noise(&self) -> &KrausChannel {
        &self.noise
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn eta(&self) -> &DensityMatrix {
        &self.eta
    }

    pub fn stage(&self) -> &InLoopStage {
        &self.stage
    }

    pub fn outcomes(&self) -> usize {
        self.branch_kraus.len()
    }

    /// Effective system Kraus operators for outcome `j`, to be applied after noise.
    pub fn branch_kraus(&self, j: usize) -> &[CMatrix] {
        &self.branch_kraus[j]
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: rho.dim() });
        }
        Ok(())
    }

    /// Unnormalised system output for each outcome; traces are the outcome probabilities.
    pub fn branches(&self, rho: &DensityMatrix) -> Result<Vec<CMatrix>> {
        self.check_dim(rho)?;
        Ok(self.branches_of(rho.matrix()))
    }

    pub(crate) fn branches_of(&self, m: &CMatrix) -> Vec<CMatrix> {
        let noisy = self.noise.apply_matrix(m);
        self.branch_kraus
            .iter()
            .map(|ops| {
                let mut out = CMatrix::zeros(self.d, self.d);
                for k in ops {
                    out += &noisy.conjugate_by(k);
                }
                out
            })
            .collect()
    }

    /// The unconditional map on an arbitrary operator (linear, no hygiene).
    pub fn apply_linear(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d, self.d);
        for b in self.branches_of(m) {
            out += &b;
        }
        out
    }

    /// Unnormalised branch outputs computed by explicit evolution on the
    /// joint system/controller space.
    pub fn joint_branches(&self, rho: &DensityMatrix) -> Result<Vec<CMatrix>> {
        self.check_dim(rho)?;
        let d = self.d;
        let noisy = DensityMatrix::from_unnormalised(&self.noise.apply_matrix(rho.matrix()))?;
        let u1 = partial_swap(d, self.tau1)?;
        let u2 = partial_swap(d, self.tau2)?;
        let coupled = tensor(&noisy, &self.eta).conjugate_by(&u1);
        let id = CMatrix::identity(d);
        self.stage
            .controller_kraus()
            .iter()
            .map(|k| {
                let joint = coupled.conjugate_by(&kron(&id, k)).conjugate_by(&u2);
                partial_trace(&joint, d, d, Keep::A)
            })
            .collect()
    }

    /// System state right after the first coupling and the in-loop operation
    /// for outcome `j`, normalised, with its probability.
    pub fn measured_system_state(&self, rho: &DensityMatrix, j: usize) -> Result<(f64, DensityMatrix)> {
        self.check_dim(rho)?;
        let d = self.d;
        let kraus = self.stage.controller_kraus();
        let k = kraus.get(j).ok_or(Error::DimensionMismatch { expected: kraus.len(), found: j })?;
        let noisy = DensityMatrix::from_unnormalised(&self.noise.apply_matrix(rho.matrix()))?;
        let joint = tensor(&noisy, &self.eta)
            .conjugate_by(&partial_swap(d, self.tau1)?)
            .conjugate_by(&kron(&CMatrix::identity(d), k));
        let system = partial_trace(&joint, d, d, Keep::A)?;
        let p = system.trace().re;
        if p < PROBABILITY_FLOOR {
            return Err(Error::ZeroProbabilityBranch { outcome: j, probability: p });
        }
        Ok((p, DensityMatrix::from_unnormalised(&system)?))
    }
}

/// `M = √p_k (I ⊗ <l|) U2 (I ⊗ K_j) U1 (I ⊗ |e_k>)` for every eigenpair
/// `(p_k, e_k)` of `η` and every controller basis state `l`.
fn effective_kraus(
    d: usize,
    tau1: f64,
    tau2: f64,
    eta: &DensityMatrix,
    stage: &InLoopStage,
) -> Result<Vec<Vec<CMatrix>>> {
    let u1 = partial_swap(d, tau1)?;
    let u2 = partial_swap(d, tau2)?;
    let id = CMatrix::identity(d);
    let eig = hermitian_eigs(eta.matrix())?;
    let attach: Vec<CMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-15)
        .map(|(k, &p)| {
            let e: Vec<C64> = eig.vector(k).iter().map(|z| z * p.sqrt()).collect();
            let col = CMatrix::from_vec(d, 1, e).expect("column vector");
            &u1 * &kron(&id, &col)
        })
        .collect();
    let ops = stage
        .controller_kraus()
        .iter()
        .map(|k| {
            let mid = &u2 * &kron(&id, k);
            let mut out = Vec::with_capacity(attach.len() * d);
            for a in &attach {
                let w = &mid * a;
                for l in 0..d {
                    let m = CMatrix::from_fn(d, d, |s, t| w[(s * d + l, t)]);
                    if m.max_abs() > 1e-15 {
                        out.push(m);
                    }
                }
            }
            out
        })
        .collect();
    Ok(ops)
}

/// One unconditional cycle followed by state hygiene.
pub fn cycle_unconditional(rho: &DensityMatrix, p: &FeedbackProtocol) -> Result<DensityMatrix> {
    p.check_dim(rho)?;
    DensityMatrix::from_unnormalised(&p.apply_linear(rho.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::majorizes;
    use crate::metrics::von_neumann_entropy;
    use crate::quantum::{pauli_x, ControllerSpec};
    use crate::random::{random_density_matrix, random_unitary};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn protocol(d: usize, tau: f64, lambda: f64, eta: ControllerSpec, stage: InLoopStage) -> FeedbackProtocol {
        FeedbackProtocol::symmetric(KrausChannel::depolarizing(d, lambda).unwrap(), tau, eta.state(d).unwrap(), stage)
            .unwrap()
    }

    fn random_stage(d: usize, rng: &mut ChaCha8Rng) -> InLoopStage {
        match rng.random_range(0..3) {
            0 => InLoopStage::coherent(random_unitary(d, rng)).unwrap(),
            1 => InLoopStage::projective_in_basis(
                random_unitary(d, rng),
                (0..d).map(|_| random_unitary(d, rng)).collect(),
            )
            .unwrap(),
            _ => {
                // Kraus operators from the columns of a random isometry.
                let n = 3;
                let big = random_unitary(n * d, rng);
                InLoopStage::povm((0..n).map(|j| CMatrix::from_fn(d, d, |r, c| big[(j * d + r, c)])).collect()).unwrap()
            }
        }
    }

    fn random_protocol(rng: &mut ChaCha8Rng) -> FeedbackProtocol {
        let d = rng.random_range(2..4);
        let stage = random_stage(d, rng);
        FeedbackProtocol::new(
            KrausChannel::depolarizing(d, rng.random()).unwrap(),
            rng.random(),
            rng.random(),
            random_density_matrix(d, rng),
            stage,
        )
        .unwrap()
    }

    #[test]
    fn stage_validation() {
        assert!(matches!(InLoopStage::coherent(CMatrix::from_real_diag(&[1.0, 0.5])), Err(Error::NotUnitary(_))));
        assert!(InLoopStage::projective(vec![CMatrix::identity(2)]).is_err());
        assert!(matches!(
            InLoopStage::povm(vec![CMatrix::from_real_diag(&[1.0, 0.0])]),
            Err(Error::IncompleteKraus(_))
        ));
        let eta = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            FeedbackProtocol::symmetric(KrausChannel::identity(2), 0.5, eta, InLoopStage::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn no_interaction_leaves_state_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density_matrix(3, &mut rng);
        let p = FeedbackProtocol::symmetric(
            KrausChannel::identity(3),
            1.0,
            DensityMatrix::maximally_mixed(3),
            InLoopStage::identity(3),
        )
        .unwrap();
        let out = cycle_unconditional(&rho, &p).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-13);
    }

    #[test]
    fn full_swap_with_reset_cools_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = protocol(2, 0.0, 1.0, ControllerSpec::Noisy, InLoopStage::reset_to(2, 0).unwrap());
        for _ in 0..20 {
            let out = cycle_unconditional(&random_density_matrix(2, &mut rng), &p).unwrap();
            assert!(out.matrix().max_abs_diff(DensityMatrix::basis_state(2, 0).matrix()) < 1e-13);
        }
    }

    #[test]
    fn coherent_feedback_with_noisy_controller_never_cools() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let d = rng.random_range(2..4);
            let p = FeedbackProtocol::new(
                KrausChannel::depolarizing(d, rng.random()).unwrap(),
                rng.random(),
                rng.random(),
                DensityMatrix::maximally_mixed(d),
                InLoopStage::coherent(random_unitary(d, &mut rng)).unwrap(),
            )
            .unwrap();
            let rho = random_density_matrix(d, &mut rng);
            let out = cycle_unconditional(&rho, &p).unwrap();
            assert!(von_neumann_entropy(&out, false) >= von_neumann_entropy(&rho, false) - 1e-10);
        }
    }

    #[test]
    fn reduced_kraus_matches_joint_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..60 {
            let p = random_protocol(&mut rng);
            let rho = random_density_matrix(p.dim(), &mut rng);
            let fast = p.branches(&rho).unwrap();
            let slow = p.joint_branches(&rho).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!(a.max_abs_diff(b) < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_stage_is_the_weak_measurement_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = 2;
            let v = random_unitary(d, &mut rng);
            let weak = v.scale_real(std::f64::consts::FRAC_1_SQRT_2);
            let eta = random_density_matrix(d, &mut rng);
            let (tau, lambda) = (rng.random(), rng.random());
            let cf = FeedbackProtocol::symmetric(
                KrausChannel::depolarizing(d, lambda).unwrap(),
                tau,
                eta.clone(),
                InLoopStage::coherent(v).unwrap(),
            )
            .unwrap();
            let mf = FeedbackProtocol::symmetric(
                KrausChannel::depolarizing(d, lambda).unwrap(),
                tau,
                eta,
                InLoopStage::povm(vec![weak.clone(), weak]).unwrap(),
            )
            .unwrap();
            let rho = random_density_matrix(d, &mut rng);
            let a = cycle_unconditional(&rho, &cf).unwrap();
            let b = cycle_unconditional(&rho, &mf).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
        }
    }

    #[test]
    fn measurement_basis_is_applied_by_conjugation() {
        // Measuring σx and feeding back onto |0> cools as well as σz does at τ=0.
        let h =
            CMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap().scale_real(std::f64::consts::FRAC_1_SQRT_2);
        let stage = InLoopStage::projective_in_basis(h.clone(), vec![h.adjoint(), &pauli_x() * &h.adjoint()]).unwrap();
        let p = protocol(2, 0.0, 1.0, ControllerSpec::Noisy, stage);
        let out = cycle_unconditional(&DensityMatrix::maximally_mixed(2), &p).unwrap();
        assert!(out.matrix().max_abs_diff(DensityMatrix::basis_state(2, 0).matrix()) < 1e-13);
    }

    #[test]
    fn conditional_outputs_obey_partial_swap_majorisation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let d = rng.random_range(2..5);
            let tau = rng.random();
            let feedback = (0..d).map(|_| random_unitary(d, &mut rng)).collect();
            let p = protocol(d, tau, rng.random(), ControllerSpec::Noisy, InLoopStage::projective(feedback).unwrap());
            let probs: Vec<f64> = {
                let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|x| x / s).collect()
            };
            let rho = DensityMatrix::diagonal(&probs).unwrap();
            for (j, out) in p.branches(&rho).unwrap().iter().enumerate() {
                let (pj, mid) = p.measured_system_state(&rho, j).unwrap();
                assert!((pj - out.trace().re).abs() < 1e-12);
                let out = DensityMatrix::from_unnormalised(out).unwrap();
                let mut bound: Vec<f64> = mid.eigenvalues().iter().map(|x| tau * x).collect();
                bound[0] += 1.0 - tau;
                assert!(majorizes(&out.eigenvalues(), &bound).unwrap());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn unconditional_is_sum_of_branches(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_protocol(&mut rng);
            let rho = random_density_matrix(p.dim(), &mut rng);
            let branches = p.branches(&rho).unwrap();
            let total: f64 = branches.iter().map(|b| b.trace().re).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let mut avg = CMatrix::zeros(p.dim(), p.dim());
            for b in &branches {
                let prob = b.trace().re;
                if prob > PROBABILITY_FLOOR {
                    let conditional = DensityMatrix::from_unnormalised(b).unwrap();
                    avg += &conditional.matrix().scale_real(prob);
                }
            }
            let out = cycle_unconditional(&rho, &p).unwrap();
            prop_assert!(avg.max_abs_diff(out.matrix()) < 1e-12);
        }
    }
}
