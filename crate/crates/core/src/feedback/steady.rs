use super::FeedbackProtocol;
use crate::error::{Error, Result};
use crate::linops::{eigenvalues, kron, solve, CMatrix, C64, ONE};
use crate::quantum::DensityMatrix;

/// Eigenvalues with `|1 - |λ|| <= UNIT_MODULUS_TOL` count as stationary.
pub const UNIT_MODULUS_TOL: f64 = 1e-8;

/// Matrix of one unconditional cycle acting on column-stacked operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    d: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.rows() != self.d || m.cols() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: m.rows() });
        }
        CMatrix::unstack_columns(self.d, &self.matrix.matvec(&m.stack_columns()))
    }

    /// Eigenvalues sorted by decreasing modulus.
    pub fn spectrum(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.matrix)
    }

    /// `max |vec(I)^dagger S - vec(I)^dagger|`: zero for trace-preserving maps.
    pub fn trace_defect(&self) -> f64 {
        let d = self.d;
        let n = d * d;
        (0..n)
            .map(|col| {
                let s: C64 = (0..d).map(|i| self.matrix[(i * d + i, col)]).sum();
                let target = if col % (d + 1) == 0 { 1.0 } else { 0.0 };
                (s - target).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `S = Σ conj(M) ⊗ M` over the effective Kraus operators, composed with the noise.
pub fn build_superoperator(p: &FeedbackProtocol) -> Superoperator {
    let d = p.dim();
    let n = d * d;
    let lift = |ops: &mut dyn Iterator<Item = &CMatrix>| {
        let mut s = CMatrix::zeros(n, n);
        for m in ops {
            s += &kron(&m.conj(), m);
        }
        s
    };
    let noise = lift(&mut p.noise().kraus().iter());
    let body = lift(&mut p.branch_kraus.iter().flatten());
    let matrix =
        if p.noise().kraus().len() == 1 && p.noise().kraus()[0].is_identity(0.0) { body } else { &body * &noise };
    Superoperator { d, matrix }
}

/// Unique fixed point of the unconditional cycle.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: DensityMatrix,
    /// `1 - |λ₂|` for the second-largest superoperator eigenvalue.
    pub gap: f64,
    /// Superoperator spectrum, decreasing modulus.
    pub spectrum: Vec<C64>,
}

pub fn steady_state(p: &FeedbackProtocol) -> Result<SteadyState> {
    let sup = build_superoperator(p);
    let spectrum = sup.spectrum()?;
    let stationary = spectrum.iter().filter(|z| (1.0 - z.norm()).abs() <= UNIT_MODULUS_TOL).count();
    if stationary != 1 {
        return Err(Error::DegenerateSteadyState(stationary));
    }
    let gap = 1.0 - spectrum.get(1).map_or(0.0, |z| z.norm());
    let mu =
        *spectrum.iter().min_by(|a, b| (*a - ONE).norm().total_cmp(&(*b - ONE).norm())).expect("non-empty spectrum");

    // (S - μI) x = 0 with the first equation swapped for tr(x) = 1.
    let d = p.dim();
    let n = d * d;
    let mut a = sup.matrix.clone();
    for i in 0..n {
        a[(i, i)] -= mu;
    }
    for c in 0..n {
        a[(0, c)] = if c % (d + 1) == 0 { ONE } else { C64::new(0.0, 0.0) };
    }
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    rhs[0] = ONE;
    let x = solve(&a, &rhs)?;
    let state = DensityMatrix::from_unnormalised(&CMatrix::unstack_columns(d, &x)?)?;
    Ok(SteadyState { state, gap, spectrum })
}

/// Repeats the unconditional cycle from `rho0` until successive states differ
/// by at most `tol` (max-norm). Returns the state and the iteration count.
pub fn iterate_to_fixed_point(
    p: &FeedbackProtocol,
    rho0: &DensityMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(DensityMatrix, usize)> {
    let mut rho = rho0.clone();
    for it in 1..=max_iter {
        let next = super::cycle_unconditional(&rho, p)?;
        let delta = next.matrix().max_abs_diff(rho.matrix());
        rho = next;
        if delta <= tol {
            return Ok((rho, it));
        }
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::{cycle_unconditional, InLoopStage};
    use crate::quantum::{pauli_x, ControllerSpec, KrausChannel};
    use crate::random::{random_density_matrix, random_unitary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn protocol(d: usize, tau: f64, lambda: f64, eta: ControllerSpec, stage: InLoopStage) -> FeedbackProtocol {
        FeedbackProtocol::symmetric(KrausChannel::depolarizing(d, lambda).unwrap(), tau, eta.state(d).unwrap(), stage)
            .unwrap()
    }

    #[test]
    fn superoperator_reproduces_the_cycle_on_matrix_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2, 3] {
            let p = FeedbackProtocol::new(
                KrausChannel::depolarizing(d, 0.6).unwrap(),
                0.3,
                0.7,
                random_density_matrix(d, &mut rng),
                InLoopStage::projective((0..d).map(|_| random_unitary(d, &mut rng)).collect()).unwrap(),
            )
            .unwrap();
            let s = build_superoperator(&p);
            assert!(s.trace_defect() < 1e-10);
            for i in 0..d {
                for j in 0..d {
                    let e = CMatrix::unit(d, i, j);
                    assert!(s.apply(&e).unwrap().max_abs_diff(&p.apply_linear(&e)) < 1e-12);
                }
            }
            assert!((s.spectrum().unwrap()[0].norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_cycle_has_identity_superoperator() {
        let p = FeedbackProtocol::symmetric(
            KrausChannel::identity(2),
            1.0,
            DensityMatrix::maximally_mixed(2),
            InLoopStage::identity(2),
        )
        .unwrap();
        assert!(build_superoperator(&p).matrix().is_identity(1e-14));
        assert_eq!(steady_state(&p).unwrap_err(), Error::DegenerateSteadyState(4));
    }

    #[test]
    fn depolarising_only_spectrum() {
        let p = protocol(2, 1.0, 0.3, ControllerSpec::Noisy, InLoopStage::identity(2));
        let spec = build_superoperator(&p).spectrum().unwrap();
        let expected = [1.0, 0.3, 0.3, 0.3];
        for (z, e) in spec.iter().zip(expected) {
            assert!((z - C64::new(e, 0.0)).norm() < 1e-10, "{spec:?}");
        }
    }

    #[test]
    fn noisy_controller_coherent_feedback_steady_state_is_maximally_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let lambda = rng.random::<f64>() * 0.99;
            let p = protocol(
                2,
                rng.random(),
                lambda,
                ControllerSpec::Noisy,
                InLoopStage::coherent(random_unitary(2, &mut rng)).unwrap(),
            );
            let ss = steady_state(&p).unwrap();
            assert!(ss.gap > 0.0);
            assert!(ss.state.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-9);
        }
    }

    #[test]
    fn measurement_feedback_noisy_steady_state() {
        let p = protocol(2, 0.5, 0.5, ControllerSpec::Noisy, InLoopStage::reset_to(2, 0).unwrap());
        let ss = steady_state(&p).unwrap();
        assert!((ss.state.population(0) - 11.0 / 14.0).abs() < 1e-10);
        assert!(ss.state.matrix()[(0, 1)].norm() < 1e-12);
        let again = cycle_unconditional(&ss.state, &p).unwrap();
        assert!(again.matrix().max_abs_diff(ss.state.matrix()) < 1e-9);
        let (fp, _) = iterate_to_fixed_point(&p, &DensityMatrix::maximally_mixed(2), 1e-14, 10_000).unwrap();
        assert!(fp.matrix().max_abs_diff(ss.state.matrix()) < 1e-10);
    }

    #[test]
    fn clean_controller_coherent_feedback_stabilises_pure_state() {
        for lambda in [0.0, 0.3, 0.9] {
            let p = protocol(2, 0.5, lambda, ControllerSpec::Clean, InLoopStage::identity(2));
            let ss = steady_state(&p).unwrap();
            assert!((ss.state.purity() - 1.0).abs() < 1e-9);
            assert!(ss.gap > 1e-6);
        }
    }

    #[test]
    fn rotation_without_noise_or_coupling_is_degenerate() {
        let p = protocol(2, 1.0, 1.0, ControllerSpec::Noisy, InLoopStage::coherent(pauli_x()).unwrap());
        assert!(matches!(steady_state(&p), Err(Error::DegenerateSteadyState(_))));
    }
}
