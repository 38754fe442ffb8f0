use qfeedback::linops::{kron, partial_trace, Keep};
use qfeedback::quantum::{pauli_x, shift_operator, tensor};
use qfeedback::{
    amplitude_damp, apply_channel, build_superoperator, cycle_unconditional, depolarize, effective_hamiltonian,
    iterate_to_fixed_point, lie_closure_dim, oracles, partial_swap, purity, sample_ensemble, scenarios, steady_state,
    von_neumann_entropy, CMatrix, ControllerSpec, DensityMatrix, Error, FeedbackProtocol, InLoopStage, KrausChannel,
    C64,
};

#[test]
fn channels_compose_with_the_loop() {
    let rho = DensityMatrix::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
    let dep = depolarize(&rho, 0.3).unwrap();
    let via_channel = apply_channel(&rho, &KrausChannel::depolarizing(2, 0.3).unwrap()).unwrap();
    assert!(dep.matrix().max_abs_diff(via_channel.matrix()) < 1e-14);
    let ad = amplitude_damp(&rho, 1.0).unwrap();
    assert!((ad.population(0) - 1.0).abs() < 1e-14);
}

#[test]
fn loop_equals_explicit_joint_evolution() {
    // U2 (I ⊗ V) U1 on system ⊗ controller, then trace out the controller.
    let (d, tau) = (3, 0.35);
    let v = shift_operator(d, 2);
    let eta = DensityMatrix::diagonal(&[0.5, 0.3, 0.2]).unwrap();
    let p = FeedbackProtocol::symmetric(
        KrausChannel::identity(d),
        tau,
        eta.clone(),
        InLoopStage::coherent(v.clone()).unwrap(),
    )
    .unwrap();
    let rho = DensityMatrix::diagonal(&[0.1, 0.6, 0.3]).unwrap();
    let u = partial_swap(d, tau).unwrap();
    let w = &(&u * &kron(&CMatrix::identity(d), &v)) * &u;
    let joint = tensor(&rho, &eta).conjugate_by(&w);
    let expected = partial_trace(&joint, d, d, Keep::A).unwrap();
    let got = cycle_unconditional(&rho, &p).unwrap();
    assert!(got.matrix().max_abs_diff(&expected) < 1e-13);
}

#[test]
fn steady_state_agrees_with_iteration_and_oracle() {
    for d in [2, 3, 4] {
        let p = scenarios::mf_cooling(d, 0.3, 0.6, &ControllerSpec::Noisy, 0).unwrap();
        let ss = steady_state(&p).unwrap();
        let (iter, _) = iterate_to_fixed_point(&p, &DensityMatrix::maximally_mixed(d), 1e-14, 10_000).unwrap();
        assert!(ss.state.matrix().max_abs_diff(iter.matrix()) < 1e-10);
        let mut oracle = oracles::mf_noisy_steady(d, 0.3, 0.6).unwrap();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ss.state.eigenvalues().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(build_superoperator(&p).trace_defect() < 1e-12);
    }
}

#[test]
fn coherent_loop_with_pure_controller_stabilises_a_pure_state() {
    let p = scenarios::cf_cooling(2, 0.5, 0.4, &ControllerSpec::Clean, CMatrix::identity(2)).unwrap();
    assert!((purity(&steady_state(&p).unwrap().state) - 1.0).abs() < 1e-9);
}

#[test]
fn ensembles_are_reproducible() {
    let p = scenarios::mf_eta(0.4, 0.7, 0.2).unwrap();
    let rho0 = DensityMatrix::maximally_mixed(2);
    let a = sample_ensemble(&rho0, &p, 15, 32, 99).unwrap();
    let b = sample_ensemble(&rho0, &p, 15, 32, 99).unwrap();
    assert_eq!(a, b);
    let c = sample_ensemble(&rho0, &p, 15, 32, 100).unwrap();
    assert_ne!(a, c);
    assert!(a.iter().flatten().all(|r| (0.0..=1.0 + 1e-12).contains(&von_neumann_entropy(&r.state, true))));
}

#[test]
fn weak_limit_generators() {
    let eta = DensityMatrix::maximally_mixed(2);
    let h = effective_hamiltonian(&eta, &InLoopStage::coherent(pauli_x()).unwrap()).unwrap();
    assert_eq!(lie_closure_dim(&[h.into_matrix()]).unwrap(), 1);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(partial_swap(2, 1.5), Err(Error::ParameterOutOfRange { .. })));
    assert!(matches!(DensityMatrix::diagonal(&[0.7, 0.7]), Err(Error::InvalidTrace(_))));
    let identity = FeedbackProtocol::symmetric(
        KrausChannel::identity(2),
        1.0,
        DensityMatrix::maximally_mixed(2),
        InLoopStage::identity(2),
    )
    .unwrap();
    assert!(matches!(steady_state(&identity), Err(Error::DegenerateSteadyState(_))));
}
