//! Collision-model simulator for coherent and measurement-based feedback loops.
//!
//! A system qudit is repeatedly hit by noise and then coupled twice, through
//! partial swaps, to a freshly prepared controller. Between the couplings the
//! controller is either rotated by a fixed unitary (coherent feedback) or
//! measured and rotated depending on the outcome (measurement-based feedback).
//!
//! ```
//! use qfeedback::{scenarios, steady_state, ControllerSpec};
//!
//! let p = scenarios::mf_cooling(2, 0.5, 0.5, &ControllerSpec::Noisy, 0).unwrap();
//! let ss = steady_state(&p).unwrap();
//! assert!((ss.state.population(0) - 11.0 / 14.0).abs() < 1e-10);
//! ```

pub mod error;
pub mod feedback;
pub mod linops;
pub mod metrics;
pub mod oracles;
pub mod quantum;
pub mod random;
pub mod scenarios;
pub mod validation;
pub mod weaklimit;

pub use error::{Error, Result};
pub use feedback::{
    build_superoperator, cycle_unconditional, iterate_to_fixed_point, sample_ensemble, sample_trajectory, steady_state,
    trajectory_seed, FeedbackProtocol, InLoopStage, SteadyState, Superoperator, Trajectory, TrajectoryRecord,
};
pub use linops::{CMatrix, C64};
pub use metrics::{fidelity_to_pure, haar_avg_bitflip_fidelity, linear_entropy, purity, von_neumann_entropy};
pub use quantum::{
    amplitude_damp, apply_channel, depolarize, partial_swap, ControllerSpec, DensityMatrix, KrausChannel,
};
pub use weaklimit::{effective_hamiltonian, first_order_defect, lie_closure_dim, EffectiveHamiltonian};
