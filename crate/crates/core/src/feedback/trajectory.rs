use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::FeedbackProtocol;
use crate::error::{Error, Result};
use crate::metrics::von_neumann_entropy;
use crate::quantum::DensityMatrix;

/// Branches with probability below this are never selected.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// State of the system after one conditional cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// 1-based cycle index.
    pub step: usize,
    pub outcome: usize,
    /// Probability of `outcome` given the previous state.
    pub probability: f64,
    pub state: DensityMatrix,
    /// Von Neumann entropy in base `d`.
    pub entropy: f64,
}

/// Derives an independent seed for trajectory `index` of an ensemble.
pub fn trajectory_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lazily sampled conditional evolution. Yields one record per cycle forever.
pub struct Trajectory<'a> {
    protocol: &'a FeedbackProtocol,
    state: DensityMatrix,
    rng: ChaCha8Rng,
    step: usize,
}

impl<'a> Trajectory<'a> {
    pub fn new(rho0: DensityMatrix, protocol: &'a FeedbackProtocol, seed: u64) -> Result<Self> {
        if rho0.dim() != protocol.dim() {
            return Err(Error::DimensionMismatch { expected: protocol.dim(), found: rho0.dim() });
        }
        Ok(Self { protocol, state: rho0, rng: ChaCha8Rng::seed_from_u64(seed), step: 0 })
    }

    fn advance(&mut self) -> Result<TrajectoryRecord> {
        let branches = self.protocol.branches(&self.state)?;
        let probs: Vec<f64> =
            branches.iter().map(|b| b.trace().re).map(|p| if p < PROBABILITY_FLOOR { 0.0 } else { p }).collect();
        let total: f64 = probs.iter().sum();
        let u = self.rng.random::<f64>() * total;
        let mut acc = 0.0;
        let outcome = probs
            .iter()
            .position(|&p| {
                acc += p;
                u < acc
            })
            .or_else(|| probs.iter().rposition(|&p| p > 0.0))
            .ok_or(Error::ZeroProbabilityBranch { outcome: 0, probability: 0.0 })?;
        let probability = probs[outcome] / total;
        let state = DensityMatrix::from_unnormalised(&branches[outcome])?;
        self.step += 1;
        self.state = state.clone();
        Ok(TrajectoryRecord {
            step: self.step,
            outcome,
            probability,
            entropy: von_neumann_entropy(&state, true),
            state,
        })
    }
}

impl Iterator for Trajectory<'_> {
    type Item = Result<TrajectoryRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.advance())
    }
}

/// `steps` conditional cycles starting from `rho0`.
pub fn sample_trajectory(
    rho0: &DensityMatrix,
    p: &FeedbackProtocol,
    steps: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    Trajectory::new(rho0.clone(), p, seed)?.take(steps).collect()
}

/// `ntraj` independent trajectories in parallel; trajectory `i` is seeded
/// with `trajectory_seed(seed, i)` so the result does not depend on scheduling.
pub fn sample_ensemble(
    rho0: &DensityMatrix,
    p: &FeedbackProtocol,
    steps: usize,
    ntraj: usize,
    seed: u64,
) -> Result<Vec<Vec<TrajectoryRecord>>> {
    (0..ntraj as u64).into_par_iter().map(|i| sample_trajectory(rho0, p, steps, trajectory_seed(seed, i))).collect()
}
