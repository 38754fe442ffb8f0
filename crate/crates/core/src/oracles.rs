//! Closed-form steady states and figures of merit.
//!
//! Everything here is plain arithmetic on the parameters, with no linear
//! algebra, so that these values can serve as independent references for the
//! simulator.

use crate::error::{check_unit_interval, Error, Result};

const SINGULAR_TOL: f64 = 1e-14;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: d });
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den.abs() < SINGULAR_TOL {
        return Err(Error::SingularFormula);
    }
    Ok(num / den)
}

/// Steady spectrum of measurement feedback with a maximally mixed controller,
/// feeding every outcome back onto one fixed basis state. Descending.
pub fn mf_noisy_steady(d: usize, tau: f64, lambda: f64) -> Result<Vec<f64>> {
    check_dim(d)?;
    check_unit_interval("tau", tau)?;
    check_unit_interval("lambda", lambda)?;
    let df = d as f64;
    if tau == 1.0 {
        return Ok(vec![1.0 / df; d]);
    }
    let den = df * (1.0 - lambda * tau * tau);
    let a0 = ratio(df * (1.0 - tau) + tau - lambda * tau * tau, den)?;
    let aj = ratio(tau - lambda * tau * tau, den)?;
    let mut out = vec![aj; d];
    out[0] = a0;
    Ok(out)
}

/// Steady spectrum of coherent feedback with a pure controller and the
/// identity in the loop. Descending.
pub fn cf_clean_steady(d: usize, tau: f64, lambda: f64) -> Result<Vec<f64>> {
    check_dim(d)?;
    check_unit_interval("tau", tau)?;
    check_unit_interval("lambda", lambda)?;
    let df = d as f64;
    let k = (1.0 - 2.0 * tau).powi(2);
    let den = df * (k * lambda - 1.0);
    let b0 = ratio(4.0 * (tau - 1.0) * tau * (df + lambda - 1.0) + lambda - 1.0, den)?;
    let bj = ratio(k * (lambda - 1.0), den)?;
    let mut out = vec![bj; d];
    out[0] = b0;
    Ok(out)
}

/// Steady-state linear entropies of a qubit for the two feedback schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPair {
    pub mf: f64,
    pub cf: f64,
}

/// Pure controller: measurement feedback onto `|0>` versus the identity
/// coherent loop.
pub fn clean_qubit_entropies(tau: f64, lambda: f64) -> Result<EntropyPair> {
    check_unit_interval("tau", tau)?;
    check_unit_interval("lambda", lambda)?;
    let mf = 0.5 - ratio((tau * tau - 1.0).powi(2), 2.0 * (tau * tau * lambda - 1.0).powi(2))?;
    let cf = 0.5 - ratio(8.0 * tau * tau * (tau - 1.0).powi(2), ((1.0 - 2.0 * tau).powi(2) * lambda - 1.0).powi(2))?;
    Ok(EntropyPair { mf, cf })
}

/// Qubit controller `diag(η0, 1-η0)`. The measurement scheme feeds every
/// outcome back onto the controller's dominant eigenvector.
pub fn eta_entropies(tau: f64, lambda: f64, eta0: f64) -> Result<EntropyPair> {
    check_unit_interval("tau", tau)?;
    check_unit_interval("lambda", lambda)?;
    check_unit_interval("eta0", eta0)?;
    let e = eta0.max(1.0 - eta0);
    let mf = 0.5
        - ratio((tau - 1.0).powi(2) * (tau * (2.0 * e - 1.0) + 1.0).powi(2), 2.0 * (tau * tau * lambda - 1.0).powi(2))?;
    let cf = 0.5
        - ratio(
            8.0 * tau * tau * (tau - 1.0).powi(2) * (1.0 - 2.0 * eta0).powi(2),
            ((1.0 - 2.0 * tau).powi(2) * lambda - 1.0).powi(2),
        )?;
    Ok(EntropyPair { mf, cf })
}

/// `|0>` population for coherent feedback with a pure controller and the
/// in-loop rotation `su2(χ, φ1, ·)`, with coherences in the system discarded
/// every cycle. This equals the exact steady population whenever the exact
/// steady state is diagonal (`χ ∈ {0, π/2}` or `φ1 = π/2`).
pub fn cf_clean_general_qubit(tau: f64, lambda: f64, chi: f64, phi1: f64) -> Result<f64> {
    check_unit_interval("tau", tau)?;
    check_unit_interval("lambda", lambda)?;
    let p2 = chi.cos().powi(2);
    let q = (2.0 * phi1).cos();
    let l = lambda;
    let num = -2.0 * tau * tau * (l + 1.0) * p2 * (q + 1.0) + 2.0 * tau * (p2 * (l * (q + 2.0) + q + 1.0) - l) + l
        - 2.0 * l * p2
        + 1.0;
    let den = l * (4.0 * tau * (p2 * ((tau - 1.0) * q + tau - 2.0) + 1.0) + 4.0 * p2 - 2.0) - 2.0;
    ratio(-num, den)
}

/// Excited-state occupations under amplitude damping with a maximally mixed
/// controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdOccupations {
    /// Coherent feedback, identity in the loop.
    pub rho11_chi0: f64,
    /// Coherent feedback, `rotation_y(π/2)` in the loop.
    pub rho11_chipi2: f64,
    /// Measurement feedback onto `|1>`.
    pub rho11_mf: f64,
    /// Transmissivity above which the identity coherent loop beats measurement feedback.
    pub cf_crossover_tau: f64,
    pub cf_beats_mf: bool,
}

pub fn ad_occupations(tau: f64, gamma: f64) -> Result<AdOccupations> {
    check_unit_interval("tau", tau)?;
    check_unit_interval("gamma", gamma)?;
    let g = gamma;
    let rho11_chi0 = ratio(2.0 * tau * (1.0 - tau), 4.0 * (tau - 1.0) * (g - 1.0) * tau + g)?;
    let rho11_chipi2 = ratio(1.0 - tau, 2.0 * (g - 1.0) * tau - g + 2.0)?;
    let rho11_mf = ratio(2.0 - tau * tau - tau, 2.0 * (g - 1.0) * tau * tau + 2.0)?;
    Ok(AdOccupations {
        rho11_chi0,
        rho11_chipi2,
        rho11_mf,
        cf_crossover_tau: ad_crossover_tau(gamma)?,
        cf_beats_mf: rho11_chi0.max(rho11_chipi2) > rho11_mf,
    })
}

/// `(4 - 7γ + √(γ(17γ - 24) + 16)) / (4(2 - 2γ))`, continued to `2/3` at `γ = 1`.
pub fn ad_crossover_tau(gamma: f64) -> Result<f64> {
    check_unit_interval("gamma", gamma)?;
    if 1.0 - gamma < 1e-9 {
        return Ok(2.0 / 3.0);
    }
    let x = (-7.0 * gamma + (gamma * (17.0 * gamma - 24.0) + 16.0).sqrt() + 4.0) / (2.0 - 2.0 * gamma);
    Ok(x / 4.0)
}

/// Haar-averaged bit-flip fidelity of the two-outcome measurement
/// `K0 = σx diag(a, b)`, `K1 = σx diag(√(1-a²), √(1-b²))`.
pub fn bitflip_fidelity(tau: f64, a: f64, b: f64) -> Result<f64> {
    check_unit_interval("tau", tau)?;
    check_unit_interval("a", a)?;
    check_unit_interval("b", b)?;
    let ca = (1.0 - a * a).sqrt();
    let cb = (1.0 - b * b).sqrt();
    Ok((ca * cb * (1.0 - tau) + a * b * (1.0 - tau) + 2.0 - tau) / 3.0)
}

/// One conditional cooling step from a diagonal input whose dominant
/// eigenvalue `alpha_in` sits on the feedback target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalCooling {
    /// Probability of detecting the target state on the controller.
    pub p0: f64,
    /// Target population after that outcome.
    pub alpha00: f64,
    /// Target population after any other outcome (equal to `alpha00` when
    /// those outcomes are impossible).
    pub alpha01: f64,
}

pub fn conditional_cooling(d: usize, tau: f64, lambda: f64, alpha_in: f64) -> Result<ConditionalCooling> {
    check_dim(d)?;
    check_unit_interval("tau", tau)?;
    check_unit_interval("lambda", lambda)?;
    let df = d as f64;
    if !(1.0 / df - 1e-12..=1.0).contains(&alpha_in) {
        return Err(Error::ParameterOutOfRange { name: "alpha_in", value: alpha_in });
    }
    let (c2, s2) = (tau, 1.0 - tau);
    let al = lambda * alpha_in + (1.0 - lambda) / df;
    let p0 = c2 / df + s2 * al;
    let alpha00 = ratio(c2 * al, p0 * df)? + s2;
    let alpha01 =
        if 1.0 - p0 < SINGULAR_TOL { alpha00 } else { c2 / ((1.0 - p0) * df) * (c2 * df * al - al + s2) + s2 };
    Ok(ConditionalCooling { p0, alpha00, alpha01 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mf_noisy_examples() {
        for d in [2, 3, 5] {
            let s = mf_noisy_steady(d, 0.0, 0.4).unwrap();
            assert!(close(s[0], 1.0, 1e-15) && s[1..].iter().all(|&x| x.abs() < 1e-15));
            let s = mf_noisy_steady(d, 1.0, 0.4).unwrap();
            assert!(s.iter().all(|&x| close(x, 1.0 / d as f64, 1e-15)));
            let s = mf_noisy_steady(d, 0.37, 0.81).unwrap();
            assert!(close(s.iter().sum(), 1.0, 1e-12));
        }
        let s = mf_noisy_steady(2, 0.5, 0.5).unwrap();
        assert!(close(s[0], 0.7857142857, 1e-10) && close(s[1], 0.2142857143, 1e-10));
    }

    #[test]
    fn cf_clean_examples() {
        for d in [2, 3, 4] {
            let s = cf_clean_steady(d, 0.5, 0.3).unwrap();
            assert!(close(s[0], 1.0, 1e-15));
            for tau in [0.0, 1.0] {
                let s = cf_clean_steady(d, tau, 0.6).unwrap();
                assert!(s.iter().all(|&x| close(x, 1.0 / d as f64, 1e-15)));
            }
            assert!(close(cf_clean_steady(d, 0.2, 0.7).unwrap().iter().sum(), 1.0, 1e-12));
        }
        assert_eq!(cf_clean_steady(2, 1.0, 1.0), Err(Error::SingularFormula));
    }

    #[test]
    fn clean_entropy_examples() {
        for lambda in [0.0, 0.2, 0.7, 1.0] {
            let e = clean_qubit_entropies(1.0 / 3.0, lambda).unwrap();
            assert!(close(e.mf, e.cf, 1e-14));
            if lambda < 1.0 {
                assert!(clean_qubit_entropies(0.0, lambda).unwrap().mf.abs() < 1e-15);
            }
            assert!(clean_qubit_entropies(0.5, lambda).unwrap().cf.abs() < 1e-15);
        }
        let e = clean_qubit_entropies(0.2, 0.5).unwrap();
        assert!(e.mf < e.cf);
        let e = clean_qubit_entropies(0.6, 0.5).unwrap();
        assert!(e.mf > e.cf);
        assert_eq!(clean_qubit_entropies(0.0, 1.0), Err(Error::SingularFormula));
    }

    #[test]
    fn eta_entropy_examples() {
        for eta0 in (1..10).map(|k| k as f64 / 10.0) {
            let e = eta_entropies(0.25, 0.25, eta0).unwrap();
            assert!(e.mf < e.cf, "eta0={eta0}");
        }
        let e = eta_entropies(0.81, 0.5, 0.5).unwrap();
        assert!(e.mf < e.cf);
        assert!(close(e.cf, 0.5, 1e-15));
        let e = eta_entropies(0.81, 0.5, 0.2).unwrap();
        assert!(e.cf < e.mf);
        let clean = clean_qubit_entropies(0.3, 0.6).unwrap();
        let e = eta_entropies(0.3, 0.6, 1.0).unwrap();
        assert!(close(e.mf, clean.mf, 1e-15) && close(e.cf, clean.cf, 1e-15));
    }

    #[test]
    fn general_qubit_reduces_to_identity_loop() {
        for (tau, lambda) in [(0.3, 0.6), (0.8, 0.1), (0.5, 0.9)] {
            let e1 = cf_clean_general_qubit(tau, lambda, 0.0, 0.0).unwrap();
            assert!(close(e1, cf_clean_steady(2, tau, lambda).unwrap()[0], 1e-14));
            // φ1 is irrelevant at χ = π/2
            let a = cf_clean_general_qubit(tau, lambda, std::f64::consts::FRAC_PI_2, 0.1).unwrap();
            let b = cf_clean_general_qubit(tau, lambda, std::f64::consts::FRAC_PI_2, 1.3).unwrap();
            assert!(close(a, b, 1e-14));
        }
        assert!(close(cf_clean_general_qubit(0.5, 0.4, 0.0, 0.0).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn ad_examples() {
        assert!(close(ad_occupations(0.0, 0.4).unwrap().rho11_mf, 1.0, 1e-15));
        for g in [0.0, 0.3, 0.9, 1.0] {
            let o = ad_occupations(0.5, g).unwrap();
            assert!(close(o.rho11_chi0, 0.5, 1e-15) && close(o.rho11_chipi2, 0.5, 1e-15));
        }
        for i in 0..20 {
            for j in 0..20 {
                let tau = 0.49 * i as f64 / 19.0;
                let g = 0.01 + 0.98 * j as f64 / 19.0;
                let o = ad_occupations(tau, g).unwrap();
                assert!(o.rho11_mf > o.rho11_chipi2);
            }
        }
        assert!(close(ad_crossover_tau(1.0).unwrap(), ad_crossover_tau(1.0 - 1e-7).unwrap(), 1e-6));
    }

    #[test]
    fn bitflip_examples() {
        assert!(close(bitflip_fidelity(0.3, 0.5, 0.5).unwrap(), 0.8, 1e-15));
        assert!(close(bitflip_fidelity(0.3, 1.0, 0.0).unwrap(), 2.0 / 3.0 - 0.1, 1e-15));
        for tau in [0.0, 0.4, 1.0] {
            for a in [0.0, 0.3, 1.0] {
                assert!(close(bitflip_fidelity(tau, a, a).unwrap(), 1.0 - 2.0 * tau / 3.0, 1e-15));
            }
        }
    }

    #[test]
    fn conditional_cooling_limits() {
        let c = conditional_cooling(3, 1.0, 0.7, 0.6).unwrap();
        assert!(close(c.p0, 1.0 / 3.0, 1e-15));
        let al = 0.7 * 0.6 + 0.1;
        assert!(close(c.alpha00, al, 1e-15) && close(c.alpha01, al, 1e-15));
        let c = conditional_cooling(3, 0.0, 0.7, 0.6).unwrap();
        assert!(close(c.p0, al, 1e-15) && close(c.alpha00, 1.0, 1e-15) && close(c.alpha01, 1.0, 1e-15));
        assert!(conditional_cooling(2, 0.5, 0.5, 0.3).is_err());
    }
}
