//! Per-scenario metrics shared by `steady` and `sweep`.

use std::f64::consts::FRAC_PI_2;

use qfeedback::metrics::DEFAULT_NODES;
use qfeedback::{
    haar_avg_bitflip_fidelity, linear_entropy, oracles, scenarios, steady_state, von_neumann_entropy, FeedbackProtocol,
    InLoopStage, SteadyState, C64,
};

use crate::config::{EtaConfig, EtaPreset, Resolved, Scenario, StageConfig, UnitaryConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Steady,
    Fidelity,
    CompareCooling,
    CompareAd,
}

fn kind(s: Scenario) -> Kind {
    match s {
        Scenario::BitflipCf | Scenario::BitflipMf | Scenario::BitflipPovm => Kind::Fidelity,
        Scenario::CompareCooling => Kind::CompareCooling,
        Scenario::CompareAd => Kind::CompareAd,
        _ => Kind::Steady,
    }
}

fn symmetric_tau(r: &Resolved) -> Result<f64, CliError> {
    r.tau().ok_or_else(|| CliError::Config(format!("scenario {} needs tau1 = tau2", r.scenario.name())))
}

fn unitary_of(stage: &Option<StageConfig>) -> Option<&UnitaryConfig> {
    match stage {
        Some(StageConfig::Coherent { unitary }) => Some(unitary),
        _ => None,
    }
}

/// The single loop a scenario describes. Comparison scenarios have none.
pub fn protocol(r: &Resolved) -> Result<FeedbackProtocol, CliError> {
    let d = r.d;
    let eta = r.eta_spec().state(d)?;
    let p = match r.scenario {
        Scenario::MfNoisyCooling | Scenario::MfClean | Scenario::MfEta => {
            let target = if r.eta0() >= 0.5 { 0 } else { 1 };
            FeedbackProtocol::new(r.noise_channel()?, r.tau1, r.tau2, eta, InLoopStage::reset_to(d, target)?)?
        }
        Scenario::CfNoisy | Scenario::CfClean | Scenario::CfEta | Scenario::Custom => {
            let stage = r.stage.clone().unwrap_or(StageConfig::Coherent { unitary: UnitaryConfig::Identity });
            FeedbackProtocol::new(r.noise_channel()?, r.tau1, r.tau2, eta, stage.build(d)?)?
        }
        Scenario::CfRotation => {
            scenarios::cf_clean_rotation_dephased(symmetric_tau(r)?, r.lambda, r.chi, r.phi1, r.phi2)?
        }
        Scenario::AdCf => scenarios::ad_cf(symmetric_tau(r)?, r.gamma, r.chi)?,
        Scenario::AdMf => scenarios::ad_mf(symmetric_tau(r)?, r.gamma)?,
        Scenario::BitflipCf => scenarios::bitflip_cf(symmetric_tau(r)?, &r.eta_spec())?,
        Scenario::BitflipMf => scenarios::bitflip_mf(symmetric_tau(r)?, &r.eta_spec())?,
        Scenario::BitflipPovm => scenarios::bitflip_povm(symmetric_tau(r)?, r.a, r.b, &r.eta_spec())?,
        Scenario::CompareCooling | Scenario::CompareAd => {
            return Err(CliError::Config(format!("scenario {} compares several loops", r.scenario.name())))
        }
    };
    Ok(p)
}

/// Column names produced by [`evaluate`] for this configuration.
pub fn metric_names(r: &Resolved) -> Vec<String> {
    let fixed = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
    match kind(r.scenario) {
        Kind::Steady => (0..r.d)
            .map(|k| format!("population_{k}"))
            .chain((0..r.d).map(|k| format!("eigenvalue_{k}")))
            .chain(["entropy_normalised", "linear_entropy", "purity", "gap", "oracle_deviation"].map(String::from))
            .collect(),
        Kind::Fidelity => fixed(&["fidelity", "oracle_fidelity", "oracle_deviation"]),
        Kind::CompareCooling => {
            fixed(&["s_mf", "s_cf", "s_mf_minus_s_cf", "oracle_s_mf", "oracle_s_cf", "oracle_deviation"])
        }
        Kind::CompareAd => fixed(&[
            "rho11_chi0",
            "rho11_chipi2",
            "rho11_mf",
            "cf_beats_mf",
            "oracle_rho11_chi0",
            "oracle_rho11_chipi2",
            "oracle_rho11_mf",
            "oracle_crossover_tau",
            "oracle_deviation",
        ]),
    }
}

/// Metric values aligned with [`metric_names`]; unavailable oracle values are NaN.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub values: Vec<f64>,
    /// Steady state and spectrum of the single loop, when there is one.
    pub steady: Option<SteadyState>,
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn is_identity_loop(r: &Resolved) -> bool {
    matches!(unitary_of(&r.stage), Some(UnitaryConfig::Identity))
}

/// Closed-form steady spectrum (descending) or scalar for the scenario, when one applies.
fn steady_oracle(r: &Resolved, ss: &SteadyState) -> Option<f64> {
    let tau = r.tau()?;
    let state = &ss.state;
    let spectrum = state.eigenvalues();
    let dev = |expected: qfeedback::Result<Vec<f64>>| expected.ok().map(|e| max_dev(&spectrum, &descending(e)));
    match r.scenario {
        Scenario::MfNoisyCooling => dev(oracles::mf_noisy_steady(r.d, tau, r.lambda)),
        Scenario::CfNoisy if r.lambda < 1.0 => Some(max_dev(&spectrum, &vec![1.0 / r.d as f64; r.d])),
        Scenario::CfClean if is_identity_loop(r) => dev(oracles::cf_clean_steady(r.d, tau, r.lambda)),
        Scenario::MfClean if r.d == 2 => {
            oracles::clean_qubit_entropies(tau, r.lambda).ok().map(|o| (linear_entropy(state) - o.mf).abs())
        }
        Scenario::MfEta => {
            oracles::eta_entropies(tau, r.lambda, r.eta0()).ok().map(|o| (linear_entropy(state) - o.mf).abs())
        }
        Scenario::CfEta => {
            oracles::eta_entropies(tau, r.lambda, r.eta0()).ok().map(|o| (linear_entropy(state) - o.cf).abs())
        }
        Scenario::CfRotation => {
            oracles::cf_clean_general_qubit(tau, r.lambda, r.chi, r.phi1).ok().map(|o| (state.population(0) - o).abs())
        }
        Scenario::AdCf | Scenario::AdMf => {
            let o = oracles::ad_occupations(tau, r.gamma).ok()?;
            let expected = match r.scenario {
                Scenario::AdMf => o.rho11_mf,
                _ if r.chi == 0.0 => o.rho11_chi0,
                _ if r.chi == FRAC_PI_2 => o.rho11_chipi2,
                _ => return None,
            };
            Some((state.population(1) - expected).abs())
        }
        _ => None,
    }
}

fn fidelity_oracle(r: &Resolved) -> Option<f64> {
    if r.eta.map(|e| e.preset) != Some(EtaPreset::Noisy) {
        return None;
    }
    let tau = r.tau()?;
    match r.scenario {
        Scenario::BitflipCf => Some(1.0 - 2.0 * tau / 3.0),
        Scenario::BitflipMf => Some(2.0 / 3.0 - tau / 3.0),
        Scenario::BitflipPovm => oracles::bitflip_fidelity(tau, r.a, r.b).ok(),
        _ => None,
    }
}

fn with_scenario(r: &Resolved, scenario: Scenario, preset: EtaPreset) -> Resolved {
    Resolved { scenario, eta: Some(EtaConfig { preset }), ..r.clone() }
}

pub fn evaluate(r: &Resolved) -> Result<Evaluation, CliError> {
    let nan = f64::NAN;
    match kind(r.scenario) {
        Kind::Steady => {
            let ss = steady_state(&protocol(r)?)?;
            let oracle = steady_oracle(r, &ss).unwrap_or(nan);
            let state = &ss.state;
            let mut values: Vec<f64> = (0..r.d).map(|k| state.population(k)).collect();
            values.extend(state.eigenvalues());
            values.extend([von_neumann_entropy(state, true), linear_entropy(state), state.purity(), ss.gap, oracle]);
            Ok(Evaluation { values, steady: Some(ss) })
        }
        Kind::Fidelity => {
            let f = haar_avg_bitflip_fidelity(&protocol(r)?, DEFAULT_NODES)?;
            let o = fidelity_oracle(r).unwrap_or(nan);
            Ok(Evaluation { values: vec![f, o, (f - o).abs()], steady: None })
        }
        Kind::CompareCooling => {
            let preset = r.eta.map_or(EtaPreset::Clean, |e| e.preset);
            let (mf_scn, cf_scn) = match preset {
                EtaPreset::Eta0(_) => (Scenario::MfEta, Scenario::CfEta),
                EtaPreset::Clean => (Scenario::MfClean, Scenario::CfClean),
                EtaPreset::Noisy => (Scenario::MfNoisyCooling, Scenario::CfNoisy),
            };
            let mut cf = with_scenario(r, cf_scn, preset);
            cf.stage = Some(StageConfig::Coherent { unitary: UnitaryConfig::Identity });
            let mf = with_scenario(r, mf_scn, preset);
            let s_mf = linear_entropy(&steady_state(&protocol(&mf)?)?.state);
            let s_cf = linear_entropy(&steady_state(&protocol(&cf)?)?.state);
            let oracle = r.tau().and_then(|tau| match preset {
                EtaPreset::Clean => oracles::clean_qubit_entropies(tau, r.lambda).ok(),
                EtaPreset::Eta0(x) => oracles::eta_entropies(tau, r.lambda, x).ok(),
                EtaPreset::Noisy => None,
            });
            let (o_mf, o_cf) = oracle.map_or((nan, nan), |o| (o.mf, o.cf));
            let dev = if oracle.is_some() { max_dev(&[s_mf, s_cf], &[o_mf, o_cf]) } else { nan };
            Ok(Evaluation { values: vec![s_mf, s_cf, s_mf - s_cf, o_mf, o_cf, dev], steady: None })
        }
        Kind::CompareAd => {
            let tau = symmetric_tau(r)?;
            let sim = [
                steady_state(&scenarios::ad_cf(tau, r.gamma, 0.0)?)?.state.population(1),
                steady_state(&scenarios::ad_cf(tau, r.gamma, FRAC_PI_2)?)?.state.population(1),
                steady_state(&scenarios::ad_mf(tau, r.gamma)?)?.state.population(1),
            ];
            let beats = if sim[0].max(sim[1]) > sim[2] { 1.0 } else { 0.0 };
            let mut values = sim.to_vec();
            values.push(beats);
            match oracles::ad_occupations(tau, r.gamma) {
                Ok(o) => {
                    let ora = [o.rho11_chi0, o.rho11_chipi2, o.rho11_mf];
                    values.extend(ora);
                    values.extend([o.cf_crossover_tau, max_dev(&sim, &ora)]);
                }
                Err(_) => values.extend([nan; 5]),
            }
            Ok(Evaluation { values, steady: None })
        }
    }
}

/// Superoperator spectrum, largest magnitude first.
pub fn sorted_spectrum(spectrum: &[C64]) -> Vec<C64> {
    let mut s = spectrum.to_vec();
    s.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn resolved(scenario: Scenario) -> Resolved {
        Config { scenario: Some(scenario), ..Config::default() }.resolve().unwrap()
    }

    const ALL: [Scenario; 15] = [
        Scenario::MfNoisyCooling,
        Scenario::MfClean,
        Scenario::MfEta,
        Scenario::CfNoisy,
        Scenario::CfClean,
        Scenario::CfEta,
        Scenario::CfRotation,
        Scenario::AdCf,
        Scenario::AdMf,
        Scenario::BitflipCf,
        Scenario::BitflipMf,
        Scenario::BitflipPovm,
        Scenario::CompareCooling,
        Scenario::CompareAd,
        Scenario::Custom,
    ];

    #[test]
    fn values_align_with_names() {
        for s in ALL {
            let r = resolved(s);
            let e = evaluate(&r).unwrap_or_else(|err| panic!("{s:?}: {err}"));
            assert_eq!(e.values.len(), metric_names(&r).len(), "{s:?}");
        }
    }

    #[test]
    fn default_points_match_their_oracles() {
        for s in ALL {
            let r = resolved(s);
            let names = metric_names(&r);
            let e = evaluate(&r).unwrap();
            let dev = e.values[names.iter().position(|n| n == "oracle_deviation").unwrap()];
            if s == Scenario::Custom {
                continue;
            }
            assert!(dev < 1e-9, "{s:?}: {dev}");
        }
    }

    #[test]
    fn mf_noisy_spot_value() {
        let e = evaluate(&resolved(Scenario::MfNoisyCooling)).unwrap();
        assert!((e.values[2] - 11.0 / 14.0).abs() < 1e-9);
        assert!((e.values[3] - 3.0 / 14.0).abs() < 1e-9);
    }

    #[test]
    fn comparison_scenarios_have_no_single_loop() {
        assert!(protocol(&resolved(Scenario::CompareAd)).is_err());
    }
}
