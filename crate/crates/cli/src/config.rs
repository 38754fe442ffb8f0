use std::fs;
use std::path::Path;

use clap::ValueEnum;
use num_complex::Complex64;
use qfeedback::quantum::{pauli_x, shift_operator, su2};
use qfeedback::{CMatrix, ControllerSpec, InLoopStage, KrausChannel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Named setups. Each fixes the noise, controller and loop unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Depolarising noise, maximally mixed controller, measure and reset.
    MfNoisyCooling,
    /// Depolarising noise, pure controller, measure and reset.
    MfClean,
    /// Qubit controller diag(eta0, 1-eta0), measure and reset.
    MfEta,
    /// Maximally mixed controller, coherent loop (`stage`, default shift).
    CfNoisy,
    /// Pure controller, coherent loop (`stage`, default identity).
    CfClean,
    /// Qubit controller diag(eta0, 1-eta0), coherent identity loop.
    CfEta,
    /// Dephased qubit, pure controller, in-loop su2(chi, phi1, phi2).
    CfRotation,
    /// Amplitude damping, coherent y-rotation by chi.
    AdCf,
    /// Amplitude damping, measure and send both outcomes to |1>.
    AdMf,
    /// Noiseless qubit, coherent sigma-x.
    BitflipCf,
    /// Noiseless qubit, measurement followed by sigma-x.
    BitflipMf,
    /// Noiseless qubit, two-outcome measurement with strengths a and b.
    BitflipPovm,
    /// Linear entropies of the pure- or eta0-controller MF and CF loops side by side.
    CompareCooling,
    /// Amplitude-damping occupations of CF (chi = 0, pi/2) and MF side by side.
    CompareAd,
    /// Free-form: `noise`, `eta` and `stage` from the config.
    Custom,
}

impl Scenario {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaPreset {
    Noisy,
    Clean,
    Eta0(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    pub preset: EtaPreset,
}

impl EtaConfig {
    pub fn spec(self) -> ControllerSpec {
        match self.preset {
            EtaPreset::Noisy => ControllerSpec::Noisy,
            EtaPreset::Clean => ControllerSpec::Clean,
            EtaPreset::Eta0(x) => ControllerSpec::Eta0(x),
        }
    }

    fn fixed(preset: EtaPreset) -> Option<Self> {
        Some(Self { preset })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryConfig {
    Identity,
    /// Cyclic shift `|k> -> |k+1 mod d>`.
    Shift,
    SigmaX,
    Su2 {
        chi: f64,
        phi1: f64,
        phi2: f64,
    },
    /// Row-major entries as `[re, im]` pairs.
    Matrix(Vec<Vec<[f64; 2]>>),
}

impl UnitaryConfig {
    fn build(&self, d: usize) -> Result<CMatrix, CliError> {
        let qubit_only = |name: &str| CliError::Config(format!("unitary `{name}` needs d = 2, got {d}"));
        Ok(match self {
            Self::Identity => CMatrix::identity(d),
            Self::Shift => shift_operator(d, 1),
            Self::SigmaX if d == 2 => pauli_x(),
            Self::SigmaX => return Err(qubit_only("sigma-x")),
            Self::Su2 { chi, phi1, phi2 } if d == 2 => su2(*chi, *phi1, *phi2),
            Self::Su2 { .. } => return Err(qubit_only("su2")),
            Self::Matrix(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(CliError::Config(format!("unitary matrix must be {d}x{d}")));
                }
                CMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]))
            }
        })
    }
}

/// In-loop controller operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StageConfig {
    Coherent {
        unitary: UnitaryConfig,
    },
    /// Computational-basis measurement, every outcome rotated onto `|target>`.
    Reset {
        target: usize,
    },
    /// Computational-basis measurement, outcome `j` followed by `unitaries[j]`.
    Projective {
        unitaries: Vec<UnitaryConfig>,
    },
}

impl StageConfig {
    pub fn build(&self, d: usize) -> Result<InLoopStage, CliError> {
        Ok(match self {
            Self::Coherent { unitary } => InLoopStage::coherent(unitary.build(d)?)?,
            Self::Reset { target } => InLoopStage::reset_to(d, *target)?,
            Self::Projective { unitaries } => {
                InLoopStage::projective(unitaries.iter().map(|u| u.build(d)).collect::<Result<_, _>>()?)?
            }
        })
    }

    pub fn is_measurement(&self) -> bool {
        !matches!(self, Self::Coherent { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Depolarizing,
    AmplitudeDamping,
    None,
}

/// Config file contents; every field may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Option<Scenario>,
    pub d: Option<usize>,
    pub tau: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<EtaConfig>,
    pub stage: Option<StageConfig>,
    pub noise: Option<NoiseKind>,
    pub chi: Option<f64>,
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub ntraj: Option<usize>,
}

impl Config {
    /// Reads a config file. A run sidecar is accepted too; its `config` field is used.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let err = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
        let text = fs::read_to_string(path).map_err(|e| err(&e))?;
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(&e))?;
        if value.get("tool").is_some() {
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
        }
        serde_json::from_value(value).map_err(|e| err(&e))
    }

    /// Fields set in `other` replace those in `self`. A `tau` override also
    /// replaces both `tau1` and `tau2`.
    pub fn overlay(mut self, other: Config) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        if other.tau.is_some() {
            self.tau1 = None;
            self.tau2 = None;
        }
        take!(
            scenario, d, tau, tau1, tau2, lambda, gamma, eta, stage, noise, chi, phi1, phi2, a, b, seed, steps, ntraj
        );
        self
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let scenario = self.scenario.ok_or_else(|| CliError::Config("no scenario given".into()))?;
        let qubit = !matches!(
            scenario,
            Scenario::MfNoisyCooling | Scenario::MfClean | Scenario::CfNoisy | Scenario::CfClean | Scenario::Custom
        );
        let d = match (self.d, qubit) {
            (Some(d), true) if d != 2 => {
                return Err(CliError::Config(format!("scenario {} is defined for d = 2 only", scenario.name())))
            }
            (Some(d), _) => d,
            (None, _) => 2,
        };
        if d < 2 {
            return Err(CliError::Config(format!("d must be at least 2, got {d}")));
        }
        let tau = self.tau.unwrap_or(0.5);
        let eta0 = match self.eta.map(|e| e.preset) {
            Some(EtaPreset::Eta0(x)) => x,
            _ => 0.8,
        };
        let eta = match scenario {
            Scenario::MfNoisyCooling | Scenario::CfNoisy | Scenario::AdCf | Scenario::AdMf => {
                EtaConfig::fixed(EtaPreset::Noisy)
            }
            Scenario::MfClean | Scenario::CfClean | Scenario::CfRotation => EtaConfig::fixed(EtaPreset::Clean),
            Scenario::MfEta | Scenario::CfEta => EtaConfig::fixed(EtaPreset::Eta0(eta0)),
            Scenario::CompareAd => None,
            Scenario::CompareCooling => Some(self.eta.unwrap_or(EtaConfig { preset: EtaPreset::Clean })),
            Scenario::BitflipCf | Scenario::BitflipMf | Scenario::BitflipPovm | Scenario::Custom => {
                Some(self.eta.unwrap_or(EtaConfig { preset: EtaPreset::Noisy }))
            }
        };
        if matches!(eta.map(|e| e.preset), Some(EtaPreset::Eta0(_))) && d != 2 {
            return Err(CliError::Config("eta0 preset needs d = 2".into()));
        }
        let default_stage = match scenario {
            Scenario::CfNoisy => Some(StageConfig::Coherent { unitary: UnitaryConfig::Shift }),
            Scenario::CfClean | Scenario::Custom => Some(StageConfig::Coherent { unitary: UnitaryConfig::Identity }),
            _ => None,
        };
        let stage = default_stage.map(|default| self.stage.unwrap_or(default));
        if matches!(scenario, Scenario::CfNoisy | Scenario::CfClean)
            && stage.as_ref().is_some_and(StageConfig::is_measurement)
        {
            return Err(CliError::Config(format!("scenario {} needs a coherent stage", scenario.name())));
        }
        let noise = match scenario {
            Scenario::AdCf | Scenario::AdMf | Scenario::CompareAd => NoiseKind::AmplitudeDamping,
            Scenario::BitflipCf | Scenario::BitflipMf | Scenario::BitflipPovm => NoiseKind::None,
            Scenario::Custom => self.noise.unwrap_or(NoiseKind::Depolarizing),
            _ => NoiseKind::Depolarizing,
        };
        Ok(Resolved {
            scenario,
            d,
            tau1: self.tau1.unwrap_or(tau),
            tau2: self.tau2.unwrap_or(tau),
            lambda: self.lambda.unwrap_or(0.5),
            gamma: self.gamma.unwrap_or(0.5),
            eta,
            stage,
            noise,
            chi: self.chi.unwrap_or(0.0),
            phi1: self.phi1.unwrap_or(0.0),
            phi2: self.phi2.unwrap_or(0.0),
            a: self.a.unwrap_or(1.0),
            b: self.b.unwrap_or(1.0),
            seed: self.seed.unwrap_or(1),
            steps: self.steps.unwrap_or(50),
            ntraj: self.ntraj.unwrap_or(1000),
        })
    }
}

/// Fully specified run parameters. Serialises to a valid [`Config`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub scenario: Scenario,
    pub d: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub lambda: f64,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<StageConfig>,
    pub noise: NoiseKind,
    pub chi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub steps: usize,
    pub ntraj: usize,
}

impl Resolved {
    /// Symmetric coupling strength, if both couplings agree.
    pub fn tau(&self) -> Option<f64> {
        (self.tau1 == self.tau2).then_some(self.tau1)
    }

    pub fn eta_spec(&self) -> ControllerSpec {
        self.eta.map_or(ControllerSpec::Noisy, EtaConfig::spec)
    }

    pub fn eta0(&self) -> f64 {
        match self.eta.map(|e| e.preset) {
            Some(EtaPreset::Eta0(x)) => x,
            Some(EtaPreset::Noisy) => 0.5,
            _ => 1.0,
        }
    }

    pub fn noise_channel(&self) -> Result<KrausChannel, CliError> {
        Ok(match self.noise {
            NoiseKind::Depolarizing => KrausChannel::depolarizing(self.d, self.lambda)?,
            NoiseKind::AmplitudeDamping if self.d == 2 => KrausChannel::amplitude_damping(self.gamma)?,
            NoiseKind::AmplitudeDamping => return Err(CliError::Config("amplitude damping needs d = 2".into())),
            NoiseKind::None => KrausChannel::identity(self.d),
        })
    }

    /// Sets a swept parameter by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        match name {
            "tau" => {
                self.tau1 = value;
                self.tau2 = value;
            }
            "tau1" => self.tau1 = value,
            "tau2" => self.tau2 = value,
            "lambda" => self.lambda = value,
            "gamma" => self.gamma = value,
            "eta0" => {
                if self.d != 2 {
                    return Err(CliError::Config("eta0 needs d = 2".into()));
                }
                self.eta = Some(EtaConfig { preset: EtaPreset::Eta0(value) });
            }
            "chi" => self.chi = value,
            "phi1" => self.phi1 = value,
            "phi2" => self.phi2 = value,
            "a" => self.a = value,
            "b" => self.b = value,
            _ => return Err(CliError::Config(format!("unknown sweep parameter `{name}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Config {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn eta_presets_parse() {
        let c = parse(r#"{"eta": {"preset": "noisy"}}"#);
        assert_eq!(c.eta.unwrap().preset, EtaPreset::Noisy);
        let c = parse(r#"{"eta": {"preset": {"eta0": 0.8}}}"#);
        assert_eq!(c.eta.unwrap().preset, EtaPreset::Eta0(0.8));
        assert!(serde_json::from_str::<Config>(r#"{"eta": {"preset": "warm"}}"#).is_err());
    }

    #[test]
    fn stages_parse() {
        let c = parse(r#"{"stage": {"kind": "coherent", "unitary": {"su2": {"chi": 1.0, "phi1": 0.0, "phi2": 0.5}}}}"#);
        assert!(matches!(c.stage, Some(StageConfig::Coherent { unitary: UnitaryConfig::Su2 { .. } })));
        let c = parse(r#"{"stage": {"kind": "projective", "unitaries": ["sigma-x", "identity"]}}"#);
        assert!(c.stage.unwrap().build(2).is_ok());
        let c = parse(r#"{"stage": {"kind": "reset", "target": 1}}"#);
        assert_eq!(c.stage.unwrap().build(3).unwrap().outcomes(), 3);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"tua": 0.5}"#).is_err());
    }

    #[test]
    fn overlay_precedence() {
        let file = parse(r#"{"scenario": "mf-noisy-cooling", "tau1": 0.2, "tau2": 0.3, "lambda": 0.1}"#);
        let flags = Config { tau: Some(0.7), ..Config::default() };
        let r = file.clone().overlay(flags).resolve().unwrap();
        assert_eq!((r.tau1, r.tau2, r.lambda), (0.7, 0.7, 0.1));
        let r = file.resolve().unwrap();
        assert_eq!((r.tau1, r.tau2, r.seed), (0.2, 0.3, 1));
    }

    #[test]
    fn resolve_rejects_bad_dimensions() {
        let c = Config { scenario: Some(Scenario::AdCf), d: Some(3), ..Config::default() };
        assert!(matches!(c.resolve(), Err(CliError::Config(_))));
        let c = Config { scenario: Some(Scenario::MfNoisyCooling), d: Some(1), ..Config::default() };
        assert!(matches!(c.resolve(), Err(CliError::Config(_))));
        assert!(matches!(Config::default().resolve(), Err(CliError::Config(_))));
    }

    #[test]
    fn resolved_round_trips_as_config() {
        let r = Config { scenario: Some(Scenario::CompareCooling), ..Config::default() }.resolve().unwrap();
        let back: Config = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.resolve().unwrap(), r);
    }

    #[test]
    fn scenario_names_are_kebab_case() {
        assert_eq!(Scenario::MfNoisyCooling.name(), "mf-noisy-cooling");
        assert_eq!(serde_json::to_string(&Scenario::BitflipPovm).unwrap(), "\"bitflip-povm\"");
    }
}
