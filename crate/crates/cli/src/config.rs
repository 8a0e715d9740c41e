//! Experiment configuration: one JSON document per run.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use asg_core::line_counting::MoranParams;
use asg_core::logistic::{BirthModifier, LogisticParams, OffspringDistribution};
use asg_core::ou::{InitialLaw, OUParams};

use crate::error::CliError;

pub const COMMANDS: [&str; 9] = [
    "simulate-b",
    "simulate-x",
    "simulate-ou",
    "simulate-asg",
    "stationary",
    "gen-gap",
    "duality",
    "drift-scan",
    "fluct-test",
];

/// A validated run description. `seed` is always present after loading.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    SimulateB(SimulateB),
    SimulateX(SimulateX),
    SimulateOu(SimulateOu),
    SimulateAsg(SimulateAsg),
    Stationary(Stationary),
    GenGap(GenGap),
    Duality(Duality),
    DriftScan(DriftScan),
    FluctTest(FluctTest),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateB(_) => "simulate-b",
            Command::SimulateX(_) => "simulate-x",
            Command::SimulateOu(_) => "simulate-ou",
            Command::SimulateAsg(_) => "simulate-asg",
            Command::Stationary(_) => "stationary",
            Command::GenGap(_) => "gen-gap",
            Command::Duality(_) => "duality",
            Command::DriftScan(_) => "drift-scan",
            Command::FluctTest(_) => "fluct-test",
        }
    }
}

fn one() -> u64 {
    1
}

fn three() -> f64 {
    3.0
}

fn unit() -> f64 {
    1.0
}

/// `coef * N^exponent * (ln N)^log_power`, or a plain number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scale {
    Fixed(f64),
    Power {
        #[serde(default = "unit")]
        coef: f64,
        #[serde(default)]
        exponent: f64,
        #[serde(default)]
        log_power: f64,
    },
}

impl Scale {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            Scale::Fixed(v) => v,
            Scale::Power {
                coef,
                exponent,
                log_power,
            } => {
                let nf = n as f64;
                let mut v = coef * nf.powf(exponent);
                if log_power != 0.0 {
                    v *= nf.ln().powf(log_power);
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateB {
    pub n: u64,
    pub gamma: f64,
    pub s: f64,
    pub init: u64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub replicates: u64,
    /// Observation times; if absent every jump is written.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

impl SimulateB {
    pub fn params(&self) -> Result<MoranParams, CliError> {
        Ok(MoranParams::new(self.n, self.gamma, self.s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Modifier {
    Constant { value: f64 },
    OneMinusFraction { n: u64 },
}

impl Default for Modifier {
    fn default() -> Self {
        Modifier::Constant { value: 1.0 }
    }
}

impl Modifier {
    fn build(self) -> BirthModifier {
        match self {
            Modifier::Constant { value } => BirthModifier::Constant(value),
            Modifier::OneMinusFraction { n } => BirthModifier::OneMinusFraction { n },
        }
    }
}

pub fn logistic_params(
    rho: f64,
    h: Modifier,
    d: f64,
    c: f64,
    pi: &[(u32, f64)],
) -> Result<LogisticParams, CliError> {
    let pi = OffspringDistribution::new(pi)?;
    Ok(LogisticParams::new(rho, h.build(), d, c, pi)?)
}

/// `pi` lists `[j, pi_j]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateX {
    pub rho: f64,
    #[serde(default)]
    pub h: Modifier,
    #[serde(default)]
    pub d: f64,
    pub c: f64,
    pub pi: Vec<(u32, f64)>,
    pub init: u64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub replicates: u64,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

impl SimulateX {
    pub fn params(&self) -> Result<LogisticParams, CliError> {
        logistic_params(self.rho, self.h, self.d, self.c, &self.pi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OuInit {
    Point(f64),
    Named(OuInitName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuInitName {
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOu {
    pub theta: f64,
    pub sigma2: f64,
    pub init: OuInit,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub replicates: u64,
}

impl SimulateOu {
    pub fn params(&self) -> Result<OUParams, CliError> {
        let init = match self.init {
            OuInit::Point(y) => InitialLaw::Point(y),
            OuInit::Named(OuInitName::Stationary) => InitialLaw::Stationary,
        };
        Ok(OUParams::new(self.theta, self.sigma2, init)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateAsg {
    pub n: u32,
    pub gamma: f64,
    pub s: f64,
    pub horizon: f64,
    /// Sampled labels in `1..=n`.
    pub sample: Vec<u32>,
    /// Forward time the sample is taken at; defaults to the horizon.
    #[serde(default)]
    pub trace_from: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationaryMethod {
    #[default]
    ClosedForm,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stationary {
    pub n: u64,
    pub gamma: f64,
    pub s: f64,
    #[serde(default)]
    pub method: StationaryMethod,
}

/// A family of chains indexed by `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainFamily {
    Moran {
        gamma: f64,
        s: Scale,
    },
    Logistic {
        rho: Scale,
        c: Scale,
        #[serde(default = "zero_scale")]
        d: Scale,
        pi: Vec<(u32, f64)>,
    },
}

fn zero_scale() -> Scale {
    Scale::Fixed(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenGap {
    pub chain: ChainFamily,
    pub n_values: Vec<u64>,
    #[serde(default = "three")]
    pub half_width: f64,
    /// Subset of the test-function library; all of it when absent.
    #[serde(default)]
    pub functions: Option<Vec<String>>,
    /// OU parameters; the chain's limit parameters when absent.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub sigma2: Option<f64>,
    /// If set: gaps must decrease strictly in N and end below this value.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Duality {
    pub n: u64,
    pub gamma: f64,
    pub s: f64,
    pub k_values: Vec<u64>,
    pub sample_sizes: Vec<u64>,
    pub times: Vec<f64>,
    pub replicates: u64,
    /// Pass when `|lhs - rhs| <= z (lhs_se + rhs_se)`.
    #[serde(default = "three")]
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftScan {
    pub chain: ChainFamily,
    pub n_values: Vec<u64>,
    #[serde(default = "unit")]
    pub eta: f64,
    /// Logistic mode: scan `[1, max_factor * mu]`.
    #[serde(default = "default_max_factor")]
    pub max_factor: f64,
    /// Fail unless the drift changes sign exactly once with the right signs
    /// outside `mu +- eta sigma`.
    #[serde(default)]
    pub check: bool,
}

fn default_max_factor() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FluctModel {
    Moran {
        n: u64,
        gamma: f64,
        s: f64,
    },
    Logistic {
        rho: f64,
        #[serde(default)]
        h: Modifier,
        #[serde(default)]
        d: f64,
        c: f64,
        pi: Vec<(u32, f64)>,
        #[serde(default = "default_burn_in")]
        burn_in: f64,
    },
    Ou {
        theta: f64,
        sigma2: f64,
    },
}

fn default_burn_in() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctTest {
    pub model: FluctModel,
    pub replicates: u64,
    /// Rescaled horizon after burn-in.
    pub horizon: f64,
    /// Rescaled times at which marginals are compared with the OU law.
    pub times: Vec<f64>,
    #[serde(default)]
    pub lags: Vec<f64>,
    /// Rescaled time the autocovariances start from.
    #[serde(default)]
    pub autocov_at: f64,
    #[serde(default)]
    pub ks_tolerance: Option<f64>,
    #[serde(default)]
    pub autocov_tolerance: Option<f64>,
}

impl ExperimentConfig {
    /// Parses a config document. `command` fills in a missing `command`
    /// key and must agree with it otherwise; `seed` overrides the document.
    pub fn from_json(
        text: &str,
        command: Option<&str>,
        seed: Option<u64>,
    ) -> Result<Self, CliError> {
        let mut value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| CliError::Validation("config must be a JSON object".into()))?;
        if let Some(cmd) = command {
            match obj.get("command") {
                None => {
                    obj.insert("command".into(), Value::String(cmd.into()));
                }
                Some(Value::String(c)) if c == cmd => {}
                Some(other) => {
                    return Err(CliError::Validation(format!(
                        "key `command`: config says {other}, command line says \"{cmd}\""
                    )))
                }
            }
        }
        let from_doc = match obj.remove("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| {
                CliError::Validation(format!("key `seed`: expected an unsigned integer, got {v}"))
            })?),
        };
        let seed = seed.or(from_doc).ok_or_else(|| {
            CliError::Validation("key `seed`: missing (set it in the config or pass --seed)".into())
        })?;
        let command: Command =
            serde_json::from_value(value).map_err(|e| CliError::Validation(format!("{e}")))?;
        Ok(Self { seed, command })
    }

    /// The config as a JSON document accepted by [`Self::from_json`].
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("configs serialise")
    }
}
