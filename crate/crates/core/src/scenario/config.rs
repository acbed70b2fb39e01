use super::{ScenarioError, ServerStrategy};
use crate::approx::UnitCombo;
use crate::fbc::{SentinelKind, DEFAULT_DELTA};
use crate::ir::{BuiltinSpec, NodeId};
use crate::rcc::ModuleSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A detection experiment, usually read from a TOML file:
///
/// ```toml
/// seed = 7
/// trials = 10000
///
/// [strategy]
/// honest_warmup = 0
/// small_job_threshold = 0
/// dishonest_prob = 1.0
///
/// [rcc]
/// programs = ["euler:order=2", "fir", "conv2x2"]
/// moduli = [3, 5, 7]
/// combos = ["loa:4+trunc:4", "seg:4+log"]
///
/// [fbc]
/// programs = ["conv"]
/// kinds = ["addition", "multiplication", "tan_arctan"]
/// n = 3
/// delta = 1e-13
/// truncated_bits = [10, 20]
/// sites = "auto"
/// ```
///
/// If neither `[rcc]` nor `[fbc]` is present, both run with their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub strategy: ServerStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcc: Option<RccSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbc: Option<FbcSection>,
}

fn default_trials() -> usize {
    10_000
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            trials: default_trials(),
            strategy: ServerStrategy::default(),
            rcc: None,
            fbc: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RccSection {
    #[serde(default = "BuiltinSpec::integer_suite", deserialize_with = "de_programs")]
    pub programs: Vec<BuiltinSpec>,
    #[serde(default)]
    pub moduli: ModuleSet,
    #[serde(default = "UnitCombo::defaults", deserialize_with = "de_combos")]
    pub combos: Vec<UnitCombo>,
}

impl Default for RccSection {
    fn default() -> Self {
        RccSection {
            programs: BuiltinSpec::integer_suite(),
            moduli: ModuleSet::default(),
            combos: UnitCombo::defaults(),
        }
    }
}

/// Where sentinels are attached.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum SiteSelection {
    /// One accumulation node per trial, drawn uniformly.
    #[default]
    Auto,
    /// One of these nodes per trial, drawn uniformly.
    Nodes(Vec<NodeId>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbcSection {
    #[serde(default = "default_fbc_programs", deserialize_with = "de_programs")]
    pub programs: Vec<BuiltinSpec>,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<SentinelKind>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_bits")]
    pub truncated_bits: Vec<u8>,
    #[serde(default)]
    pub sites: SiteSelection,
}

fn default_fbc_programs() -> Vec<BuiltinSpec> {
    vec![BuiltinSpec::conv_layer()]
}
fn default_kinds() -> Vec<SentinelKind> {
    SentinelKind::ALL.to_vec()
}
fn default_n() -> usize {
    3
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_bits() -> Vec<u8> {
    vec![10, 20]
}

impl Default for FbcSection {
    fn default() -> Self {
        FbcSection {
            programs: default_fbc_programs(),
            kinds: default_kinds(),
            n: default_n(),
            delta: default_delta(),
            truncated_bits: default_bits(),
            sites: SiteSelection::Auto,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProgramEntry {
    Name(String),
    Spec(BuiltinSpec),
}

fn de_programs<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BuiltinSpec>, D::Error> {
    Vec::<ProgramEntry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            ProgramEntry::Name(s) => s.parse().map_err(serde::de::Error::custom),
            ProgramEntry::Spec(s) => Ok(s),
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ComboEntry {
    Name(String),
    Combo(UnitCombo),
}

fn de_combos<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<UnitCombo>, D::Error> {
    Vec::<ComboEntry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            ComboEntry::Name(s) => s.parse().map_err(serde::de::Error::custom),
            ComboEntry::Combo(c) => c.adder.validate().and(c.multiplier.validate()).map(|_| c).map_err(serde::de::Error::custom),
        })
        .collect()
}

impl Serialize for SiteSelection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SiteSelection::Auto => s.serialize_str("auto"),
            SiteSelection::Nodes(ids) => ids.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SiteSelection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Ids(Vec<NodeId>),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "auto" => Ok(SiteSelection::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("sites must be \"auto\" or a list of node ids, got {w:?}"))),
            Raw::Ids(ids) if ids.is_empty() => Err(serde::de::Error::custom("sites list is empty")),
            Raw::Ids(ids) => Ok(SiteSelection::Nodes(ids)),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Same experiment with a different trial count (the `--quick` mode).
    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn neither(&self) -> bool {
        self.rcc.is_none() && self.fbc.is_none()
    }

    /// The RCC experiment to run, if any.
    pub fn rcc_section(&self) -> Option<RccSection> {
        if self.neither() {
            Some(RccSection::default())
        } else {
            self.rcc.clone()
        }
    }

    /// The FBC experiment to run, if any.
    pub fn fbc_section(&self) -> Option<FbcSection> {
        if self.neither() {
            Some(FbcSection::default())
        } else {
            self.fbc.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        self.strategy.validate().map_err(ScenarioError::Config)?;
        if let Some(r) = self.rcc_section() {
            if r.programs.is_empty() || r.combos.is_empty() {
                return bad("rcc needs at least one program and one unit combination".into());
            }
            if let Some(p) = r.programs.iter().find(|p| !p.is_integer()) {
                return bad(format!("rcc program {p} is floating point; use the fbc section for it"));
            }
        }
        if let Some(f) = self.fbc_section() {
            if f.programs.is_empty() || f.kinds.is_empty() || f.truncated_bits.is_empty() {
                return bad("fbc needs at least one program, sentinel kind and truncation setting".into());
            }
            if let Some(p) = f.programs.iter().find(|p| p.is_integer()) {
                return bad(format!("fbc program {p} is integer; use the rcc section for it"));
            }
            if f.n == 0 {
                return bad("fbc n must be at least 1".into());
            }
            if !(f.delta.is_finite() && f.delta >= 0.0) {
                return bad(format!("fbc delta must be finite and non-negative, got {}", f.delta));
            }
            if let Some(b) = f.truncated_bits.iter().find(|&&b| b > 52) {
                return bad(format!("cannot truncate {b} mantissa bits (at most 52)"));
            }
        }
        Ok(())
    }
}
