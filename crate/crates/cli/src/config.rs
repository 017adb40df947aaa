use std::path::{Path, PathBuf};

use num::rational::Rational64;
use serde::Deserialize;
use serde_json::Value;

use pqft_core::scalar::{parse_rational64, Mode};
use pqft_core::suite::LatticeParams;

/// Keys accepted in a config file; mirrors `config.schema.json`.
pub const CONFIG_KEYS: &[&str] = &[
    "scenario",
    "nt",
    "nx",
    "dt",
    "dx",
    "mass",
    "theta_lo",
    "theta_hi",
    "mode",
    "seed",
    "samples",
    "out",
    "deterministic",
    "functionals",
];

pub const SCENARIOS: &[&str] = &["koszul", "timeslice", "star", "cones", "probe", "counterexample", "all"];

pub const DEFAULT_OUT: &str = "pqft-out";

/// Rationals may be written as `"1/2"`, `"0.5"` or a JSON number.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RationalSpec {
    Text(String),
    Integer(i64),
    Float(f64),
}

impl RationalSpec {
    fn parse(&self) -> Option<Rational64> {
        match self {
            RationalSpec::Text(s) => parse_rational64(s),
            RationalSpec::Integer(i) => Some(Rational64::from_integer(*i)),
            RationalSpec::Float(f) => parse_rational64(&f.to_string()),
        }
    }
}

/// Either an inline functional document or a path to one.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FunctionalSpec {
    Path(String),
    Inline(Value),
}

/// Configuration as read from a file or flags; every field optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub scenario: Option<String>,
    pub nt: Option<usize>,
    pub nx: Option<usize>,
    pub dt: Option<RationalSpec>,
    pub dx: Option<RationalSpec>,
    pub mass: Option<RationalSpec>,
    pub theta_lo: Option<usize>,
    pub theta_hi: Option<usize>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub deterministic: Option<bool>,
    pub functionals: Option<Vec<FunctionalSpec>>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: PartialConfig) -> Self {
        Self {
            scenario: over.scenario.or(self.scenario),
            nt: over.nt.or(self.nt),
            nx: over.nx.or(self.nx),
            dt: over.dt.or(self.dt),
            dx: over.dx.or(self.dx),
            mass: over.mass.or(self.mass),
            theta_lo: over.theta_lo.or(self.theta_lo),
            theta_hi: over.theta_hi.or(self.theta_hi),
            mode: over.mode.or(self.mode),
            seed: over.seed.or(self.seed),
            samples: over.samples.or(self.samples),
            out: over.out.or(self.out),
            deterministic: over.deterministic.or(self.deterministic),
            functionals: over.functionals.or(self.functionals),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub lattice: LatticeParams,
    pub mode: Mode,
    pub seed: u64,
    pub samples: usize,
    pub out: PathBuf,
    pub deterministic: bool,
    /// Raw functional documents; parsed once the arithmetic mode is known.
    pub functionals: Vec<Value>,
}

impl ScenarioConfig {
    /// `env_out` is the `PQFT_OUT` value, used when neither file nor flags
    /// name an output directory.
    pub fn resolve(p: PartialConfig, env_out: Option<PathBuf>, base: &Path) -> Result<Self, ConfigError> {
        let defaults = LatticeParams::default();
        let scenario = p.scenario.unwrap_or_else(|| "all".into());
        if !SCENARIOS.contains(&scenario.as_str()) {
            return Err(ConfigError(format!("unknown scenario {scenario:?}; expected one of {}", SCENARIOS.join(", "))));
        }
        let rational = |name: &str, spec: Option<RationalSpec>, default: Rational64| match spec {
            None => Ok(default),
            Some(s) => s.parse().ok_or_else(|| ConfigError(format!("{name}: not a rational number: {s:?}"))),
        };
        let lattice = LatticeParams {
            nt: p.nt.unwrap_or(defaults.nt),
            nx: p.nx.unwrap_or(defaults.nx),
            dt: rational("dt", p.dt, defaults.dt)?,
            dx: rational("dx", p.dx, defaults.dx)?,
            mass: rational("mass", p.mass, defaults.mass)?,
            theta_lo: p.theta_lo.unwrap_or(defaults.theta_lo),
            theta_hi: p.theta_hi.unwrap_or(defaults.theta_hi),
        };
        let lat = lattice.lattice().map_err(|e| ConfigError(format!("lattice: {e}")))?;
        pqft_core::lattice::make_switching(&lat, lattice.theta_lo, lattice.theta_hi)
            .map_err(|e| ConfigError(format!("theta window: {e}")))?;
        let mode = match p.mode.as_deref().unwrap_or("rational") {
            "float" => Mode::Float,
            "rational" => Mode::Rational,
            other => return Err(ConfigError(format!("mode must be float or rational, got {other:?}"))),
        };
        let samples = p.samples.unwrap_or(100_000);
        if samples == 0 {
            return Err(ConfigError("samples must be positive".into()));
        }
        let mut functionals = Vec::new();
        for f in p.functionals.unwrap_or_default() {
            functionals.push(match f {
                FunctionalSpec::Inline(v) => v,
                FunctionalSpec::Path(path) => {
                    let full = base.join(&path);
                    let text = std::fs::read_to_string(&full)
                        .map_err(|e| ConfigError(format!("cannot read functional {}: {e}", full.display())))?;
                    serde_json::from_str(&text)
                        .map_err(|e| ConfigError(format!("functional {}: {e}", full.display())))?
                }
            });
        }
        Ok(Self {
            scenario,
            lattice,
            mode,
            seed: p.seed.unwrap_or(7),
            samples,
            out: p.out.or(env_out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            deterministic: p.deterministic.unwrap_or(false),
            functionals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<PartialConfig>(r#"{"scenario":"koszul","colour":"red"}"#).unwrap_err();
        assert!(err.to_string().contains("colour"));
    }

    #[test]
    fn flags_win_over_file_and_env_is_last() {
        let file: PartialConfig = serde_json::from_str(r#"{"nt":10,"seed":3,"out":"from-file"}"#).unwrap();
        let flags = PartialConfig { seed: Some(9), ..Default::default() };
        let merged = file.overlay(flags);
        let cfg = ScenarioConfig::resolve(merged, Some("from-env".into()), Path::new(".")).unwrap();
        assert_eq!((cfg.lattice.nt, cfg.seed), (10, 9));
        assert_eq!(cfg.out, PathBuf::from("from-file"));
        let cfg = ScenarioConfig::resolve(PartialConfig::default(), Some("from-env".into()), Path::new(".")).unwrap();
        assert_eq!(cfg.out, PathBuf::from("from-env"));
    }

    #[test]
    fn rationals_and_validation() {
        let p: PartialConfig = serde_json::from_str(r#"{"dt":"1/4","dx":1,"mass":0.5}"#).unwrap();
        let cfg = ScenarioConfig::resolve(p, None, Path::new(".")).unwrap();
        assert_eq!(cfg.lattice.dt, Rational64::new(1, 4));
        assert_eq!(cfg.lattice.mass, Rational64::new(1, 2));
        for bad in [r#"{"scenario":"nope"}"#, r#"{"dt":"2"}"#, r#"{"theta_lo":5,"theta_hi":3}"#, r#"{"mode":"complex"}"#] {
            let p: PartialConfig = serde_json::from_str(bad).unwrap();
            assert!(ScenarioConfig::resolve(p, None, Path::new(".")).is_err(), "{bad}");
        }
    }

    #[test]
    fn schema_lists_exactly_the_config_keys() {
        let schema: Value = serde_json::from_str(include_str!("../config.schema.json")).unwrap();
        let mut keys: Vec<&str> = schema["properties"].as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort_unstable();
        let mut expected = CONFIG_KEYS.to_vec();
        expected.sort_unstable();
        assert_eq!(keys, expected);
        assert_eq!(schema["additionalProperties"], Value::Bool(false));
    }
}
