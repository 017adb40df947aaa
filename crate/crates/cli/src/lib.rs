//! Scenario runner behind the `pqft` binary.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pqft_core::cones::DirectionCone;
use pqft_core::functionals::MultiVectorField;
use pqft_core::probe::ProbeSettings;
use pqft_core::scalar::{Mode, Rational, Scalar};
use pqft_core::suite::{
    cone_sweep, counterexample, delta_squared_sweep, hadamard_check, homotopy_for_fields, homotopy_sweep,
    probe_fixtures, projection_checks, star_checks, time_slice_sweep, CounterexampleSettings, LatticeParams,
    StarTolerances, SuiteError,
};

pub use config::{ConfigError, PartialConfig, ScenarioConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pqft", version, about = "Lattice checks for perturbative algebraic QFT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario, or all of them, and write JSON/CSV reports.
    Run(RunArgs),
    /// Print the JSON schema of the config file.
    Schema,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["koszul", "timeslice", "star", "cones", "probe", "counterexample", "all"])]
    pub scenario: Option<String>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub nx: Option<usize>,
    /// Time step, e.g. `1/2`.
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub dx: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    #[arg(long)]
    pub theta_lo: Option<usize>,
    #[arg(long)]
    pub theta_hi: Option<usize>,
    #[arg(long, value_parser = ["float", "rational"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per cone check.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output directory (default: $PQFT_OUT, then ./pqft-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use fixed file names so repeated runs are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
}

impl RunArgs {
    fn as_partial(&self) -> PartialConfig {
        let rational = |s: &Option<String>| s.clone().map(config::RationalSpec::Text);
        PartialConfig {
            scenario: self.scenario.clone(),
            nt: self.nt,
            nx: self.nx,
            dt: rational(&self.dt),
            dx: rational(&self.dx),
            mass: rational(&self.mass),
            theta_lo: self.theta_lo,
            theta_hi: self.theta_hi,
            mode: self.mode.clone(),
            seed: self.seed,
            samples: self.samples,
            out: self.out.clone(),
            deterministic: self.deterministic.then_some(true),
            functionals: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("output directory {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("{0}")]
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output { .. } | RunError::Suite(SuiteError::Lattice(_)) => EXIT_CONFIG,
            RunError::Suite(SuiteError::Functional(_)) => EXIT_CONFIG,
            _ => EXIT_INTERNAL,
        }
    }
}

/// Outcome of one scenario.
#[derive(Debug)]
pub struct ScenarioResult {
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

pub fn resolve(args: &RunArgs, env_out: Option<PathBuf>) -> Result<ScenarioConfig, RunError> {
    let (file, base) = match &args.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (PartialConfig::from_file(path)?, base)
        }
        None => (PartialConfig::default(), PathBuf::from(".")),
    };
    Ok(ScenarioConfig::resolve(file.overlay(args.as_partial()), env_out, &base)?)
}

/// Creates the output directory and confirms it accepts files.
pub fn prepare_output(dir: &Path) -> Result<(), RunError> {
    let err = |source| RunError::Output { path: dir.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(".pqft-write-test");
    fs::write(&probe, b"").map_err(err)?;
    fs::remove_file(&probe).map_err(err)
}

struct Writer<'a> {
    cfg: &'a ScenarioConfig,
    stamp: String,
}

impl Writer<'_> {
    fn stem(&self, scenario: &str) -> String {
        if self.cfg.deterministic {
            scenario.to_string()
        } else {
            format!("{scenario}-{}", self.stamp)
        }
    }

    fn write(&self, name: String, contents: &[u8]) -> Result<PathBuf, RunError> {
        let path = self.cfg.out.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Output { path: path.clone(), source })?;
        Ok(path)
    }

    fn json(&self, scenario: &str, body: Value) -> Result<PathBuf, RunError> {
        let mut doc = json!({
            "scenario": scenario,
            "params": params_json(self.cfg),
        });
        let map = doc.as_object_mut().expect("object");
        match body {
            Value::Object(fields) => map.extend(fields),
            other => {
                map.insert("report".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&doc).map_err(|e| RunError::Internal(e.to_string()))?;
        self.write(format!("{}.json", self.stem(scenario)), text.as_bytes())
    }

    fn csv(&self, scenario: &str, label: &str, text: String) -> Result<PathBuf, RunError> {
        self.write(format!("{}-{label}.csv", self.stem(scenario)), text.as_bytes())
    }
}

fn params_json(cfg: &ScenarioConfig) -> Value {
    json!({
        "lattice": cfg.lattice,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "samples": cfg.samples,
    })
}

fn to_value<T: serde::Serialize>(t: &T) -> Result<Value, RunError> {
    serde_json::to_value(t).map_err(|e| RunError::Internal(e.to_string()))
}

fn parse_fields<S: Scalar>(docs: &[Value]) -> Result<Vec<MultiVectorField<S>>, RunError> {
    docs.iter().map(|d| MultiVectorField::<S>::from_json(d).map_err(|e| RunError::Suite(e.into()))).collect()
}

fn user_fields<S: Scalar>(cfg: &ScenarioConfig, tol: f64) -> Result<Value, RunError> {
    let fields = parse_fields::<S>(&cfg.functionals)?;
    to_value(&homotopy_for_fields(&cfg.lattice, &fields, 3, cfg.seed, tol)?)
}

fn koszul(cfg: &ScenarioConfig, w: &Writer) -> Result<ScenarioResult, RunError> {
    let p: &LatticeParams = &cfg.lattice;
    let (sweep, user) = match cfg.mode {
        Mode::Rational => (
            homotopy_sweep::<Rational>(p, &[0, 1, 2], 2, 20, 3, cfg.seed, 0.0)?,
            user_fields::<Rational>(cfg, 0.0)?,
        ),
        Mode::Float => (
            homotopy_sweep::<f64>(p, &[0, 1, 2], 2, 20, 3, cfg.seed, 1e-10)?,
            user_fields::<f64>(cfg, 1e-10)?,
        ),
    };
    let user_pass = user.as_array().is_some_and(|a| a.iter().all(|r| r["pass"] == Value::Bool(true)));
    let d2 = delta_squared_sweep(p, &[2, 3], 2, 20, cfg.seed)?;
    let proj = projection_checks(p, 100, cfg.seed, 1e-10)?;
    let pass = sweep.pass && user_pass && d2.pass && proj.pass;
    let file = w.json(
        "koszul",
        json!({
            "residual_sup": sweep.residual_sup,
            "pass": pass,
            "homotopy": to_value(&sweep)?,
            "user_functionals": user,
            "delta_squared": to_value(&d2)?,
            "projection": to_value(&proj)?,
        }),
    )?;
    Ok(ScenarioResult {
        name: "koszul",
        pass,
        summary: format!(
            "homotopy residual {:.3e} ({} mode), delta^2 nonzero {}/{}, projection defects {:.2e}/{:.2e}",
            sweep.residual_sup,
            cfg.mode.as_str(),
            d2.nonzero,
            d2.instances,
            proj.alpha_defect,
            proj.gamma0_defect
        ),
        files: vec![file],
    })
}

fn timeslice(cfg: &ScenarioConfig, w: &Writer) -> Result<ScenarioResult, RunError> {
    let r = time_slice_sweep(&cfg.lattice, None, 20, 30, cfg.seed, 1e-10)?;
    let file = w.json("timeslice", json!({"pass": r.pass, "report": to_value(&r)?}))?;
    Ok(ScenarioResult {
        name: "timeslice",
        pass: r.pass,
        summary: format!(
            "rows {:?}, {} support violations, on-shell residual {:.3e}",
            r.region, r.support_violations, r.on_shell_residual
        ),
        files: vec![file],
    })
}

fn star(cfg: &ScenarioConfig, w: &Writer) -> Result<ScenarioResult, RunError> {
    let h = hadamard_check(&cfg.lattice, 1e-12, 1e-9)?;
    let tol = StarTolerances { commutator: 1e-10, associativity: 1e-9, jacobi: 1e-10 };
    let s = star_checks(&cfg.lattice, 10, cfg.seed, tol)?;
    let pass = h.pass && s.pass;
    let norms: Vec<String> = s.sample_norms.iter().enumerate().map(|(n, v)| format!("hbar^{n}: {v:.3e}")).collect();
    let file = w.json("star", json!({"pass": pass, "hadamard": to_value(&h)?, "star": to_value(&s)?}))?;
    Ok(ScenarioResult {
        name: "star",
        pass,
        summary: format!(
            "antisymmetry {:.2e}, commutator {:.2e}, associativity {:.2e}, Jacobi {:.2e}; norms [{}]",
            h.defects.antisymmetry,
            s.commutator_defect,
            s.associativity_defect,
            s.jacobi_defect,
            norms.join(", ")
        ),
        files: vec![file],
    })
}

fn cones(cfg: &ScenarioConfig, w: &Writer) -> Result<ScenarioResult, RunError> {
    let v = DirectionCone::from_degrees(40, 50);
    let r = cone_sweep(&v, 5, 4, cfg.samples, cfg.seed)?;
    let file = w.json("cones", json!({"pass": r.pass, "report": to_value(&r)?}))?;
    Ok(ScenarioResult {
        name: "cones",
        pass: r.pass,
        summary: format!(
            "{} lemma violations over {} triples, commutator control {}, wide control {} (cannot fire)",
            r.total_violations,
            r.reports.len(),
            r.commutator_control.violations,
            r.wide_cone_control.violations
        ),
        files: vec![file],
    })
}

fn probe(_cfg: &ScenarioConfig, w: &Writer) -> Result<ScenarioResult, RunError> {
    let r = probe_fixtures(256, ProbeSettings::default())?;
    let mut files = vec![w.json("probe", json!({"pass": r.pass, "report": to_value(&r)?}))?];
    for (label, rep) in [("gaussian", &r.gaussian), ("spike", &r.spike), ("ridge", &r.ridge)] {
        files.push(w.csv("probe", label, rep.to_csv())?);
    }
    Ok(ScenarioResult {
        name: "probe",
        pass: r.pass,
        summary: format!(
            "gaussian {:?}, spike {}/{}, ridge {:?} (conormal {:?})",
            r.gaussian.flagged_bins(),
            r.spike.flagged_bins().len(),
            r.spike.bins.len(),
            r.ridge.flagged_bins(),
            r.conormal_bins
        ),
        files,
    })
}

fn counter(_cfg: &ScenarioConfig, w: &Writer) -> Result<ScenarioResult, RunError> {
    let r = counterexample(CounterexampleSettings::default())?;
    let mut files = vec![w.json("counterexample", json!({"pass": r.pass, "report": to_value(&r)?}))?];
    for (label, t) in [
        ("decades", &r.decades),
        ("diagonal-minus", &r.diagonal_minus),
        ("diagonal-plus", &r.diagonal_plus),
        ("gaussian-minus", &r.gaussian_minus),
        ("gaussian-plus", &r.gaussian_plus),
    ] {
        files.push(w.csv("counterexample", label, t.to_csv())?);
    }
    Ok(ScenarioResult {
        name: "counterexample",
        pass: r.pass,
        summary: format!(
            "slope {:.4}, plus-path growth {:.3}, gaussian growth {:.3}/{:.3}",
            r.decades.fitted_slope, r.diagonal_plus.growth_ratio, r.gaussian_minus.growth_ratio, r.gaussian_plus.growth_ratio
        ),
        files,
    })
}

/// Runs the configured scenario(s); the output directory must already be prepared.
pub fn run_scenarios(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>, RunError> {
    let w = Writer { cfg, stamp: chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string() };
    let all = cfg.scenario == "all";
    let mut out = Vec::new();
    type Runner = fn(&ScenarioConfig, &Writer) -> Result<ScenarioResult, RunError>;
    let table: [(&str, Runner); 6] = [
        ("koszul", koszul),
        ("timeslice", timeslice),
        ("star", star),
        ("cones", cones),
        ("probe", probe),
        ("counterexample", counter),
    ];
    for (name, f) in table {
        if all || cfg.scenario == name {
            out.push(f(cfg, &w)?);
        }
    }
    Ok(out)
}

/// Full `run` command: returns the process exit code.
pub fn run(args: &RunArgs, env_out: Option<PathBuf>) -> i32 {
    let outcome = resolve(args, env_out).and_then(|cfg| {
        prepare_output(&cfg.out)?;
        run_scenarios(&cfg)
    });
    match outcome {
        Ok(results) => {
            for r in &results {
                println!("{:<15} {} {}", r.name, if r.pass { "PASS" } else { "FAIL" }, r.summary);
                for f in &r.files {
                    println!("{:<15}   wrote {}", "", f.display());
                }
            }
            if results.iter().all(|r| r.pass) {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub const SCHEMA: &str = include_str!("../config.schema.json");
