//! Config-driven batch runs: one JSON config in, one JSON report out.
//!
//! Exit codes: 0 when every suite passes, 2 when any fails, 3 when none
//! fails but some are indeterminate, 1 on configuration errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::checks::{CheckReport, Checker, Sampler, Strategy, Tolerances, Verdict, CSV_HEADER};
use crate::contraction::{ContractionSpec, ScalarContraction, Side};
use crate::energy::{EnergyFunctional, EnergySpec, PointRef};
use crate::par::{map_slice, Execution};
use crate::prox::{self, ProxConfig};
use crate::space::{Field, MeasureSpace, PointSet};
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;
pub const REPORT_SCHEMA: &str = "dirichlet-report.v1";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

/// The measure space, unless the energy builds its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub enum SpaceSpec {
    /// `n` unit atoms named `0..n`.
    Uniform { n: usize },
    /// Atoms named `0..n` with the given masses.
    Weighted { weights: Vec<f64> },
    /// Trapezoidal masses on an `n`-node grid of `[0, 1]`.
    PathGrid { n: usize },
    Explicit { points: Vec<String>, weights: Vec<f64> },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Arc<MeasureSpace>> {
        match self {
            SpaceSpec::Uniform { n } => MeasureSpace::uniform(*n),
            SpaceSpec::Weighted { weights } => MeasureSpace::with_weights(weights.clone()),
            SpaceSpec::PathGrid { n } => MeasureSpace::path_grid(*n),
            SpaceSpec::Explicit { points, weights } => MeasureSpace::new(points.clone(), weights.clone()),
        }
    }
}

fn default_count() -> usize {
    100
}

fn default_scale() -> f64 {
    1.0
}

/// A [`Sampler`] whose seed defaults to the config seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub struct SamplerSpec {
    #[serde(default)]
    pub seed: Option<u64>,
    pub strategy: Strategy,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub swap: bool,
    #[serde(default)]
    pub project: bool,
}

impl SamplerSpec {
    fn build(&self, seed: u64) -> Result<Sampler> {
        let s = Sampler {
            seed: self.seed.unwrap_or(seed),
            strategy: self.strategy.clone(),
            count: self.count,
            scale: self.scale,
            swap: self.swap,
            project: self.project,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub enum OperatorSpec {
    Resolvent { lambda: f64 },
    Flow { t: f64 },
}

fn default_alphas() -> Vec<f64> {
    vec![0.0, 0.1, 0.5, 1.0]
}

fn default_lambdas() -> Vec<f64> {
    vec![0.1, 1.0]
}

fn default_times() -> Vec<f64> {
    vec![0.1, 1.0]
}

/// One check invocation. The `check` tag names the check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub enum Suite {
    CheckMarkovSuite {
        sampler: SamplerSpec,
        operator_sampler: Option<SamplerSpec>,
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
        #[serde(default = "default_times")]
        t: Vec<f64>,
    },
    CheckOrderPreservingOperator { operator: OperatorSpec, sampler: SamplerSpec },
    CheckLinfNonexpansiveOperator { operator: OperatorSpec, sampler: SamplerSpec },
    CheckLatticeContraction { sampler: SamplerSpec },
    CheckStrongUnitContraction {
        sampler: SamplerSpec,
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
    },
    CheckOneSidedUnitContraction {
        sampler: SamplerSpec,
        side: Side,
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
    },
    CheckClaus { sampler: SamplerSpec, psi: Option<Vec<ContractionSpec>> },
    CheckPuchert { sampler: SamplerSpec, phi: Option<Vec<ContractionSpec>> },
    CheckLipschitzContraction { sampler: SamplerSpec, phi: Option<Vec<ContractionSpec>> },
    CheckDirichletOperator { sampler: SamplerSpec, lambda: f64 },
    CheckWeakLocality { sampler: SamplerSpec },
    CheckStrongLocality {
        sampler: SamplerSpec,
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
    },
    CheckInvariance {
        sampler: SamplerSpec,
        y: Vec<PointRef>,
        #[serde(default = "default_times")]
        t: Vec<f64>,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
    },
    CheckPlainInvariance {
        sampler: SamplerSpec,
        y: Vec<PointRef>,
        #[serde(default = "default_times")]
        t: Vec<f64>,
    },
    CheckContinuityAtZero { sampler: SamplerSpec, alphas: Vec<f64> },
    CheckOddEvenConsistency {
        sampler: SamplerSpec,
        #[serde(default = "default_times")]
        t: Vec<f64>,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
    },
    CheckResolventIdentity { sampler: SamplerSpec, pairs: Vec<(f64, f64)> },
    CheckEnvelopeMonotonicity { sampler: SamplerSpec, lambdas: Vec<f64> },
    CheckCompositionIdentity {
        sampler: SamplerSpec,
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
    },
}

/// Check names with their parameter schemas, in listing order.
pub const CHECKS: &[(&str, &str)] = &[
    ("check_markov_suite", "{sampler, operator_sampler?, alphas?, lambdas?, t?}"),
    ("check_order_preserving_operator", "{operator: {kind: resolvent, lambda} | {kind: flow, t}, sampler}"),
    ("check_linf_nonexpansive_operator", "{operator: {kind: resolvent, lambda} | {kind: flow, t}, sampler}"),
    ("check_lattice_contraction", "{sampler}"),
    ("check_strong_unit_contraction", "{sampler, alphas?}"),
    ("check_one_sided_unit_contraction", "{sampler, side: plus|minus, alphas?}"),
    ("check_claus", "{sampler, psi?: [contraction]}"),
    ("check_puchert", "{sampler, phi?: [contraction]}"),
    ("check_lipschitz_contraction", "{sampler, phi?: [contraction]}"),
    ("check_dirichlet_operator", "{sampler, lambda: number > 0}"),
    ("check_weak_locality", "{sampler}"),
    ("check_strong_locality", "{sampler, alphas?}"),
    ("check_invariance", "{sampler, y: [point], t?, lambdas?}"),
    ("check_plain_invariance", "{sampler, y: [point], t?}"),
    ("check_continuity_at_zero", "{sampler, alphas: [number, non-increasing]}"),
    ("check_odd_even_consistency", "{sampler, t?, lambdas?}"),
    ("check_resolvent_identity", "{sampler, pairs: [[lambda, mu]]}"),
    ("check_envelope_monotonicity", "{sampler, lambdas: [number > 0]}"),
    ("check_composition_identity", "{sampler, alphas?}"),
];

/// Parametric contraction kinds accepted in `psi`/`phi` lists.
pub const CONTRACTIONS: &[(&str, &str)] = &[
    ("identity", "{}"),
    ("zero", "{}"),
    ("negate", "{}"),
    ("abs", "{}"),
    ("positive_part", "{}"),
    ("negative_part", "{}"),
    ("scale", "{c: number in [-1, 1]}"),
    ("affine", "{slope: number in [-1, 1], intercept: number}"),
    ("abs_shift", "{c: number}"),
    ("psi_alpha", "{alpha: number >= 0}"),
    ("phi_plus", "{alpha: number >= 0}"),
    ("phi_minus", "{alpha: number >= 0}"),
    ("clamp", "{lo: number, hi: number}"),
    ("shrink", "{alpha: number >= 0}"),
    ("ramp", "{a: number}"),
    ("lower_ramp", "{a: number}"),
    ("h_first", "{alpha: number >= 0}"),
    ("h_second", "{alpha: number >= 0}"),
    ("tent", "{height: number >= 0}"),
];

impl Suite {
    pub fn name(&self) -> &'static str {
        let tag = serde_json::to_value(self).ok().and_then(|v| v.get("check").and_then(Value::as_str).map(str::to_owned));
        CHECKS.iter().map(|(n, _)| *n).find(|n| Some(*n) == tag.as_deref()).unwrap_or("unknown")
    }

    fn sampler(&self) -> &SamplerSpec {
        match self {
            Suite::CheckMarkovSuite { sampler, .. }
            | Suite::CheckOrderPreservingOperator { sampler, .. }
            | Suite::CheckLinfNonexpansiveOperator { sampler, .. }
            | Suite::CheckLatticeContraction { sampler }
            | Suite::CheckStrongUnitContraction { sampler, .. }
            | Suite::CheckOneSidedUnitContraction { sampler, .. }
            | Suite::CheckClaus { sampler, .. }
            | Suite::CheckPuchert { sampler, .. }
            | Suite::CheckLipschitzContraction { sampler, .. }
            | Suite::CheckDirichletOperator { sampler, .. }
            | Suite::CheckWeakLocality { sampler }
            | Suite::CheckStrongLocality { sampler, .. }
            | Suite::CheckInvariance { sampler, .. }
            | Suite::CheckPlainInvariance { sampler, .. }
            | Suite::CheckContinuityAtZero { sampler, .. }
            | Suite::CheckOddEvenConsistency { sampler, .. }
            | Suite::CheckResolventIdentity { sampler, .. }
            | Suite::CheckEnvelopeMonotonicity { sampler, .. }
            | Suite::CheckCompositionIdentity { sampler, .. } => sampler,
        }
    }

    /// Runs the check. Precondition errors surface as `Err`.
    pub fn run(&self, checker: &Checker, e: &EnergyFunctional, seed: u64) -> Result<CheckReport> {
        let sampler = self.sampler().build(seed)?;
        let family = |list: &Option<Vec<ContractionSpec>>, default: fn() -> Vec<ScalarContraction>| -> Result<Vec<ScalarContraction>> {
            match list {
                Some(specs) => specs.iter().cloned().map(ScalarContraction::parametric).collect(),
                None => Ok(default()),
            }
        };
        let point_set = |y: &[PointRef]| -> Result<PointSet> {
            let ids: Vec<usize> = y.iter().map(|p| p.resolve(e.space())).collect::<Result<_>>()?;
            PointSet::from_indices(e.space(), ids)
        };
        let operator = |spec: &OperatorSpec| match *spec {
            OperatorSpec::Resolvent { lambda } => crate::checks::Operator::resolvent(e, lambda, checker.prox),
            OperatorSpec::Flow { t } => crate::checks::Operator::flow(e, t, checker.flow_tol, checker.prox),
        };
        match self {
            Suite::CheckMarkovSuite { operator_sampler, alphas, lambdas, t, .. } => {
                let ops = match operator_sampler {
                    Some(s) => s.build(seed)?,
                    None => sampler.clone(),
                };
                checker.check_markov_suite(e, &sampler, &ops, alphas, lambdas, t)
            }
            Suite::CheckOrderPreservingOperator { operator: op, .. } => checker.check_order_preserving_operator(&operator(op), &sampler),
            Suite::CheckLinfNonexpansiveOperator { operator: op, .. } => checker.check_linf_nonexpansive_operator(&operator(op), &sampler),
            Suite::CheckLatticeContraction { .. } => checker.check_lattice_contraction(e, &sampler),
            Suite::CheckStrongUnitContraction { alphas, .. } => checker.check_strong_unit_contraction(e, &sampler, alphas),
            Suite::CheckOneSidedUnitContraction { side, alphas, .. } => checker.check_one_sided_unit_contraction(e, *side, &sampler, alphas),
            Suite::CheckClaus { psi, .. } => checker.check_claus(e, &sampler, &family(psi, crate::checks::default_claus_family)?),
            Suite::CheckPuchert { phi, .. } => checker.check_puchert(e, &sampler, &family(phi, crate::checks::default_puchert_family)?),
            Suite::CheckLipschitzContraction { phi, .. } => {
                checker.check_lipschitz_contraction(e, &sampler, &family(phi, crate::checks::default_lipschitz_family)?)
            }
            Suite::CheckDirichletOperator { lambda, .. } => checker.check_dirichlet_operator(e, *lambda, &sampler),
            Suite::CheckWeakLocality { .. } => checker.check_weak_locality(e, &sampler),
            Suite::CheckStrongLocality { alphas, .. } => checker.check_strong_locality(e, &sampler, alphas),
            Suite::CheckInvariance { y, t, lambdas, .. } => checker.check_invariance(e, &point_set(y)?, t, lambdas, &sampler),
            Suite::CheckPlainInvariance { y, t, .. } => checker.check_plain_invariance(e, &point_set(y)?, t, &sampler),
            Suite::CheckContinuityAtZero { alphas, .. } => checker.check_continuity_at_zero_sampled(e, &sampler, alphas),
            Suite::CheckOddEvenConsistency { t, lambdas, .. } => checker.check_odd_even_consistency(e, t, lambdas, &sampler),
            Suite::CheckResolventIdentity { pairs, .. } => checker.check_resolvent_identity(e, pairs, &sampler),
            Suite::CheckEnvelopeMonotonicity { lambdas, .. } => checker.check_envelope_monotonicity(e, lambdas, &sampler),
            Suite::CheckCompositionIdentity { alphas, .. } => checker.check_composition_identity(e.space(), &sampler, alphas),
        }
    }
}

/// Initial field and envelope levels for `flow-trace`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub struct TraceSpec {
    pub initial: Vec<f64>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub struct Outputs {
    /// Report path, relative to the config file. Defaults to `<config stem>.report.json`.
    pub report: Option<String>,
    /// Directory for per-suite CSV dumps, relative to the config file.
    pub csv_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    pub energy: EnergySpec,
    #[serde(default)]
    pub solver: ProxConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Cauchy tolerance of flows evaluated inside checks.
    #[serde(default)]
    pub flow_tol: Option<f64>,
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub trace: Option<TraceSpec>,
}

/// A config error with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

fn config_error(field: impl Into<String>, e: impl std::fmt::Display) -> ConfigError {
    ConfigError { field: field.into(), message: e.to_string() }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { field, message } => ConfigError { field, message },
            other => config_error("", other),
        }
    }
}

/// A parsed config with its energy built.
pub struct Loaded {
    pub config: RunConfig,
    pub energy: EnergyFunctional,
    pub checker: Checker,
    pub hash: String,
    pub dir: PathBuf,
    pub stem: String,
}

/// Path of the first unknown or malformed field, from serde's message.
fn locate(raw: &Value, message: &str) -> String {
    if let Some(rest) = message.split("unknown field `").nth(1) {
        let name = rest.split('`').next().unwrap_or_default();
        return find_key(raw, name, "").unwrap_or_else(|| name.to_string());
    }
    if let Some(rest) = message.split("missing field `").nth(1) {
        return rest.split('`').next().unwrap_or_default().to_string();
    }
    String::new()
}

fn find_key(v: &Value, key: &str, path: &str) -> Option<String> {
    match v {
        Value::Object(map) => {
            if map.contains_key(key) {
                return Some(if path.is_empty() { key.to_string() } else { format!("{path}.{key}") });
            }
            map.iter().find_map(|(k, child)| find_key(child, key, &if path.is_empty() { k.clone() } else { format!("{path}.{k}") }))
        }
        Value::Array(items) => items.iter().enumerate().find_map(|(i, child)| find_key(child, key, &format!("{path}[{i}]"))),
        _ => None,
    }
}

/// Parses, validates and builds everything the runs need. Suite
/// parameters that only the checks can validate are checked when run.
pub fn parse_config(text: &str) -> std::result::Result<(RunConfig, EnergyFunctional), ConfigError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| config_error("", format!("invalid JSON: {e}")))?;
    if let Some(suites) = raw.get("suites").and_then(Value::as_array) {
        for (i, s) in suites.iter().enumerate() {
            if let Err(e) = Suite::deserialize(s) {
                let inner = locate(s, &e.to_string());
                let field = if inner.is_empty() { format!("suites[{i}]") } else { format!("suites[{i}].{inner}") };
                return Err(config_error(field, e));
            }
        }
    }
    let config: RunConfig = serde_json::from_value(raw.clone()).map_err(|e| config_error(locate(&raw, &e.to_string()), e))?;
    if config.version != CONFIG_VERSION {
        return Err(config_error("version", format!("unsupported config version {}, expected {CONFIG_VERSION}", config.version)));
    }
    let space = config.space.as_ref().map(|s| s.build().map_err(|e| config_error("space", e))).transpose()?;
    let energy = config.energy.build(space.as_ref(), "energy")?;
    if let Some(tol) = config.flow_tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(config_error("flow_tol", "must be positive"));
        }
    }
    prox::prox(&energy, &Field::zeros(energy.space()), 1.0, &config.solver).map_err(|e| config_error("solver", e))?;
    for (i, suite) in config.suites.iter().enumerate() {
        suite.sampler().build(config.seed).map_err(|e| config_error(format!("suites[{i}].sampler"), e))?;
    }
    if let Some(trace) = &config.trace {
        Field::new(energy.space().clone(), trace.initial.clone()).map_err(|e| config_error("trace.initial", e))?;
        if trace.lambdas.is_empty() || trace.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(config_error("trace.lambdas", "need at least one positive lambda"));
        }
    }
    Ok((config, energy))
}

pub fn load(path: &Path) -> std::result::Result<Loaded, ConfigError> {
    let bytes = fs::read(path).map_err(|e| config_error("", format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| config_error("", "config is not UTF-8"))?;
    let (config, energy) = parse_config(&text)?;
    let checker = Checker {
        exec: Execution::Parallel,
        tol: config.tolerances,
        prox: config.solver,
        flow_tol: config.flow_tol.unwrap_or(Checker::default().flow_tol),
    };
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    Ok(Loaded { config, energy, checker, hash: hex::encode(Sha256::digest(&bytes)), dir, stem })
}

/// Outcome of one suite in the report.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub index: usize,
    pub check: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub tool: Value,
    pub config_hash: String,
    pub seed: u64,
    pub energy: Value,
    pub solver: ProxConfig,
    pub tolerances: Tolerances,
    pub flow_tol: f64,
    pub environment: Value,
    pub verdict: Verdict,
    pub exit_code: i32,
    pub suites: Vec<SuiteOutcome>,
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
    }
}

/// Runs every suite on at most `workers` threads. Suites that fail their
/// preconditions make the whole run a configuration error.
pub fn execute(loaded: &Loaded, workers: usize) -> std::result::Result<RunReport, ConfigError> {
    let suites = &loaded.config.suites;
    let run_all = || {
        map_slice(Execution::Parallel, &(0..suites.len()).collect::<Vec<_>>(), |&i| {
            suites[i].run(&loaded.checker, &loaded.energy, loaded.config.seed)
        })
    };
    let results = run_in_pool(workers.max(1), run_all);
    let mut outcomes = Vec::with_capacity(suites.len());
    for (i, (suite, result)) in suites.iter().zip(results).enumerate() {
        match result {
            Ok(report) => outcomes.push(SuiteOutcome { index: i, check: suite.name().into(), verdict: report.verdict, report: Some(report), error: None }),
            Err(e) => return Err(config_error(format!("suites[{i}]"), format!("{}: {e}", suite.name()))),
        }
    }
    let verdict = outcomes.iter().fold(Verdict::Pass, |v, o| v.combine(o.verdict));
    Ok(RunReport {
        schema: REPORT_SCHEMA,
        tool: json!({"name": "dirichlet", "version": env!("CARGO_PKG_VERSION")}),
        config_hash: loaded.hash.clone(),
        seed: loaded.config.seed,
        energy: loaded.energy.describe(),
        solver: loaded.config.solver,
        tolerances: loaded.config.tolerances,
        flow_tol: loaded.checker.flow_tol,
        environment: json!({
            "parallel_feature": cfg!(feature = "parallel"),
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
        }),
        verdict,
        exit_code: exit_code(verdict),
        suites: outcomes,
    })
}

#[cfg(feature = "parallel")]
fn run_in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_in_pool<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

fn resolve(dir: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

/// Writes the report and per-suite CSVs.
pub fn write_outputs(loaded: &Loaded, report: &RunReport, csv_dir: Option<&Path>) -> Result<PathBuf> {
    let path = match &loaded.config.outputs.report {
        Some(p) => resolve(&loaded.dir, p),
        None => loaded.dir.join(format!("{}.report.json", loaded.stem)),
    };
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(&path, text + "\n").map_err(io)?;
    let csv_dir = csv_dir.map(Path::to_path_buf).or_else(|| loaded.config.outputs.csv_dir.as_ref().map(|d| resolve(&loaded.dir, d)));
    if let Some(dir) = csv_dir {
        fs::create_dir_all(&dir).map_err(io)?;
        for o in &report.suites {
            if let Some(r) = &o.report {
                let mut s = String::from(CSV_HEADER);
                s.push('\n');
                for row in r.csv_rows() {
                    s.push_str(&row);
                    s.push('\n');
                }
                fs::write(dir.join(format!("{:02}_{}.csv", o.index, o.check)), s).map_err(io)?;
            }
        }
    }
    Ok(path)
}

/// `run <config>`: returns the exit code and writes diagnostics to `err`.
pub fn run(config: &Path, workers: usize, csv_dir: Option<&Path>, err: &mut dyn std::io::Write) -> i32 {
    let loaded = match load(config) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_CONFIG;
        }
    };
    let report = match execute(&loaded, workers) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_CONFIG;
        }
    };
    match write_outputs(&loaded, &report, csv_dir) {
        Ok(path) => {
            if report.exit_code != EXIT_PASS {
                for o in report.suites.iter().filter(|o| o.verdict != Verdict::Pass) {
                    let v = o.report.as_ref().map_or(f64::NAN, |r| r.max_violation);
                    let _ = writeln!(err, "suite {} ({}): {:?}, max violation {v:e}", o.index, o.check, o.verdict);
                }
                let _ = writeln!(err, "report written to {}", path.display());
            }
            report.exit_code
        }
        Err(e) => {
            let _ = writeln!(err, "cannot write outputs: {e}");
            EXIT_CONFIG
        }
    }
}

/// JSON Schema of [`RunConfig`], as published in `schema/run-config.v1.json`.
pub fn config_schema() -> String {
    let mut schema = serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schema serializes");
    schema["$id"] = serde_json::Value::from(format!("dirichlet/run-config.v{CONFIG_VERSION}.json"));
    let mut text = serde_json::to_string_pretty(&schema).expect("schema serializes");
    text.push('\n');
    text
}

/// Energy kinds, checks, sampler strategies and contractions with their schemas.
pub fn list_builtins() -> String {
    let mut s = String::new();
    let mut section = |title: &str, items: &[(&str, &str)]| {
        let _ = writeln!(s, "{title}:");
        for (name, schema) in items {
            let _ = writeln!(s, "  {name:<36} {schema}");
        }
    };
    section("energies", EnergySpec::KINDS);
    section("checks", CHECKS);
    section("strategies", Strategy::KINDS);
    section("contractions", CONTRACTIONS);
    s
}

/// Parses `a:b:step` into `a, a + step, ...` up to `b` inclusive.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("time grid must be `start:stop:step` with 0 <= start <= stop and step > 0, got `{spec}`"));
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if !(a >= 0.0 && b >= a && step > 0.0 && b.is_finite()) {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

/// `flow-trace`: rows `t, T_t f, E_λ(T_t f)` at the trace's smallest `λ`.
pub fn flow_trace(loaded: &Loaded, times: &[f64], exec: Execution) -> Result<String> {
    let trace = loaded.config.trace.as_ref().ok_or_else(|| Error::config("trace", "flow-trace needs a `trace` section"))?;
    let e = &loaded.energy;
    let f = Field::new(e.space().clone(), trace.initial.clone())?;
    let lambda = trace.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let cfg = loaded.config.solver;
    let tol = loaded.checker.flow_tol;
    let rows = map_slice(exec, times, |&t| -> Result<(Field, f64)> {
        let r = prox::flow(e, &f, t, tol, &cfg)?;
        let env = prox::envelope(e, &r.value, lambda, &cfg)?;
        Ok((r.value, env))
    });
    let mut s = String::from("t");
    for p in e.space().points() {
        let _ = write!(s, ",u_{p}");
    }
    let _ = writeln!(s, ",envelope");
    for (&t, row) in times.iter().zip(rows) {
        let (u, env) = row?;
        let _ = write!(s, "{t}");
        for x in u.values() {
            let _ = write!(s, ",{x}");
        }
        let _ = writeln!(s, ",{env}");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:0:1").unwrap(), vec![0.0]);
        assert_eq!(parse_grid("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0:10:0.1").unwrap().len(), 101);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn listing_is_stable_and_complete() {
        let a = list_builtins();
        assert_eq!(a, list_builtins());
        assert!(a.contains("graph_p_energy") && a.contains("check_invariance") && a.contains("shifted_pairs"));
    }

    #[test]
    fn suite_names_match_the_catalog() {
        let s = Suite::CheckWeakLocality {
            sampler: SamplerSpec { seed: None, strategy: Strategy::DisjointSupportPairs, count: 1, scale: 1.0, swap: false, project: false },
        };
        assert_eq!(s.name(), "check_weak_locality");
    }

    #[test]
    fn unknown_fields_are_located() {
        let text = r#"{"version": 1, "seed": 1, "space": {"kind": "uniform", "n": 2},
            "energy": {"kind": "squared_l2"},
            "suites": [{"check": "check_lattice_contraction", "sampler": {"strategy": {"kind": "iid_gaussian"}, "bogus": 1}}]}"#;
        let err = parse_config(text).err().unwrap();
        assert_eq!(err.field, "suites[0].sampler.bogus");
        let text = r#"{"version": 1, "seed": 1, "energy": {"kind": "nope"}}"#;
        assert!(parse_config(text).is_err());
        let text = r#"{"version": 1, "energy": {"kind": "r2_linear_box"}}"#;
        assert_eq!(parse_config(text).err().unwrap().field, "seed");
    }
}
