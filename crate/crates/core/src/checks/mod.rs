//! Property harness: seeded samples, max-violation reports with witnesses.
//!
//! Every check evaluates a violation per sample (and per parameter), keeps
//! the largest one together with the inputs that attain it, and compares it
//! with a tolerance from [`Tolerances`]. Conditions with several parts are
//! reported as sub-reports; the parent carries the worst part.

mod energy;
mod operator;
mod sampler;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};

use crate::energy::EnergyFunctional;
use crate::par::{map_slice, Execution};
use crate::prox::ProxConfig;
use crate::space::MeasureSpace;
use crate::Result;

pub use energy::{default_claus_family, default_lipschitz_family, default_puchert_family};
pub use operator::Operator;
pub use sampler::{ExplicitSample, Sample, Sampler, Strategy, RESAMPLE_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    /// `fail` dominates `indeterminate`, which dominates `pass`.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Indeterminate, _) | (_, Indeterminate) => Indeterminate,
            _ => Pass,
        }
    }
}

/// Tolerance classes: exact identities, energy-only inequalities, anything
/// through the iterative solver, and limits approximated at a finite step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub struct Tolerances {
    pub exact: f64,
    pub energy: f64,
    pub solver: f64,
    pub continuity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: 1e-12, energy: 1e-10, solver: 1e-6, continuity: 1e-3 }
    }
}

/// One evaluated violation, kept for CSV dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample: usize,
    pub label: String,
    pub violation: f64,
}

fn violation_json<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_none()
    } else if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "+inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// Result of one check.
///
/// `verdict` is `pass` iff `max_violation ≤ tolerance` and every sample was
/// evaluated; a witness is present whenever `samples > 0`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    #[serde(serialize_with = "violation_json")]
    pub max_violation: f64,
    pub tolerance: f64,
    pub witness: BTreeMap<String, Value>,
    pub samples: usize,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sub_reports: Vec<CheckReport>,
    /// Excluded from the parent verdict.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub informational: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub records: Vec<SampleRecord>,
}

impl CheckReport {
    fn empty(check: &str, tolerance: f64, seed: Option<u64>) -> Self {
        CheckReport {
            check: check.to_string(),
            verdict: Verdict::Indeterminate,
            max_violation: f64::NAN,
            tolerance,
            witness: BTreeMap::new(),
            samples: 0,
            seed,
            sub_reports: Vec::new(),
            informational: false,
            notes: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Looks up a direct sub-report by name.
    pub fn sub(&self, name: &str) -> Option<&CheckReport> {
        self.sub_reports.iter().find(|r| r.check == name)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub(crate) fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    /// A parent report over `subs`. The parent takes the combined verdict of
    /// the non-informational parts and the violation, tolerance and witness of
    /// the part with the largest violation-to-tolerance ratio.
    pub fn composite(check: &str, seed: Option<u64>, subs: Vec<CheckReport>) -> CheckReport {
        let mut out = CheckReport::empty(check, 0.0, seed);
        let binding: Vec<&CheckReport> = subs.iter().filter(|r| !r.informational).collect();
        out.verdict = binding.iter().fold(Verdict::Pass, |v, r| v.combine(r.verdict));
        out.samples = subs.iter().map(|r| r.samples).max().unwrap_or(0);
        let ratio = |r: &CheckReport| {
            if r.max_violation.is_nan() {
                f64::NEG_INFINITY
            } else if r.tolerance > 0.0 {
                r.max_violation / r.tolerance
            } else {
                r.max_violation
            }
        };
        let worst = binding.iter().copied().max_by(|a, b| ratio(a).total_cmp(&ratio(b)));
        if let Some(w) = worst {
            out.max_violation = w.max_violation;
            out.tolerance = w.tolerance;
            out.witness = w.witness.clone();
            out.witness.insert("condition".into(), json!(w.check));
        }
        out.sub_reports = subs;
        out
    }

    /// Per-sample rows `check,sub_check,sample,label,violation`, recursing
    /// into sub-reports.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        self.push_rows(&self.check, &mut rows);
        rows
    }

    fn push_rows(&self, root: &str, rows: &mut Vec<String>) {
        for r in &self.records {
            rows.push(format!("{root},{},{},{},{:e}", self.check, r.sample, csv_escape(&r.label), r.violation));
        }
        for s in &self.sub_reports {
            s.push_rows(root, rows);
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const CSV_HEADER: &str = "check,sub_check,sample,label,violation";

/// One violation evaluated on a sample: its value, a label for the
/// parameter combination, and the inputs to report if it is the worst.
pub(crate) struct Eval {
    pub violation: f64,
    pub label: String,
    pub witness: BTreeMap<String, Value>,
}

impl Eval {
    pub fn new(violation: f64, label: impl Into<String>) -> Self {
        Eval { violation, label: label.into(), witness: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.witness.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}

/// `lhs − rhs` for extended reals, with `+∞` on the left counting as an
/// infinite violation and equal infinities as none.
pub(crate) fn excess(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).max(0.0)
    }
}

/// `|lhs − rhs|` for extended reals, zero when both are the same infinity.
pub(crate) fn discrepancy(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs()
    }
}

/// Folds per-sample evaluations into a report. Samples whose evaluation
/// failed make the verdict indeterminate unless a failure is already shown.
pub(crate) fn aggregate(
    check: &str,
    tolerance: f64,
    seed: Option<u64>,
    per_sample: Vec<(usize, Result<Vec<Eval>>)>,
) -> CheckReport {
    let mut report = CheckReport::empty(check, tolerance, seed);
    let mut best: Option<(f64, BTreeMap<String, Value>)> = None;
    let mut errors = 0;
    let mut first_error = None;
    let mut undefined = 0;
    for (sample, outcome) in per_sample {
        match outcome {
            Ok(evals) => {
                report.samples += 1;
                for e in evals {
                    report.records.push(SampleRecord { sample, label: e.label.clone(), violation: e.violation });
                    if e.violation.is_nan() {
                        undefined += 1;
                        continue;
                    }
                    if best.as_ref().map_or(true, |(v, _)| e.violation > *v) {
                        let mut w = e.witness;
                        w.insert("sample".into(), json!(sample));
                        if !e.label.is_empty() {
                            w.insert("label".into(), json!(e.label));
                        }
                        best = Some((e.violation, w));
                    }
                }
            }
            Err(err) => {
                errors += 1;
                first_error.get_or_insert_with(|| format!("sample {sample}: {err}"));
            }
        }
    }
    if let Some((v, w)) = best {
        report.max_violation = v;
        report.witness = w;
    }
    let exceeded = report.max_violation > tolerance;
    report.verdict = if exceeded {
        Verdict::Fail
    } else if report.max_violation.is_nan() || errors > 0 || undefined > 0 {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    if errors > 0 {
        report.notes.push(format!("{errors} sample(s) could not be evaluated; first: {}", first_error.unwrap_or_default()));
    }
    if undefined > 0 {
        report.notes.push(format!("{undefined} evaluation(s) produced an undefined violation"));
    }
    report
}

/// Settings shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checker {
    pub exec: Execution,
    pub tol: Tolerances,
    pub prox: ProxConfig,
    /// Cauchy tolerance of the exponential formula inside checks.
    pub flow_tol: f64,
}

impl Default for Checker {
    fn default() -> Self {
        Checker { exec: Execution::default(), tol: Tolerances::default(), prox: ProxConfig::default(), flow_tol: 1e-4 }
    }
}

impl Checker {
    pub fn sequential(mut self) -> Self {
        self.exec = Execution::Sequential;
        self
    }

    /// Collects samples through `prepare`, evaluates them with `eval` (in
    /// parallel when enabled) and aggregates in index order.
    pub(crate) fn run<P, F>(
        &self,
        check: &str,
        tolerance: f64,
        space: &Arc<MeasureSpace>,
        sampler: &Sampler,
        prepare: P,
        eval: F,
    ) -> Result<CheckReport>
    where
        P: Fn(Sample) -> Option<Sample> + Sync + Send,
        F: Fn(&Sample) -> Result<Vec<Eval>> + Sync + Send,
    {
        let mut reports = self.run_parts(&[(check, tolerance)], space, sampler, prepare, |s| {
            Ok(eval(s)?.into_iter().map(|e| (0, e)).collect())
        })?;
        Ok(reports.remove(0))
    }

    /// Like [`Checker::run`] for several conditions on one sample set; `eval`
    /// tags each evaluation with the index of its part.
    pub(crate) fn run_parts<P, F>(
        &self,
        parts: &[(&str, f64)],
        space: &Arc<MeasureSpace>,
        sampler: &Sampler,
        prepare: P,
        eval: F,
    ) -> Result<Vec<CheckReport>>
    where
        P: Fn(Sample) -> Option<Sample> + Sync + Send,
        F: Fn(&Sample) -> Result<Vec<(usize, Eval)>> + Sync + Send,
    {
        let collected = sampler.collect(space, self.exec, prepare)?;
        let outcomes = map_slice(self.exec, &collected.samples, |s| (s.index, eval(s)));
        let mut split: Vec<Vec<(usize, Result<Vec<Eval>>)>> = parts.iter().map(|_| Vec::new()).collect();
        for (index, outcome) in outcomes {
            match outcome {
                Ok(evals) => {
                    let mut per: Vec<Vec<Eval>> = parts.iter().map(|_| Vec::new()).collect();
                    for (k, e) in evals {
                        per[k].push(e);
                    }
                    for (k, v) in per.into_iter().enumerate() {
                        split[k].push((index, Ok(v)));
                    }
                }
                Err(err) => {
                    for part in split.iter_mut() {
                        part.push((index, Err(err.clone())));
                    }
                }
            }
        }
        let reports = parts
            .iter()
            .zip(split)
            .map(|(&(name, tol), outcomes)| {
                let mut report = aggregate(name, tol, Some(sampler.seed), outcomes);
                if !collected.complete() {
                    report.notes.push(format!(
                        "only {} of {} samples admissible after {} draws",
                        collected.samples.len(),
                        collected.requested,
                        collected.attempts
                    ));
                    if report.verdict == Verdict::Pass {
                        report.verdict = Verdict::Indeterminate;
                    }
                }
                report.witness.insert("strategy".into(), json!(sampler.strategy.name()));
                report
            })
            .collect();
        Ok(reports)
    }
}

/// A finite number, or `"+inf"`/`"-inf"`, for witnesses.
pub(crate) fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else {
        json!(if x > 0.0 { "+inf" } else { "-inf" })
    }
}

/// Clamps both fields into the domain box when the sampler asks for it.
pub(crate) fn project_sample(e: &EnergyFunctional, sampler: &Sampler, mut s: Sample) -> Option<Sample> {
    if sampler.project {
        s.u = e.project_domain(&s.u).ok()?;
        s.v = e.project_domain(&s.v).ok()?;
    }
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_precedence() {
        use Verdict::*;
        assert_eq!(Pass.combine(Indeterminate), Indeterminate);
        assert_eq!(Indeterminate.combine(Fail), Fail);
        assert_eq!(Pass.combine(Pass), Pass);
    }

    #[test]
    fn aggregation_keeps_first_maximum() {
        let outcomes = vec![
            (0, Ok(vec![Eval::new(0.5, "a").with("x", 1)])),
            (1, Ok(vec![Eval::new(0.5, "b").with("x", 2), Eval::new(0.1, "c")])),
        ];
        let r = aggregate("t", 1.0, Some(1), outcomes);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.witness["x"], json!(1));
        assert_eq!(r.records.len(), 3);
        let failing = aggregate("t", 0.1, None, vec![(0, Ok(vec![Eval::new(f64::INFINITY, "")]))]);
        assert_eq!(failing.verdict, Verdict::Fail);
        let js = serde_json::to_value(&failing).unwrap();
        assert_eq!(js["max_violation"], json!("+inf"));
    }

    #[test]
    fn errors_make_indeterminate_unless_failing() {
        let err = || Err(crate::Error::Solver("x".into()));
        let r = aggregate("t", 1.0, None, vec![(0, Ok(vec![Eval::new(0.0, "")])), (1, err())]);
        assert_eq!(r.verdict, Verdict::Indeterminate);
        let r = aggregate("t", 1.0, None, vec![(0, Ok(vec![Eval::new(2.0, "")])), (1, err())]);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn composite_takes_worst_ratio() {
        let mut a = CheckReport::empty("a", 1e-12, None);
        a.verdict = Verdict::Pass;
        a.max_violation = 1e-13;
        let mut b = CheckReport::empty("b", 1e-6, None);
        b.verdict = Verdict::Pass;
        b.max_violation = 5e-7;
        let mut c = CheckReport::empty("c", 1e-6, None);
        c.verdict = Verdict::Fail;
        c.max_violation = 1.0;
        let parent = CheckReport::composite("p", None, vec![a.clone(), b.clone(), c.informational()]);
        assert_eq!(parent.verdict, Verdict::Pass);
        assert_eq!(parent.max_violation, 5e-7);
        assert!(parent.max_violation <= parent.tolerance);
    }
}
