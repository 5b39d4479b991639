//! Checks on resolvents, semigroups and Yoshida approximations.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use super::{discrepancy, excess, num, project_sample, CheckReport, Checker, Eval, Sample, Sampler, Strategy, Verdict};
use crate::contraction::compose_identity_check;
use crate::energy::{Capability, EnergyFunctional};
use crate::prox::{self, exponential_formula, ProxConfig};
use crate::space::{Field, FieldPair, MeasureSpace, PointSet};
use crate::{Error, Result};

type Map = dyn Fn(&Field) -> Result<Field> + Send + Sync;

/// A named map `Field → Field` on one space, optionally tied to the energy
/// whose domain it acts on.
#[derive(Clone)]
pub struct Operator {
    name: String,
    space: Arc<MeasureSpace>,
    energy: Option<EnergyFunctional>,
    map: Arc<Map>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator").field("name", &self.name).field("points", &self.space.len()).finish()
    }
}

impl Operator {
    pub fn new(
        name: impl Into<String>,
        space: Arc<MeasureSpace>,
        map: impl Fn(&Field) -> Result<Field> + Send + Sync + 'static,
    ) -> Self {
        Operator { name: name.into(), space, energy: None, map: Arc::new(map) }
    }

    /// `J_λ` of `e`; an uncertified solve is an error.
    pub fn resolvent(e: &EnergyFunctional, lambda: f64, cfg: ProxConfig) -> Self {
        let energy = e.clone();
        Operator {
            name: format!("resolvent(lambda={lambda})"),
            space: e.space().clone(),
            energy: Some(e.clone()),
            map: Arc::new(move |f| certified_prox(&energy, f, lambda, &cfg)),
        }
    }

    /// `T_t` of `e`, resolved to Cauchy tolerance `tol`.
    pub fn flow(e: &EnergyFunctional, t: f64, tol: f64, cfg: ProxConfig) -> Self {
        let energy = e.clone();
        Operator {
            name: format!("flow(t={t})"),
            space: e.space().clone(),
            energy: Some(e.clone()),
            map: Arc::new(move |f| Ok(converged_flow(&energy, f, t, tol, &cfg)?.0)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        (self.map)(f)
    }
}

fn certified_prox(e: &EnergyFunctional, f: &Field, lambda: f64, cfg: &ProxConfig) -> Result<Field> {
    let r = prox::prox(e, f, lambda, cfg)?;
    if r.certified {
        Ok(r.minimizer)
    } else {
        Err(Error::Solver(format!(
            "resolvent at lambda={lambda} not certified (residual {:e}, vi violation {:e})",
            r.residual, r.vi_violation
        )))
    }
}

fn converged_flow(e: &EnergyFunctional, f: &Field, t: f64, tol: f64, cfg: &ProxConfig) -> Result<(Field, usize)> {
    let r = prox::flow(e, f, t, tol, cfg)?;
    if r.converged {
        Ok((r.value, r.n_used))
    } else {
        Err(Error::Solver(format!("flow at t={t} hit the depth cap with gap {:e}", r.cauchy_gap)))
    }
}

fn yoshida_operator(e: &EnergyFunctional, f: &Field, lambda: f64, cfg: &ProxConfig) -> Result<Field> {
    let g = certified_prox(e, f, lambda, cfg)?;
    Ok((f - &g).scale(1.0 / lambda))
}

fn check_lambdas(name: &str, list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} list is empty")));
    }
    match list.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(x) => Err(Error::InvalidParameter(format!("{name} values must be positive, got {x}"))),
        None => Ok(()),
    }
}

fn check_times(list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidParameter("t list is empty".into()));
    }
    match list.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        Some(x) => Err(Error::InvalidParameter(format!("t values must be nonnegative, got {x}"))),
        None => Ok(()),
    }
}

fn rename(mut r: CheckReport, qualifier: &str) -> CheckReport {
    r.check = format!("{}[{qualifier}]", r.check);
    r
}

fn finite(e: &EnergyFunctional, f: &Field) -> bool {
    e.evaluate(f).map(|v| v.is_finite()).unwrap_or(false)
}

fn value(e: &EnergyFunctional, f: &Field) -> Result<f64> {
    Ok(e.evaluate(f)?.value())
}

fn same_space(e: &EnergyFunctional, y: &PointSet) -> Result<()> {
    y.mask(e.space()).map(|_| ())
}

/// Shrinkage levels of the normal-contraction pairing in the Dirichlet operator check.
const PAIRING_ALPHAS: [f64; 3] = [0.1, 0.3, 1.0];

impl Checker {
    fn operator_samples<'a>(&self, op: &'a Operator, sampler: &'a Sampler) -> impl Fn(Sample) -> Option<Sample> + Sync + Send + 'a {
        move |s| match &op.energy {
            Some(e) => project_sample(e, sampler, s),
            None => Some(s),
        }
    }

    /// `u ≤ v ⟹ op(u) ≤ op(v)`; violation is `max (op(u) − op(v))₊`.
    pub fn check_order_preserving_operator(&self, op: &Operator, sampler: &Sampler) -> Result<CheckReport> {
        if !matches!(sampler.strategy, Strategy::OrderedPairs | Strategy::Explicit { .. }) {
            return Err(Error::Strategy { got: sampler.strategy.name().into(), expected: "ordered_pairs" });
        }
        let report = self.run("check_order_preserving_operator", self.tol.solver, op.space(), sampler, self.operator_samples(op, sampler), |s| {
            let (a, b) = (op.apply(&s.u)?, op.apply(&s.v)?);
            let v = (&a - &b).values().iter().fold(0.0f64, |m, &x| m.max(x));
            Ok(vec![Eval::new(v, "").with("u", &s.u).with("v", &s.v).with("op_u", &a).with("op_v", &b)])
        })?;
        Ok(report.with_note(format!("operator {}", op.name())))
    }

    /// `‖op(u) − op(v)‖∞ ≤ ‖u − v‖∞`.
    pub fn check_linf_nonexpansive_operator(&self, op: &Operator, sampler: &Sampler) -> Result<CheckReport> {
        let report = self.run("check_linf_nonexpansive_operator", self.tol.solver, op.space(), sampler, self.operator_samples(op, sampler), |s| {
            let (a, b) = (op.apply(&s.u)?, op.apply(&s.v)?);
            let lhs = a.dist_linf(&b)?;
            let rhs = s.u.dist_linf(&s.v)?;
            Ok(vec![Eval::new(excess(lhs, rhs), "")
                .with("u", &s.u)
                .with("v", &s.v)
                .with("lhs", num(lhs))
                .with("rhs", num(rhs))])
        })?;
        Ok(report.with_note(format!("operator {}", op.name())))
    }

    /// Monotonicity pairings of `A = A_λ`: `⟨Au − Av, (u−v)₊⟩ ≥ 0` and
    /// `⟨Au − Av, shrink_α(u−v)⟩ ≥ 0`. The negative-part pairing is reported
    /// for information only.
    pub fn check_dirichlet_operator(&self, e: &EnergyFunctional, lambda_small: f64, sampler: &Sampler) -> Result<CheckReport> {
        check_lambdas("lambda", &[lambda_small])?;
        let tol = self.tol.solver;
        let parts = [("positive_part_pairing", tol), ("shrink_pairing", tol), ("negative_part_pairing", tol)];
        let cfg = self.prox;
        let mut subs = self.run_parts(&parts, e.space(), sampler, |s| project_sample(e, sampler, s), |s| {
            let au = yoshida_operator(e, &s.u, lambda_small, &cfg)?;
            let av = yoshida_operator(e, &s.v, lambda_small, &cfg)?;
            let da = &au - &av;
            let d = &s.u - &s.v;
            let base = |x: Eval| x.with("u", &s.u).with("v", &s.v).with("lambda", lambda_small);
            let pos = da.inner(&d.pos_part())?;
            let mut out = vec![(0, base(Eval::new((-pos).max(0.0), "")).with("pairing", num(pos)))];
            for a in PAIRING_ALPHAS {
                let shrunk = d.map(|x| x.signum() * (x.abs() - a).max(0.0));
                let p = da.inner(&shrunk)?;
                out.push((1, base(Eval::new((-p).max(0.0), format!("alpha={a}"))).with("alpha", a).with("pairing", num(p))));
            }
            let neg = da.inner(&d.neg_part())?;
            out.push((2, base(Eval::new(neg.abs(), "")).with("pairing", num(neg))));
            Ok(out)
        })?;
        subs[2] = std::mem::replace(&mut subs[2], CheckReport::empty("", 0.0, None))
            .informational()
            .with_note("the negative-part pairing vanishes only in special cases and does not enter the verdict");
        let mut report = CheckReport::composite("check_dirichlet_operator", Some(sampler.seed), subs);
        report.witness.insert("lambda".into(), json!(lambda_small));
        Ok(report)
    }

    /// The four conditions of double invariance for the band `Y`:
    /// (i) commutation of `T_t` with `P` and `P⊥`, (ii) of `A_λ` with `P` at
    /// the smallest `λ`, (iii) of `J_λ` with `P` and `P⊥`, and (iv)
    /// additivity `Ě(f) = Ě(Pf) + Ě(P⊥f)` of the grounded energy.
    pub fn check_invariance(
        &self,
        e: &EnergyFunctional,
        y: &PointSet,
        t_list: &[f64],
        lambda_list: &[f64],
        sampler: &Sampler,
    ) -> Result<CheckReport> {
        same_space(e, y)?;
        check_times(t_list)?;
        check_lambdas("lambda", lambda_list)?;
        let e0 = value(e, &Field::zeros(e.space()))?;
        if !e0.is_finite() {
            return Err(Error::InfiniteAtZero);
        }
        let lambda_min = lambda_list.iter().copied().fold(f64::INFINITY, f64::min);
        let yc = y.complement(e.space());
        let p = |f: &Field| f.indicator_multiply(y);
        let q = |f: &Field| f.indicator_multiply(&yc);
        let (tol, cfg, flow_tol) = (self.tol.solver, self.prox, self.flow_tol);
        let parts = [
            ("i_semigroup_commutes", tol),
            ("ii_generator_commutes", tol),
            ("iii_resolvent_commutes", tol),
            ("iv_energy_additive", self.tol.exact),
        ];
        let admit = |s: Sample| {
            let s = project_sample(e, sampler, s)?;
            let ok = finite(e, &s.u) && finite(e, &p(&s.u).ok()?) && finite(e, &q(&s.u).ok()?);
            ok.then_some(s)
        };
        let subs = self.run_parts(&parts, e.space(), sampler, admit, |s| {
            let f = &s.u;
            let (pf, qf) = (p(f)?, q(f)?);
            let scale = 1.0 + f.norm_l2();
            let mut out = Vec::new();
            for &t in t_list {
                let (tf, n) = converged_flow(e, f, t, flow_tol, &cfg)?;
                let tp = exponential_formula(e, &pf, t, n, &cfg)?;
                let tq = exponential_formula(e, &qf, t, n, &cfg)?;
                let dp = p(&tf)?.dist_l2(&tp)?;
                let dq = q(&tf)?.dist_l2(&tq)?;
                out.push((0, Eval::new(dp.max(dq) / scale, format!("t={t}")).with("f", f).with("t", t).with("depth", n).with("projection_gap", num(dp)).with("complement_gap", num(dq))));
            }
            let af = yoshida_operator(e, f, lambda_min, &cfg)?;
            let apf = yoshida_operator(e, &pf, lambda_min, &cfg)?;
            let d2 = p(&af)?.dist_l2(&apf)?;
            out.push((1, Eval::new(d2 / scale, format!("lambda={lambda_min}")).with("f", f).with("lambda", lambda_min)));
            for &l in lambda_list {
                let jf = certified_prox(e, f, l, &cfg)?;
                let dp = p(&jf)?.dist_l2(&certified_prox(e, &pf, l, &cfg)?)?;
                let dq = q(&jf)?.dist_l2(&certified_prox(e, &qf, l, &cfg)?)?;
                out.push((2, Eval::new(dp.max(dq) / scale, format!("lambda={l}")).with("f", f).with("lambda", l).with("projection_gap", num(dp)).with("complement_gap", num(dq))));
            }
            let lhs = value(e, f)? - e0;
            let rhs = (value(e, &pf)? - e0) + (value(e, &qf)? - e0);
            out.push((3, Eval::new(discrepancy(lhs, rhs), "").with("f", f).with("lhs", num(lhs)).with("rhs", num(rhs))));
            Ok(out)
        })?;
        let mut report = CheckReport::composite("check_invariance", Some(sampler.seed), subs);
        let doubly = report.verdict == Verdict::Pass;
        report.witness.insert("doubly_invariant".into(), json!(doubly));
        report.witness.insert("y".into(), json!(y.indices()));
        Ok(report)
    }

    /// `T_t` keeps fields supported in `Y` supported in `Y`, and
    /// `E(1_Y f) ≤ E(f)`.
    pub fn check_plain_invariance(&self, e: &EnergyFunctional, y: &PointSet, t_list: &[f64], sampler: &Sampler) -> Result<CheckReport> {
        same_space(e, y)?;
        check_times(t_list)?;
        let yc = y.complement(e.space());
        let (cfg, flow_tol) = (self.prox, self.flow_tol);
        let parts = [("support_leakage", self.tol.solver), ("energy_decrease", self.tol.energy)];
        let admit = |s: Sample| {
            let mut s = project_sample(e, sampler, s)?;
            s.u = e.project_domain(&s.u).ok()?;
            finite(e, &s.u).then_some(s)
        };
        let subs = self.run_parts(&parts, e.space(), sampler, admit, |s| {
            let f = &s.u;
            let g = f.indicator_multiply(y)?;
            let eg = value(e, &g)?;
            let ef = value(e, f)?;
            let mut out = vec![(1, Eval::new(excess(eg, ef), "").with("f", f).with("lhs", num(eg)).with("rhs", num(ef)))];
            if eg.is_finite() {
                for &t in t_list {
                    let (tg, n) = converged_flow(e, &g, t, flow_tol, &cfg)?;
                    let leak = tg.indicator_multiply(&yc)?.norm_l2() / (1.0 + g.norm_l2());
                    out.push((0, Eval::new(leak, format!("t={t}")).with("g", &g).with("t", t).with("depth", n).with("flow", &tg)));
                }
            }
            Ok(out)
        })?;
        let mut report = CheckReport::composite("check_plain_invariance", Some(sampler.seed), subs);
        report.witness.insert("y".into(), json!(y.indices()));
        Ok(report)
    }

    /// `T_t(−f) = −T_t(f)` and `J_λ(−f) = −J_λ(f)`, expected exactly when
    /// the energy is even.
    pub fn check_odd_even_consistency(
        &self,
        e: &EnergyFunctional,
        t_list: &[f64],
        lambda_list: &[f64],
        sampler: &Sampler,
    ) -> Result<CheckReport> {
        check_times(t_list)?;
        check_lambdas("lambda", lambda_list)?;
        let (tol, cfg, flow_tol) = (self.tol.solver, self.prox, self.flow_tol);
        let parts = [("semigroup_odd", tol), ("resolvent_odd", tol)];
        let subs = self.run_parts(&parts, e.space(), sampler, |s| project_sample(e, sampler, s), |s| {
            let f = &s.u;
            let neg = -f;
            let scale = 1.0 + f.norm_l2();
            let mut out = Vec::new();
            for &t in t_list {
                let (tf, n) = converged_flow(e, f, t, flow_tol, &cfg)?;
                let tn = exponential_formula(e, &neg, t, n, &cfg)?;
                let v = (&tf + &tn).norm_l2() / scale;
                out.push((0, Eval::new(v, format!("t={t}")).with("f", f).with("t", t).with("depth", n)));
            }
            for &l in lambda_list {
                let v = (&certified_prox(e, f, l, &cfg)? + &certified_prox(e, &neg, l, &cfg)?).norm_l2() / scale;
                out.push((1, Eval::new(v, format!("lambda={l}")).with("f", f).with("lambda", l)));
            }
            Ok(out)
        })?;
        let note = if e.flags().even {
            "energy is flagged even: both maps are expected to be odd"
        } else {
            "energy is not flagged even: oddness is expected to fail for some field"
        };
        Ok(CheckReport::composite("check_odd_even_consistency", Some(sampler.seed), subs).with_note(note))
    }

    /// `J_λ f = J_μ(μ/λ f + (1 − μ/λ) J_λ f)` for each pair of the list.
    pub fn check_resolvent_identity(&self, e: &EnergyFunctional, lambdas: &[(f64, f64)], sampler: &Sampler) -> Result<CheckReport> {
        if lambdas.is_empty() {
            return Err(Error::InvalidParameter("lambda pair list is empty".into()));
        }
        for &(l, m) in lambdas {
            check_lambdas("lambda", &[l, m])?;
        }
        let cfg = self.prox;
        self.run("check_resolvent_identity", self.tol.solver, e.space(), sampler, |s| project_sample(e, sampler, s), |s| {
            lambdas
                .iter()
                .map(|&(l, m)| {
                    let r = prox::resolvent_identity_residual(e, &s.u, l, m, &cfg)?;
                    Ok(Eval::new(r / (1.0 + s.u.norm_l2()), format!("lambda={l},mu={m}")).with("f", &s.u).with("lambda", l).with("mu", m))
                })
                .collect()
        })
    }

    /// `λ ↦ E_λ(f)` is non-increasing and bounded by `E(f)`; the
    /// `approximation` part compares the smallest-`λ` envelope with `E(f)`.
    pub fn check_envelope_monotonicity(&self, e: &EnergyFunctional, lambdas: &[f64], sampler: &Sampler) -> Result<CheckReport> {
        check_lambdas("lambda", lambdas)?;
        let mut sorted = lambdas.to_vec();
        sorted.sort_by(f64::total_cmp);
        let cfg = self.prox;
        let parts = [("monotone", self.tol.energy), ("bounded", self.tol.energy), ("approximation", self.tol.continuity)];
        let admit = |s: Sample| {
            let s = project_sample(e, sampler, s)?;
            finite(e, &s.u).then_some(s)
        };
        let mut subs = self.run_parts(&parts, e.space(), sampler, admit, |s| {
            let f = &s.u;
            let ef = value(e, f)?;
            let env: Vec<f64> = sorted.iter().map(|&l| prox::envelope(e, f, l, &cfg)).collect::<Result<_>>()?;
            let mut out = Vec::new();
            for (k, w) in env.windows(2).enumerate() {
                out.push((0, Eval::new(excess(w[1], w[0]), format!("lambda={}", sorted[k + 1])).with("f", f).with("envelopes", env.iter().map(|&x| num(x)).collect::<Vec<_>>())));
            }
            for (k, &v) in env.iter().enumerate() {
                out.push((1, Eval::new(excess(v, ef), format!("lambda={}", sorted[k])).with("f", f).with("envelope", num(v)).with("energy", num(ef))));
            }
            out.push((2, Eval::new(discrepancy(env[0], ef), format!("lambda={}", sorted[0])).with("f", f).with("envelope", num(env[0])).with("energy", num(ef))));
            Ok(out)
        })?;
        if e.capability() == Capability::SubgradientOnly {
            subs[2] = std::mem::replace(&mut subs[2], CheckReport::empty("", 0.0, None))
                .informational()
                .with_note("nonsmooth energies approach E(f) only as lambda tends to zero");
        }
        Ok(CheckReport::composite("check_envelope_monotonicity", Some(sampler.seed), subs))
    }

    /// The pair conditions of Markovianity on `sampler` (lattice, strong
    /// unit, both one-sided forms, Claus and Puchert with the default
    /// families) and order preservation plus L∞ nonexpansiveness of `J_λ`
    /// and `T_t` on `operator_sampler`. Order preservation always uses
    /// ordered pairs drawn with the operator sampler's seed and count.
    pub fn check_markov_suite(
        &self,
        e: &EnergyFunctional,
        sampler: &Sampler,
        operator_sampler: &Sampler,
        alphas: &[f64],
        lambdas: &[f64],
        t_list: &[f64],
    ) -> Result<CheckReport> {
        check_lambdas("lambda", lambdas)?;
        check_times(t_list)?;
        let ordered = Sampler { strategy: Strategy::OrderedPairs, ..operator_sampler.clone() };
        let mut subs = vec![
            self.check_lattice_contraction(e, sampler)?,
            self.check_strong_unit_contraction(e, sampler, alphas)?,
            rename(self.check_one_sided_unit_contraction(e, crate::contraction::Side::Plus, sampler, alphas)?, "upper"),
            rename(self.check_one_sided_unit_contraction(e, crate::contraction::Side::Minus, sampler, alphas)?, "lower"),
            self.check_claus(e, sampler, &super::default_claus_family())?,
            self.check_puchert(e, sampler, &super::default_puchert_family())?,
        ];
        let ops = lambdas
            .iter()
            .map(|&l| Operator::resolvent(e, l, self.prox))
            .chain(t_list.iter().map(|&t| Operator::flow(e, t, self.flow_tol, self.prox)));
        for op in ops {
            subs.push(rename(self.check_order_preserving_operator(&op, &ordered)?, op.name()));
            subs.push(rename(self.check_linf_nonexpansive_operator(&op, operator_sampler)?, op.name()));
        }
        Ok(CheckReport::composite("check_markov_suite", Some(sampler.seed), subs))
    }

    /// `h^+ ∘ h^- = h^- ∘ h^+ = H_α` on pairs, for each `α`.
    pub fn check_composition_identity(&self, space: &Arc<MeasureSpace>, sampler: &Sampler, alphas: &[f64]) -> Result<CheckReport> {
        if let Some(&a) = alphas.iter().find(|a| !(**a >= 0.0)) {
            return Err(Error::NegativeAlpha(a));
        }
        self.run("check_composition_identity", self.tol.exact, space, sampler, Some, |s| {
            let w = FieldPair::new(s.u.clone(), s.v.clone())?;
            alphas
                .iter()
                .map(|&a| {
                    let c = compose_identity_check(a, &w)?;
                    Ok(Eval::new(c.max_discrepancy, format!("alpha={a}")).with("u", &s.u).with("v", &s.v).with("alpha", a))
                })
                .collect()
        })
    }
}
