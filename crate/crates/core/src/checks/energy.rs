//! Checks that only evaluate the energy: contraction inequalities, locality
//! identities and continuity at zero.

use serde_json::json;

use super::{discrepancy, excess, num, project_sample, CheckReport, Checker, Eval, Sample, Sampler, Strategy, Verdict};
use crate::contraction::{apply_h, apply_hk, ContractionClass, ContractionSpec, Role, ScalarContraction, Side};
use crate::energy::EnergyFunctional;
use crate::space::Field;
use crate::{Error, Result};

fn value(e: &EnergyFunctional, f: &Field) -> Result<f64> {
    Ok(e.evaluate(f)?.value())
}

fn finite(e: &EnergyFunctional, f: &Field) -> bool {
    e.evaluate(f).map(|v| v.is_finite()).unwrap_or(false)
}

fn label(phi: &ScalarContraction) -> serde_json::Value {
    phi.spec().map_or_else(|| json!("custom"), |s| serde_json::to_value(s).unwrap_or(json!("custom")))
}

fn parametric(specs: Vec<ContractionSpec>) -> Vec<ScalarContraction> {
    specs.into_iter().map(|s| ScalarContraction::parametric(s).expect("builtin parameters are valid")).collect()
}

/// Grounded monotone contractions used by default for the Claus condition.
pub fn default_claus_family() -> Vec<ScalarContraction> {
    use ContractionSpec::*;
    parametric(vec![
        Identity,
        PositivePart,
        Shrink { alpha: 0.2 },
        Clamp { lo: -0.3, hi: 0.4 },
        PhiPlus { alpha: 0.5 },
    ])
}

/// Grounded contractions used by default for the Puchert condition.
pub fn default_puchert_family() -> Vec<ScalarContraction> {
    use ContractionSpec::*;
    parametric(vec![Zero, Abs, Negate, PsiAlpha { alpha: 0.3 }, Shrink { alpha: 0.2 }])
}

/// Grounded contractions used by default for the Lipschitz-contraction check.
pub fn default_lipschitz_family() -> Vec<ScalarContraction> {
    use ContractionSpec::*;
    parametric(vec![
        Abs,
        Negate,
        PositivePart,
        PsiAlpha { alpha: 0.3 },
        Clamp { lo: -0.5, hi: 0.5 },
        Shrink { alpha: 0.2 },
    ])
}

fn weak_locality_pairs() -> Vec<(ScalarContraction, ScalarContraction)> {
    use ContractionSpec::*;
    parametric(vec![Ramp { a: 0.3 }, LowerRamp { a: 0.2 }]).chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect()
}

fn strong_locality_pairs() -> Vec<(ScalarContraction, ScalarContraction)> {
    use ContractionSpec::*;
    parametric(vec![Tent { height: 0.5 }, Ramp { a: 1.0 }]).chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect()
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    match alphas.iter().find(|a| !(**a >= 0.0)) {
        Some(&a) => Err(Error::NegativeAlpha(a)),
        None if alphas.is_empty() => Err(Error::InvalidParameter("alpha list is empty".into())),
        None => Ok(()),
    }
}

fn require_class(phis: &[ScalarContraction], class: ContractionClass, what: &str) -> Result<()> {
    if phis.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} list is empty")));
    }
    match phis.iter().find(|p| p.class() < class) {
        Some(p) => Err(Error::Contraction(format!("{what} {:?} is not in class {class:?}", p.spec()))),
        None => Ok(()),
    }
}

fn require_strategy(sampler: &Sampler, allowed: &[&'static str], expected: &'static str) -> Result<()> {
    let got = sampler.strategy.name();
    if allowed.contains(&got) || matches!(sampler.strategy, Strategy::Explicit { .. }) {
        Ok(())
    } else {
        Err(Error::Strategy { got: got.to_string(), expected })
    }
}

impl Checker {
    fn admit<'a>(
        &self,
        e: &'a EnergyFunctional,
        sampler: &'a Sampler,
        need: impl Fn(&Sample) -> Vec<Field> + Sync + Send + 'a,
    ) -> impl Fn(Sample) -> Option<Sample> + Sync + Send + 'a {
        move |s| {
            let s = project_sample(e, sampler, s)?;
            need(&s).iter().all(|f| finite(e, f)).then_some(s)
        }
    }

    /// `E(u∨v) + E(u∧v) ≤ E(u) + E(v)`.
    pub fn check_lattice_contraction(&self, e: &EnergyFunctional, sampler: &Sampler) -> Result<CheckReport> {
        let admit = self.admit(e, sampler, |s| vec![s.u.clone(), s.v.clone()]);
        self.run("check_lattice_contraction", self.tol.energy, e.space(), sampler, admit, |s| {
            let rhs = value(e, &s.u)? + value(e, &s.v)?;
            let lhs = value(e, &s.u.join(&s.v)?)? + value(e, &s.u.meet(&s.v)?)?;
            Ok(vec![Eval::new(excess(lhs, rhs), "")
                .with("u", &s.u)
                .with("v", &s.v)
                .with("lhs", num(lhs))
                .with("rhs", num(rhs))])
        })
    }

    /// `E(H_α(u,v)) + E(H_α(v,u)) ≤ E(u) + E(v)` for every `α` in `alphas`.
    pub fn check_strong_unit_contraction(&self, e: &EnergyFunctional, sampler: &Sampler, alphas: &[f64]) -> Result<CheckReport> {
        check_alphas(alphas)?;
        let admit = self.admit(e, sampler, |s| vec![s.u.clone(), s.v.clone()]);
        self.run("check_strong_unit_contraction", self.tol.energy, e.space(), sampler, admit, |s| {
            let rhs = value(e, &s.u)? + value(e, &s.v)?;
            alphas
                .iter()
                .map(|&a| {
                    let lhs = value(e, &apply_h(a, &s.u, &s.v)?)? + value(e, &apply_h(a, &s.v, &s.u)?)?;
                    Ok(Eval::new(excess(lhs, rhs), format!("alpha={a}"))
                        .with("u", &s.u)
                        .with("v", &s.v)
                        .with("alpha", a)
                        .with("lhs", num(lhs))
                        .with("rhs", num(rhs)))
                })
                .collect()
        })
    }

    /// `E(h_α^±(u,v)) + E(k_α^±(u,v)) ≤ E(u) + E(v)`.
    pub fn check_one_sided_unit_contraction(
        &self,
        e: &EnergyFunctional,
        side: Side,
        sampler: &Sampler,
        alphas: &[f64],
    ) -> Result<CheckReport> {
        check_alphas(alphas)?;
        let admit = self.admit(e, sampler, |s| vec![s.u.clone(), s.v.clone()]);
        let mut report = self.run("check_one_sided_unit_contraction", self.tol.energy, e.space(), sampler, admit, |s| {
            let rhs = value(e, &s.u)? + value(e, &s.v)?;
            alphas
                .iter()
                .map(|&a| {
                    let h = apply_hk(side, Role::H, a, &s.u, &s.v)?;
                    let k = apply_hk(side, Role::K, a, &s.u, &s.v)?;
                    let lhs = value(e, &h)? + value(e, &k)?;
                    Ok(Eval::new(excess(lhs, rhs), format!("alpha={a}"))
                        .with("u", &s.u)
                        .with("v", &s.v)
                        .with("alpha", a)
                        .with("lhs", num(lhs))
                        .with("rhs", num(rhs)))
                })
                .collect()
        })?;
        report.witness.insert("side".into(), json!(side));
        Ok(report)
    }

    /// `E(u − ψ∘(u−v)) + E(v + ψ∘(u−v)) ≤ E(u) + E(v)` for grounded monotone `ψ`.
    pub fn check_claus(&self, e: &EnergyFunctional, sampler: &Sampler, psis: &[ScalarContraction]) -> Result<CheckReport> {
        require_class(psis, ContractionClass::PhiGroundedMonotone, "psi")?;
        let admit = self.admit(e, sampler, |s| vec![s.u.clone(), s.v.clone()]);
        self.run("check_claus", self.tol.energy, e.space(), sampler, admit, |s| {
            let rhs = value(e, &s.u)? + value(e, &s.v)?;
            let d = &s.u - &s.v;
            psis.iter()
                .enumerate()
                .map(|(k, psi)| {
                    let pd = psi.apply(&d);
                    let lhs = value(e, &(&s.u - &pd))? + value(e, &(&s.v + &pd))?;
                    Ok(Eval::new(excess(lhs, rhs), format!("psi={k}"))
                        .with("u", &s.u)
                        .with("v", &s.v)
                        .with("psi", label(psi))
                        .with("lhs", num(lhs))
                        .with("rhs", num(rhs)))
                })
                .collect()
        })
    }

    /// `E(u − φ∘v) + E(u + φ∘v) ≤ E(u + v) + E(u − v)` for grounded `φ`.
    pub fn check_puchert(&self, e: &EnergyFunctional, sampler: &Sampler, phis: &[ScalarContraction]) -> Result<CheckReport> {
        require_class(phis, ContractionClass::PhiGrounded, "phi")?;
        let admit = self.admit(e, sampler, |s| vec![&s.u + &s.v, &s.u - &s.v]);
        self.run("check_puchert", self.tol.energy, e.space(), sampler, admit, |s| {
            let rhs = value(e, &(&s.u + &s.v))? + value(e, &(&s.u - &s.v))?;
            phis.iter()
                .enumerate()
                .map(|(k, phi)| {
                    let pv = phi.apply(&s.v);
                    let lhs = value(e, &(&s.u - &pv))? + value(e, &(&s.u + &pv))?;
                    Ok(Eval::new(excess(lhs, rhs), format!("phi={k}"))
                        .with("u", &s.u)
                        .with("v", &s.v)
                        .with("phi", label(phi))
                        .with("lhs", num(lhs))
                        .with("rhs", num(rhs)))
                })
                .collect()
        })
    }

    /// `E(φ∘u) ≤ E(u)` for grounded `φ`. Guaranteed for even Dirichlet
    /// functionals; a pass on other energies is not evidence of evenness.
    pub fn check_lipschitz_contraction(
        &self,
        e: &EnergyFunctional,
        sampler: &Sampler,
        phis: &[ScalarContraction],
    ) -> Result<CheckReport> {
        require_class(phis, ContractionClass::PhiGrounded, "phi")?;
        let admit = self.admit(e, sampler, |s| vec![s.u.clone()]);
        let report = self.run("check_lipschitz_contraction", self.tol.energy, e.space(), sampler, admit, |s| {
            let eu = value(e, &s.u)?;
            phis.iter()
                .enumerate()
                .map(|(k, phi)| {
                    let lhs = value(e, &phi.apply(&s.u))?;
                    Ok(Eval::new(excess(lhs, eu), format!("phi={k}"))
                        .with("u", &s.u)
                        .with("phi", label(phi))
                        .with("lhs", num(lhs))
                        .with("rhs", num(eu)))
                })
                .collect()
        })?;
        let note = if e.flags().even {
            "energy is flagged even: a pass is expected for Dirichlet functionals"
        } else {
            "energy is not flagged even: violations may exist outside the sampled family"
        };
        Ok(report.with_note(note))
    }

    /// The four equivalent forms of weak locality, as two-sided identities
    /// on pairs with `uv = 0`: `ℓ0` on `w = u + v`, `ℓ1` additivity of the
    /// grounded energy, `ℓ2` the lattice identity, `ℓ3` disjoint-support
    /// contractions applied to `w`.
    pub fn check_weak_locality(&self, e: &EnergyFunctional, sampler: &Sampler) -> Result<CheckReport> {
        require_strategy(sampler, &["disjoint_support_pairs"], "disjoint_support_pairs")?;
        let e0 = value(e, &Field::zeros(e.space()))?;
        if !e0.is_finite() {
            return Err(Error::InfiniteAtZero);
        }
        let pairs = weak_locality_pairs();
        let tol = self.tol.exact;
        let parts = [("l0_absolute_value", tol), ("l1_additivity", tol), ("l2_lattice_identity", tol), ("l3_disjoint_contractions", tol)];
        let admit = self.admit(e, sampler, |s| vec![s.u.clone(), s.v.clone(), &s.u + &s.v]);
        let subs = self.run_parts(&parts, e.space(), sampler, admit, |s| {
            let w = &s.u + &s.v;
            let (eu, ev, ew) = (value(e, &s.u)?, value(e, &s.v)?, value(e, &w)?);
            let base = |x: Eval| x.with("u", &s.u).with("v", &s.v);
            let mut out = Vec::new();
            let ea = value(e, &w.abs())?;
            out.push((0, base(Eval::new(discrepancy(ea, ew), "")).with("lhs", num(ea)).with("rhs", num(ew))));
            let rhs1 = (eu - e0) + (ev - e0);
            out.push((1, base(Eval::new(discrepancy(ew - e0, rhs1), "")).with("lhs", num(ew - e0)).with("rhs", num(rhs1))));
            let lhs2 = value(e, &s.u.join(&s.v)?)? + value(e, &s.u.meet(&s.v)?)?;
            out.push((2, base(Eval::new(discrepancy(lhs2, eu + ev), "")).with("lhs", num(lhs2)).with("rhs", num(eu + ev))));
            for (k, (phi, psi)) in pairs.iter().enumerate() {
                let (a, b) = (phi.apply(&w), psi.apply(&w));
                let lhs = value(e, &(&a + &b))? - e0;
                let rhs = (value(e, &a)? - e0) + (value(e, &b)? - e0);
                out.push((
                    3,
                    base(Eval::new(discrepancy(lhs, rhs), format!("pair={k}")))
                        .with("phi", label(phi))
                        .with("psi", label(psi))
                        .with("lhs", num(lhs))
                        .with("rhs", num(rhs)),
                ));
            }
            Ok(out)
        })?;
        let mut report = CheckReport::composite("check_weak_locality", Some(sampler.seed), subs);
        if !e.flags().even {
            report.notes.push("the four conditions are equivalent only for even Dirichlet functionals".into());
        }
        Ok(report)
    }

    /// The equivalent forms of strong locality on pairs with `(u − c)v = 0`:
    /// `L0` over `alphas`, `L1` additivity, `L2` with both one-sided clamp
    /// families at `|c|`, and `L3` with grounded disjoint-support contractions.
    pub fn check_strong_locality(&self, e: &EnergyFunctional, sampler: &Sampler, alphas: &[f64]) -> Result<CheckReport> {
        check_alphas(alphas)?;
        require_strategy(sampler, &["shifted_pairs"], "shifted_pairs")?;
        let e0 = value(e, &Field::zeros(e.space()))?;
        if !e0.is_finite() {
            return Err(Error::InfiniteAtZero);
        }
        let pairs = strong_locality_pairs();
        let tol = self.tol.exact;
        let parts = [
            ("L0_shifted_absolute_value", tol),
            ("L1_additivity", tol),
            ("L2_upper", tol),
            ("L2_lower", tol),
            ("L3_disjoint_contractions", tol),
        ];
        let admit = self.admit(e, sampler, |s| vec![s.u.clone(), s.v.clone(), &s.u + &s.v]);
        let subs = self.run_parts(&parts, e.space(), sampler, admit, |s| {
            let (eu, ev) = (value(e, &s.u)?, value(e, &s.v)?);
            let base = |x: Eval| x.with("u", &s.u).with("v", &s.v).with("c", s.c);
            let mut out = Vec::new();
            for &a in alphas {
                let shifted = s.u.map(|x| (x + a).abs() - a);
                let lhs = value(e, &shifted)?;
                out.push((
                    0,
                    Eval::new(discrepancy(lhs, eu), format!("alpha={a}"))
                        .with("u", &s.u)
                        .with("alpha", a)
                        .with("lhs", num(lhs))
                        .with("rhs", num(eu)),
                ));
            }
            let w = &s.u + &s.v;
            let lhs1 = value(e, &w)? - e0;
            let rhs1 = (eu - e0) + (ev - e0);
            out.push((1, base(Eval::new(discrepancy(lhs1, rhs1), "")).with("lhs", num(lhs1)).with("rhs", num(rhs1))));
            let a = s.c.abs();
            for (part, side) in [(2, Side::Plus), (3, Side::Minus)] {
                let h = apply_hk(side, Role::H, a, &s.u, &s.v)?;
                let k = apply_hk(side, Role::K, a, &s.u, &s.v)?;
                let lhs = value(e, &h)? + value(e, &k)?;
                out.push((part, base(Eval::new(discrepancy(lhs, eu + ev), "")).with("lhs", num(lhs)).with("rhs", num(eu + ev))));
            }
            for (k, (phi, psi)) in pairs.iter().enumerate() {
                let (phi0, psi0) = (phi.ground(), psi.ground());
                let (x, y) = (phi0.apply(&s.u), psi0.apply(&s.u));
                let lhs = value(e, &(&x + &y))? - e0;
                let rhs = (value(e, &x)? - e0) + (value(e, &y)? - e0);
                out.push((
                    4,
                    Eval::new(discrepancy(lhs, rhs), format!("pair={k}"))
                        .with("u", &s.u)
                        .with("phi", label(phi))
                        .with("psi", label(psi))
                        .with("lhs", num(lhs))
                        .with("rhs", num(rhs)),
                ));
            }
            Ok(out)
        })?;
        let mut report = CheckReport::composite("check_strong_locality", Some(sampler.seed), subs);
        if !e.flags().even {
            report.notes.push("the conditions are equivalent only for even Dirichlet functionals".into());
        }
        Ok(report)
    }

    /// `E(u₊ ∧ α) → E(0)` along a decreasing `alphas` schedule, for one field.
    pub fn check_continuity_at_zero(&self, e: &EnergyFunctional, u: &Field, alphas: &[f64]) -> Result<CheckReport> {
        let sample = crate::checks::ExplicitSample { u: u.values().to_vec(), v: None, c: None };
        let mut report = self.check_continuity_at_zero_sampled(e, &Sampler::explicit(vec![sample]), alphas)?;
        report.seed = None;
        Ok(report)
    }

    /// [`Checker::check_continuity_at_zero`] over the first field of every sample.
    pub fn check_continuity_at_zero_sampled(
        &self,
        e: &EnergyFunctional,
        sampler: &Sampler,
        alphas: &[f64],
    ) -> Result<CheckReport> {
        check_alphas(alphas)?;
        if alphas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("alpha schedule must be non-increasing".into()));
        }
        let e0 = value(e, &Field::zeros(e.space()))?;
        if !e0.is_finite() {
            return Err(Error::InfiniteAtZero);
        }
        let admit = self.admit(e, sampler, |s| vec![s.u.clone()]);
        let mut report = self.run("check_continuity_at_zero", self.tol.continuity, e.space(), sampler, admit, |s| {
            let values: Vec<f64> = alphas
                .iter()
                .map(|&a| value(e, &s.u.map(|x| x.max(0.0).min(a))))
                .collect::<Result<_>>()?;
            let last = *values.last().expect("schedule is nonempty");
            Ok(vec![Eval::new(discrepancy(last, e0), "")
                .with("u", &s.u)
                .with("alphas", alphas)
                .with("values", values.iter().map(|&v| num(v)).collect::<Vec<_>>())
                .with("e_zero", num(e0))])
        })?;
        if !e.flags().even {
            report.notes.push("continuity at zero is guaranteed only for even Dirichlet functionals".into());
            if report.verdict != Verdict::Fail {
                report.verdict = Verdict::Indeterminate;
            }
        }
        Ok(report)
    }
}
