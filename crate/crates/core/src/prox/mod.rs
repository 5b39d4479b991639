//! Resolvents, the exponential formula, Yoshida regularizations and energy
//! recovery.
//!
//! All inner products are those of `L²_m`, so `J_λ(f)` minimizes
//! `(1/2λ)‖g − f‖²_M + E(g)` and `A_λ = (f − J_λ f)/λ` is the `L²_m`-gradient
//! of the envelope `E_λ`.

mod apg;
mod bundle;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::energy::{Capability, EnergyFunctional};
use crate::numeric::composite_gauss_legendre;
use crate::space::{same_space, weighted_dot, Field};
use crate::{Error, Result};

/// Solver settings shared by every resolvent evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub struct ProxConfig {
    /// Relative accuracy of the minimizer, in units of `1 + ‖f‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of variational-inequality probes used for certification.
    pub vi_check_samples: usize,
}

impl Default for ProxConfig {
    fn default() -> Self {
        ProxConfig { tol: 1e-10, max_iter: 200_000, vi_check_samples: 32 }
    }
}

impl ProxConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("prox tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// A computed resolvent value `J_λ(f)`.
#[derive(Debug, Clone, Serialize)]
pub struct ProxResult {
    pub minimizer: Field,
    /// `(1/2λ)‖g − f‖² + E(g)` at the minimizer, i.e. the envelope `E_λ(f)`.
    pub objective: f64,
    /// Bound on `‖g − J_λ f‖ / (1 + ‖f‖)` reported by the solver.
    pub residual: f64,
    pub iterations: usize,
    pub certified: bool,
    /// Largest variational-inequality defect over the probes.
    pub vi_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// A computed semigroup value `T_t(f)`.
#[derive(Debug, Clone, Serialize)]
pub struct FlowResult {
    pub t: f64,
    pub value: Field,
    /// Number of resolvent steps behind `value`.
    pub n_used: usize,
    /// `‖(J_{t/n})ⁿ f − (J_{t/2n})²ⁿ f‖` at the last doubling.
    pub cauchy_gap: f64,
    /// False when the depth cap was reached before the gap met the tolerance.
    pub converged: bool,
}

/// `A_λ(f)` and `E_λ(f)` together with the base point of the cyclical envelope.
#[derive(Debug, Clone, Serialize)]
pub struct YoshidaPair {
    pub lambda: f64,
    pub operator_value: Field,
    pub envelope_value: f64,
    /// `f₀ = P_{dom E}(0)`.
    pub base_point: Field,
    /// `c_λ = E_λ(f₀)`, so that `E_λ = E^λ + c_λ` with `E^λ(f₀) = 0`.
    pub base_constant: f64,
    pub certified: bool,
}

/// One probe point of [`recover_energy`].
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryEstimate {
    pub lambdas: Vec<f64>,
    /// `E^λ(f) − E^λ(f₀)` by line integration, one entry per `λ`.
    pub estimates: Vec<f64>,
    /// `E_λ(f)` reassembled as `E^λ(f) + E_λ(f₀)`; non-decreasing as `λ` decreases.
    pub envelopes: Vec<f64>,
    /// Last entry of `estimates`.
    pub limit: f64,
    /// Largest change at the final panel doubling, over the schedule.
    pub quadrature_gap: f64,
    pub quadrature_converged: bool,
}

pub(crate) struct Solution {
    pub g: Vec<f64>,
    pub objective: f64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solver state that may be reused across resolvent calls on one energy.
#[derive(Default)]
pub(crate) struct Warm {
    apg: apg::ApgState,
    bundle: bundle::Bundle,
}

enum Kind {
    Closed { chol: nalgebra::Cholesky<f64, nalgebra::Dyn>, free: Vec<usize> },
    Apg,
    Bundle,
}

/// `J_λ` for a fixed energy and step, with its factorization cached.
pub(crate) struct Resolvent<'a> {
    e: &'a EnergyFunctional,
    lambda: f64,
    cfg: ProxConfig,
    kind: Kind,
}

impl<'a> Resolvent<'a> {
    pub(crate) fn new(e: &'a EnergyFunctional, lambda: f64, cfg: ProxConfig) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive and finite, got {lambda}")));
        }
        cfg.validate()?;
        let kind = match e.capability() {
            Capability::ClosedFormProx => {
                let q = e.term().quadratic_form().expect("closed-form energies expose Q");
                let free: Vec<usize> = (0..e.space().len()).filter(|&i| e.lower()[i] != e.upper()[i]).collect();
                let m = e.space().weights();
                let k = free.len();
                let mut a = DMatrix::zeros(k, k);
                for (r, &i) in free.iter().enumerate() {
                    for (c, &j) in free.iter().enumerate() {
                        a[(r, c)] = 2.0 * lambda * q[(i, j)];
                    }
                    a[(r, r)] += m[i];
                }
                let chol = a
                    .cholesky()
                    .ok_or_else(|| Error::Solver("M + 2λQ is not positive definite; is F convex?".into()))?;
                Kind::Closed { chol, free }
            }
            Capability::SmoothPlusBox => Kind::Apg,
            Capability::SubgradientOnly if e.term().is_polyhedral() => Kind::Bundle,
            // Curved nonsmooth terms: backtracking adapts to the local
            // curvature and the variational inequality certifies the result.
            Capability::SubgradientOnly => Kind::Apg,
        };
        Ok(Resolvent { e, lambda, cfg, kind })
    }

    pub(crate) fn solve(&self, f: &[f64], warm: &mut Warm) -> Solution {
        let (lambda, cfg) = (self.lambda, self.cfg);
        match &self.kind {
            Kind::Closed { chol, free } => {
                let m = self.e.space().weights();
                let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| m[i] * f[i]));
                let sol = chol.solve(&rhs);
                let mut g = vec![0.0; f.len()];
                for (r, &i) in free.iter().enumerate() {
                    g[i] = sol[r];
                }
                let energy = self.e.value_raw(&g);
                let quad = 0.5 / lambda * weighted_dot(m, &diff(&g, f), &diff(&g, f));
                Solution { g, objective: quad + energy, energy, residual: 0.0, iterations: 1, converged: true }
            }
            Kind::Apg => apg::solve(self.e, f, lambda, cfg.tol, cfg.max_iter, &mut warm.apg),
            Kind::Bundle => bundle::solve(self.e, f, lambda, cfg.tol, cfg.max_iter, &mut warm.bundle),
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_space(e: &EnergyFunctional, f: &Field) -> Result<()> {
    if same_space(e.space(), f.space()) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

const VI_SEED: u64 = 0x5eed_0f_1ce;
const VI_RADII: [f64; 4] = [1.0, 0.1, 0.01, 1e-3];

/// Largest defect of `E(h) ≥ E(g) + ⟨(f − g)/λ, h − g⟩` over deterministic
/// probes `h` around `g`, projected into the domain.
fn vi_defect(e: &EnergyFunctional, f: &[f64], g: &[f64], energy_g: f64, lambda: f64, samples: usize) -> f64 {
    let m = e.space().weights();
    let n = f.len();
    let norm_f = weighted_dot(m, f, f).sqrt();
    let v: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b) / lambda).collect();
    let mut worst = 0.0f64;
    let mut h = vec![0.0; n];
    for k in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(VI_SEED);
        rng.set_stream(k as u64);
        let d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let dn = weighted_dot(m, &d, &d).sqrt().max(f64::MIN_POSITIVE);
        let r = lambda.min(1.0) * (1.0 + norm_f) * VI_RADII[k % VI_RADII.len()] / dn;
        for i in 0..n {
            h[i] = g[i] + r * d[i];
        }
        e.project_raw(&mut h);
        let eh = e.value_raw(&h);
        let lin: f64 = (0..n).map(|i| m[i] * v[i] * (h[i] - g[i])).sum();
        worst = worst.max(energy_g + lin - eh);
    }
    worst
}

fn finish(e: &EnergyFunctional, f: &Field, lambda: f64, cfg: &ProxConfig, sol: Solution) -> ProxResult {
    let norm_f = f.norm_l2();
    let defect = vi_defect(e, f.values(), &sol.g, sol.energy, lambda, cfg.vi_check_samples);
    let allowed = cfg.tol * (1.0 + norm_f);
    let certified = defect <= allowed;
    let diagnostic = match (sol.converged, certified) {
        (true, true) => None,
        (false, _) => Some(format!(
            "solver stopped after {} iterations with residual {:.3e}",
            sol.iterations, sol.residual
        )),
        (true, false) => Some(format!("variational inequality defect {defect:.3e} exceeds {allowed:.3e}")),
    };
    ProxResult {
        minimizer: Field::from_raw(f.space().clone(), sol.g),
        objective: sol.objective,
        residual: sol.residual,
        iterations: sol.iterations,
        certified,
        vi_violation: defect,
        diagnostic,
    }
}

/// `J_λ(f) = argmin_g (1/2λ)‖f − g‖² + E(g)`, certified on
/// `cfg.vi_check_samples` variational-inequality probes.
pub fn prox(e: &EnergyFunctional, f: &Field, lambda: f64, cfg: &ProxConfig) -> Result<ProxResult> {
    check_space(e, f)?;
    let r = Resolvent::new(e, lambda, *cfg)?;
    let sol = r.solve(f.values(), &mut Warm::default());
    Ok(finish(e, f, lambda, cfg, sol))
}

/// `J_0 = P_{closure of dom E}`.
pub fn prox_at_zero(e: &EnergyFunctional, f: &Field) -> Result<Field> {
    check_space(e, f)?;
    e.project_domain(f)
}

/// `‖J_λ(f) − J_μ((μ/λ) f + (1 − μ/λ) J_λ(f))‖`, which vanishes for an exact resolvent.
pub fn resolvent_identity_residual(e: &EnergyFunctional, f: &Field, lambda: f64, mu: f64, cfg: &ProxConfig) -> Result<f64> {
    check_space(e, f)?;
    let jl = Resolvent::new(e, lambda, *cfg)?.solve(f.values(), &mut Warm::default()).g;
    let ratio = mu / lambda;
    let inner: Vec<f64> = f.values().iter().zip(&jl).map(|(a, b)| ratio * a + (1.0 - ratio) * b).collect();
    let jm = Resolvent::new(e, mu, *cfg)?.solve(&inner, &mut Warm::default()).g;
    Ok(weighted_dot(e.space().weights(), &diff(&jl, &jm), &diff(&jl, &jm)).sqrt())
}

/// `E_λ(f)`, the Moreau envelope.
pub fn envelope(e: &EnergyFunctional, f: &Field, lambda: f64, cfg: &ProxConfig) -> Result<f64> {
    check_space(e, f)?;
    Ok(Resolvent::new(e, lambda, *cfg)?.solve(f.values(), &mut Warm::default()).objective)
}

/// Yoshida regularization at `f`, with the envelope constant at `f₀ = P(0)`.
pub fn yoshida(e: &EnergyFunctional, f: &Field, lambda: f64, cfg: &ProxConfig) -> Result<YoshidaPair> {
    let p = prox(e, f, lambda, cfg)?;
    let a: Vec<f64> = f.values().iter().zip(p.minimizer.values()).map(|(x, g)| (x - g) / lambda).collect();
    let base_point = e.project_domain(&Field::zeros(e.space()))?;
    let base_constant = envelope(e, &base_point, lambda, cfg)?;
    Ok(YoshidaPair {
        lambda,
        operator_value: Field::from_raw(f.space().clone(), a),
        envelope_value: p.objective,
        base_point,
        base_constant,
        certified: p.certified,
    })
}

pub(crate) const MAX_DEPTH: usize = 1 << 20;
const START_DEPTH: usize = 8;

/// `T_t(f) = lim_n (J_{t/n})ⁿ P f`, doubling `n` from 8 until successive
/// values differ by at most `tol·(1 + ‖f‖)` or `n` reaches 2²⁰.
pub fn flow(e: &EnergyFunctional, f: &Field, t: f64, tol: f64, cfg: &ProxConfig) -> Result<FlowResult> {
    check_space(e, f)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be finite and nonnegative, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("flow tolerance must be positive, got {tol}")));
    }
    let start = e.project_domain(f)?;
    if t == 0.0 {
        return Ok(FlowResult { t, value: start, n_used: 0, cauchy_gap: 0.0, converged: true });
    }
    let goal = tol * (1.0 + f.norm_l2());
    let m = e.space().weights();
    let mut warm = Warm::default();
    let compose = |n: usize, warm: &mut Warm| -> Result<Vec<f64>> {
        let r = Resolvent::new(e, t / n as f64, *cfg)?;
        let mut x = start.values().to_vec();
        for _ in 0..n {
            x = r.solve(&x, warm).g;
        }
        Ok(x)
    };
    let mut n = START_DEPTH;
    let mut coarse = compose(n, &mut warm)?;
    loop {
        let fine = compose(2 * n, &mut warm)?;
        let d = diff(&fine, &coarse);
        let gap = weighted_dot(m, &d, &d).sqrt();
        let converged = gap <= goal;
        if converged || 2 * n >= MAX_DEPTH {
            return Ok(FlowResult {
                t,
                value: Field::from_raw(f.space().clone(), fine),
                n_used: 2 * n,
                cauchy_gap: gap,
                converged,
            });
        }
        coarse = fine;
        n *= 2;
    }
}

/// `(J_{t/n})ⁿ P f` at a fixed depth, so that two flows can be compared
/// without mixing discretization errors.
pub(crate) fn exponential_formula(e: &EnergyFunctional, f: &Field, t: f64, n: usize, cfg: &ProxConfig) -> Result<Field> {
    check_space(e, f)?;
    let start = e.project_domain(f)?;
    if t == 0.0 || n == 0 {
        return Ok(start);
    }
    let r = Resolvent::new(e, t / n as f64, *cfg)?;
    let mut warm = Warm::default();
    let mut x = start.into_values();
    for _ in 0..n {
        x = r.solve(&x, &mut warm).g;
    }
    Ok(Field::from_raw(f.space().clone(), x))
}

/// `(f − T_h f)/h`, a one-sided difference quotient for the minimal section.
///
/// The flow is resolved to `10⁻³h²` and the resolvents to near machine
/// precision, so the quotient's error is dominated by its `O(h)` bias.
pub fn generator_probe(e: &EnergyFunctional, f: &Field, h: f64, cfg: &ProxConfig) -> Result<Field> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let tight = ProxConfig { tol: cfg.tol.min(1e-14), ..*cfg };
    let th = flow(e, f, h, 1e-3 * h * h, &tight)?;
    Ok(f.zip_with(&th.value, |a, b| (a - b) / h)?)
}

const QUAD_ORDER: usize = 8;
const QUAD_PANELS: usize = 8;
const QUAD_MAX_PANELS: usize = 1024;
const QUAD_TOL: f64 = 1e-8;

/// `E^λ(f) − E^λ(f₀) = ∫₀¹ ⟨A_λ(f₀ + s(f − f₀)), f − f₀⟩ ds` for every `λ`
/// of a decreasing schedule, by composite Gauss–Legendre quadrature with
/// panel doubling until successive values agree to `10⁻⁸(1 + |value|)`.
///
/// Fails with [`Error::NonMonotone`] when the reassembled envelopes
/// `E_λ(f)` decrease along the schedule beyond that tolerance.
pub fn recover_energy(
    e: &EnergyFunctional,
    probes: &[Field],
    lambdas: &[f64],
    f0: &Field,
    cfg: &ProxConfig,
) -> Result<Vec<RecoveryEstimate>> {
    check_space(e, f0)?;
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("lambda schedule must be positive and strictly decreasing".into()));
    }
    let m = e.space().weights();
    let resolvents = lambdas.iter().map(|&l| Resolvent::new(e, l, *cfg)).collect::<Result<Vec<_>>>()?;
    let base_env: Vec<f64> = resolvents.iter().map(|r| r.solve(f0.values(), &mut Warm::default()).objective).collect();
    let mut out = Vec::with_capacity(probes.len());
    for f in probes {
        check_space(e, f)?;
        let dir = diff(f.values(), f0.values());
        let mut estimates = Vec::with_capacity(lambdas.len());
        let mut worst_gap = 0.0f64;
        let mut all_converged = true;
        for (r, &lambda) in resolvents.iter().zip(lambdas) {
            let mut warm = Warm::default();
            let mut integrate = |panels: usize| -> f64 {
                composite_gauss_legendre(0.0, 1.0, panels, QUAD_ORDER)
                    .into_iter()
                    .map(|(s, w)| {
                        let x: Vec<f64> = f0.values().iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                        let g = r.solve(&x, &mut warm).g;
                        let a: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| (xi - gi) / lambda).collect();
                        w * weighted_dot(m, &a, &dir)
                    })
                    .sum()
            };
            let mut panels = QUAD_PANELS;
            let mut prev = integrate(panels);
            loop {
                panels *= 2;
                let next = integrate(panels);
                let gap = (next - prev).abs();
                let ok = gap <= QUAD_TOL * (1.0 + next.abs());
                if ok || panels >= QUAD_MAX_PANELS {
                    worst_gap = worst_gap.max(gap);
                    all_converged &= ok;
                    prev = next;
                    break;
                }
                prev = next;
            }
            estimates.push(prev);
        }
        let envelopes: Vec<f64> = estimates.iter().zip(&base_env).map(|(a, b)| a + b).collect();
        for (index, w) in envelopes.windows(2).enumerate() {
            let drop = w[0] - w[1];
            if drop > QUAD_TOL * (1.0 + w[0].abs()) {
                return Err(Error::NonMonotone { index: index + 1, drop });
            }
        }
        out.push(RecoveryEstimate {
            lambdas: lambdas.to_vec(),
            limit: *estimates.last().expect("schedule is nonempty"),
            estimates,
            envelopes,
            quadrature_gap: worst_gap,
            quadrature_converged: all_converged,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{graph_p_energy, r2_linear_box, r2_quadratic_box, zero_energy, Edge};
    use crate::space::MeasureSpace;

    fn two_node() -> EnergyFunctional {
        let s = MeasureSpace::uniform(2).unwrap();
        graph_p_energy(&s, &[Edge { i: 0, j: 1, w: 1.0 }], 2.0).unwrap()
    }

    fn f2(e: &EnergyFunctional, v: [f64; 2]) -> Field {
        Field::new(e.space().clone(), v.to_vec()).unwrap()
    }

    #[test]
    fn two_node_prox() {
        let e = two_node();
        let r = prox(&e, &f2(&e, [1.0, 0.0]), 0.25, &ProxConfig::default()).unwrap();
        assert!(r.certified, "{r:?}");
        assert!((r.minimizer.values()[0] - 0.75).abs() < 1e-14);
        assert!((r.minimizer.values()[1] - 0.25).abs() < 1e-14);
        let y = yoshida(&e, &f2(&e, [1.0, 0.0]), 0.25, &ProxConfig::default()).unwrap();
        assert!((y.operator_value.values()[0] - 1.0).abs() < 1e-13);
        assert!((y.operator_value.values()[1] + 1.0).abs() < 1e-13);
        assert!(y.envelope_value <= 1.0);
    }

    #[test]
    fn zero_energy_is_identity() {
        let s = MeasureSpace::uniform(3).unwrap();
        let e = zero_energy(&s);
        let f = Field::new(s, vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(prox(&e, &f, 3.0, &ProxConfig::default()).unwrap().minimizer, f);
        assert_eq!(flow(&e, &f, 2.0, 1e-8, &ProxConfig::default()).unwrap().value, f);
        assert_eq!(resolvent_identity_residual(&e, &f, 0.5, 0.25, &ProxConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn resolvent_identity_two_node() {
        let e = two_node();
        let r = resolvent_identity_residual(&e, &f2(&e, [1.0, 0.0]), 0.5, 0.25, &ProxConfig::default()).unwrap();
        assert!(r <= 1e-8, "{r}");
    }

    #[test]
    fn two_node_flow() {
        let e = two_node();
        let out = flow(&e, &f2(&e, [1.0, 0.0]), 0.5, 1e-7, &ProxConfig::default()).unwrap();
        let x = (-2.0f64).exp();
        assert!(out.converged);
        assert!((out.value.values()[0] - (0.5 + 0.5 * x)).abs() < 1e-6);
        assert!((out.value.values()[1] - (0.5 - 0.5 * x)).abs() < 1e-6);
    }

    #[test]
    fn r2_fixed_points_and_linear_stop() {
        let q = r2_quadratic_box();
        let inside = f2(&q, [0.5, 0.3]);
        let out = flow(&q, &inside, 1.0, 1e-8, &ProxConfig::default()).unwrap();
        assert!(out.value.dist_l2(&inside).unwrap() < 1e-12);
        let l = r2_linear_box();
        let out = flow(&l, &f2(&l, [0.9, 0.6]), 0.25, 1e-8, &ProxConfig::default()).unwrap();
        assert!((out.value.values()[0] - 0.65).abs() < 1e-9, "{:?}", out.value.values());
        assert!((out.value.values()[1] - 0.35).abs() < 1e-9);
    }

    #[test]
    fn subgradient_prox_certifies() {
        let l = r2_linear_box();
        let r = prox(&l, &f2(&l, [0.9, 0.6]), 0.1, &ProxConfig::default()).unwrap();
        assert!(r.certified, "{r:?}");
        assert!((r.minimizer.values()[0] - 0.8).abs() < 1e-9);
        assert!((r.minimizer.values()[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn prox_at_zero_clamps() {
        let q = r2_quadratic_box();
        assert_eq!(prox_at_zero(&q, &f2(&q, [1.5, -0.2])).unwrap().values(), &[1.0, -0.2]);
        assert!(prox(&q, &f2(&q, [1.0, 0.0]), 0.0, &ProxConfig::default()).is_err());
    }

    #[test]
    fn generator_probe_two_node() {
        let e = two_node();
        let a = generator_probe(&e, &f2(&e, [1.0, 0.0]), 1e-4, &ProxConfig::default()).unwrap();
        assert!((a.values()[0] - 2.0).abs() < 1e-2);
        assert!((a.values()[1] + 2.0).abs() < 1e-2);
    }

    #[test]
    fn recovery_two_node() {
        let e = two_node();
        let f = f2(&e, [1.0, 0.0]);
        let zero = Field::zeros(e.space());
        let est = recover_energy(&e, &[f.clone(), zero.clone()], &[1.0, 0.1, 0.01, 1e-3, 1e-4], &zero, &ProxConfig::default()).unwrap();
        assert!(est[0].estimates.windows(2).all(|w| w[1] >= w[0]));
        assert!((est[0].limit - 1.0).abs() < 1e-3);
        assert!(est[1].estimates.iter().all(|&v| v == 0.0));
    }
}
