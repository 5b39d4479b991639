//! Scalar contractions and the stripe projections on pairs of fields.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::space::{Field, FieldPair};
use crate::{Error, Result};

/// Number of nodes of the certification grid on `[-R, R]`.
pub const CERTIFICATION_GRID: usize = 2001;

const LIPSCHITZ_SLACK: f64 = 1e-12;

/// The nested classes `Φ ⊃ Φ̊ ⊃ Φ̊^≤`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionClass {
    /// 1-Lipschitz.
    Phi,
    /// 1-Lipschitz with `φ(0) = 0`.
    PhiGrounded,
    /// Grounded and non-decreasing.
    PhiGroundedMonotone,
}

/// Parametric contraction families, addressable by name in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub enum ContractionSpec {
    Identity,
    Zero,
    Negate,
    Abs,
    PositivePart,
    NegativePart,
    /// `t ↦ c t`, `|c| ≤ 1`.
    Scale { c: f64 },
    /// `t ↦ slope · t + intercept`, `|slope| ≤ 1`.
    Affine { slope: f64, intercept: f64 },
    /// `t ↦ |t + c|`.
    AbsShift { c: f64 },
    /// `ψ_α(t) = |t − α| − α`.
    PsiAlpha { alpha: f64 },
    /// `φ_α⁺(t) = (t + α)₊ − α`.
    PhiPlus { alpha: f64 },
    /// `φ_α⁻(t) = (t + α)₋`.
    PhiMinus { alpha: f64 },
    /// `t ↦ (t ∨ lo) ∧ hi`.
    Clamp { lo: f64, hi: f64 },
    /// Soft threshold `sgn(t)(|t| − α)₊`.
    Shrink { alpha: f64 },
    /// `t ↦ (t − a)₊`.
    Ramp { a: f64 },
    /// `t ↦ (t + a) ∧ 0`.
    LowerRamp { a: f64 },
    /// `t ↦ H_α(t, 0)`.
    HFirst { alpha: f64 },
    /// `t ↦ H_α(0, t)`.
    HSecond { alpha: f64 },
    /// `t ↦ (h − |t|)₊`.
    Tent { height: f64 },
}

impl ContractionSpec {
    fn eval(&self, t: f64) -> f64 {
        use ContractionSpec::*;
        match *self {
            Identity => t,
            Zero => 0.0,
            Negate => -t,
            Abs => t.abs(),
            PositivePart => t.max(0.0),
            NegativePart => (-t).max(0.0),
            Scale { c } => c * t,
            Affine { slope, intercept } => slope * t + intercept,
            AbsShift { c } => (t + c).abs(),
            PsiAlpha { alpha } => (t - alpha).abs() - alpha,
            PhiPlus { alpha } => (t + alpha).max(0.0) - alpha,
            PhiMinus { alpha } => (-(t + alpha)).max(0.0),
            Clamp { lo, hi } => t.max(lo).min(hi),
            Shrink { alpha } => t.signum() * (t.abs() - alpha).max(0.0),
            Ramp { a } => (t - a).max(0.0),
            LowerRamp { a } => (t + a).min(0.0),
            HFirst { alpha } => h_alpha_scalar(alpha, t, 0.0),
            HSecond { alpha } => h_alpha_scalar(alpha, 0.0, t),
            Tent { height } => (height - t.abs()).max(0.0),
        }
    }

    /// Lipschitz constant and monotonicity, known in closed form.
    fn analytic(&self) -> Result<(f64, bool)> {
        use ContractionSpec::*;
        let nonneg = |name: &str, a: f64| {
            if a >= 0.0 && a.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be a finite nonnegative number, got {a}")))
            }
        };
        Ok(match *self {
            Identity => (1.0, true),
            Zero => (0.0, true),
            Negate | Abs | NegativePart => (1.0, false),
            PositivePart => (1.0, true),
            Scale { c } | Affine { slope: c, .. } => {
                if !(c.abs() <= 1.0) {
                    return Err(Error::InvalidParameter(format!("slope must lie in [-1, 1], got {c}")));
                }
                (c.abs(), c >= 0.0)
            }
            AbsShift { .. } => (1.0, false),
            PsiAlpha { alpha } | PhiMinus { alpha } => {
                nonneg("alpha", alpha)?;
                (1.0, false)
            }
            PhiPlus { alpha } | Shrink { alpha } | HFirst { alpha } | HSecond { alpha } => {
                nonneg("alpha", alpha)?;
                (1.0, true)
            }
            Ramp { a } | LowerRamp { a } => {
                nonneg("a", a)?;
                (1.0, true)
            }
            Clamp { lo, hi } => {
                if !(lo <= hi) {
                    return Err(Error::InvalidParameter(format!("clamp needs lo <= hi, got [{lo}, {hi}]")));
                }
                (1.0, true)
            }
            Tent { height } => {
                nonneg("height", height)?;
                (1.0, false)
            }
        })
    }
}

#[derive(Clone)]
enum Map {
    Parametric(ContractionSpec),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Sum(Arc<ScalarContraction>, Arc<ScalarContraction>),
}

impl fmt::Debug for Map {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Map::Parametric(s) => write!(f, "{s:?}"),
            Map::Custom(_) => write!(f, "Custom"),
            Map::Sum(a, b) => write!(f, "Sum({:?}, {:?})", a.map, b.map),
        }
    }
}

/// A 1-Lipschitz map `φ: ℝ → ℝ` with its declared class.
#[derive(Debug, Clone)]
pub struct ScalarContraction {
    map: Map,
    shift: f64,
    class: ContractionClass,
    monotone: bool,
    lipschitz_certificate: f64,
}

impl ScalarContraction {
    /// A library contraction; its class is known analytically, no grid is needed.
    pub fn parametric(spec: ContractionSpec) -> Result<Self> {
        let (lip, monotone) = spec.analytic()?;
        let grounded = spec.eval(0.0) == 0.0;
        Ok(ScalarContraction {
            class: class_of(grounded, monotone),
            map: Map::Parametric(spec),
            shift: 0.0,
            monotone,
            lipschitz_certificate: lip,
        })
    }

    /// Accepts a user-supplied map after checking the declared class on a
    /// grid of [`CERTIFICATION_GRID`] nodes spanning `[-radius, radius]`.
    pub fn certify(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        declared: ContractionClass,
        radius: f64,
    ) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("certification radius must be positive, got {radius}")));
        }
        let grid = certification_grid(radius);
        let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contraction(format!("non-finite value at t = {}", grid[i])));
        }
        let lip = max_difference_quotient(&grid, &values);
        if lip > 1.0 + LIPSCHITZ_SLACK {
            return Err(Error::Contraction(format!("difference quotient {lip} exceeds 1")));
        }
        let monotone = values.windows(2).all(|w| w[1] >= w[0]);
        if declared >= ContractionClass::PhiGrounded && f(0.0) != 0.0 {
            return Err(Error::Contraction(format!("declared grounded but φ(0) = {}", f(0.0))));
        }
        if declared == ContractionClass::PhiGroundedMonotone && !monotone {
            return Err(Error::Contraction("declared monotone but decreases on the grid".into()));
        }
        Ok(ScalarContraction {
            map: Map::Custom(Arc::new(f)),
            shift: 0.0,
            class: declared,
            monotone,
            lipschitz_certificate: lip,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let raw = match &self.map {
            Map::Parametric(s) => s.eval(t),
            Map::Custom(f) => f(t),
            Map::Sum(a, b) => a.eval(t) + b.eval(t),
        };
        raw - self.shift
    }

    pub fn apply(&self, u: &Field) -> Field {
        u.map(|t| self.eval(t))
    }

    pub fn class(&self) -> ContractionClass {
        self.class
    }

    pub fn is_grounded(&self) -> bool {
        self.class >= ContractionClass::PhiGrounded
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn lipschitz_certificate(&self) -> f64 {
        self.lipschitz_certificate
    }

    /// The spec this contraction was built from, if it is a plain library one.
    pub fn spec(&self) -> Option<&ContractionSpec> {
        match (&self.map, self.shift == 0.0) {
            (Map::Parametric(s), true) => Some(s),
            _ => None,
        }
    }

    /// `φ̊ = φ − φ(0)`.
    pub fn ground(&self) -> ScalarContraction {
        let at_zero = self.eval(0.0);
        ScalarContraction {
            map: self.map.clone(),
            shift: self.shift + at_zero,
            class: class_of(true, self.monotone),
            monotone: self.monotone,
            lipschitz_certificate: self.lipschitz_certificate,
        }
    }

    /// `φ + ψ` for grounded contractions with disjoint supports, which stays
    /// in the common class. Disjointness and the Lipschitz bound are checked
    /// on the certification grid over `[-radius, radius]`.
    pub fn sum_disjoint(a: &ScalarContraction, b: &ScalarContraction, radius: f64) -> Result<Self> {
        if !a.is_grounded() || !b.is_grounded() {
            return Err(Error::Contraction("summands must be grounded".into()));
        }
        let grid = certification_grid(radius);
        if let Some(t) = grid.iter().find(|&&t| a.eval(t) != 0.0 && b.eval(t) != 0.0) {
            return Err(Error::Contraction(format!("supports overlap at t = {t}")));
        }
        let values: Vec<f64> = grid.iter().map(|&t| a.eval(t) + b.eval(t)).collect();
        let lip = max_difference_quotient(&grid, &values);
        if lip > 1.0 + LIPSCHITZ_SLACK {
            return Err(Error::Contraction(format!("sum has difference quotient {lip}")));
        }
        let monotone = a.monotone && b.monotone;
        Ok(ScalarContraction {
            map: Map::Sum(Arc::new(a.clone()), Arc::new(b.clone())),
            shift: 0.0,
            class: class_of(true, monotone),
            monotone,
            lipschitz_certificate: lip,
        })
    }
}

fn class_of(grounded: bool, monotone: bool) -> ContractionClass {
    match (grounded, monotone) {
        (true, true) => ContractionClass::PhiGroundedMonotone,
        (true, false) => ContractionClass::PhiGrounded,
        _ => ContractionClass::Phi,
    }
}

fn certification_grid(radius: f64) -> Vec<f64> {
    let n = CERTIFICATION_GRID;
    let half = (n - 1) / 2;
    (0..n).map(|k| radius * (k as f64 - half as f64) / half as f64).collect()
}

fn max_difference_quotient(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (v[1] - v[0]).abs() / (t[1] - t[0]))
        .fold(0.0, f64::max)
}

/// `H_α(s, t) = (t − α) ∨ s ∧ (t + α)`.
pub fn h_alpha_scalar(alpha: f64, s: f64, t: f64) -> f64 {
    if alpha.is_infinite() {
        return s;
    }
    s.max(t - alpha).min(t + alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeAlpha(alpha))
    }
}

/// Pointwise median clamp `H_α(u, v)_i = clamp(u_i, v_i − α, v_i + α)`.
pub fn apply_h(alpha: f64, u: &Field, v: &Field) -> Result<Field> {
    check_alpha(alpha)?;
    u.zip_with(v, |s, t| h_alpha_scalar(alpha, s, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(schemars::JsonSchema)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(schemars::JsonSchema)]
pub enum Role {
    H,
    K,
}

/// The one-sided clamps
/// `h⁺(s,t) = s ∧ (t+α)`, `h⁻(s,t) = s ∨ (t−α)`,
/// `k⁺(s,t) = t ∨ (s−α)`, `k⁻(s,t) = t ∧ (s+α)`.
pub fn hk_scalar(side: Side, role: Role, alpha: f64, s: f64, t: f64) -> f64 {
    match (side, role) {
        (Side::Plus, Role::H) => s.min(t + alpha),
        (Side::Minus, Role::H) => s.max(t - alpha),
        (Side::Plus, Role::K) => t.max(s - alpha),
        (Side::Minus, Role::K) => t.min(s + alpha),
    }
}

pub fn apply_hk(side: Side, role: Role, alpha: f64, u: &Field, v: &Field) -> Result<Field> {
    check_alpha(alpha)?;
    u.zip_with(v, |s, t| hk_scalar(side, role, alpha, s, t))
}

/// Target set of a pair projection: `C_≤`, `C_α`, `C_α⁺` or `C_α⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StripeKind {
    Le,
    Alpha { alpha: f64 },
    AlphaPlus { alpha: f64 },
    AlphaMinus { alpha: f64 },
}

impl StripeKind {
    fn alpha(&self) -> Option<f64> {
        match *self {
            StripeKind::Le => None,
            StripeKind::Alpha { alpha } | StripeKind::AlphaPlus { alpha } | StripeKind::AlphaMinus { alpha } => {
                Some(alpha)
            }
        }
    }

    /// Pointwise projection of `(s, t)`.
    pub fn project_scalar(&self, s: f64, t: f64) -> (f64, f64) {
        let d = s - t;
        match *self {
            StripeKind::Le => {
                let e = 0.5 * d.max(0.0);
                (s - e, t + e)
            }
            StripeKind::Alpha { alpha } => {
                if d < -alpha {
                    (0.5 * (s + t - alpha), 0.5 * (s + t + alpha))
                } else if d > alpha {
                    (0.5 * (s + t + alpha), 0.5 * (s + t - alpha))
                } else {
                    (s, t)
                }
            }
            StripeKind::AlphaPlus { alpha } => {
                if d <= alpha {
                    (s, t)
                } else {
                    (0.5 * (s + t + alpha), 0.5 * (s + t - alpha))
                }
            }
            StripeKind::AlphaMinus { alpha } => {
                if d >= -alpha {
                    (s, t)
                } else {
                    (0.5 * (s + t - alpha), 0.5 * (s + t + alpha))
                }
            }
        }
    }

    /// Membership of `(s, t)` in the target set.
    pub fn contains_scalar(&self, s: f64, t: f64) -> bool {
        let d = s - t;
        match *self {
            StripeKind::Le => d <= 0.0,
            StripeKind::Alpha { alpha } => d.abs() <= alpha,
            StripeKind::AlphaPlus { alpha } => d <= alpha,
            StripeKind::AlphaMinus { alpha } => d >= -alpha,
        }
    }
}

/// Projection of a pair onto a stripe set, evaluated pointwise.
/// An infinite `α` leaves the pair unchanged.
pub fn project_pair(kind: StripeKind, w: &FieldPair) -> Result<FieldPair> {
    if let Some(a) = kind.alpha() {
        check_alpha(a)?;
    }
    let (mut first, mut second) = (Vec::with_capacity(w.first.len()), Vec::with_capacity(w.first.len()));
    for (&s, &t) in w.first.values().iter().zip(w.second.values()) {
        let (a, b) = kind.project_scalar(s, t);
        first.push(a);
        second.push(b);
    }
    let space = w.space().clone();
    Ok(FieldPair { first: Field::from_raw(space.clone(), first), second: Field::from_raw(space, second) })
}

/// Outcome of comparing `P_α⁺ ∘ P_α⁻`, `P_α⁻ ∘ P_α⁺` and `P_α`.
#[derive(Debug, Clone, Serialize)]
pub struct CompositionCheck {
    pub alpha: f64,
    pub direct: FieldPair,
    pub plus_after_minus: FieldPair,
    pub minus_after_plus: FieldPair,
    pub max_discrepancy: f64,
}

pub fn compose_identity_check(alpha: f64, w: &FieldPair) -> Result<CompositionCheck> {
    check_alpha(alpha)?;
    let plus = StripeKind::AlphaPlus { alpha };
    let minus = StripeKind::AlphaMinus { alpha };
    let direct = project_pair(StripeKind::Alpha { alpha }, w)?;
    let plus_after_minus = project_pair(plus, &project_pair(minus, w)?)?;
    let minus_after_plus = project_pair(minus, &project_pair(plus, w)?)?;
    let max_discrepancy = direct.dist_linf(&plus_after_minus)?.max(direct.dist_linf(&minus_after_plus)?);
    Ok(CompositionCheck { alpha, direct, plus_after_minus, minus_after_plus, max_discrepancy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MeasureSpace;
    use proptest::prelude::*;

    fn field(v: &[f64]) -> Field {
        Field::new(MeasureSpace::uniform(v.len()).unwrap(), v.to_vec()).unwrap()
    }

    fn pair(u: &[f64], v: &[f64]) -> FieldPair {
        let s = MeasureSpace::uniform(u.len()).unwrap();
        FieldPair::new(Field::new(s.clone(), u.to_vec()).unwrap(), Field::new(s, v.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn grounding_examples() {
        let shifted = ScalarContraction::parametric(ContractionSpec::Affine { slope: 1.0, intercept: 5.0 }).unwrap();
        assert_eq!(shifted.class(), ContractionClass::Phi);
        let g = shifted.ground();
        assert!(g.is_grounded());
        for t in [-3.0, 0.0, 2.5] {
            assert_eq!(g.eval(t), t);
        }
        let id = ScalarContraction::parametric(ContractionSpec::Identity).unwrap();
        assert_eq!(id.ground().eval(1.25), 1.25);
        let abs = ScalarContraction::parametric(ContractionSpec::AbsShift { c: 2.0 }).unwrap().ground();
        for t in [-5.0, -2.0, 0.0, 1.0] {
            assert_eq!(abs.eval(t), (t + 2.0f64).abs() - 2.0);
        }
    }

    #[test]
    fn h_alpha_examples() {
        assert_eq!(h_alpha_scalar(2.0, 5.0, 1.0), 3.0);
        let u = field(&[5.0, -4.0, 0.3]);
        let v = field(&[1.0, 2.0, 0.1]);
        assert_eq!(apply_h(0.0, &u, &v).unwrap(), v);
        let near = field(&[1.5, 1.9, 0.0]);
        assert_eq!(apply_h(1.0, &near, &v).unwrap(), near);
        assert_eq!(apply_h(-1.0, &u, &v), Err(Error::NegativeAlpha(-1.0)));
    }

    #[test]
    fn hk_examples() {
        assert_eq!(hk_scalar(Side::Plus, Role::H, 1.0, 3.0, 1.0), 2.0);
        assert_eq!(hk_scalar(Side::Plus, Role::K, 1.0, 3.0, 1.0), 2.0);
        for side in [Side::Plus, Side::Minus] {
            assert_eq!(hk_scalar(side, Role::H, 1.0, 0.5, 0.0), 0.5);
            assert_eq!(hk_scalar(side, Role::K, 1.0, 0.5, 0.0), 0.0);
        }
    }

    #[test]
    fn projection_examples() {
        let le = project_pair(StripeKind::Le, &pair(&[2.0], &[0.0])).unwrap();
        assert_eq!((le.first.values()[0], le.second.values()[0]), (1.0, 1.0));
        let a = project_pair(StripeKind::Alpha { alpha: 1.0 }, &pair(&[4.0], &[1.0])).unwrap();
        assert_eq!((a.first.values()[0], a.second.values()[0]), (3.0, 2.0));
        let inside = pair(&[0.2, 1.0], &[0.0, 1.5]);
        assert_eq!(project_pair(StripeKind::Alpha { alpha: 1.0 }, &inside).unwrap(), inside);
        let far = pair(&[100.0], &[-100.0]);
        assert_eq!(project_pair(StripeKind::Alpha { alpha: f64::INFINITY }, &far).unwrap(), far);
    }

    #[test]
    fn composition_examples() {
        let c = compose_identity_check(1.0, &pair(&[4.0], &[1.0])).unwrap();
        assert_eq!(c.max_discrepancy, 0.0);
        assert_eq!(c.plus_after_minus.first.values(), &[3.0]);
        assert_eq!(c.minus_after_plus.second.values(), &[2.0]);
        let inside = pair(&[0.5], &[0.0]);
        let c = compose_identity_check(1.0, &inside).unwrap();
        assert_eq!(c.direct, inside);
        assert_eq!(c.plus_after_minus, inside);
    }

    #[test]
    fn certification() {
        let ok = ScalarContraction::certify(|t: f64| 0.5 * t.sin(), ContractionClass::PhiGrounded, 4.0).unwrap();
        assert!(ok.lipschitz_certificate() <= 0.5 + 1e-9);
        assert!(ScalarContraction::certify(|t| 2.0 * t, ContractionClass::Phi, 1.0).is_err());
        assert!(ScalarContraction::certify(|t| t + 1.0, ContractionClass::PhiGrounded, 1.0).is_err());
        assert!(ScalarContraction::certify(|t: f64| t.abs(), ContractionClass::PhiGroundedMonotone, 1.0).is_err());
        assert!(ScalarContraction::parametric(ContractionSpec::Scale { c: 1.5 }).is_err());
        assert!(ScalarContraction::parametric(ContractionSpec::PsiAlpha { alpha: -1.0 }).is_err());
    }

    #[test]
    fn library_classes() {
        use ContractionSpec::*;
        let class = |s| ScalarContraction::parametric(s).unwrap().class();
        assert_eq!(class(PsiAlpha { alpha: 0.5 }), ContractionClass::PhiGrounded);
        assert_eq!(class(PhiPlus { alpha: 0.5 }), ContractionClass::PhiGroundedMonotone);
        assert_eq!(class(PhiMinus { alpha: 0.5 }), ContractionClass::PhiGrounded);
        assert_eq!(class(Tent { height: 0.5 }), ContractionClass::Phi);
        assert_eq!(class(HSecond { alpha: 0.5 }), ContractionClass::PhiGroundedMonotone);
        let spec: ContractionSpec = serde_json::from_str(r#"{"kind":"psi_alpha","alpha":0.5}"#).unwrap();
        assert_eq!(spec, PsiAlpha { alpha: 0.5 });
    }

    #[test]
    fn disjoint_sum() {
        let pos = ScalarContraction::parametric(ContractionSpec::Ramp { a: 0.3 }).unwrap();
        let neg = ScalarContraction::parametric(ContractionSpec::LowerRamp { a: 0.2 }).unwrap();
        let sum = ScalarContraction::sum_disjoint(&pos, &neg, 3.0).unwrap();
        assert_eq!(sum.class(), ContractionClass::PhiGroundedMonotone);
        assert_eq!(sum.eval(1.3), 1.0);
        assert_eq!(sum.eval(-1.2), -1.0);
        let id = ScalarContraction::parametric(ContractionSpec::Identity).unwrap();
        assert!(ScalarContraction::sum_disjoint(&pos, &id, 3.0).is_err());
    }

    fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|n| {
            (proptest::collection::vec(-5.0..5.0f64, n), proptest::collection::vec(-5.0..5.0f64, n))
        })
    }

    proptest! {
        #[test]
        fn composition_identity_holds((u, v) in pair_strategy(), alpha in 0.0..3.0f64) {
            let c = compose_identity_check(alpha, &pair(&u, &v)).unwrap();
            prop_assert!(c.max_discrepancy <= 1e-14);
        }

        #[test]
        fn projections_land_in_target_and_are_idempotent((u, v) in pair_strategy(), alpha in 0.0..3.0f64) {
            let w = pair(&u, &v);
            for kind in [StripeKind::Le, StripeKind::Alpha { alpha }, StripeKind::AlphaPlus { alpha }, StripeKind::AlphaMinus { alpha }] {
                let p = project_pair(kind, &w).unwrap();
                for (s, t) in p.first.values().iter().zip(p.second.values()) {
                    // membership up to one rounding of the midpoint formula
                    let (a, b) = kind.project_scalar(*s, *t);
                    prop_assert!(kind.contains_scalar(*s, *t) || ((a - s).abs() < 1e-14 && (b - t).abs() < 1e-14));
                }
                let pp = project_pair(kind, &p).unwrap();
                prop_assert!(pp.dist_linf(&p).unwrap() <= 1e-14);
            }
        }

        #[test]
        fn projections_are_nonexpansive((u, v) in pair_strategy(), shift in -2.0..2.0f64, alpha in 0.0..3.0f64) {
            let w1 = pair(&u, &v);
            let u2: Vec<f64> = u.iter().enumerate().map(|(i, x)| x + shift * (i as f64).cos()).collect();
            let w2 = pair(&u2, &v);
            for kind in [StripeKind::Le, StripeKind::Alpha { alpha }, StripeKind::AlphaPlus { alpha }, StripeKind::AlphaMinus { alpha }] {
                let d = project_pair(kind, &w1).unwrap().dist_l2(&project_pair(kind, &w2).unwrap()).unwrap();
                prop_assert!(d <= w1.dist_l2(&w2).unwrap() + 1e-12);
            }
        }

        #[test]
        fn h_alpha_is_composed_one_sided_clamp((u, v) in pair_strategy(), alpha in 0.0..3.0f64) {
            let w = pair(&u, &v);
            let direct = apply_h(alpha, &w.first, &w.second).unwrap();
            let inner = apply_hk(Side::Minus, Role::H, alpha, &w.first, &w.second).unwrap();
            let composed = apply_hk(Side::Plus, Role::H, alpha, &inner, &w.second).unwrap();
            prop_assert_eq!(direct, composed);
        }

        #[test]
        fn k_is_swapped_h((u, v) in pair_strategy(), alpha in 0.0..3.0f64) {
            let w = pair(&u, &v);
            for (side, other) in [(Side::Plus, Side::Minus), (Side::Minus, Side::Plus)] {
                let k = apply_hk(side, Role::K, alpha, &w.first, &w.second).unwrap();
                let h = apply_hk(other, Role::H, alpha, &w.second, &w.first).unwrap();
                prop_assert_eq!(k, h);
            }
        }

        #[test]
        fn grounded_contractions_shrink(t in -10.0..10.0f64, alpha in 0.0..2.0f64) {
            use ContractionSpec::*;
            for spec in [PsiAlpha { alpha }, PhiPlus { alpha }, PhiMinus { alpha }, Shrink { alpha }, HFirst { alpha }, HSecond { alpha }] {
                let phi = ScalarContraction::parametric(spec).unwrap();
                prop_assert!(phi.is_grounded());
                prop_assert!(phi.eval(t).abs() <= t.abs() + 1e-15);
            }
        }
    }
}
