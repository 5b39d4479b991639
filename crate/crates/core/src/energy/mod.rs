//! Extended-real convex energies `E = F + I_K + c`.
//!
//! `F` is a finite convex function on all of `ℝⁿ` exposed through
//! [`ConvexTerm`], `K` is a product of closed intervals and `c` is a constant.
//! The interval bounds are the closure of `dom E`, so the domain projection is
//! a pointwise clamp and every builtin has one.

mod builtins;
mod luxembourg;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::space::{same_space, Field, MeasureSpace};
use crate::{Error, Result};

pub use builtins::{
    box_h1, box_h1_with_dx, ground_energy, graph_p_energy, one_sided_slope, r2_linear_box, r2_quadratic_box,
    restrict_to_subspace, shift_energy, squared_l2, zero_energy, Edge, EnergySpec, GraphSpec, PointRef,
};
pub use luxembourg::luxembourg;

/// A value in `(-∞, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EnergyValue(f64);

impl EnergyValue {
    pub const INFINITY: EnergyValue = EnergyValue(f64::INFINITY);

    /// Wraps a finite value or `+∞`; anything else is rejected.
    pub fn new(v: f64) -> Result<Self> {
        if v.is_finite() || v == f64::INFINITY {
            Ok(EnergyValue(v))
        } else {
            Err(Error::InvalidParameter(format!("energy value {v} is not in (-inf, inf]")))
        }
    }

    pub fn finite(v: f64) -> Self {
        debug_assert!(v.is_finite());
        EnergyValue(v)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        !self.0.is_finite()
    }

    /// The raw value, `f64::INFINITY` outside the domain.
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn finite_value(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }
}

impl fmt::Display for EnergyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "+inf")
        }
    }
}

impl Serialize for EnergyValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("+inf")
        }
    }
}

impl<'de> Deserialize<'de> for EnergyValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => EnergyValue::new(v).map_err(serde::de::Error::custom),
            Raw::Str(s) if s == "+inf" => Ok(EnergyValue::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {s:?}"))),
        }
    }
}

/// Which solver path the resolvent takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    /// `F` is a quadratic form and every coordinate is either free or fixed to zero.
    ClosedFormProx,
    /// `F` is continuously differentiable; the box is handled by projection.
    SmoothPlusBox,
    /// Only values and subgradients of `F` are available.
    SubgradientOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnergyFlags {
    pub even: bool,
    pub grounded: bool,
    pub translation_invariant: bool,
}

/// The finite convex part `F` of an energy, in Euclidean coordinates.
///
/// Implementations must be pure. `value` may return `+∞` only where the
/// enclosing energy's box already excludes the point.
pub trait ConvexTerm: Send + Sync + fmt::Debug {
    fn value(&self, u: &[f64]) -> f64;

    /// Writes one Euclidean subgradient of `F` at `u` into `out`.
    fn subgradient(&self, u: &[f64], out: &mut [f64]);

    /// `F` is C¹ on the box, so projected gradient steps apply.
    fn is_smooth(&self) -> bool;

    /// `F` is a finite maximum of affine functions, so cutting planes
    /// terminate. Selects the solver for nonsmooth terms.
    fn is_polyhedral(&self) -> bool {
        false
    }

    /// `Q` with `F(u) = uᵀ Q u`, when `F` is a quadratic form.
    fn quadratic_form(&self) -> Option<DMatrix<f64>> {
        None
    }
}

/// A proper convex lower semicontinuous energy on a finite measure space.
#[derive(Clone)]
pub struct EnergyFunctional {
    name: String,
    space: Arc<MeasureSpace>,
    term: Arc<dyn ConvexTerm>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    offset: f64,
    flags: EnergyFlags,
    capability: Capability,
    witness: Field,
    params: BTreeMap<String, serde_json::Value>,
}

impl fmt::Debug for EnergyFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyFunctional")
            .field("name", &self.name)
            .field("points", &self.space.len())
            .field("capability", &self.capability)
            .field("flags", &self.flags)
            .field("params", &self.params)
            .finish()
    }
}

impl EnergyFunctional {
    /// Assembles an energy from its parts.
    ///
    /// `bounds` gives the closed interval of each coordinate (use infinities
    /// for free coordinates); `witness` must have finite energy.
    pub fn new(
        name: impl Into<String>,
        space: Arc<MeasureSpace>,
        term: Arc<dyn ConvexTerm>,
        bounds: Vec<(f64, f64)>,
        flags: EnergyFlags,
        witness: Field,
    ) -> Result<Self> {
        if bounds.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), got: bounds.len() });
        }
        if let Some((i, b)) = bounds.iter().enumerate().find(|(_, (l, h))| !(l <= h) || l.is_nan() || h.is_nan()) {
            return Err(Error::InvalidParameter(format!("empty interval {b:?} at coordinate {i}")));
        }
        let (lo, hi) = bounds.into_iter().unzip();
        let mut e = EnergyFunctional {
            name: name.into(),
            space,
            term,
            lo,
            hi,
            offset: 0.0,
            flags,
            capability: Capability::SubgradientOnly,
            witness: witness.clone(),
            params: BTreeMap::new(),
        };
        e.capability = e.derive_capability();
        if !same_space(e.space(), witness.space()) {
            return Err(Error::SpaceMismatch);
        }
        if e.evaluate(&witness)?.is_infinite() {
            return Err(Error::InvalidParameter(format!("{}: witness has infinite energy", e.name)));
        }
        Ok(e)
    }

    fn derive_capability(&self) -> Capability {
        let free_or_zero = self
            .lo
            .iter()
            .zip(&self.hi)
            .all(|(&l, &h)| (l == f64::NEG_INFINITY && h == f64::INFINITY) || (l == 0.0 && h == 0.0));
        if free_or_zero && self.term.quadratic_form().is_some() {
            Capability::ClosedFormProx
        } else if self.term.is_smooth() {
            Capability::SmoothPlusBox
        } else {
            Capability::SubgradientOnly
        }
    }

    pub(crate) fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn flags(&self) -> EnergyFlags {
        self.flags
    }

    pub fn capability(&self) -> Capability {
        self.capability
    }

    pub fn witness(&self) -> &Field {
        &self.witness
    }

    /// Constructor parameters recorded for reports.
    pub fn params(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.params
    }

    /// Name and parameters as one JSON object.
    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "capability": self.capability,
            "flags": self.flags,
            "params": self.params,
        })
    }

    pub(crate) fn term(&self) -> &Arc<dyn ConvexTerm> {
        &self.term
    }

    pub(crate) fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub(crate) fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub(crate) fn offset(&self) -> f64 {
        self.offset
    }

    /// Every coordinate is unconstrained.
    pub fn has_full_domain(&self) -> bool {
        self.lo.iter().all(|&l| l == f64::NEG_INFINITY) && self.hi.iter().all(|&h| h == f64::INFINITY)
    }

    pub(crate) fn in_box(&self, u: &[f64]) -> bool {
        u.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&l, &h))| l <= x && x <= h)
    }

    /// `E(u)` on raw coordinates; `+∞` outside the domain.
    pub(crate) fn value_raw(&self, u: &[f64]) -> f64 {
        if !self.in_box(u) {
            return f64::INFINITY;
        }
        let v = self.term.value(u);
        if v.is_finite() {
            v + self.offset
        } else {
            f64::INFINITY
        }
    }

    pub fn evaluate(&self, u: &Field) -> Result<EnergyValue> {
        if !same_space(&self.space, u.space()) {
            return Err(Error::SpaceMismatch);
        }
        Ok(EnergyValue(self.value_raw(u.values())))
    }

    pub fn contains(&self, u: &Field) -> Result<bool> {
        Ok(self.evaluate(u)?.is_finite())
    }

    /// One element of `∂E(u)` in the `L²_m` inner product, i.e. `M⁻¹ s` for a
    /// Euclidean subgradient `s` of `F`. This is a subgradient of `E` at
    /// points interior to the box; `None` outside the domain.
    pub fn subgradient(&self, u: &Field) -> Result<Option<Field>> {
        if !self.contains(u)? {
            return Ok(None);
        }
        let mut s = vec![0.0; u.len()];
        self.term.subgradient(u.values(), &mut s);
        for (si, m) in s.iter_mut().zip(self.space.weights()) {
            *si /= m;
        }
        Ok(Some(Field::from_raw(self.space.clone(), s)))
    }

    pub(crate) fn project_raw(&self, u: &mut [f64]) {
        for (x, (&l, &h)) in u.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.max(l).min(h);
        }
    }

    /// Projection onto the closure of `dom E`.
    pub fn project_domain(&self, u: &Field) -> Result<Field> {
        if !same_space(&self.space, u.space()) {
            return Err(Error::SpaceMismatch);
        }
        let mut v = u.values().to_vec();
        self.project_raw(&mut v);
        Ok(Field::from_raw(self.space.clone(), v))
    }

    pub(crate) fn restricted(mut self, name: String, lo: Vec<f64>, hi: Vec<f64>, witness: Field) -> Self {
        self.name = name;
        self.lo = lo;
        self.hi = hi;
        self.witness = witness;
        self.capability = self.derive_capability();
        self
    }

    pub(crate) fn shifted(mut self, name: String, delta: f64, grounded: bool) -> Self {
        self.name = name;
        self.offset += delta;
        self.flags.grounded = grounded;
        self
    }

    pub(crate) fn with_flags(mut self, flags: EnergyFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Seeded spot checks of properness, midpoint convexity and the declared
    /// flags. Fields are drawn from a standard Gaussian and projected into
    /// the closure of the domain.
    pub fn spot_check(&self, seed: u64, count: usize) -> Result<()> {
        const CONVEXITY_SLACK: f64 = 1e-10;
        const IDENTITY_SLACK: f64 = 1e-12;
        if self.evaluate(&self.witness)?.is_infinite() {
            return Err(Error::SpotCheck(format!("{}: witness outside the domain", self.name)));
        }
        let n = self.space.len();
        let zero = Field::zeros(&self.space);
        if self.flags.grounded {
            let e0 = self.evaluate(&zero)?.value();
            if e0.abs() > IDENTITY_SLACK {
                return Err(Error::SpotCheck(format!("{}: flagged grounded but E(0) = {e0}", self.name)));
            }
        }
        let close = |a: f64, b: f64| (a - b).abs() <= IDENTITY_SLACK * (1.0 + a.abs().max(b.abs())) || a == b;
        for k in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut draw = || {
                let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                self.project_raw(&mut v);
                Field::from_raw(self.space.clone(), v)
            };
            let u = draw();
            let v = draw();
            let (eu, ev) = (self.evaluate(&u)?.value(), self.evaluate(&v)?.value());
            let mid = &(0.5 * &u) + &(0.5 * &v);
            let em = self.evaluate(&mid)?.value();
            if eu.is_finite() && ev.is_finite() {
                let bound = 0.5 * eu + 0.5 * ev;
                if em > bound + CONVEXITY_SLACK * (1.0 + bound.abs()) {
                    return Err(Error::SpotCheck(format!(
                        "{}: midpoint convexity fails by {:.3e} at sample {k}",
                        self.name,
                        em - bound
                    )));
                }
            }
            if self.flags.even {
                let en = self.evaluate(&-&u)?.value();
                if !close(eu, en) {
                    return Err(Error::SpotCheck(format!("{}: flagged even but E(u) = {eu}, E(-u) = {en}", self.name)));
                }
            }
            if self.flags.translation_invariant && eu.is_finite() {
                let c: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(seed ^ k as u64));
                let es = self.evaluate(&u.shift(c))?.value();
                if !close(eu, es) {
                    return Err(Error::SpotCheck(format!(
                        "{}: flagged translation-invariant but E(u) = {eu}, E(u + {c}) = {es}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_value_serialization() {
        assert_eq!(serde_json::to_string(&EnergyValue::finite(0.25)).unwrap(), "0.25");
        assert_eq!(serde_json::to_string(&EnergyValue::INFINITY).unwrap(), "\"+inf\"");
        let back: EnergyValue = serde_json::from_str("\"+inf\"").unwrap();
        assert!(back.is_infinite());
        assert!(EnergyValue::new(f64::NEG_INFINITY).is_err());
        assert!(EnergyValue::new(f64::NAN).is_err());
    }
}
