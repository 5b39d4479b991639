//! Finite measure spaces and real-valued fields over them.
//!
//! Every atom carries strictly positive mass, so "almost everywhere" is
//! "everywhere" and the L∞ norm is an exact maximum.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::{Error, Result};

/// A finite weighted point set `(X, m)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSpace {
    points: Vec<String>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    points: Vec<String>,
    weights: Vec<f64>,
}

impl<'de> Deserialize<'de> for MeasureSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpace::deserialize(d)?;
        MeasureSpace::validate(raw.points, raw.weights).map_err(serde::de::Error::custom)
    }
}

impl MeasureSpace {
    fn validate(points: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSpace("no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!("weight {w} at index {i} is not positive and finite")));
        }
        let mut sorted: Vec<&String> = points.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSpace(format!("duplicate point `{}`", w[0])));
        }
        Ok(MeasureSpace { points, weights })
    }

    pub fn new(points: Vec<String>, weights: Vec<f64>) -> Result<Arc<Self>> {
        Self::validate(points, weights).map(Arc::new)
    }

    /// Points named `"0"`, `"1"`, ... with the given masses.
    pub fn with_weights(weights: Vec<f64>) -> Result<Arc<Self>> {
        let points = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::new(points, weights)
    }

    /// `n` points of unit mass.
    pub fn uniform(n: usize) -> Result<Arc<Self>> {
        Self::with_weights(vec![1.0; n])
    }

    /// Uniform grid on `[0, 1]` with `n ≥ 2` nodes and trapezoidal masses
    /// (`Δx/2` at the ends, `Δx` inside), so the total mass is one.
    pub fn path_grid(n: usize) -> Result<Arc<Self>> {
        if n < 2 {
            return Err(Error::InvalidSpace(format!("a path grid needs at least 2 nodes, got {n}")));
        }
        let dx = 1.0 / (n - 1) as f64;
        let weights = (0..n).map(|i| if i == 0 || i == n - 1 { dx / 2.0 } else { dx }).collect();
        Self::with_weights(weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p == id)
    }
}

pub(crate) fn same_space(a: &Arc<MeasureSpace>, b: &Arc<MeasureSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A subset of points, kept as a sorted index set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    indices: Vec<usize>,
}

impl PointSet {
    pub fn from_indices(space: &MeasureSpace, mut indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= space.len()) {
            return Err(Error::UnknownPoint(format!("index {bad}")));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(PointSet { indices })
    }

    pub fn from_ids<S: AsRef<str>>(space: &MeasureSpace, ids: &[S]) -> Result<Self> {
        let indices = ids
            .iter()
            .map(|id| space.index_of(id.as_ref()).ok_or_else(|| Error::UnknownPoint(id.as_ref().to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(space, indices)
    }

    pub fn all(space: &MeasureSpace) -> Self {
        PointSet { indices: (0..space.len()).collect() }
    }

    pub fn empty() -> Self {
        PointSet { indices: Vec::new() }
    }

    pub fn complement(&self, space: &MeasureSpace) -> Self {
        let indices = (0..space.len()).filter(|i| !self.contains(*i)).collect();
        PointSet { indices }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Boolean mask over the points of `space`.
    pub fn mask(&self, space: &MeasureSpace) -> Result<Vec<bool>> {
        let mut mask = vec![false; space.len()];
        for &i in &self.indices {
            *mask.get_mut(i).ok_or_else(|| Error::UnknownPoint(format!("index {i}")))? = true;
        }
        Ok(mask)
    }
}

/// A real-valued function on a [`MeasureSpace`]; an element of L²_m.
///
/// Arithmetic operators panic on a space mismatch, like shape mismatches in
/// array crates; the named operations return [`Error::SpaceMismatch`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    space: Arc<MeasureSpace>,
    values: Vec<f64>,
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

impl Field {
    pub fn new(space: Arc<MeasureSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Field { space, values })
    }

    /// Internal constructor for values known to be finite and of the right length.
    pub(crate) fn from_raw(space: Arc<MeasureSpace>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), space.len());
        Field { space, values }
    }

    pub fn zeros(space: &Arc<MeasureSpace>) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn constant(space: &Arc<MeasureSpace>, c: f64) -> Self {
        Field { space: space.clone(), values: vec![c; space.len()] }
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_space(&self, other: &Field) -> bool {
        same_space(&self.space, &other.space)
    }

    fn check(&self, other: &Field) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Pointwise image under `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.space.clone(), self.values.iter().map(|&x| f(x)).collect())
    }

    /// Pointwise combination of two fields.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field::from_raw(self.space.clone(), values))
    }

    /// `Σ_i m_i u_i v_i`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check(other)?;
        Ok(weighted_dot(self.space.weights(), &self.values, &other.values))
    }

    pub fn norm_l2(&self) -> f64 {
        weighted_dot(self.space.weights(), &self.values, &self.values).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn join(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, f64::max)
    }

    pub fn meet(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, f64::min)
    }

    /// `u₊ = u ∨ 0`.
    pub fn pos_part(&self) -> Field {
        self.map(|x| x.max(0.0))
    }

    /// `u₋ = (−u)₊`, so that `u = u₊ − u₋`.
    pub fn neg_part(&self) -> Field {
        self.map(|x| (-x).max(0.0))
    }

    pub fn abs(&self) -> Field {
        self.map(f64::abs)
    }

    /// `1_Y · u`: keeps `u` on `Y` and zeroes it elsewhere.
    pub fn indicator_multiply(&self, set: &PointSet) -> Result<Field> {
        let mask = set.mask(&self.space)?;
        let values = self.values.iter().zip(mask).map(|(&v, keep)| if keep { v } else { 0.0 }).collect();
        Ok(Field::from_raw(self.space.clone(), values))
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|x| c * x)
    }

    pub fn shift(&self, c: f64) -> Field {
        self.map(|x| x + c)
    }

    /// `‖self − other‖_{L²}`.
    pub fn dist_l2(&self, other: &Field) -> Result<f64> {
        self.check(other)?;
        let w = self.space.weights();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(w)
            .map(|((a, b), m)| m * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn dist_linf(&self, other: &Field) -> Result<f64> {
        self.check(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// True when `self ≤ other` at every point.
    pub fn le(&self, other: &Field) -> Result<bool> {
        self.check(other)?;
        Ok(self.values.iter().zip(&other.values).all(|(a, b)| a <= b))
    }
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b).expect("field addition across different spaces")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b).expect("field subtraction across different spaces")
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|x| -x)
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale(self)
    }
}

/// An element `(u, v)` of the doubled space L²_m ⊕ L²_m.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldPair {
    pub first: Field,
    pub second: Field,
}

impl FieldPair {
    pub fn new(first: Field, second: Field) -> Result<Self> {
        first.check(&second)?;
        Ok(FieldPair { first, second })
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        self.first.space()
    }

    /// `(‖u‖² + ‖v‖²)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        self.first.norm_l2().hypot(self.second.norm_l2())
    }

    pub fn dist_l2(&self, other: &FieldPair) -> Result<f64> {
        Ok(self.first.dist_l2(&other.first)?.hypot(self.second.dist_l2(&other.second)?))
    }

    /// Largest pointwise discrepancy over both components.
    pub fn dist_linf(&self, other: &FieldPair) -> Result<f64> {
        Ok(self.first.dist_linf(&other.first)?.max(self.second.dist_linf(&other.second)?))
    }

    pub fn swapped(&self) -> FieldPair {
        FieldPair { first: self.second.clone(), second: self.first.clone() }
    }
}
