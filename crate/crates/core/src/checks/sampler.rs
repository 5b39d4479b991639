//! Seeded sample generation. Sample `k` is drawn from a ChaCha8 stream keyed
//! by `(seed, k)`, so sequences do not depend on evaluation order.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::contraction::{project_pair, StripeKind};
use crate::par::{map_range, Execution};
use crate::space::{Field, FieldPair, MeasureSpace};
use crate::{Error, Result};

/// Domain failures are resampled up to this multiple of the requested count.
pub const RESAMPLE_FACTOR: usize = 100;

/// How pairs `(u, v)` are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub enum Strategy {
    /// Independent Gaussian `u` and `v`.
    IidGaussian,
    /// `v = u + |δ|`, so `u ≤ v`.
    OrderedPairs,
    /// Gaussian pairs projected onto `C_α`.
    StripePairs { alpha: f64 },
    /// `u` supported on a random set `Y`, `v` on its complement.
    DisjointSupportPairs,
    /// `u = c` off a random block `B`, `v = 0` on `B`, so `(u − c)v = 0`.
    /// `c` is drawn per sample unless fixed.
    ShiftedPairs {
        #[serde(default)]
        c: Option<f64>,
    },
    /// A fixed list of samples, used verbatim.
    Explicit { samples: Vec<ExplicitSample> },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::IidGaussian => "iid_gaussian",
            Strategy::OrderedPairs => "ordered_pairs",
            Strategy::StripePairs { .. } => "stripe_pairs",
            Strategy::DisjointSupportPairs => "disjoint_support_pairs",
            Strategy::ShiftedPairs { .. } => "shifted_pairs",
            Strategy::Explicit { .. } => "explicit",
        }
    }

    /// Strategy names with their parameter schemas, in listing order.
    pub const KINDS: &'static [(&'static str, &'static str)] = &[
        ("iid_gaussian", "{}"),
        ("ordered_pairs", "{}"),
        ("stripe_pairs", "{alpha: number >= 0}"),
        ("disjoint_support_pairs", "{}"),
        ("shifted_pairs", "{c?: number}"),
        ("explicit", "{samples: [{u: [number], v?: [number], c?: number}]}"),
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(schemars::JsonSchema)]
pub struct ExplicitSample {
    pub u: Vec<f64>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
    #[serde(default)]
    pub c: Option<f64>,
}

fn default_count() -> usize {
    100
}

fn default_scale() -> f64 {
    1.0
}

/// A reproducible source of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampler {
    pub seed: u64,
    pub strategy: Strategy,
    #[serde(default = "default_count")]
    pub count: usize,
    /// Standard deviation of the Gaussian draws.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Exchange `u` and `v` after drawing.
    #[serde(default)]
    pub swap: bool,
    /// Clamp both fields into the energy's domain box before use.
    #[serde(default)]
    pub project: bool,
}

/// One drawn sample. `c` is the shift of `shifted_pairs` and 0 otherwise.
#[derive(Debug, Clone)]
pub struct Sample {
    pub index: usize,
    pub u: Field,
    pub v: Field,
    pub c: f64,
}

pub(crate) struct Collected {
    pub samples: Vec<Sample>,
    pub requested: usize,
    pub attempts: usize,
}

impl Collected {
    pub fn complete(&self) -> bool {
        self.samples.len() == self.requested
    }
}

impl Sampler {
    pub fn new(seed: u64, strategy: Strategy, count: usize) -> Self {
        Sampler { seed, strategy, count, scale: 1.0, swap: false, project: false }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn swapped(mut self) -> Self {
        self.swap = !self.swap;
        self
    }

    pub fn projected(mut self) -> Self {
        self.project = true;
        self
    }

    /// Samples of an explicit list, with `v` defaulting to zero.
    pub fn explicit(samples: Vec<ExplicitSample>) -> Self {
        let count = samples.len();
        Sampler::new(0, Strategy::Explicit { samples }, count)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampler scale must be positive, got {}", self.scale)));
        }
        match &self.strategy {
            Strategy::StripePairs { alpha } if !(*alpha >= 0.0) => Err(Error::NegativeAlpha(*alpha)),
            Strategy::ShiftedPairs { c: Some(c) } if !c.is_finite() => {
                Err(Error::InvalidParameter(format!("shift must be finite, got {c}")))
            }
            _ => Ok(()),
        }
    }

    /// Requested number of samples.
    pub fn target(&self) -> usize {
        match &self.strategy {
            Strategy::Explicit { samples } => samples.len(),
            _ => self.count,
        }
    }

    fn cap(&self) -> usize {
        match &self.strategy {
            Strategy::Explicit { samples } => samples.len(),
            _ => self.count.saturating_mul(RESAMPLE_FACTOR),
        }
    }

    /// The `index`-th raw sample on `space`.
    pub fn draw(&self, space: &Arc<MeasureSpace>, index: usize) -> Result<Sample> {
        let n = space.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let scale = self.scale;
        let gauss = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect()
        };
        let field = |v: Vec<f64>| Field::new(space.clone(), v);
        let (u, v, c) = match &self.strategy {
            Strategy::IidGaussian => {
                let u = gauss(&mut rng);
                (u, gauss(&mut rng), 0.0)
            }
            Strategy::OrderedPairs => {
                let u = gauss(&mut rng);
                let d = gauss(&mut rng);
                let v = u.iter().zip(&d).map(|(a, b)| a + b.abs()).collect();
                (u, v, 0.0)
            }
            Strategy::StripePairs { alpha } => {
                let u = gauss(&mut rng);
                let v = gauss(&mut rng);
                let w = project_pair(StripeKind::Alpha { alpha: *alpha }, &FieldPair::new(field(u)?, field(v)?)?)?;
                (w.first.into_values(), w.second.into_values(), 0.0)
            }
            Strategy::DisjointSupportPairs => {
                let a = gauss(&mut rng);
                let b = gauss(&mut rng);
                let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                let u = (0..n).map(|i| if mask[i] { a[i] } else { 0.0 }).collect();
                let v = (0..n).map(|i| if mask[i] { 0.0 } else { b[i] }).collect();
                (u, v, 0.0)
            }
            Strategy::ShiftedPairs { c } => {
                let a = gauss(&mut rng);
                let b = gauss(&mut rng);
                let drawn: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                let c = c.unwrap_or(scale * drawn);
                let block: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                let u = (0..n).map(|i| if block[i] { a[i] } else { c }).collect();
                let v = (0..n).map(|i| if block[i] { 0.0 } else { b[i] }).collect();
                (u, v, c)
            }
            Strategy::Explicit { samples } => {
                let s = samples.get(index).ok_or_else(|| {
                    Error::InvalidParameter(format!("explicit sample {index} requested but only {} given", samples.len()))
                })?;
                let v = s.v.clone().unwrap_or_else(|| vec![0.0; n]);
                (s.u.clone(), v, s.c.unwrap_or(0.0))
            }
        };
        let (u, v) = (field(u)?, field(v)?);
        let (u, v) = if self.swap { (v, u) } else { (u, v) };
        Ok(Sample { index, u, v, c })
    }

    /// Draws until `target()` samples pass `prepare`, trying at most
    /// `RESAMPLE_FACTOR` times as many indices. Acceptance depends only on
    /// the index, so the result is independent of `exec`.
    pub(crate) fn collect<P>(&self, space: &Arc<MeasureSpace>, exec: Execution, prepare: P) -> Result<Collected>
    where
        P: Fn(Sample) -> Option<Sample> + Sync + Send,
    {
        self.validate()?;
        let (target, cap) = (self.target(), self.cap());
        let mut samples = Vec::with_capacity(target);
        let mut next = 0;
        while samples.len() < target && next < cap {
            let batch = (target - samples.len()).min(cap - next);
            let drawn = map_range(exec, batch, |k| self.draw(space, next + k).map(&prepare));
            next += batch;
            for d in drawn {
                if let Some(s) = d? {
                    samples.push(s);
                }
            }
        }
        Ok(Collected { samples, requested: target, attempts: next })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_structured() {
        let s = MeasureSpace::uniform(6).unwrap();
        for strategy in [
            Strategy::IidGaussian,
            Strategy::OrderedPairs,
            Strategy::StripePairs { alpha: 0.3 },
            Strategy::DisjointSupportPairs,
            Strategy::ShiftedPairs { c: None },
        ] {
            let sampler = Sampler::new(7, strategy.clone(), 20);
            for k in 0..20 {
                let a = sampler.draw(&s, k).unwrap();
                let b = sampler.draw(&s, k).unwrap();
                assert_eq!(a.u, b.u);
                assert_eq!(a.v, b.v);
                let (u, v) = (a.u.values(), a.v.values());
                match strategy {
                    Strategy::OrderedPairs => assert!(a.u.le(&a.v).unwrap()),
                    Strategy::StripePairs { alpha } => {
                        assert!(u.iter().zip(v).all(|(x, y)| (x - y).abs() <= alpha + 1e-12))
                    }
                    Strategy::DisjointSupportPairs => assert!(u.iter().zip(v).all(|(x, y)| x * y == 0.0)),
                    Strategy::ShiftedPairs { .. } => assert!(u.iter().zip(v).all(|(x, y)| (x - a.c) * y == 0.0)),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn collection_resamples_deterministically() {
        let s = MeasureSpace::uniform(4).unwrap();
        let sampler = Sampler::new(3, Strategy::IidGaussian, 10);
        let keep = |x: Sample| (x.u.values()[0] > 0.0).then_some(x);
        let a = sampler.collect(&s, Execution::Sequential, keep).unwrap();
        let b = sampler.collect(&s, Execution::Parallel, keep).unwrap();
        assert!(a.complete());
        assert!(a.attempts > 10);
        let ia: Vec<usize> = a.samples.iter().map(|x| x.index).collect();
        let ib: Vec<usize> = b.samples.iter().map(|x| x.index).collect();
        assert_eq!(ia, ib);
        let none = sampler.collect(&s, Execution::Sequential, |_| None).unwrap();
        assert!(!none.complete());
        assert_eq!(none.attempts, 10 * RESAMPLE_FACTOR);
    }

    #[test]
    fn swap_exchanges() {
        let s = MeasureSpace::uniform(3).unwrap();
        let a = Sampler::new(1, Strategy::OrderedPairs, 1);
        let b = a.clone().swapped();
        let (x, y) = (a.draw(&s, 0).unwrap(), b.draw(&s, 0).unwrap());
        assert_eq!(x.u, y.v);
        assert_eq!(x.v, y.u);
    }
}
