use std::sync::Arc;

use super::{ConvexTerm, EnergyFlags, EnergyFunctional};
use crate::space::Field;
use crate::{Error, Result};

const BRACKET: (f64, f64) = (1e-12, 1e12);

/// Gauge `γ(f) = inf{λ > 0 : E(f/λ) ≤ 1}` of a grounded base energy.
#[derive(Debug)]
struct Gauge {
    base: EnergyFunctional,
}

impl Gauge {
    fn feasible(&self, f: &[f64], lambda: f64, scratch: &mut [f64]) -> bool {
        for (s, x) in scratch.iter_mut().zip(f) {
            *s = x / lambda;
        }
        self.base.value_raw(scratch) <= 1.0
    }

    /// Geometric bisection on the bracket; `+∞` if even the largest scale is
    /// infeasible.
    fn gauge(&self, f: &[f64]) -> f64 {
        if f.iter().all(|&x| x == 0.0) {
            return 0.0;
        }
        let mut scratch = vec![0.0; f.len()];
        let (mut lo, mut hi) = BRACKET;
        if self.feasible(f, lo, &mut scratch) {
            return 0.0;
        }
        if !self.feasible(f, hi, &mut scratch) {
            return f64::INFINITY;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) || hi / lo - 1.0 <= 1e-15 {
                break;
            }
            if self.feasible(f, mid, &mut scratch) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

impl ConvexTerm for Gauge {
    fn value(&self, u: &[f64]) -> f64 {
        self.gauge(u)
    }

    fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let g = self.gauge(u);
        if !(g > 0.0 && g.is_finite()) {
            return;
        }
        let x: Vec<f64> = u.iter().map(|v| v / g).collect();
        let lo = self.base.lower();
        let hi = self.base.upper();
        // The binding constraint at x = f/γ is either the sublevel set of the
        // base term or a face of its box.
        let face = (0..u.len())
            .filter(|&i| lo[i] < hi[i])
            .filter_map(|i| {
                let bound = if x[i] > 0.0 { hi[i] } else { -lo[i] };
                (bound.is_finite() && bound > 0.0).then(|| (i, x[i].abs() / bound))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let level = self.base.value_raw(&x);
        if let Some((i, r)) = face {
            if r >= 1.0 - 1e-12 && level < 1.0 - 1e-9 {
                let bound = if x[i] > 0.0 { hi[i] } else { lo[i] };
                out[i] = 1.0 / bound;
                return;
            }
        }
        let mut s = vec![0.0; u.len()];
        self.base.term().subgradient(&x, &mut s);
        let denom: f64 = s.iter().zip(&x).map(|(a, b)| a * b).sum();
        if denom > 0.0 {
            for (o, si) in out.iter_mut().zip(&s) {
                *o = si / denom;
            }
        }
    }

    fn is_smooth(&self) -> bool {
        false
    }
}

/// The Luxembourg gauge of a grounded base energy with `E(0) ≤ 1`.
///
/// Coordinates fixed to zero by the base stay fixed; all other coordinates
/// become free, since the gauge is finite on the cone spanned by `dom E`.
pub fn luxembourg(base: &EnergyFunctional) -> Result<EnergyFunctional> {
    let space = base.space().clone();
    let zero = Field::zeros(&space);
    let e0 = base.evaluate(&zero)?.value();
    if !(e0 <= 1.0) {
        return Err(Error::InvalidParameter(format!("Luxembourg gauge needs E(0) <= 1, got {e0}")));
    }
    let bounds = base
        .lower()
        .iter()
        .zip(base.upper())
        .map(|(&l, &h)| if l == 0.0 && h == 0.0 { (0.0, 0.0) } else { (f64::NEG_INFINITY, f64::INFINITY) })
        .collect();
    let flags = EnergyFlags { even: base.flags().even, grounded: true, translation_invariant: false };
    let name = format!("luxembourg({})", base.name());
    EnergyFunctional::new(name, space, Arc::new(Gauge { base: base.clone() }), bounds, flags, zero)
}

impl EnergyFunctional {
    /// Gauge value with a bracket failure reported as an error.
    pub fn luxembourg_value(base: &EnergyFunctional, f: &Field) -> Result<f64> {
        let g = Gauge { base: base.clone() }.gauge(f.values());
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::LuxembourgBracket)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{box_h1, squared_l2};
    use crate::space::MeasureSpace;

    #[test]
    fn squared_norm_gives_norm() {
        let s = MeasureSpace::with_weights(vec![1.0, 2.0, 0.5]).unwrap();
        let lux = luxembourg(&squared_l2(&s)).unwrap();
        let f = Field::new(s.clone(), vec![0.3, -1.2, 2.0]).unwrap();
        let g = lux.evaluate(&f).unwrap().value();
        assert!((g - f.norm_l2()).abs() <= 1e-14 * f.norm_l2());
        assert_eq!(lux.evaluate(&Field::zeros(&s)).unwrap().value(), 0.0);
        let g2 = lux.evaluate(&f.scale(2.0)).unwrap().value();
        assert!((g2 - 2.0 * g).abs() <= 1e-14 * g2);
        lux.spot_check(5, 50).unwrap();
    }

    #[test]
    fn chill_values() {
        let s = MeasureSpace::uniform(2).unwrap();
        let lux = luxembourg(&squared_l2(&s)).unwrap();
        let ev = |v: [f64; 2]| lux.evaluate(&Field::new(s.clone(), v.to_vec()).unwrap()).unwrap().value();
        let lhs = ev([1.0, 0.0]) + ev([0.0, -1.0]);
        let rhs = ev([1.0, -1.0]) + ev([0.0, 0.0]);
        assert!((lhs - rhs - (2.0 - 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn gauge_subgradient_is_supporting() {
        let s = MeasureSpace::with_weights(vec![1.0, 2.0]).unwrap();
        let base = squared_l2(&s);
        let g = Gauge { base };
        let f = [0.6, -0.8];
        let mut d = [0.0; 2];
        g.subgradient(&f, &mut d);
        for probe in [[1.0, 0.0], [0.0, 1.0], [-2.0, 0.5], [0.6, -0.8]] {
            let lin: f64 = g.value(&f) + d.iter().zip(probe.iter().zip(&f)).map(|(a, (p, x))| a * (p - x)).sum::<f64>();
            assert!(g.value(&probe) >= lin - 1e-12);
        }
    }

    #[test]
    fn box_face_subgradient() {
        let b = box_h1(3).unwrap();
        let g = Gauge { base: b };
        // constant fields have zero slope energy; the box face binds
        let f = [2.0, 2.0, 2.0];
        assert!((g.value(&f) - 2.0).abs() < 1e-12);
        let mut d = [0.0; 3];
        g.subgradient(&f, &mut d);
        let lin = |p: [f64; 3]| g.value(&f) + d.iter().zip(p.iter().zip(&f)).map(|(a, (q, x))| a * (q - x)).sum::<f64>();
        for probe in [[1.0, 1.0, 1.0], [3.0, 0.0, 0.0], [0.0, 0.0, -1.0]] {
            assert!(g.value(&probe) >= lin(probe) - 1e-9, "{probe:?}");
        }
    }
}
