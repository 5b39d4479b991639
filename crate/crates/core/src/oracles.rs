//! Reference computations that share no code with the solvers: a spectral
//! heat flow, an ODE integrator for the two-point collar energies, and a
//! grid search for the proximal objective.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::energy::Edge;
use crate::energy::EnergyFunctional;
use crate::space::Field;
use crate::{Error, Result};

/// `L` with `uᵀ L u = Σ_{edges} w (u_i − u_j)²`.
pub fn graph_laplacian(n: usize, edges: &[Edge]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for e in edges.iter().filter(|e| e.i != e.j) {
        l[(e.i, e.i)] += e.w;
        l[(e.j, e.j)] += e.w;
        l[(e.i, e.j)] -= e.w;
        l[(e.j, e.i)] -= e.w;
    }
    l
}

/// The gradient flow of `E(u) = uᵀ L u` in the weighted space,
/// `u(t) = M^{-1/2} exp(−2 S t) M^{1/2} f` with `S = M^{-1/2} L M^{-1/2}`.
pub fn heat_flow_oracle(l: &DMatrix<f64>, f: &Field, t: f64) -> Result<Field> {
    let n = f.len();
    if l.nrows() != n || l.ncols() != n {
        return Err(Error::LengthMismatch { expected: n, got: l.nrows() });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be finite and nonnegative, got {t}")));
    }
    let asym = (l - l.transpose()).amax();
    if asym > 1e-12 * (1.0 + l.amax()) {
        return Err(Error::Asymmetric(asym));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let root: Vec<f64> = f.space().weights().iter().map(|m| m.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| 0.5 * (l[(i, j)] + l[(j, i)]) / (root[i] * root[j]));
    let eig = s.symmetric_eigen();
    let x = DVector::from_iterator(n, f.values().iter().zip(&root).map(|(v, r)| v * r));
    let decay = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&mu| (-2.0 * mu.max(0.0) * t).exp()));
    let coeff = eig.eigenvectors.transpose() * x;
    let y = &eig.eigenvectors * coeff.component_mul(&decay);
    Field::new(f.space().clone(), y.iter().zip(&root).map(|(v, r)| v / r).collect())
}

/// Which collar energy of the unit box in `R²` to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R2Energy {
    /// `(|h|₁ − 1)₊²`.
    QuadraticBox,
    /// `(|h|₁ − 1)₊`.
    LinearBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeOracleConfig {
    pub step: f64,
    /// Distance to `|h|₁ = 1` or to a coordinate axis below which the
    /// state is snapped onto it.
    pub event_tolerance: f64,
}

impl Default for OdeOracleConfig {
    fn default() -> Self {
        OdeOracleConfig { step: 1e-4, event_tolerance: 1e-13 }
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn collar(h: [f64; 2]) -> f64 {
    h[0].abs() + h[1].abs() - 1.0
}

/// Minimal-norm element of `−∂E(h)`: zero on `|h|₁ ≤ 1` and on vanishing coordinates.
fn velocity(which: R2Energy, h: [f64; 2]) -> [f64; 2] {
    let s = collar(h);
    if s <= 0.0 {
        return [0.0, 0.0];
    }
    let speed = match which {
        R2Energy::QuadraticBox => 2.0 * s,
        R2Energy::LinearBox => 1.0,
    };
    [-speed * sgn(h[0]), -speed * sgn(h[1])]
}

fn rk4(which: R2Energy, h: [f64; 2], dt: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
    let k1 = velocity(which, h);
    let k2 = velocity(which, add(h, k1, dt / 2.0));
    let k3 = velocity(which, add(h, k2, dt / 2.0));
    let k4 = velocity(which, add(h, k3, dt));
    [
        h[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        h[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// An event is crossed when the collar turns negative or a coordinate changes sign.
fn crosses(from: [f64; 2], to: [f64; 2]) -> bool {
    collar(to) < 0.0 || (0..2).any(|i| from[i] != 0.0 && sgn(to[i]) != sgn(from[i]))
}

fn snap(mut h: [f64; 2], tol: f64) -> [f64; 2] {
    for x in h.iter_mut() {
        if x.abs() <= tol {
            *x = 0.0;
        }
    }
    let s = collar(h);
    if s.abs() <= tol {
        let k = h.iter().filter(|x| **x != 0.0).count() as f64;
        for x in h.iter_mut() {
            *x -= s * sgn(*x) / k;
        }
    }
    h
}

/// One step of length `dt`, shortened by bisection to land on the first event.
fn step(which: R2Energy, h: [f64; 2], dt: f64, tol: f64) -> ([f64; 2], f64) {
    let full = rk4(which, h, dt);
    if !crosses(h, full) {
        return (snap(full, tol), dt);
    }
    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let x = rk4(which, h, mid);
        if crosses(h, x) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * dt {
            break;
        }
    }
    let landed = rk4(which, h, lo);
    let forced = snap(landed, tol.max(1e3 * f64::EPSILON * dt));
    (forced, lo.max(f64::MIN_POSITIVE))
}

/// `h(t)` for `ḣ ∈ −∂E(h)` from `h(0) = h`, by fixed-step classical RK4
/// with event location at `|h|₁ = 1` and at coordinate sign changes.
/// The flow is stationary once `|h|₁ ≤ 1`.
pub fn r2_flow_oracle(which: R2Energy, h: [f64; 2], t: f64, cfg: &OdeOracleConfig) -> Result<[f64; 2]> {
    Ok(*r2_flow_trajectory(which, h, &[t], cfg)?.last().expect("one time requested"))
}

/// [`r2_flow_oracle`] at every time of a non-decreasing grid, in one pass.
pub fn r2_flow_trajectory(which: R2Energy, h: [f64; 2], times: &[f64], cfg: &OdeOracleConfig) -> Result<Vec<[f64; 2]>> {
    if h.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
        return Err(Error::OutsideBox(h));
    }
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(Error::InvalidParameter(format!("ode step must be positive, got {}", cfg.step)));
    }
    if !(cfg.event_tolerance >= 0.0) {
        return Err(Error::InvalidParameter("event tolerance must be nonnegative".into()));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be finite, nonnegative and non-decreasing".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    let (mut x, mut now) = (h, 0.0);
    for &target in times {
        while now < target && collar(x) > 0.0 {
            let remaining = target - now;
            let steps = (remaining / cfg.step).ceil().max(1.0);
            let dt = remaining / steps;
            let (next, taken) = step(which, x, dt, cfg.event_tolerance);
            x = next;
            now = if taken >= dt { now + dt } else { now + taken };
            if remaining - taken <= f64::EPSILON * target {
                now = target;
            }
        }
        now = now.max(target);
        out.push(x);
    }
    Ok(out)
}

/// `t,h1,h2` rows of [`r2_flow_trajectory`].
pub fn r2_trajectory_csv(which: R2Energy, h: [f64; 2], times: &[f64], cfg: &OdeOracleConfig) -> Result<String> {
    let traj = r2_flow_trajectory(which, h, times, cfg)?;
    let mut s = String::from("t,h1,h2\n");
    for (t, x) in times.iter().zip(traj) {
        writeln!(s, "{t},{},{}", x[0], x[1]).expect("writing to a string");
    }
    Ok(s)
}

/// Largest grid the brute-force search will enumerate.
pub const MAX_GRID_POINTS: usize = 50_000_000;

/// Exhaustive search of `E(g) + ‖g − f‖²/(2λ)` over the grid
/// `f + step·k`, `|k·step| ≤ radius`, on spaces of at most 3 points.
/// Ties keep the first point in lexicographic order.
pub fn brute_force_prox(e: &EnergyFunctional, f: &Field, lambda: f64, grid_radius: f64, grid_step: f64) -> Result<Field> {
    let n = e.space().len();
    if n > 3 {
        return Err(Error::SpaceTooLarge(n));
    }
    if f.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f.len() });
    }
    if !(lambda > 0.0 && grid_radius > 0.0 && grid_step > 0.0) {
        return Err(Error::InvalidParameter("lambda, grid radius and grid step must be positive".into()));
    }
    let k = (grid_radius / grid_step).floor() as i64;
    let side = (2 * k + 1) as usize;
    let total = side.checked_pow(n as u32).filter(|&t| t <= MAX_GRID_POINTS).ok_or_else(|| {
        Error::InvalidParameter(format!("grid of {side}^{n} points exceeds {MAX_GRID_POINTS}"))
    })?;
    let m = e.space().weights();
    let base = f.values();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut g = vec![0.0; n];
    for idx in 0..total {
        let mut r = idx;
        for i in (0..n).rev() {
            let ki = (r % side) as i64 - k;
            r /= side;
            g[i] = base[i] + ki as f64 * grid_step;
        }
        let energy = e.evaluate(&Field::new(e.space().clone(), g.clone())?)?.value();
        if !energy.is_finite() {
            continue;
        }
        let quad: f64 = (0..n).map(|i| m[i] * (g[i] - base[i]).powi(2)).sum::<f64>() / (2.0 * lambda);
        let obj = energy + quad;
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, g.clone()));
        }
    }
    let (_, g) = best.ok_or_else(|| Error::Solver("no grid point has finite energy".into()))?;
    Field::new(e.space().clone(), g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{graph_p_energy, zero_energy};
    use crate::space::MeasureSpace;

    #[test]
    fn heat_two_node_limit() {
        let s = MeasureSpace::uniform(2).unwrap();
        let l = graph_laplacian(2, &[Edge { i: 0, j: 1, w: 1.0 }]);
        let f = Field::new(s.clone(), vec![1.0, 0.0]).unwrap();
        assert_eq!(heat_flow_oracle(&l, &f, 0.0).unwrap().values(), f.values());
        let far = heat_flow_oracle(&l, &f, 50.0).unwrap();
        assert!((far.values()[0] - 0.5).abs() < 1e-12 && (far.values()[1] - 0.5).abs() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(heat_flow_oracle(&bad, &f, 1.0), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn heat_preserves_constants_with_weights() {
        let s = MeasureSpace::with_weights(vec![1.0, 2.0, 0.5]).unwrap();
        let l = graph_laplacian(3, &[Edge { i: 0, j: 1, w: 1.0 }, Edge { i: 1, j: 2, w: 3.0 }]);
        let f = Field::constant(&s, 0.7);
        let g = heat_flow_oracle(&l, &f, 2.0).unwrap();
        assert!(g.values().iter().all(|x| (x - 0.7).abs() < 1e-12));
    }

    #[test]
    fn r2_examples() {
        let cfg = OdeOracleConfig::default();
        assert_eq!(r2_flow_oracle(R2Energy::QuadraticBox, [0.5, 0.3], 3.0, &cfg).unwrap(), [0.5, 0.3]);
        let q = r2_flow_oracle(R2Energy::QuadraticBox, [0.9, 0.6], 20.0, &cfg).unwrap();
        assert!((q[0] - 0.65).abs() < 1e-10 && (q[1] - 0.35).abs() < 1e-10);
        let l = r2_flow_oracle(R2Energy::LinearBox, [0.9, 0.6], 0.25, &cfg).unwrap();
        assert!((l[0] - 0.65).abs() < 1e-12 && (l[1] - 0.35).abs() < 1e-12);
        let later = r2_flow_oracle(R2Energy::LinearBox, [0.9, 0.6], 5.0, &cfg).unwrap();
        assert!((later[0] - l[0]).abs() < 1e-12 && (later[1] - l[1]).abs() < 1e-12);
        assert!(matches!(r2_flow_oracle(R2Energy::LinearBox, [1.2, 0.0], 1.0, &cfg), Err(Error::OutsideBox(_))));
    }

    #[test]
    fn brute_force_examples() {
        let s = MeasureSpace::uniform(2).unwrap();
        let e = graph_p_energy(&s, &[Edge { i: 0, j: 1, w: 1.0 }], 2.0).unwrap();
        let f = Field::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let g = brute_force_prox(&e, &f, 0.25, 0.5, 1e-3).unwrap();
        assert!((g.values()[0] - 0.75).abs() <= 1e-3 && (g.values()[1] - 0.25).abs() <= 1e-3);
        let z = brute_force_prox(&zero_energy(&s), &f, 1.0, 0.1, 0.01).unwrap();
        assert_eq!(z.values(), f.values());
        let big = MeasureSpace::uniform(4).unwrap();
        assert!(matches!(brute_force_prox(&zero_energy(&big), &Field::zeros(&big), 1.0, 1.0, 0.1), Err(Error::SpaceTooLarge(4))));
    }
}
