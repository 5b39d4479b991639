//! Accelerated projected gradient for `min (1/2λ)‖g − f‖²_M + F(g)` over a box.
//!
//! The quadratic part is kept exact inside each step, so only `F` is
//! linearized. Steps use backtracking on the smoothness constant `L` of `F`
//! in the `M`-metric; momentum follows the strongly convex schedule with
//! `κ = 1 + λL` and restarts whenever the objective increases.

use super::Solution;
use crate::energy::EnergyFunctional;

/// Carries the smoothness estimate between calls.
#[derive(Debug, Clone)]
pub(crate) struct ApgState {
    pub lipschitz: f64,
}

impl Default for ApgState {
    fn default() -> Self {
        ApgState { lipschitz: 1.0 }
    }
}

fn m_norm_sq(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    m.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y) * (x - y)).sum()
}

pub(crate) fn solve(
    e: &EnergyFunctional,
    f: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
    state: &mut ApgState,
) -> Solution {
    let term = e.term();
    let m = e.space().weights();
    let n = f.len();
    let lo = e.lower();
    let hi = e.upper();
    let clamp = |v: &mut [f64]| {
        for i in 0..n {
            v[i] = v[i].max(lo[i]).min(hi[i]);
        }
    };
    let norm_f = m.iter().zip(f).map(|(w, x)| w * x * x).sum::<f64>().sqrt();
    let goal = tol * (1.0 + norm_f);
    let phi = |g: &[f64], fg: f64| 0.5 / lambda * m_norm_sq(m, g, f) + fg;

    let mut x = f.to_vec();
    clamp(&mut x);
    let mut fx = term.value(&x);
    let mut phi_x = phi(&x, fx);
    let mut y = x.clone();
    let mut s = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut s_trial = vec![0.0; n];
    let mut l = state.lipschitz.max(1e-12);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let fy = term.value(&y);
        term.subgradient(&y, &mut s);
        let mut fg;
        let mut backtracked = false;
        loop {
            let denom = 1.0 / lambda + l;
            for i in 0..n {
                trial[i] = ((f[i] / lambda + l * y[i] - s[i] / m[i]) / denom).max(lo[i]).min(hi[i]);
            }
            let d2 = m_norm_sq(m, &trial, &y);
            let lin: f64 = s.iter().zip(trial.iter().zip(&y)).map(|(si, (t, yi))| si * (t - yi)).sum();
            fg = term.value(&trial);
            term.subgradient(&trial, &mut s_trial);
            // For convex F, `⟨s(t) − s(y), t − y⟩ ≤ (L/2)‖t − y‖²` implies the
            // descent inequality without cancellation in function values,
            // which decide only while the quadratic term exceeds round-off.
            let curvature: f64 =
                s_trial.iter().zip(&s).zip(trial.iter().zip(&y)).map(|((a, b), (t, yi))| (a - b) * (t - yi)).sum();
            let quad = 0.5 * l * d2;
            let noise = 64.0 * f64::EPSILON * (1.0 + fy.abs() + fg.abs());
            let by_gradient = curvature <= quad;
            let by_value = quad > noise && fg <= fy + lin + quad;
            if by_gradient || by_value || d2 == 0.0 || l > 1e300 {
                break;
            }
            l *= 2.0;
            backtracked = true;
        }
        let step = m_norm_sq(m, &trial, &y).sqrt();
        residual = 2.0 * (1.0 + lambda * l) * step;
        let phi_new = phi(&trial, fg);
        let kappa = 1.0 + lambda * l;
        let beta = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
        let restart = phi_new > phi_x;
        let prev = std::mem::replace(&mut x, trial.clone());
        fx = fg;
        phi_x = phi_new;
        if residual <= goal {
            converged = true;
            break;
        }
        if restart {
            y.copy_from_slice(&x);
        } else {
            for i in 0..n {
                y[i] = x[i] + beta * (x[i] - prev[i]);
            }
            clamp(&mut y);
        }
        if !backtracked {
            l *= 0.9;
        }
    }
    state.lipschitz = l;
    Solution {
        objective: phi_x + e.offset(),
        energy: fx + e.offset(),
        g: x,
        residual: residual / (1.0 + norm_f),
        iterations,
        converged,
    }
}
