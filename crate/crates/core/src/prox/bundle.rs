//! Cutting-plane solver for `min (1/2λ)‖g − f‖²_M + F(g)` over a box when only
//! values and subgradients of `F` are available.
//!
//! Every cut `ℓ_k(g) = a_k + ⟨s_k, g⟩` is a global minorant of `F`, so the
//! bundle stays valid across prox centres and step sizes. The model problem is
//! solved through its dual over the simplex,
//! `q(θ) = Σθ_k a_k + min_{g ∈ box} (1/2λ)‖g − f‖²_M + ⟨Sθ, g⟩`,
//! whose inner minimizer is the clamp `g_i = clamp(f_i − λ(Sθ)_i / m_i)`.
//! Any `θ` in the simplex gives the lower bound `q(θ) ≤ min Φ`, so the
//! reported gap is certified.

use nalgebra::{DMatrix, DVector};

use super::Solution;
use crate::energy::EnergyFunctional;
use crate::numeric::project_simplex;

const INNER_ITERS: usize = 4000;

#[derive(Debug, Clone)]
struct Cut {
    s: Vec<f64>,
    a: f64,
}

impl Cut {
    fn eval(&self, g: &[f64]) -> f64 {
        self.a + self.s.iter().zip(g).map(|(x, y)| x * y).sum::<f64>()
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Bundle {
    cuts: Vec<Cut>,
    theta: Vec<f64>,
}

struct Problem<'a> {
    f: &'a [f64],
    m: &'a [f64],
    lo: &'a [f64],
    hi: &'a [f64],
    lambda: f64,
}

impl Problem<'_> {
    fn inner(&self, c: &[f64], g: &mut [f64]) {
        for i in 0..g.len() {
            g[i] = (self.f[i] - self.lambda * c[i] / self.m[i]).max(self.lo[i]).min(self.hi[i]);
        }
    }

    fn quad(&self, g: &[f64]) -> f64 {
        0.5 / self.lambda * self.m.iter().zip(g.iter().zip(self.f)).map(|(w, (x, y))| w * (x - y) * (x - y)).sum::<f64>()
    }
}

impl Bundle {
    fn aggregate(&self, theta: &[f64], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (cut, &t) in self.cuts.iter().zip(theta) {
            if t != 0.0 {
                for (ci, si) in c.iter_mut().zip(&cut.s) {
                    *ci += t * si;
                }
            }
        }
        c
    }

    /// `q(θ)` and the inner minimizer.
    fn dual(&self, p: &Problem<'_>, theta: &[f64], g: &mut [f64]) -> f64 {
        let c = self.aggregate(theta, g.len());
        p.inner(&c, g);
        let lin: f64 = self.cuts.iter().zip(theta).map(|(cut, t)| t * cut.eval(g)).sum();
        p.quad(g) + lin
    }

    fn model(&self, p: &Problem<'_>, g: &[f64]) -> f64 {
        p.quad(g) + self.cuts.iter().map(|c| c.eval(g)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn add_cut(&mut self, e: &EnergyFunctional, x: &[f64]) -> f64 {
        let mut s = vec![0.0; x.len()];
        let fx = e.term().value(x);
        e.term().subgradient(x, &mut s);
        let a = fx - s.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        let duplicate = self
            .cuts
            .iter()
            .any(|c| c.s == s && (c.a - a).abs() <= 4.0 * f64::EPSILON * (1.0 + a.abs()));
        if !duplicate {
            self.cuts.push(Cut { s, a });
            self.theta.push(0.0);
        }
        fx
    }

    fn gram_bound(&self, m: &[f64]) -> f64 {
        let k = self.cuts.len();
        let mut gram = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v: f64 = self.cuts[a].s.iter().zip(&self.cuts[b].s).zip(m).map(|((x, y), w)| x * y / w).sum();
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
        }
        // The bundle is small, so an exact spectrum is cheap and avoids start
        // vectors orthogonal to the top eigenvector.
        let top = gram.symmetric_eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b));
        if top <= 1e-300 {
            return 0.0;
        }
        top * (1.0 + 1e-9)
    }

    /// FISTA ascent on the dual with function restart. Returns the best `θ`.
    fn solve_dual(&mut self, p: &Problem<'_>, goal: f64, g: &mut [f64]) -> f64 {
        let k = self.cuts.len();
        let n = g.len();
        let lq = p.lambda * self.gram_bound(p.m);
        if lq == 0.0 {
            // Every cut is flat: q is linear in θ, maximized at the best constant.
            let best = (0..k).max_by(|&a, &b| self.cuts[a].a.total_cmp(&self.cuts[b].a)).unwrap_or(0);
            self.theta.iter_mut().for_each(|t| *t = 0.0);
            self.theta[best] = 1.0;
            return self.dual(p, &self.theta.clone(), g);
        }
        let sum: f64 = self.theta.iter().sum();
        if !(sum > 0.0) {
            self.theta = vec![1.0 / k as f64; k];
        } else {
            project_simplex(&mut self.theta);
        }
        let mut theta = self.theta.clone();
        let mut z = theta.clone();
        let mut q_best = self.dual(p, &theta, g);
        let mut best = theta.clone();
        let mut q_prev = q_best;
        let mut t = 1.0f64;
        let mut grad = vec![0.0; k];
        let mut gz = vec![0.0; n];
        for _ in 0..INNER_ITERS {
            let c = self.aggregate(&z, n);
            p.inner(&c, &mut gz);
            for (gk, cut) in grad.iter_mut().zip(&self.cuts) {
                *gk = cut.eval(&gz);
            }
            let mut next: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi + gi / lq).collect();
            project_simplex(&mut next);
            let q_next = self.dual(p, &next, g);
            if q_next > q_best {
                q_best = q_next;
                best.clone_from(&next);
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            if q_next < q_prev {
                t = 1.0;
                z.clone_from(&next);
            } else {
                let beta = (t - 1.0) / t_next;
                for i in 0..k {
                    z[i] = next[i] + beta * (next[i] - theta[i]);
                }
                t = t_next;
            }
            theta = next;
            q_prev = q_next;
            let q_at = self.dual(p, &best, g);
            if self.model(p, g) - q_at <= goal {
                break;
            }
        }
        self.theta = best;
        self.polish(p, g);
        self.dual(p, &self.theta.clone(), g)
    }

    /// Solves the KKT system on the current active set and keeps the result
    /// when it raises the dual bound.
    fn polish(&mut self, p: &Problem<'_>, g: &mut [f64]) {
        let n = g.len();
        let q0 = self.dual(p, &self.theta.clone(), g);
        let c = self.aggregate(&self.theta, n);
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let raw = p.f[i] - p.lambda * c[i] / p.m[i];
                p.lo[i] < raw && raw < p.hi[i]
            })
            .collect();
        let top = self.cuts.iter().map(|cut| cut.eval(g)).fold(f64::NEG_INFINITY, f64::max);
        let scale = 1.0 + top.abs();
        let active: Vec<usize> = (0..self.cuts.len())
            .filter(|&k| self.theta[k] > 0.0 || self.cuts[k].eval(g) >= top - 1e-9 * scale)
            .collect();
        let na = active.len();
        if na == 0 || na > n + 1 {
            return;
        }
        let mut mat = DMatrix::zeros(na + 1, na + 1);
        let mut rhs = DVector::zeros(na + 1);
        let ghat: Vec<f64> = (0..n).map(|i| if free[i] { p.f[i] } else { g[i] }).collect();
        for (r, &k) in active.iter().enumerate() {
            for (col, &l) in active.iter().enumerate() {
                let kf: f64 = (0..n)
                    .filter(|&i| free[i])
                    .map(|i| self.cuts[k].s[i] * self.cuts[l].s[i] / p.m[i])
                    .sum();
                mat[(r, col)] = p.lambda * kf;
            }
            mat[(r, na)] = 1.0;
            rhs[r] = self.cuts[k].eval(&ghat);
            mat[(na, r)] = 1.0;
        }
        rhs[na] = 1.0;
        let Some(sol) = mat.lu().solve(&rhs) else { return };
        if sol.iter().take(na).any(|&v| !(v >= -1e-12)) {
            return;
        }
        let mut theta = vec![0.0; self.cuts.len()];
        for (r, &k) in active.iter().enumerate() {
            theta[k] = sol[r].max(0.0);
        }
        let total: f64 = theta.iter().sum();
        if !(total > 0.0) {
            return;
        }
        theta.iter_mut().for_each(|t| *t /= total);
        let mut trial = vec![0.0; n];
        if self.dual(p, &theta, &mut trial) > q0 {
            self.theta = theta;
        }
    }

    fn compress(&mut self, cap: usize) {
        if self.cuts.len() <= cap {
            return;
        }
        let keep_recent = 4.min(self.cuts.len());
        let cutoff = self.cuts.len() - keep_recent;
        let mut kept = Vec::with_capacity(cap);
        let mut theta = Vec::with_capacity(cap);
        for (k, (cut, &t)) in self.cuts.iter().zip(&self.theta).enumerate() {
            if t > 0.0 || k >= cutoff {
                kept.push(cut.clone());
                theta.push(t);
            }
        }
        if kept.len() > cap {
            // Replace the bundle by its aggregate cut plus the newest ones.
            let total: f64 = self.theta.iter().sum();
            let n = self.cuts[0].s.len();
            let mut s = vec![0.0; n];
            let mut a = 0.0;
            for (cut, &t) in self.cuts.iter().zip(&self.theta) {
                let w = if total > 0.0 { t / total } else { 0.0 };
                a += w * cut.a;
                for (si, ci) in s.iter_mut().zip(&cut.s) {
                    *si += w * ci;
                }
            }
            kept = vec![Cut { s, a }];
            theta = vec![1.0];
            kept.extend(self.cuts[cutoff..].iter().cloned());
            theta.extend(std::iter::repeat(0.0).take(keep_recent));
        }
        self.cuts = kept;
        self.theta = theta;
    }
}

pub(crate) fn solve(e: &EnergyFunctional, f: &[f64], lambda: f64, tol: f64, max_iter: usize, bundle: &mut Bundle) -> Solution {
    let n = f.len();
    let p = Problem { f, m: e.space().weights(), lo: e.lower(), hi: e.upper(), lambda };
    let cap = (2 * n + 16).max(32);
    let norm_f = p.m.iter().zip(f).map(|(w, x)| w * x * x).sum::<f64>().sqrt();

    let mut best: Vec<f64> = f.iter().zip(p.lo.iter().zip(p.hi)).map(|(x, (l, h))| x.max(*l).min(*h)).collect();
    let fb = bundle.add_cut(e, &best);
    let mut best_f = fb;
    let mut phi_best = p.quad(&best) + fb;
    let mut lower = f64::NEG_INFINITY;
    let mut g = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut stall = 0;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        let floor = 64.0 * f64::EPSILON * (1.0 + phi_best.abs());
        let target = (tol * (1.0 + norm_f)).powi(2) / (2.0 * lambda);
        let target = target.max(floor);
        let inner_goal = (0.1 * (phi_best - lower)).min(phi_best - lower).max(0.25 * target);
        let q = bundle.solve_dual(&p, inner_goal, &mut g);
        let improved_lower = q > lower;
        lower = lower.max(q);
        let fg = e.term().value(&g);
        let phi_g = p.quad(&g) + fg;
        if phi_g < phi_best {
            phi_best = phi_g;
            best.copy_from_slice(&g);
            best_f = fg;
        }
        gap = (phi_best - lower).max(0.0);
        if gap <= target {
            converged = true;
            break;
        }
        let before = bundle.cuts.len();
        bundle.add_cut(e, &g);
        if bundle.cuts.len() == before && !improved_lower {
            stall += 1;
            if stall >= 3 {
                break;
            }
        } else {
            stall = 0;
        }
        bundle.compress(cap);
    }
    Solution {
        objective: phi_best + e.offset(),
        energy: best_f + e.offset(),
        g: best,
        residual: (2.0 * lambda * gap).sqrt() / (1.0 + norm_f),
        iterations,
        converged,
    }
}

