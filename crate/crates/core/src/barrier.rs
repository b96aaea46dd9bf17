//! The self-concordant barrier of the epigraph set
//!
//! ```text
//! Q = { (u, s) : s_i ≥ ‖∇(u+g)|_{K_i}‖^p,  ω_i s_i ≤ R }
//! ```
//!
//! For finite `p` the barrier is
//!
//! ```text
//! F(u, s) = −Σ log z_i − σ Σ log s_i − Σ log τ_i,
//! z_i = s_i^{2/p} − ‖w_i‖²,  τ_i = R − ω_i s_i,  w_i = ∇(u+g)|_{K_i},
//! ```
//!
//! with `σ = 2` for `p < 2` and `σ = 1` otherwise. For `p = ∞` all `s_i` are tied
//! to one scalar `s` and the `p = 1` barrier is evaluated at `(u, s e)`, so
//! every per-element quantity below is summed into a single `s` entry.
//!
//! Full-space vectors are flat: `x = [u ; s]` with `s` of length `m`, or 1 for
//! `p = ∞`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::discretization::{grad_norm_sq, Problem};
use crate::error::{Constraint, Error, Result};
use crate::exponent::Exponent;

/// `2` for `p < 2` (and for `p = ∞`, which uses the `p = 1` barrier), `1` for `p ≥ 2`.
pub fn sigma(p: Exponent) -> f64 {
    match p {
        Exponent::Finite(p) if p >= 2.0 => 1.0,
        _ => 2.0,
    }
}

/// Barrier parameter `ν = m (σ + 2)`.
///
/// For `p = ∞` this is the parameter of the `p = 1` barrier on `m` elements;
/// restricting a barrier to a subspace cannot increase it.
pub fn nu(m: usize, p: Exponent) -> f64 {
    m as f64 * (sigma(p) + 2.0)
}

/// Exponent `a` in `z = s^a − ‖w‖²`.
fn power(p: Exponent) -> f64 {
    match p {
        Exponent::Finite(p) => 2.0 / p,
        Exponent::Infinity => 2.0,
    }
}

/// `(s^a, a s^{a−1}, a (a−1) s^{a−2})`.
#[inline]
fn powers(s: f64, a: f64) -> (f64, f64, f64) {
    if a == 2.0 {
        (s * s, 2.0 * s, 2.0)
    } else if a == 1.0 {
        (s, 1.0, 0.0)
    } else {
        let sa = (a * s.ln()).exp();
        (sa, a * sa / s, a * (a - 1.0) * sa / (s * s))
    }
}

/// A strictly feasible point together with the per-element quantities every
/// derivative needs.
#[derive(Debug, Clone)]
pub struct Iterate {
    /// `[u ; s]`.
    pub x: Vec<f64>,
    /// `w_i = ∇(u+g)|_{K_i}`; the squared components are the `y^(j)` of the
    /// derivative formulas.
    pub w: Vec<[f64; 3]>,
    /// `z_i = s_i^{2/p} − ‖w_i‖²`
    pub z: Vec<f64>,
    /// `τ_i = R − ω_i s_i`
    pub tau: Vec<f64>,
    n_u: usize,
}

impl Iterate {
    /// Evaluates the cached quantities at `x`, failing on the first violated constraint.
    pub fn new(problem: &Problem, x: Vec<f64>) -> Result<Iterate> {
        let (w, z, tau) = slacks(problem, &x);
        let n_u = problem.n_u();
        let it = Iterate { x, w, z, tau, n_u };
        if let Some((constraint, index, margin)) = it.first_violation() {
            return Err(Error::Infeasible {
                constraint,
                index,
                margin,
            });
        }
        Ok(it)
    }

    pub fn u(&self) -> &[f64] {
        &self.x[..self.n_u]
    }

    pub fn s(&self) -> &[f64] {
        &self.x[self.n_u..]
    }

    fn first_violation(&self) -> Option<(Constraint, usize, f64)> {
        if let Some((i, &v)) = self.s().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Some((Constraint::Positivity, i, v));
        }
        if let Some((i, &v)) = self.z.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Some((Constraint::Epigraph, i, v));
        }
        if let Some((i, &v)) = self.tau.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Some((Constraint::Radius, i, v));
        }
        None
    }
}

fn slacks(problem: &Problem, x: &[f64]) -> (Vec<[f64; 3]>, Vec<f64>, Vec<f64>) {
    let n_u = problem.n_u();
    let (u, s) = x.split_at(n_u);
    let w = problem.total_gradient(u);
    let a = power(problem.p);
    let omega = problem.ops.omega();
    let r = problem.radius;
    let infinite = problem.p.is_infinite();
    let mut z = Vec::with_capacity(w.len());
    let mut tau = Vec::with_capacity(w.len());
    for (i, wi) in w.iter().enumerate() {
        let si = if infinite { s[0] } else { s[i] };
        let sa = if si > 0.0 { powers(si, a).0 } else { f64::NAN };
        z.push(sa - grad_norm_sq(wi));
        tau.push(r - omega[i] * si);
    }
    (w, z, tau)
}

/// Constraint margins of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub min_epigraph: f64,
    pub min_s: f64,
    pub min_tau: f64,
}

/// Strict feasibility test; never fails.
pub fn feasibility(problem: &Problem, x: &[f64]) -> Feasibility {
    let (_, z, tau) = slacks(problem, x);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, |a, b| if b < a || b.is_nan() { b } else { a });
    let min_epigraph = min(&z);
    let min_s = min(&x[problem.n_u()..]);
    let min_tau = min(&tau);
    Feasibility {
        feasible: min_epigraph > 0.0 && min_s > 0.0 && min_tau > 0.0,
        min_epigraph,
        min_s,
        min_tau,
    }
}

/// Starting point `u = 0`, `s_i = 1 + ‖∇g|_{K_i}‖^p` (finite `p`) or
/// `s = 1 + max_i ‖∇g|_{K_i}‖` (`p = ∞`).
pub fn initial_point(problem: &Problem) -> Result<Iterate> {
    let mut x = vec![0.0; problem.n_u()];
    match problem.p {
        Exponent::Finite(p) => {
            x.extend(problem.b.iter().map(|b| 1.0 + grad_norm_sq(b).powf(p / 2.0)));
        }
        Exponent::Infinity => {
            let g_max = problem.b.iter().map(|b| grad_norm_sq(b).sqrt()).fold(0.0, f64::max);
            x.push(1.0 + g_max);
        }
    }
    Iterate::new(problem, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

/// Per-element coefficients of the Hessian.
///
/// With `G_k = ∇φ_k|_{K_i}` and `dir_k = G_k · w_i`,
///
/// ```text
/// F_uu = Σ_i lap_i G G^T + rank_i dir dir^T
/// F_us = coupling_i dir       (column i, or summed over i for p = ∞)
/// F_ss = diag(ss)             (scalar Σ_i ss_i for p = ∞)
/// ```
///
/// `schur_i = ss_i − coupling_i² / rank_i` is kept separately because the
/// difference cancels badly when formed from the other entries.
#[derive(Debug, Clone)]
pub struct HessianCoefficients {
    pub lap: Vec<f64>,
    pub rank: Vec<f64>,
    pub coupling: Vec<f64>,
    pub ss: Vec<f64>,
    pub schur: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BarrierDerivatives {
    pub value: f64,
    /// `[F_u ; F_s]`; empty when only the value was requested.
    pub grad: Vec<f64>,
    pub hess: Option<HessianCoefficients>,
    n_u: usize,
}

impl BarrierDerivatives {
    pub fn grad_u(&self) -> &[f64] {
        &self.grad[..self.n_u]
    }

    pub fn grad_s(&self) -> &[f64] {
        &self.grad[self.n_u..]
    }

    /// `F''(x) v` computed element by element without forming any matrix.
    pub fn hess_vec(&self, problem: &Problem, it: &Iterate, v: &[f64]) -> Vec<f64> {
        let h = self.hess.as_ref().expect("Hessian was not evaluated");
        let n_u = problem.n_u();
        let (vu, vs) = v.split_at(n_u);
        let gv = problem.ops.gradient_interior(vu);
        let infinite = problem.p.is_infinite();
        let mut coeffs = Vec::with_capacity(gv.len());
        let mut out_s = vec![0.0; problem.n_s()];
        for (i, (gvi, wi)) in gv.iter().zip(&it.w).enumerate() {
            let proj = wi[0] * gvi[0] + wi[1] * gvi[1] + wi[2] * gvi[2];
            let vsi = if infinite { vs[0] } else { vs[i] };
            let scale = h.rank[i] * proj + h.coupling[i] * vsi;
            coeffs.push([
                h.lap[i] * gvi[0] + scale * wi[0],
                h.lap[i] * gvi[1] + scale * wi[1],
                h.lap[i] * gvi[2] + scale * wi[2],
            ]);
            if infinite {
                out_s[0] += h.coupling[i] * proj;
            } else {
                out_s[i] = h.coupling[i] * proj + h.ss[i] * vsi;
            }
        }
        if infinite {
            out_s[0] += h.ss.iter().sum::<f64>() * vs[0];
        }
        let mut out = problem.ops.gradient_interior_transpose(&coeffs);
        out.extend(out_s);
        out
    }
}

/// Barrier value and, depending on `order`, gradient and Hessian coefficients.
pub fn evaluate(problem: &Problem, it: &Iterate, order: Order) -> BarrierDerivatives {
    let p = problem.p;
    let a = power(p);
    let sig = sigma(p);
    let omega = problem.ops.omega();
    let infinite = p.is_infinite();
    let m = omega.len();
    let n_u = problem.n_u();
    let s = it.s();

    let mut value = 0.0;
    let want_grad = order >= Order::Gradient;
    let want_hess = order >= Order::Hessian;
    let mut gu_coeffs = if want_grad { vec![[0.0; 3]; m] } else { Vec::new() };
    let mut gs = vec![0.0; if want_grad { problem.n_s() } else { 0 }];
    let mut hess = want_hess.then(|| HessianCoefficients {
        lap: Vec::with_capacity(m),
        rank: Vec::with_capacity(m),
        coupling: Vec::with_capacity(m),
        ss: Vec::with_capacity(m),
        schur: Vec::with_capacity(m),
    });

    for i in 0..m {
        let si = if infinite { s[0] } else { s[i] };
        let (z, tau) = (it.z[i], it.tau[i]);
        value -= z.ln() + sig * si.ln() + tau.ln();
        if !want_grad {
            continue;
        }
        let (_, dsa, ddsa) = powers(si, a);
        let wi = &it.w[i];
        let two_over_z = 2.0 / z;
        gu_coeffs[i] = [two_over_z * wi[0], two_over_z * wi[1], two_over_z * wi[2]];
        let gsi = -dsa / z - sig / si + omega[i] / tau;
        if infinite {
            gs[0] += gsi;
        } else {
            gs[i] = gsi;
        }
        if let Some(h) = hess.as_mut() {
            let z2 = z * z;
            let e = -ddsa / z + sig / (si * si) + omega[i] * omega[i] / (tau * tau);
            h.lap.push(two_over_z);
            h.rank.push(4.0 / z2);
            h.coupling.push(-2.0 * dsa / z2);
            h.ss.push(e + dsa * dsa / z2);
            h.schur.push(e);
        }
    }
    let grad = if want_grad {
        let mut g = problem.ops.gradient_interior_transpose(&gu_coeffs);
        g.extend(gs);
        g
    } else {
        Vec::new()
    };
    BarrierDerivatives {
        value,
        grad,
        hess,
        n_u,
    }
}

/// Barrier value at `x`, or `None` outside the interior of the feasible set.
pub fn value_at(problem: &Problem, x: &[f64]) -> Option<f64> {
    let it = Iterate::new(problem, x.to_vec()).ok()?;
    Some(evaluate(problem, &it, Order::Value).value)
}
