//! Newton systems `F''(x) y = r` solved by eliminating the epigraph block.
//!
//! For finite `p` the `s`-block of the Hessian is diagonal, so eliminating it
//! leaves a sparse matrix on `u` with the pattern of the P1 stiffness matrix:
//!
//! ```text
//! H = F_uu − F_us F_ss^{-1} F_su = Σ_i lap_i G G^T + red_i dir dir^T,
//! red_i = rank_i · schur_i / ss_i.
//! ```
//!
//! For `p = ∞` the `s`-block is a scalar; `F_uu` itself is factored and the
//! scalar is eliminated by a bordered solve.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::barrier::{BarrierDerivatives, Iterate};
use crate::discretization::{DiscreteOperators, Problem};
use crate::error::{Error, Result};
use crate::linalg::{dot, EnvelopeCholesky};

#[derive(Debug, Clone)]
enum Epigraph {
    /// Per-element `coupling_i` and `ss_i`.
    Diagonal { coupling: Vec<f64>, ss: Vec<f64> },
    /// `b = F_us`, `v = F_uu^{-1} b` and the Schur complement `F_ss − b·v`.
    Scalar { b: Vec<f64>, v: Vec<f64>, schur: f64 },
}

/// A factored barrier Hessian at one iterate.
#[derive(Debug, Clone)]
pub struct NewtonSystem {
    ops: Arc<DiscreteOperators>,
    w: Vec<[f64; 3]>,
    chol: EnvelopeCholesky,
    epigraph: Epigraph,
    n_u: usize,
}

impl NewtonSystem {
    pub fn factor(problem: &Problem, it: &Iterate, derivs: &BarrierDerivatives) -> Result<NewtonSystem> {
        let h = derivs.hess.as_ref().expect("Hessian was not evaluated");
        let ops = problem.ops.clone();
        let infinite = problem.p.is_infinite();
        let reduced: Vec<f64> = if infinite {
            h.rank.clone()
        } else {
            (0..h.rank.len()).map(|i| h.rank[i] * h.schur[i] / h.ss[i]).collect()
        };
        let values = assemble(&ops, &it.w, &h.lap, &reduced);
        let chol = EnvelopeCholesky::factor(ops.envelope().clone(), values)?;

        let epigraph = if infinite {
            let coeffs: Vec<[f64; 3]> = it
                .w
                .iter()
                .zip(&h.coupling)
                .map(|(w, c)| [c * w[0], c * w[1], c * w[2]])
                .collect();
            let b = ops.gradient_interior_transpose(&coeffs);
            let v = chol.solve(&b);
            let f_ss: f64 = h.ss.iter().sum();
            let schur = f_ss - dot(&b, &v);
            if !(schur > 0.0) || !schur.is_finite() {
                return Err(Error::Factorization {
                    pivot: problem.n_u(),
                    value: schur,
                });
            }
            Epigraph::Scalar { b, v, schur }
        } else {
            Epigraph::Diagonal {
                coupling: h.coupling.clone(),
                ss: h.ss.clone(),
            }
        };
        Ok(NewtonSystem {
            ops,
            w: it.w.clone(),
            chol,
            epigraph,
            n_u: problem.n_u(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n_u
            + match &self.epigraph {
                Epigraph::Diagonal { ss, .. } => ss.len(),
                Epigraph::Scalar { .. } => 1,
            }
    }

    /// `F_us y_s` for the diagonal case.
    fn couple_s(&self, coupling: &[f64], y_s: &[f64]) -> Vec<f64> {
        let coeffs: Vec<[f64; 3]> = self
            .w
            .iter()
            .zip(coupling.iter().zip(y_s))
            .map(|(w, (c, y))| {
                let k = c * y;
                [k * w[0], k * w[1], k * w[2]]
            })
            .collect();
        self.ops.gradient_interior_transpose(&coeffs)
    }

    /// `F_su y_u` for the diagonal case.
    fn couple_u(&self, coupling: &[f64], y_u: &[f64]) -> Vec<f64> {
        let g = self.ops.gradient_interior(y_u);
        g.iter()
            .zip(&self.w)
            .zip(coupling)
            .map(|((g, w), c)| c * (g[0] * w[0] + g[1] * w[1] + g[2] * w[2]))
            .collect()
    }

    /// Solves `F'' y = r`.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.dim());
        let (r_u, r_s) = r.split_at(self.n_u);
        match &self.epigraph {
            Epigraph::Diagonal { coupling, ss } => {
                let scaled: Vec<f64> = r_s.iter().zip(ss).map(|(r, d)| r / d).collect();
                let mut rhs = self.couple_s(coupling, &scaled);
                for (x, r) in rhs.iter_mut().zip(r_u) {
                    *x = r - *x;
                }
                self.chol.solve_in_place(&mut rhs);
                let cu = self.couple_u(coupling, &rhs);
                let mut y = rhs;
                y.extend(r_s.iter().zip(&cu).zip(ss).map(|((r, c), d)| (r - c) / d));
                y
            }
            Epigraph::Scalar { b, v, schur } => {
                let h_ru = self.chol.solve(r_u);
                let y_s = (r_s[0] - dot(b, &h_ru)) / schur;
                let mut y: Vec<f64> = h_ru.iter().zip(v).map(|(a, vv)| a - vv * y_s).collect();
                y.push(y_s);
                y
            }
        }
    }

    /// Newton direction `−F''^{-1} rhs`.
    pub fn newton_direction(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y = self.solve(rhs);
        y.iter_mut().for_each(|x| *x = -*x);
        y
    }

    /// `v^T F''^{-1} v` through one triangular solve.
    pub fn dual_norm_sq(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim());
        let (v_u, v_s) = v.split_at(self.n_u);
        match &self.epigraph {
            Epigraph::Diagonal { coupling, ss } => {
                let scaled: Vec<f64> = v_s.iter().zip(ss).map(|(r, d)| r / d).collect();
                let mut t = self.couple_s(coupling, &scaled);
                for (x, r) in t.iter_mut().zip(v_u) {
                    *x = r - *x;
                }
                let tail: f64 = v_s.iter().zip(&scaled).map(|(a, b)| a * b).sum();
                self.chol.half_solve_norm_sq(&t) + tail
            }
            Epigraph::Scalar { v: hb, schur, .. } => {
                let r = v_s[0] - dot(hb, v_u);
                self.chol.half_solve_norm_sq(v_u) + r * r / schur
            }
        }
    }

    /// Local dual norm `‖v‖*_x = sqrt(v^T F''(x)^{-1} v)`.
    pub fn local_norm(&self, v: &[f64]) -> Result<f64> {
        let q = self.dual_norm_sq(v);
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::NegativeNorm { value: q });
        }
        Ok(q.sqrt())
    }
}

fn assemble(ops: &DiscreteOperators, w: &[[f64; 3]], lap: &[f64], reduced: &[f64]) -> Vec<f64> {
    const NONE: usize = usize::MAX;
    let d = ops.dim();
    let mut values = ops.envelope().zeros();
    for (i, (g, slots)) in ops.grads().iter().zip(ops.pair_slots()).enumerate() {
        let wi = &w[i];
        let mut dir = [0.0; 4];
        for k in 0..=d {
            dir[k] = g[k][0] * wi[0] + g[k][1] * wi[1] + g[k][2] * wi[2];
        }
        for a in 0..=d {
            for b in 0..=a {
                let slot = slots[a][b];
                if slot == NONE {
                    continue;
                }
                let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2];
                values[slot] += lap[i] * gg + reduced[i] * dir[a] * dir[b];
            }
        }
    }
    values
}
