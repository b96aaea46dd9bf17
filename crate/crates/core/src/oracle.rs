//! Reference minimizers independent of the barrier machinery.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::discretization::DiscreteOperators;
use crate::error::{Error, Result};
use crate::exponent::Exponent;

/// Minimizer of the `p = 2` energy: `A_II u = f − (A g)_I`, where `g` is the
/// full nodal boundary extension.
pub fn p2_direct(ops: &DiscreteOperators, g: &[f64], f_node: &[f64]) -> Result<Vec<f64>> {
    if ops.n_interior() == 0 {
        return Ok(Vec::new());
    }
    let grad = ops.gradient(g);
    let c: Vec<[f64; 3]> = grad
        .iter()
        .zip(ops.omega())
        .map(|(w, &om)| [w[0] * om, w[1] * om, w[2] * om])
        .collect();
    let ag = ops.gradient_interior_transpose(&c);
    let mut rhs: Vec<f64> = f_node.iter().zip(&ag).map(|(f, a)| f - a).collect();
    ops.factor_laplacian()?.solve_in_place(&mut rhs);
    Ok(rhs)
}

#[derive(Debug, Clone, Copy)]
pub struct BruteForceOptions {
    /// Width of the final golden-section bracket per coordinate.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        BruteForceOptions {
            tol: 1e-10,
            max_sweeps: 20_000,
        }
    }
}

/// Cyclic coordinate descent with golden-section line searches. Only meant for
/// a handful of unknowns; returns `(u, J(u))`.
///
/// Coordinate descent can stall at kinks of the nonsmooth energies (`p = 1`,
/// `p = ∞`) when several unknowns must move together; callers should keep
/// to problems with one or two interior vertices there.
pub fn brute_force_minimize(
    ops: &DiscreteOperators,
    g: &[f64],
    f_node: &[f64],
    p: Exponent,
    opts: &BruteForceOptions,
) -> Result<(Vec<f64>, f64)> {
    let n = ops.n_interior();
    let mut u = alloc::vec![0.0; n];
    let energy = |u: &[f64]| ops.energy(g, f_node, u, p);
    let mut j = energy(&u);
    if n == 0 {
        return Ok((u, j));
    }
    for _ in 0..opts.max_sweeps {
        let j_before = j;
        let mut max_move: f64 = 0.0;
        for k in 0..n {
            let x0 = u[k];
            let mut phi = |tau: f64| {
                u[k] = x0 + tau;
                let v = energy(&u);
                u[k] = x0;
                v
            };
            let tau = golden_section(&mut phi, opts.tol);
            let v = phi(tau);
            if v <= j {
                u[k] = x0 + tau;
                j = v;
                max_move = max_move.max(tau.abs());
            }
        }
        if max_move <= opts.tol && j_before - j <= 1e-15 * (1.0 + j.abs()) {
            return Ok((u, j));
        }
    }
    Err(Error::OracleNonConvergence {
        sweeps: opts.max_sweeps,
    })
}

/// Minimizer of a convex `phi` on the real line, to within `tol`.
fn golden_section(phi: &mut impl FnMut(f64) -> f64, tol: f64) -> f64 {
    let f0 = phi(0.0);
    let mut lo = -1.0;
    let mut hi = 1.0;
    for _ in 0..64 {
        if phi(lo) < f0 {
            lo *= 2.0;
        } else {
            break;
        }
    }
    for _ in 0..64 {
        if phi(hi) < f0 {
            hi *= 2.0;
        } else {
            break;
        }
    }
    let r = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = phi(d);
        }
    }
    let mid = 0.5 * (a + b);
    if phi(mid) <= f0 {
        mid
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn golden_section_on_parabola_and_kink() {
        let x = golden_section(&mut |t: f64| (t - 3.7) * (t - 3.7), 1e-10);
        assert!((x - 3.7).abs() < 1e-9);
        let x = golden_section(&mut |t: f64| (t + 0.25).abs(), 1e-10);
        assert!((x + 0.25).abs() < 1e-9);
    }

    #[test]
    fn p2_direct_reproduces_linear_data() {
        let mesh = Mesh::build_box(&[1.0, 1.0], 4, 2).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let full = mesh.interpolate(|x| 1.0 + 2.0 * x[0] - x[1]);
        let g = ops.lift_boundary(&ops.restrict_boundary(&full));
        let u = p2_direct(&ops, &g, &vec![0.0; ops.n_interior()]).unwrap();
        for (a, b) in u.iter().zip(ops.restrict_interior(&full)) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn brute_force_agrees_with_direct_for_p2() {
        let mesh = Mesh::build_box(&[1.0, 1.0], 3, 2).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let full = mesh.interpolate(|x| x[0] * x[1]);
        let g = ops.lift_boundary(&ops.restrict_boundary(&full));
        let f = ops.load_vector(&vec![1.0; ops.n_elements()]);
        let u = p2_direct(&ops, &g, &f).unwrap();
        let (v, j) = brute_force_minimize(&ops, &g, &f, Exponent::Finite(2.0), &BruteForceOptions::default()).unwrap();
        assert!((j - ops.energy(&g, &f, &u, Exponent::Finite(2.0))).abs() < 1e-12);
        for (a, b) in u.iter().zip(&v) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn sweep_cap_is_reported() {
        let mesh = Mesh::build_box(&[1.0, 1.0], 3, 2).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let g = ops.lift_boundary(&vec![1.0; ops.n_boundary()]);
        let f = vec![0.0; ops.n_interior()];
        let opts = BruteForceOptions { tol: 1e-10, max_sweeps: 1 };
        assert!(matches!(
            brute_force_minimize(&ops, &g, &f, Exponent::Finite(2.0), &opts),
            Err(Error::OracleNonConvergence { sweeps: 1 })
        ));
    }
}
