//! P1 finite element operators on a [`Mesh`] and the data of one discrete
//! p-Laplace problem.
//!
//! Gradients are constant per element, so the discrete derivative matrices
//! `D^(j)` (one row per element, one column per vertex) are kept in element-local
//! form: the vertex ids of each element together with the gradients of the
//! `d + 1` hat functions that live on it. Midpoint quadrature with weights
//! `ω_i = |K_i|` is exact for every integrand the solver needs.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::linalg::small;
use crate::linalg::{EnvelopeCholesky, EnvelopeStructure};
use crate::mesh::Mesh;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    d: usize,
    n: usize,
    elements: Vec<[usize; 4]>,
    /// `grads[i][k][j] = ∂φ_{elements[i][k]} / ∂x_j` on element `i`.
    grads: Vec<[[f64; 3]; 4]>,
    omega: Vec<f64>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// Global vertex → interior index, or `NONE`.
    to_interior: Vec<usize>,
    /// Global vertex → boundary index, or `NONE`.
    to_boundary: Vec<usize>,
    /// Envelope slot of each local interior pair, `NONE` when either vertex is on the boundary.
    pair_slots: Vec<[[usize; 4]; 4]>,
    envelope: Arc<EnvelopeStructure>,
    width: f64,
    volume: f64,
}

impl DiscreteOperators {
    pub fn assemble(mesh: &Mesh) -> Result<Self> {
        let d = mesh.dim();
        let n = mesh.n_vertices();
        let m = mesh.n_elements();
        let mut grads = Vec::with_capacity(m);
        let mut omega = Vec::with_capacity(m);
        let fact: f64 = (1..=d).map(|k| k as f64).product();
        for (i, map) in mesh.element_maps().iter().enumerate() {
            let det = small::det(&map.p, d);
            if !(det.abs() > 0.0) || !det.is_finite() {
                return Err(Error::DegenerateElement { index: i, det });
            }
            let inv = small::inverse(&map.p, d);
            let mut g = [[0.0; 3]; 4];
            for j in 0..d {
                // ∇φ_k = P^{-T} ∇̂φ̂_k with ∇̂φ̂_0 = −1, ∇̂φ̂_k = e_k
                let mut sum = 0.0;
                for k in 1..=d {
                    g[k][j] = inv[k - 1][j];
                    sum += inv[k - 1][j];
                }
                g[0][j] = -sum;
            }
            grads.push(g);
            omega.push(det.abs() / fact);
        }

        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut to_interior = vec![NONE; n];
        let mut to_boundary = vec![NONE; n];
        for (v, &on_boundary) in mesh.boundary_mask().iter().enumerate() {
            if on_boundary {
                to_boundary[v] = boundary.len();
                boundary.push(v);
            } else {
                to_interior[v] = interior.len();
                interior.push(v);
            }
        }

        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); interior.len()];
        for s in mesh.simplices() {
            for a in 0..=d {
                let ia = to_interior[s[a]];
                if ia == NONE {
                    continue;
                }
                for b in 0..=d {
                    let ib = to_interior[s[b]];
                    if ib != NONE && ib != ia {
                        adj[ia].push(ib);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let envelope = Arc::new(EnvelopeStructure::from_adjacency(&adj));

        let mut pair_slots = Vec::with_capacity(m);
        for s in mesh.simplices() {
            let mut slots = [[NONE; 4]; 4];
            for a in 0..=d {
                for b in 0..=d {
                    let (ia, ib) = (to_interior[s[a]], to_interior[s[b]]);
                    if ia != NONE && ib != NONE {
                        slots[a][b] = envelope.slot(ia, ib).expect("element pair outside envelope");
                    }
                }
            }
            pair_slots.push(slots);
        }

        Ok(DiscreteOperators {
            d,
            n,
            elements: mesh.simplices().to_vec(),
            grads,
            omega,
            interior,
            boundary,
            to_interior,
            to_boundary,
            pair_slots,
            envelope,
            width: mesh.width(),
            volume: mesh.volume(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of elements `m`.
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Number of vertices `n_I + n_Γ`.
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    /// Per-element hat-function gradients, `grads()[i][k][j] = ∂φ_k/∂x_j` on `K_i`.
    pub fn grads(&self) -> &[[[f64; 3]; 4]] {
        &self.grads
    }

    /// Interior index → global vertex.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Boundary index → global vertex.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior_index(&self, vertex: usize) -> Option<usize> {
        let i = self.to_interior[vertex];
        (i != NONE).then_some(i)
    }

    pub fn boundary_index(&self, vertex: usize) -> Option<usize> {
        let i = self.to_boundary[vertex];
        (i != NONE).then_some(i)
    }

    pub fn envelope(&self) -> &Arc<EnvelopeStructure> {
        &self.envelope
    }

    pub(crate) fn pair_slots(&self) -> &[[[usize; 4]; 4]] {
        &self.pair_slots
    }

    /// Smallest side of the bounding box.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Per-element gradient of a full nodal vector.
    pub fn gradient(&self, v: &[f64]) -> Vec<[f64; 3]> {
        assert_eq!(v.len(), self.n);
        self.elements
            .iter()
            .zip(&self.grads)
            .map(|(e, g)| {
                let mut w = [0.0; 3];
                for k in 0..=self.d {
                    let x = v[e[k]];
                    for j in 0..self.d {
                        w[j] += g[k][j] * x;
                    }
                }
                w
            })
            .collect()
    }

    /// Per-element gradient of an interior vector (boundary values taken as zero),
    /// i.e. the rows of `D_I^(j) u` stacked over `j`.
    pub fn gradient_interior(&self, u: &[f64]) -> Vec<[f64; 3]> {
        assert_eq!(u.len(), self.n_interior());
        let mut out = vec![[0.0; 3]; self.n_elements()];
        self.gradient_interior_into(u, &mut out);
        out
    }

    pub fn gradient_interior_into(&self, u: &[f64], out: &mut [[f64; 3]]) {
        for ((e, g), w) in self.elements.iter().zip(&self.grads).zip(out.iter_mut()) {
            *w = [0.0; 3];
            for k in 0..=self.d {
                let ik = self.to_interior[e[k]];
                if ik == NONE {
                    continue;
                }
                let x = u[ik];
                for j in 0..self.d {
                    w[j] += g[k][j] * x;
                }
            }
        }
    }

    /// `D^(j) v` for a full nodal vector.
    pub fn apply(&self, j: usize, v: &[f64]) -> Vec<f64> {
        self.gradient(v).iter().map(|w| w[j]).collect()
    }

    /// `D_I^(j) u` for an interior vector.
    pub fn apply_interior(&self, j: usize, u: &[f64]) -> Vec<f64> {
        self.gradient_interior(u).iter().map(|w| w[j]).collect()
    }

    /// `Σ_j [D_I^(j)]^T c^(j)` where `c[i][j]` is the `i`-th entry of `c^(j)`.
    pub fn gradient_interior_transpose(&self, c: &[[f64; 3]]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_interior()];
        self.gradient_interior_transpose_add(c, &mut out);
        out
    }

    pub fn gradient_interior_transpose_add(&self, c: &[[f64; 3]], out: &mut [f64]) {
        for ((e, g), ci) in self.elements.iter().zip(&self.grads).zip(c) {
            for k in 0..=self.d {
                let ik = self.to_interior[e[k]];
                if ik == NONE {
                    continue;
                }
                let mut acc = 0.0;
                for j in 0..self.d {
                    acc += g[k][j] * ci[j];
                }
                out[ik] += acc;
            }
        }
    }

    /// `[D_I^(j)]^T w` for a single derivative direction.
    pub fn apply_interior_transpose(&self, j: usize, w: &[f64]) -> Vec<f64> {
        let c: Vec<[f64; 3]> = w
            .iter()
            .map(|&x| {
                let mut r = [0.0; 3];
                r[j] = x;
                r
            })
            .collect();
        self.gradient_interior_transpose(&c)
    }

    /// Row `i` of `D^(j)` as `(vertex, value)` pairs.
    pub fn row(&self, j: usize, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..=self.d).map(move |k| (self.elements[i][k], self.grads[i][k][j]))
    }

    /// Interior vector extended by zero to all vertices.
    pub fn lift_interior(&self, u: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (&g, &x) in self.interior.iter().zip(u) {
            v[g] = x;
        }
        v
    }

    /// Boundary vector extended by zero to all vertices.
    pub fn lift_boundary(&self, g_boundary: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (&g, &x) in self.boundary.iter().zip(g_boundary) {
            v[g] = x;
        }
        v
    }

    /// `u + g` as a full nodal vector.
    pub fn combine(&self, u: &[f64], g: &[f64]) -> Vec<f64> {
        let mut v = g.to_vec();
        for (&gi, &x) in self.interior.iter().zip(u) {
            v[gi] += x;
        }
        v
    }

    pub fn restrict_interior(&self, v: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&g| v[g]).collect()
    }

    pub fn restrict_boundary(&self, v: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&g| v[g]).collect()
    }

    /// Envelope values of `Σ_i coeff(i) ∇φ_a · ∇φ_b` over interior pairs `(a, b)`.
    pub fn assemble_stiffness(&self, coeff: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut values = self.envelope.zeros();
        for i in 0..self.n_elements() {
            let c = coeff(i);
            let g = &self.grads[i];
            let slots = &self.pair_slots[i];
            for a in 0..=self.d {
                for b in 0..=a {
                    let slot = slots[a][b];
                    if slot == NONE {
                        continue;
                    }
                    let mut dot = 0.0;
                    for j in 0..self.d {
                        dot += g[a][j] * g[b][j];
                    }
                    values[slot] += c * dot;
                }
            }
        }
        values
    }

    /// Interior block `A_II` of the P1 Laplacian `Σ_k [D^(k)]^T diag(ω) D^(k)`.
    pub fn laplacian_interior(&self) -> Vec<f64> {
        self.assemble_stiffness(|i| self.omega[i])
    }

    /// `A_IΓ g_Γ`.
    pub fn laplacian_coupling(&self, g_boundary: &[f64]) -> Vec<f64> {
        let grad = self.gradient(&self.lift_boundary(g_boundary));
        let c: Vec<[f64; 3]> = grad
            .iter()
            .zip(&self.omega)
            .map(|(w, &om)| [w[0] * om, w[1] * om, w[2] * om])
            .collect();
        self.gradient_interior_transpose(&c)
    }

    pub fn factor_laplacian(&self) -> Result<EnvelopeCholesky> {
        EnvelopeCholesky::factor(self.envelope.clone(), self.laplacian_interior())
    }

    /// Discrete harmonic extension of boundary values: the interior part solves
    /// `A_II g_I = −A_IΓ g_Γ`.
    pub fn harmonic_prolongation(&self, g_boundary: &[f64]) -> Result<Vec<f64>> {
        self.check_boundary_len(g_boundary)?;
        let mut g = self.lift_boundary(g_boundary);
        if self.n_interior() == 0 {
            return Ok(g);
        }
        let mut rhs = self.laplacian_coupling(g_boundary);
        rhs.iter_mut().for_each(|x| *x = -*x);
        let chol = self.factor_laplacian()?;
        chol.solve_in_place(&mut rhs);
        for (&v, &x) in self.interior.iter().zip(&rhs) {
            g[v] = x;
        }
        Ok(g)
    }

    /// Boundary values with zero interior.
    pub fn zero_prolongation(&self, g_boundary: &[f64]) -> Result<Vec<f64>> {
        self.check_boundary_len(g_boundary)?;
        Ok(self.lift_boundary(g_boundary))
    }

    fn check_boundary_len(&self, g_boundary: &[f64]) -> Result<()> {
        if g_boundary.len() != self.n_boundary() {
            return Err(Error::InvalidConfig(format!(
                "expected {} boundary values, got {}",
                self.n_boundary(),
                g_boundary.len()
            )));
        }
        Ok(())
    }

    /// `∫ f φ_k` for every interior vertex `k` and piecewise constant `f`.
    pub fn load_vector(&self, f_cell: &[f64]) -> Vec<f64> {
        assert_eq!(f_cell.len(), self.n_elements());
        let mut out = vec![0.0; self.n_interior()];
        let share = 1.0 / (self.d + 1) as f64;
        for ((e, &om), &f) in self.elements.iter().zip(&self.omega).zip(f_cell) {
            for k in 0..=self.d {
                let ik = self.to_interior[e[k]];
                if ik != NONE {
                    out[ik] += f * om * share;
                }
            }
        }
        out
    }

    /// `‖v‖_{X^p}` of a full nodal vector.
    pub fn xp_norm(&self, v: &[f64], p: Exponent) -> f64 {
        xp_norm_of_gradients(&self.gradient(v), &self.omega, p)
    }

    /// `‖f‖_{L^q}` of a piecewise constant function.
    pub fn lq_norm_cells(&self, f_cell: &[f64], q: Exponent) -> f64 {
        match q {
            Exponent::Infinity => f_cell.iter().fold(0.0, |a, f| a.max(f.abs())),
            Exponent::Finite(q) => {
                let s: f64 = f_cell.iter().zip(&self.omega).map(|(f, w)| w * f.abs().powf(q)).sum();
                s.powf(1.0 / q)
            }
        }
    }

    /// Midpoint-rule `‖v‖_{L^p}` of a full nodal vector using barycenter values.
    pub fn lp_norm_midpoint(&self, v: &[f64], p: Exponent) -> f64 {
        let mids: Vec<f64> = self
            .elements
            .iter()
            .map(|e| e[..=self.d].iter().map(|&k| v[k]).sum::<f64>() / (self.d + 1) as f64)
            .collect();
        self.lq_norm_cells(&mids, p)
    }

    /// Discrete energy of `u` for boundary data `g` and load `f_node`.
    pub fn energy(&self, g: &[f64], f_node: &[f64], u: &[f64], p: Exponent) -> f64 {
        let w = self.gradient(&self.combine(u, g));
        energy_from_gradients(&w, &self.omega, f_node, u, p)
    }
}

pub(crate) fn grad_norm_sq(w: &[f64; 3]) -> f64 {
    w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
}

pub(crate) fn xp_norm_of_gradients(w: &[[f64; 3]], omega: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => w.iter().map(|w| grad_norm_sq(w).sqrt()).fold(0.0, f64::max),
        Exponent::Finite(p) => {
            let s: f64 = w
                .iter()
                .zip(omega)
                .map(|(w, om)| om * grad_norm_sq(w).powf(p / 2.0))
                .sum();
            s.powf(1.0 / p)
        }
    }
}

pub(crate) fn energy_from_gradients(
    w: &[[f64; 3]],
    omega: &[f64],
    f_node: &[f64],
    u: &[f64],
    p: Exponent,
) -> f64 {
    let load: f64 = f_node.iter().zip(u).map(|(f, x)| f * x).sum();
    match p {
        Exponent::Infinity => xp_norm_of_gradients(w, omega, p) - load,
        Exponent::Finite(pv) => {
            let s: f64 = w
                .iter()
                .zip(omega)
                .map(|(w, om)| om * grad_norm_sq(w).powf(pv / 2.0))
                .sum();
            s / pv - load
        }
    }
}

/// How interior values of `g` are chosen from its boundary trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Prolongation {
    #[default]
    Harmonic,
    Zero,
}

/// Inputs from which a [`Problem`] is built.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: Exponent,
    /// Values at the boundary vertices, in the order of [`DiscreteOperators::boundary`].
    pub g_boundary: Vec<f64>,
    pub prolongation: Prolongation,
    /// Piecewise constant forcing, one value per element.
    pub f_cell: Vec<f64>,
    /// Target accuracy on the energy.
    pub epsilon: f64,
}

/// One discrete problem: minimize `J` over the interior values `u`, rewritten as
/// `min c·x` over `x = (u, s)` in the convex set cut out by the barrier.
///
/// For finite `p` the cost is `c = [−p f ; ω]`, which makes `c·x = p J(u)` at
/// epigraph-tight points; the internal tolerance is therefore `p ε`. For
/// `p = ∞` there is a single epigraph variable and `c = [−f ; 1]`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub ops: Arc<DiscreteOperators>,
    pub p: Exponent,
    /// Full nodal boundary data including its interior prolongation.
    pub g: Vec<f64>,
    /// Per-element gradient of `g`, the vectors `b^(j) = D^(j) g`.
    pub b: Vec<[f64; 3]>,
    pub f_cell: Vec<f64>,
    pub f_node: Vec<f64>,
    pub width: f64,
    pub radius: f64,
    pub epsilon: f64,
    pub epsilon_internal: f64,
    /// Linear cost over `(u, s)`.
    pub cost: Vec<f64>,
}

impl Problem {
    pub fn new(ops: Arc<DiscreteOperators>, spec: &ProblemSpec) -> Result<Problem> {
        if spec.g_boundary.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("boundary data must be finite".into()));
        }
        let g = match spec.prolongation {
            Prolongation::Harmonic => ops.harmonic_prolongation(&spec.g_boundary)?,
            Prolongation::Zero => ops.zero_prolongation(&spec.g_boundary)?,
        };
        Problem::with_full_g(ops, spec.p, g, spec.f_cell.clone(), spec.epsilon)
    }

    /// Builds a problem from a full nodal `g` whose interior values are used as given.
    pub fn with_full_g(
        ops: Arc<DiscreteOperators>,
        p: Exponent,
        g: Vec<f64>,
        f_cell: Vec<f64>,
        epsilon: f64,
    ) -> Result<Problem> {
        if g.len() != ops.n_nodes() {
            return Err(Error::InvalidConfig(format!(
                "expected {} nodal values of g, got {}",
                ops.n_nodes(),
                g.len()
            )));
        }
        if f_cell.len() != ops.n_elements() {
            return Err(Error::InvalidConfig(format!(
                "expected {} forcing values, got {}",
                ops.n_elements(),
                f_cell.len()
            )));
        }
        if f_cell.iter().chain(&g).any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("g and f must be finite".into()));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
        }
        let b = ops.gradient(&g);
        let f_node = ops.load_vector(&f_cell);
        let width = ops.width();
        let radius = compute_radius(&ops, &b, &f_cell, p, width)?;
        let cost = build_cost(&ops, &f_node, p);
        let epsilon_internal = epsilon * p.cost_scale();
        Ok(Problem {
            ops,
            p,
            g,
            b,
            f_cell,
            f_node,
            width,
            radius,
            epsilon,
            epsilon_internal,
            cost,
        })
    }

    pub fn n_u(&self) -> usize {
        self.ops.n_interior()
    }

    /// Number of epigraph variables: `m` for finite `p`, one for `p = ∞`.
    pub fn n_s(&self) -> usize {
        if self.p.is_infinite() {
            1
        } else {
            self.ops.n_elements()
        }
    }

    /// Length of `x = (u, s)`.
    pub fn n_x(&self) -> usize {
        self.n_u() + self.n_s()
    }

    /// Per-element gradient `∇(u + g)`.
    pub fn total_gradient(&self, u: &[f64]) -> Vec<[f64; 3]> {
        let mut w = self.ops.gradient_interior(u);
        for (wi, bi) in w.iter_mut().zip(&self.b) {
            for j in 0..3 {
                wi[j] += bi[j];
            }
        }
        w
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        energy_from_gradients(&self.total_gradient(u), self.ops.omega(), &self.f_node, u, self.p)
    }

    /// `c · x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// The a-priori radius before the feasibility floor is applied.
pub fn radius_case(
    ops: &DiscreteOperators,
    b: &[[f64; 3]],
    f_cell: &[f64],
    p: Exponent,
    width: f64,
) -> Result<f64> {
    let omega = ops.omega();
    match p {
        Exponent::Finite(1.0) => {
            let product = width * ops.lq_norm_cells(f_cell, Exponent::Infinity);
            if product >= 1.0 {
                return Err(Error::UnboundedBelow { product });
            }
            Ok(2.0 + 2.0 * xp_norm_of_gradients(b, omega, p) / (1.0 - product))
        }
        Exponent::Finite(pv) => {
            let q = pv / (pv - 1.0);
            let gp = xp_norm_of_gradients(b, omega, p).powf(pv);
            let fq = ops.lq_norm_cells(f_cell, Exponent::Finite(q)).powf(q);
            let forcing = 4.0 * width.powf(q) * (pv / 2.0).powf(1.0 / (1.0 - pv)) * (pv - 1.0) * fq;
            Ok(2.0 + 8.0 * gp + forcing)
        }
        Exponent::Infinity => {
            let product = width * ops.lq_norm_cells(f_cell, Exponent::Finite(1.0));
            if product >= 1.0 {
                return Err(Error::UnboundedBelow { product });
            }
            let w_max = omega.iter().copied().fold(0.0, f64::max);
            let g_inf = xp_norm_of_gradients(b, omega, p);
            Ok(w_max * (2.0 + 2.0 * g_inf / (1.0 - product)))
        }
    }
}

/// `2 + 2 max ζ_i + δ` with `ζ_i = ‖∇g|_{K_i}‖^p`, the smallest radius for which
/// the documented starting point is strictly interior. `None` for `p = ∞`, where
/// the case radius already suffices.
pub fn feasibility_floor(b: &[[f64; 3]], p: Exponent) -> Option<f64> {
    let Exponent::Finite(pv) = p else {
        return None;
    };
    let zeta_max = b.iter().map(|w| grad_norm_sq(w).powf(pv / 2.0)).fold(0.0, f64::max);
    Some(2.0 + 2.0 * zeta_max + 1e-6 * (1.0 + zeta_max))
}

/// Radius `R` bounding `ω_i s_i` on the feasible set.
pub fn compute_radius(
    ops: &DiscreteOperators,
    b: &[[f64; 3]],
    f_cell: &[f64],
    p: Exponent,
    width: f64,
) -> Result<f64> {
    let case = radius_case(ops, b, f_cell, p, width)?;
    Ok(match feasibility_floor(b, p) {
        Some(floor) => case.max(floor),
        None => case,
    })
}

/// `c = [−p f ; ω]` for finite `p`, `c = [−f ; 1]` for `p = ∞`.
pub fn build_cost(ops: &DiscreteOperators, f_node: &[f64], p: Exponent) -> Vec<f64> {
    let scale = p.cost_scale();
    let mut c: Vec<f64> = f_node.iter().map(|f| -scale * f).collect();
    if p.is_infinite() {
        c.push(1.0);
    } else {
        c.extend_from_slice(ops.omega());
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(cells: usize, d: usize) -> (Mesh, DiscreteOperators) {
        let mesh = Mesh::build_box(&vec![1.0; d], cells, d).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        (mesh, ops)
    }

    #[test]
    fn hat_gradient_on_corner_triangle() {
        // Kuhn triangle (0,0), (h,0), (h,h) of the 2×2 mesh
        let (mesh, ops) = ops(2, 2);
        let h = 0.5;
        let find = |x: f64, y: f64| {
            mesh.vertices().iter().position(|v| v[0] == x && v[1] == y).unwrap()
        };
        let (a, b, c) = (find(0.0, 0.0), find(h, 0.0), find(h, h));
        let i = ops
            .elements()
            .iter()
            .position(|e| [a, b, c].iter().all(|v| e[..3].contains(v)))
            .unwrap();
        let d1: Vec<(usize, f64)> = ops.row(0, i).collect();
        let at = |v: usize| d1.iter().find(|(k, _)| *k == v).unwrap().1;
        assert_relative_eq!(at(b), 1.0 / h, epsilon = 1e-14);
        assert_relative_eq!(at(a), -1.0 / h, epsilon = 1e-14);
        assert_relative_eq!(at(c), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_on_linears() {
        for (cells, d) in [(3, 1), (4, 2), (2, 3), (3, 3)] {
            let (mesh, ops) = ops(cells, d);
            for r in 0..d {
                let v = mesh.interpolate(|x| x[r]);
                for j in 0..d {
                    for x in ops.apply(j, &v) {
                        assert!((x - if j == r { 1.0 } else { 0.0 }).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_volume() {
        let (_, ops) = ops(2, 2);
        for &w in ops.omega() {
            assert_relative_eq!(w, 0.125, epsilon = 1e-15);
        }
        assert_relative_eq!(ops.omega().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rows_have_at_most_d_plus_one_entries() {
        let (_, ops) = ops(3, 3);
        for i in 0..ops.n_elements() {
            assert_eq!(ops.row(0, i).count(), 4);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let (_, ops) = ops(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u: Vec<f64> = (0..ops.n_interior()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<[f64; 3]> = (0..ops.n_elements())
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0])
            .collect();
        let du = ops.gradient_interior(&u);
        let lhs: f64 = du.iter().zip(&c).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
        let dtc = ops.gradient_interior_transpose(&c);
        let rhs: f64 = dtc.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn prolongation_examples() {
        let (mesh, ops) = ops(4, 2);
        let zero = ops.harmonic_prolongation(&vec![0.0; ops.n_boundary()]).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));

        let lin = mesh.interpolate(|x| x[0]);
        let g = ops.harmonic_prolongation(&ops.restrict_boundary(&lin)).unwrap();
        for (a, b) in g.iter().zip(&lin) {
            assert!((a - b).abs() < 1e-12);
        }

        let ind = mesh.interpolate(|x| {
            let left = x[0] == 0.0 && (0.25..=0.75).contains(&x[1]);
            let right = x[0] >= 0.6 && x[1] >= 0.25;
            if left || right { 1.0 } else { 0.0 }
        });
        let g = ops.harmonic_prolongation(&ops.restrict_boundary(&ind)).unwrap();
        assert!(g.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn load_vector_examples() {
        let (_, ops) = ops(2, 2);
        let f = ops.load_vector(&[1.0; 8]);
        assert_eq!(f.len(), 1);
        assert_relative_eq!(f[0], 0.25, epsilon = 1e-15);
        assert_eq!(ops.load_vector(&[0.0; 8]), vec![0.0]);
        assert_relative_eq!(ops.load_vector(&[3.0; 8])[0], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn xp_norm_examples() {
        let (mesh, ops) = ops(4, 2);
        let x1 = mesh.interpolate(|x| x[0]);
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert_relative_eq!(ops.xp_norm(&x1, Exponent::Finite(p)), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(ops.xp_norm(&x1, Exponent::Infinity), 1.0, epsilon = 1e-12);
        assert_eq!(ops.xp_norm(&vec![0.0; ops.n_nodes()], Exponent::Finite(2.0)), 0.0);
        let sum = mesh.interpolate(|x| x[0] + x[1]);
        assert_relative_eq!(ops.xp_norm(&sum, Exponent::Finite(2.0)), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn energy_examples() {
        let (mesh, ops) = ops(4, 2);
        let x1 = mesh.interpolate(|x| x[0]);
        let u = vec![0.0; ops.n_interior()];
        let f = vec![0.0; ops.n_interior()];
        assert_relative_eq!(ops.energy(&x1, &f, &u, Exponent::Finite(2.0)), 0.5, epsilon = 1e-12);
        assert_relative_eq!(ops.energy(&x1, &f, &u, Exponent::Finite(3.0)), 1.0 / 3.0, epsilon = 1e-12);
        let zero = vec![0.0; ops.n_nodes()];
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.5), Exponent::Infinity] {
            assert_eq!(ops.energy(&zero, &f, &u, p), 0.0);
        }
    }

    #[test]
    fn radius_examples() {
        let (mesh, ops) = ops(4, 2);
        let zero_b = vec![[0.0; 3]; ops.n_elements()];
        let f0 = vec![0.0; ops.n_elements()];
        let p1 = Exponent::Finite(1.0);
        assert_relative_eq!(radius_case(&ops, &zero_b, &f0, p1, 1.0).unwrap(), 2.0);
        let b = ops.gradient(&mesh.interpolate(|x| x[0]));
        assert_relative_eq!(radius_case(&ops, &b, &f0, p1, 1.0).unwrap(), 4.0, epsilon = 1e-12);
        let p2 = Exponent::Finite(2.0);
        assert_relative_eq!(radius_case(&ops, &zero_b, &f0, p2, 1.0).unwrap(), 2.0);
        let r = compute_radius(&ops, &zero_b, &f0, p2, 1.0).unwrap();
        assert_relative_eq!(r, 2.0 + 1e-6, epsilon = 1e-15);

        let big = vec![2.0; ops.n_elements()];
        assert!(matches!(
            compute_radius(&ops, &zero_b, &big, p1, 1.0),
            Err(Error::UnboundedBelow { .. })
        ));
        assert!(matches!(
            compute_radius(&ops, &zero_b, &big, Exponent::Infinity, 1.0),
            Err(Error::UnboundedBelow { .. })
        ));
        // finite 1 < p < ∞ never refuses
        assert!(compute_radius(&ops, &zero_b, &big, Exponent::Finite(1.5), 1.0).is_ok());
    }

    #[test]
    fn radius_with_forcing_matches_formula() {
        let (_, ops) = ops(4, 2);
        let zero_b = vec![[0.0; 3]; ops.n_elements()];
        let f = vec![0.5; ops.n_elements()];
        let p = 3.0;
        let q = 1.5;
        let want = 2.0 + 4.0 * (p / 2.0f64).powf(1.0 / (1.0 - p)) * (p - 1.0) * 0.5f64.powf(q);
        let got = radius_case(&ops, &zero_b, &f, Exponent::Finite(p), 1.0).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-12);

        let w_max = 1.0 / 32.0;
        let got = radius_case(&ops, &zero_b, &vec![0.25; 32], Exponent::Infinity, 1.0).unwrap();
        assert_relative_eq!(got, w_max * 2.0, max_relative = 1e-12);
    }

    #[test]
    fn cost_examples() {
        let (_, ops) = ops(2, 2);
        let f0 = vec![0.0];
        let c = build_cost(&ops, &f0, Exponent::Finite(1.5));
        assert_eq!(c[0], 0.0);
        assert_eq!(&c[1..], ops.omega());
        assert_eq!(build_cost(&ops, &f0, Exponent::Infinity), vec![0.0, 1.0]);
        let c = build_cost(&ops, &[1.0], Exponent::Finite(2.0));
        assert_eq!(c[0], -2.0);
    }

    #[test]
    fn tight_epigraph_reproduces_scaled_energy() {
        let (mesh, ops) = ops(4, 2);
        let ops = Arc::new(ops);
        let g = mesh.interpolate(|x| x[0] * x[0] - 0.5 * x[1]);
        let f: Vec<f64> = (0..ops.n_elements()).map(|i| 0.1 * (i % 3) as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &p in &[1.5, 2.0, 4.0] {
            let prob = Problem::with_full_g(ops.clone(), Exponent::Finite(p), g.clone(), f.clone(), 1e-6)
                .unwrap();
            let u: Vec<f64> = (0..prob.n_u()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut x = u.clone();
            x.extend(prob.total_gradient(&u).iter().map(|w| grad_norm_sq(w).powf(p / 2.0)));
            assert!((p * prob.energy(&u) - prob.objective(&x)).abs() <= 1e-10);
        }
    }

    fn random_interior(ops: &DiscreteOperators, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let u: Vec<f64> = (0..ops.n_interior()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ops.lift_interior(&u)
    }

    #[test]
    fn friedrichs_inequality() {
        // a 2 × 1 box of width 1
        let mesh = Mesh::build_box(&[2.0, 1.0], 5, 2).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let phi = random_interior(&ops, &mut rng);
            for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinity] {
                let factor = match p {
                    Exponent::Finite(pv) => pv.powf(-1.0 / pv),
                    Exponent::Infinity => 1.0,
                };
                let lhs = ops.lp_norm_midpoint(&phi, p);
                let rhs = 1.05 * mesh.width() * factor * ops.xp_norm(&phi, p) + 1e-10;
                assert!(lhs <= rhs, "p={p}: {lhs} > {rhs}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn energy_is_convex(seed in 0u64..1_000_000, pi in 0usize..5) {
            let p = [Exponent::Finite(1.0), Exponent::Finite(1.5), Exponent::Finite(2.0),
                     Exponent::Finite(3.5), Exponent::Infinity][pi];
            let mesh = Mesh::build_box(&[1.0, 1.0], 3, 2).unwrap();
            let ops = DiscreteOperators::assemble(&mesh).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = mesh.interpolate(|x| (3.0 * x[0]).sin() + x[1]);
            let f: Vec<f64> = (0..ops.n_interior()).map(|_| rng.random_range(-0.2..0.2)).collect();
            let u: Vec<f64> = (0..ops.n_interior()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..ops.n_interior()).map(|_| rng.random_range(-1.0..1.0)).collect();
            for t in [0.25, 0.5, 0.75] {
                let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                let lhs = ops.energy(&g, &f, &mix, p);
                let rhs = t * ops.energy(&g, &f, &u, p) + (1.0 - t) * ops.energy(&g, &f, &v, p);
                prop_assert!(lhs <= rhs + 1e-10);
            }
        }

        #[test]
        fn linear_exactness_on_stretched_boxes(ex in 1usize..4, ey in 1usize..4, refine in 1usize..4) {
            let cells = ex.min(ey) * refine;
            let mesh = Mesh::build_box(&[ex as f64 * 0.5, ey as f64 * 0.5], cells, 2).unwrap();
            let ops = DiscreteOperators::assemble(&mesh).unwrap();
            let v = mesh.interpolate(|x| 2.0 * x[0] - 3.0 * x[1]);
            for w in ops.gradient(&v) {
                prop_assert!((w[0] - 2.0).abs() < 1e-12 && (w[1] + 3.0).abs() < 1e-12);
            }
            prop_assert!((ops.omega().iter().sum::<f64>() - mesh.volume()).abs() < 1e-12);
        }
    }
}
