//! End-to-end solves: mesh, operators, problem data, auxiliary phase, main phase.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::barrier::{evaluate, initial_point, nu, Order};
use crate::discretization::{DiscreteOperators, Problem, ProblemSpec, Prolongation};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::mesh::Mesh;
use crate::newton::NewtonSystem;
use crate::pathfollow::{
    auxiliary_center, main_path, predict_iteration_bound, Method, PathOptions, SolverConstants, TraceRecord,
};

/// Built-in boundary data, evaluated on coordinates normalized to the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BoundaryPreset {
    Zero,
    /// `g = x_1` (unnormalized).
    LinearX,
    /// `g = ξ_1 ξ_2`, piecewise linear along every edge of a 2-D box.
    Xy,
    /// Indicator of `({0} × [1/4, 3/4]) ∪ ([0.6, 1] × [1/4, 1])`.
    Fig1,
    /// Indicator of `ξ_d > 0.45`.
    Step,
}

impl BoundaryPreset {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryPreset::Zero => "zero",
            BoundaryPreset::LinearX => "linear-x",
            BoundaryPreset::Xy => "xy",
            BoundaryPreset::Fig1 => "fig1",
            BoundaryPreset::Step => "step",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "zero" => BoundaryPreset::Zero,
            "linear-x" | "linear_x" => BoundaryPreset::LinearX,
            "xy" => BoundaryPreset::Xy,
            "fig1" => BoundaryPreset::Fig1,
            "step" => BoundaryPreset::Step,
            _ => return None,
        })
    }

    /// Value at a point `x` of the box with the given extents.
    pub fn eval(&self, x: &[f64], extents: &[f64]) -> f64 {
        const TOL: f64 = 1e-12;
        let xi = |j: usize| x[j] / extents[j];
        let d = x.len();
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            BoundaryPreset::Zero => 0.0,
            BoundaryPreset::LinearX => x[0],
            BoundaryPreset::Xy => {
                if d == 1 {
                    xi(0)
                } else {
                    xi(0) * xi(1)
                }
            }
            BoundaryPreset::Fig1 => {
                if d == 1 {
                    return indicator(xi(0) >= 0.6 - TOL);
                }
                let (a, b) = (xi(0), xi(1));
                let left = a.abs() <= TOL && (0.25 - TOL..=0.75 + TOL).contains(&b);
                let right = a >= 0.6 - TOL && b >= 0.25 - TOL;
                indicator(left || right)
            }
            BoundaryPreset::Step => indicator(xi(d - 1) > 0.45),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    Preset(BoundaryPreset),
    /// Either one value per boundary vertex (in vertex order) or one value per
    /// vertex, of which only the boundary entries are used.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Constant(f64),
    PerCell(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub dim: usize,
    pub cells: usize,
    pub extents: Vec<f64>,
    pub p: Exponent,
    /// Accuracy on the energy `J`.
    pub epsilon: f64,
    pub boundary: BoundaryData,
    pub forcing: Forcing,
    pub method: Method,
    pub prolongation: Prolongation,
    pub constants: SolverConstants,
    /// Per-phase iteration cap; by default `10 ×` the predicted bound, at least `10^5`.
    pub max_iterations: Option<usize>,
}

impl SolveConfig {
    /// Unit square with `cells × cells` cells, zero forcing, harmonic prolongation.
    pub fn unit_square(cells: usize, p: Exponent, boundary: BoundaryPreset, method: Method) -> Self {
        SolveConfig {
            dim: 2,
            cells,
            extents: vec![1.0, 1.0],
            p,
            epsilon: 1e-6,
            boundary: BoundaryData::Preset(boundary),
            forcing: Forcing::Constant(0.0),
            method,
            prolongation: Prolongation::Harmonic,
            constants: SolverConstants::default(),
            max_iterations: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidConfig(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.extents.len() != self.dim {
            return Err(Error::InvalidConfig(format!(
                "expected {} extents, got {}",
                self.dim,
                self.extents.len()
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        match self.method {
            Method::Long { kappa } if !(kappa >= 1.0 && kappa.is_finite()) => {
                return Err(Error::InvalidConfig(format!("kappa must be at least 1, got {kappa}")))
            }
            Method::Adaptive { kappa0 } if !(kappa0 >= 1.0 && kappa0.is_finite()) => {
                return Err(Error::InvalidConfig(format!("kappa0 must be at least 1, got {kappa0}")))
            }
            _ => {}
        }
        if let Forcing::Constant(f) = self.forcing {
            if !f.is_finite() {
                return Err(Error::InvalidConfig("forcing must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        self.validate()?;
        Mesh::build_box(&self.extents, self.cells, self.dim)
    }

    /// Mesh, operators and problem data for this configuration.
    pub fn build_problem(&self) -> Result<(Mesh, Problem)> {
        let mesh = self.build_mesh()?;
        let ops = Arc::new(DiscreteOperators::assemble(&mesh)?);
        let g_boundary = match &self.boundary {
            BoundaryData::Preset(preset) => {
                let nodal = mesh.interpolate(|x| preset.eval(x, &self.extents));
                ops.restrict_boundary(&nodal)
            }
            BoundaryData::Values(v) if v.len() == ops.n_boundary() => v.clone(),
            BoundaryData::Values(v) if v.len() == ops.n_nodes() => ops.restrict_boundary(v),
            BoundaryData::Values(v) => {
                return Err(Error::InvalidConfig(format!(
                    "boundary data has {} values; expected {} (boundary) or {} (all vertices)",
                    v.len(),
                    ops.n_boundary(),
                    ops.n_nodes()
                )))
            }
        };
        let f_cell = match &self.forcing {
            Forcing::Constant(c) => vec![*c; ops.n_elements()],
            Forcing::PerCell(v) => v.clone(),
        };
        let spec = ProblemSpec {
            p: self.p,
            g_boundary,
            prolongation: self.prolongation,
            f_cell,
            epsilon: self.epsilon,
        };
        let problem = Problem::new(ops, &spec)?;
        Ok((mesh, problem))
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub p: Exponent,
    pub method: Method,
    pub n_interior: usize,
    pub m: usize,
    pub h: f64,
    pub newton_aux: usize,
    pub newton_main: usize,
    pub newton_total: usize,
    pub rejections: usize,
    /// `J(u)` at the returned point.
    pub final_energy: f64,
    /// Certified bound on `J(u) − min J`.
    pub gap_bound: f64,
    pub epsilon: f64,
    pub epsilon_internal: f64,
    pub nu: f64,
    pub radius: f64,
    pub t_final: f64,
    /// Short-step iteration bound evaluated at the computed approximate center.
    pub predicted_bound: f64,
    pub trace: Vec<TraceRecord>,
    /// Interior unknowns.
    pub u: Vec<f64>,
    /// Epigraph variables at the returned point.
    pub s: Vec<f64>,
    /// `u + g` at every vertex.
    pub nodal: Vec<f64>,
}

/// `(ν + (β + √ν) β / (1 − β)) / t`, divided by `p` for finite `p` so that it
/// bounds the gap in `J` rather than in `c·x`.
pub fn gap_certificate(nu: f64, t_final: f64, p: Exponent, constants: &SolverConstants) -> f64 {
    constants.gap_numerator(nu) / t_final / p.cost_scale()
}

pub fn solve(config: &SolveConfig) -> Result<SolveReport> {
    solve_with(config, None)
}

/// Like [`solve`], polling `interrupt` once per Newton iteration.
pub fn solve_with(config: &SolveConfig, interrupt: Option<&(dyn Fn() -> bool + Sync)>) -> Result<SolveReport> {
    let (_, problem) = config.build_problem()?;
    solve_problem(&problem, config.method, &config.constants, config.max_iterations, interrupt)
}

/// Runs both phases on an already assembled problem.
pub fn solve_problem(
    problem: &Problem,
    method: Method,
    constants: &SolverConstants,
    max_iterations: Option<usize>,
    interrupt: Option<&(dyn Fn() -> bool + Sync)>,
) -> Result<SolveReport> {
    let nu_value = nu(problem.ops.n_elements(), problem.p);
    let x_hat = initial_point(problem)?;
    let grad_hat = evaluate(problem, &x_hat, Order::Gradient).grad;
    let x_hat_vec = x_hat.x.clone();

    let aux_opts = PathOptions {
        constants: *constants,
        method,
        max_iterations: max_iterations.unwrap_or(100_000),
        interrupt,
    };
    let aux = auxiliary_center(problem, x_hat, &aux_opts)?;

    let center = evaluate(problem, &aux.iterate, Order::Hessian);
    let sys = NewtonSystem::factor(problem, &aux.iterate, &center)?;
    let predicted_bound = predict_iteration_bound(
        nu_value,
        sys.local_norm(&grad_hat)?.max(f64::MIN_POSITIVE),
        sys.local_norm(&x_hat_vec)?.max(f64::MIN_POSITIVE),
        problem.epsilon_internal,
    );

    let main_cap = max_iterations.unwrap_or_else(|| {
        let predicted = if predicted_bound.is_finite() { predicted_bound } else { 0.0 };
        ((10.0 * predicted) as usize).max(100_000)
    });
    let main_opts = PathOptions {
        max_iterations: main_cap,
        ..aux_opts
    };
    let main = main_path(problem, aux.iterate, problem.epsilon_internal, &main_opts)?;

    let u = main.iterate.u().to_vec();
    let s = main.iterate.s().to_vec();
    let nodal = problem.ops.combine(&u, &problem.g);
    let mut trace = aux.trace;
    trace.extend(main.trace);
    Ok(SolveReport {
        p: problem.p,
        method,
        n_interior: problem.n_u(),
        m: problem.ops.n_elements(),
        h: cell_side(&problem.ops),
        newton_aux: aux.newton,
        newton_main: main.newton,
        newton_total: aux.newton + main.newton,
        rejections: aux.rejections + main.rejections,
        final_energy: problem.energy(&u),
        gap_bound: gap_certificate(nu_value, main.t, problem.p, constants),
        epsilon: problem.epsilon,
        epsilon_internal: problem.epsilon_internal,
        nu: nu_value,
        radius: problem.radius,
        t_final: main.t,
        predicted_bound,
        trace,
        u,
        s,
        nodal,
    })
}

/// Cell side of the Kuhn mesh: `vol = (m / d!) h^d`.
fn cell_side(ops: &DiscreteOperators) -> f64 {
    let d = ops.dim();
    let factorial: usize = (1..=d).product();
    (ops.volume() * factorial as f64 / ops.n_elements() as f64).powf(1.0 / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_relative_eq;

    #[test]
    fn presets_on_unit_square() {
        let e = [1.0, 1.0];
        let fig1 = BoundaryPreset::Fig1;
        assert_eq!(fig1.eval(&[0.0, 0.5], &e), 1.0);
        assert_eq!(fig1.eval(&[0.0, 0.9], &e), 0.0);
        assert_eq!(fig1.eval(&[1.0, 0.25], &e), 1.0);
        assert_eq!(fig1.eval(&[0.75, 1.0], &e), 1.0);
        assert_eq!(fig1.eval(&[0.5, 1.0], &e), 0.0);
        assert_eq!(fig1.eval(&[1.0, 0.0], &e), 0.0);
        assert_eq!(BoundaryPreset::Xy.eval(&[0.5, 1.0], &e), 0.5);
        assert_eq!(BoundaryPreset::Step.eval(&[0.3, 0.5], &e), 1.0);
        for p in [BoundaryPreset::Zero, BoundaryPreset::LinearX, BoundaryPreset::Xy, BoundaryPreset::Fig1, BoundaryPreset::Step] {
            assert_eq!(BoundaryPreset::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn gap_certificate_at_threshold_equals_epsilon() {
        let c = SolverConstants::default();
        let nu = 24.0;
        let eps = 1e-6;
        let p = Exponent::Finite(2.0);
        let t = c.stopping_threshold(nu, eps * p.cost_scale());
        assert_relative_eq!(gap_certificate(nu, t, p, &c), eps, max_relative = 1e-14);
    }

    #[test]
    fn p2_fig1_matches_direct_solve() {
        let config = SolveConfig::unit_square(4, Exponent::Finite(2.0), BoundaryPreset::Fig1, Method::Short);
        let report = solve(&config).unwrap();
        let (_, problem) = config.build_problem().unwrap();
        let u = oracle::p2_direct(&problem.ops, &problem.g, &problem.f_node).unwrap();
        let j_direct = problem.energy(&u);
        assert!((report.final_energy - j_direct).abs() <= 1e-5);
        assert!(report.gap_bound <= config.epsilon * (1.0 + 1e-12));
        assert!(report.final_energy - j_direct <= report.gap_bound);
        assert_eq!(report.newton_total, report.newton_aux + report.newton_main);
        assert!((report.newton_total as f64) <= report.predicted_bound);
        let gaps: Vec<f64> = report.trace.iter().map(|r| r.gap_bound).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn p1_linear_boundary_energy_is_one() {
        let config = SolveConfig::unit_square(4, Exponent::Finite(1.0), BoundaryPreset::LinearX, Method::Adaptive { kappa0: 10.0 });
        let report = solve(&config).unwrap();
        assert!((report.final_energy - 1.0).abs() <= 1e-5, "{}", report.final_energy);
    }

    #[test]
    fn infinity_respects_min_max_principle() {
        let config = SolveConfig::unit_square(4, Exponent::Infinity, BoundaryPreset::Fig1, Method::Adaptive { kappa0: 10.0 });
        let report = solve(&config).unwrap();
        assert!(report.nodal.iter().all(|&v| (-0.02..=1.02).contains(&v)));
        assert!(report.gap_bound <= config.epsilon * (1.0 + 1e-12));
    }

    #[test]
    fn unbounded_forcing_is_refused() {
        let mut config = SolveConfig::unit_square(4, Exponent::Finite(1.0), BoundaryPreset::Zero, Method::Short);
        config.forcing = Forcing::Constant(2.0);
        assert!(matches!(solve(&config), Err(Error::UnboundedBelow { .. })));
    }

    #[test]
    fn config_validation() {
        let mut config = SolveConfig::unit_square(4, Exponent::Finite(2.0), BoundaryPreset::Zero, Method::Long { kappa: 0.5 });
        assert!(matches!(solve(&config), Err(Error::InvalidConfig(_))));
        config.method = Method::Short;
        config.boundary = BoundaryData::Values(vec![0.0; 3]);
        assert!(matches!(solve(&config), Err(Error::InvalidConfig(_))));
        config.boundary = BoundaryData::Preset(BoundaryPreset::Zero);
        config.epsilon = 0.0;
        assert!(matches!(solve(&config), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn deterministic() {
        let config = SolveConfig::unit_square(3, Exponent::Finite(1.5), BoundaryPreset::Fig1, Method::Adaptive { kappa0: 10.0 });
        let a = solve(&config).unwrap();
        let b = solve(&config).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.u, b.u);
    }
}
