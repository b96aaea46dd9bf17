//! Path-following schemes for `min c·x` over the feasible set, driven by the
//! barrier `F`.
//!
//! The auxiliary scheme follows the path `t G + F'(x) = 0`, `G = −F'(x̂)`, from
//! `t = 1` down towards the analytic center. The main scheme follows the central
//! path `t c + F'(x) = 0` from `t = 0` upwards. Both phases share one loop that
//! is parametrized by the path direction `d` (`G` or `c`) and the sign of the
//! `t` update.
//!
//! A point is *accepted* when `‖t d + F'(x)‖*_x ≤ β`; otherwise the iteration is
//! a *slow step*. Short steps always move `t` by `γ / ‖d‖*_x` and take full
//! Newton steps. Long and adaptive steps move `t` by a factor `κ` on accepted
//! points only and use a backtracking line search on `ψ(x) = t d·x + F(x)`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::barrier::{evaluate, nu, BarrierDerivatives, Iterate, Order};
use crate::discretization::Problem;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::newton::NewtonSystem;

/// Tuning constants of the path-following schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConstants {
    /// Acceptance radius of the centering test.
    pub beta: f64,
    /// Short-step length.
    pub gamma: f64,
    /// Armijo fraction of the line search.
    pub ls_alpha: f64,
    /// Backtracking factor of the line search.
    pub ls_shrink: f64,
    /// Initial and largest step multiplier of the adaptive scheme.
    pub kappa0: f64,
    /// Auxiliary phase stops once `‖F'(x)‖*_x` drops below this.
    pub aux_stop: f64,
    /// Accepted after at most this many slow steps: `κ ← min(κ0, κ²)`.
    pub grow_after: usize,
    /// Accepted after at least this many slow steps: `κ ← √κ`.
    pub shrink_after: usize,
    /// Slow steps without acceptance before a rejection.
    pub reject_after: usize,
}

impl Default for SolverConstants {
    fn default() -> Self {
        let beta: f64 = 1.0 / 9.0;
        SolverConstants {
            beta,
            gamma: 5.0 / 36.0,
            ls_alpha: 0.01,
            ls_shrink: 0.25,
            kappa0: 10.0,
            aux_stop: beta.sqrt() / (1.0 + beta.sqrt()),
            grow_after: 2,
            shrink_after: 8,
            reject_after: 15,
        }
    }
}

impl SolverConstants {
    /// `ν + (β + √ν) β / (1 − β)`; the main phase stops once `t` exceeds this over `ε`.
    pub fn gap_numerator(&self, nu: f64) -> f64 {
        nu + (self.beta + nu.sqrt()) * self.beta / (1.0 - self.beta)
    }

    /// Smallest `t` at which the main phase may stop.
    pub fn stopping_threshold(&self, nu: f64, epsilon_internal: f64) -> f64 {
        self.gap_numerator(nu) / epsilon_internal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Method {
    Short,
    Long { kappa: f64 },
    Adaptive { kappa0: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Short => "short",
            Method::Long { .. } => "long",
            Method::Adaptive { .. } => "adaptive",
        }
    }

    fn initial_kappa(&self) -> f64 {
        match *self {
            Method::Short => 1.0,
            Method::Long { kappa } => kappa,
            Method::Adaptive { kappa0 } => kappa0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Phase {
    Auxiliary,
    Main,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Auxiliary => "auxiliary",
            Phase::Main => "main",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StepEvent {
    Accepted,
    Slow,
    /// Rollback to the last accepted point; no Newton step is taken.
    Rejected,
}

impl StepEvent {
    pub fn name(&self) -> &'static str {
        match self {
            StepEvent::Accepted => "accepted",
            StepEvent::Slow => "slow",
            StepEvent::Rejected => "rejected",
        }
    }
}

/// One iteration of a path-following phase, recorded before its Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRecord {
    pub phase: Phase,
    pub k: usize,
    pub t: f64,
    pub kappa: f64,
    /// `‖t d + F'(x)‖*_x` at the current point.
    pub decrement: f64,
    pub event: StepEvent,
    /// `J(u)` at the current point.
    pub energy: f64,
    /// Bound on the energy gap implied by `t` (infinite in the auxiliary phase).
    pub gap_bound: f64,
}

/// Input to [`adaptive_next_kappa`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaEvent {
    /// The current point passed the centering test after this many consecutive slow steps.
    Accepted { slow_steps: usize },
    Slow,
    Rejection,
}

/// Step multiplier update of the adaptive scheme.
pub fn adaptive_next_kappa(kappa: f64, kappa0: f64, event: KappaEvent, constants: &SolverConstants) -> f64 {
    match event {
        KappaEvent::Accepted { slow_steps } if slow_steps <= constants.grow_after => kappa0.min(kappa * kappa),
        KappaEvent::Accepted { slow_steps } if slow_steps >= constants.shrink_after => kappa.sqrt(),
        KappaEvent::Accepted { .. } | KappaEvent::Slow => kappa,
        KappaEvent::Rejection => kappa.sqrt().sqrt(),
    }
}

/// Iteration bound `7.2 √ν [2 ln ν + ln ‖F'(x̂)‖* + ln ‖x̂‖* + ln(1/ε)]` of the
/// combined auxiliary and main short-step schemes.
pub fn predict_iteration_bound(nu: f64, norm_fprime_at_start: f64, norm_start: f64, epsilon: f64) -> f64 {
    7.2 * nu.sqrt()
        * (2.0 * nu.ln() + norm_fprime_at_start.ln() + norm_start.ln() + (1.0 / epsilon).ln())
}

/// Knobs of a single path-following run.
#[derive(Clone, Copy)]
pub struct PathOptions<'a> {
    pub constants: SolverConstants,
    pub method: Method,
    pub max_iterations: usize,
    /// Polled once per iteration; returning `true` aborts with [`Error::Interrupted`].
    pub interrupt: Option<&'a (dyn Fn() -> bool + Sync)>,
}

impl<'a> PathOptions<'a> {
    pub fn new(method: Method) -> Self {
        PathOptions {
            constants: SolverConstants::default(),
            method,
            max_iterations: 100_000,
            interrupt: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub iterate: Iterate,
    /// Path parameter at exit.
    pub t: f64,
    /// Number of Newton updates of `x`.
    pub newton: usize,
    pub rejections: usize,
    pub trace: Vec<TraceRecord>,
}

struct Factored {
    derivs: BarrierDerivatives,
    sys: NewtonSystem,
}

fn factor_at(problem: &Problem, it: &Iterate) -> Result<Factored> {
    let derivs = evaluate(problem, it, Order::Hessian);
    let sys = NewtonSystem::factor(problem, it, &derivs)?;
    Ok(Factored { derivs, sys })
}

fn residual(t: f64, d: &[f64], grad: &[f64]) -> Vec<f64> {
    d.iter().zip(grad).map(|(d, g)| t * d + g).collect()
}

fn axpy_new(x: &[f64], r: f64, dir: &[f64]) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, b)| a + r * b).collect()
}

/// Full Newton step, shrunk only if roundoff pushes it out of the domain.
fn full_step(problem: &Problem, it: &Iterate, dir: &[f64], t: f64, shrink: f64) -> Result<Iterate> {
    let mut r = 1.0;
    loop {
        match Iterate::new(problem, axpy_new(&it.x, r, dir)) {
            Ok(next) => return Ok(next),
            Err(Error::Infeasible { .. }) if r > 1e-20 => r *= shrink,
            Err(Error::Infeasible { .. }) => return Err(Error::LineSearch { t }),
            Err(e) => return Err(e),
        }
    }
}

/// Backtracking line search on `ψ(x) = t d·x + F(x)` along the Newton direction.
fn damped_step(
    problem: &Problem,
    it: &Iterate,
    f: &Factored,
    dir: &[f64],
    t: f64,
    d: &[f64],
    consts: &SolverConstants,
) -> Result<Iterate> {
    let grad_psi = residual(t, d, &f.derivs.grad);
    let slope = dot(&grad_psi, dir);
    let lambda = (-slope).max(0.0).sqrt();
    // within this radius the full step satisfies the Armijo test for self-concordant ψ
    if lambda <= (1.0 - 2.0 * consts.ls_alpha) / 4.0 {
        return full_step(problem, it, dir, t, consts.ls_shrink);
    }
    let psi0 = t * dot(d, &it.x) + f.derivs.value;
    let mut r = 1.0;
    loop {
        if r < 1e-20 {
            return Err(Error::LineSearch { t });
        }
        match Iterate::new(problem, axpy_new(&it.x, r, dir)) {
            Ok(next) => {
                let psi = t * dot(d, &next.x) + evaluate(problem, &next, Order::Value).value;
                if psi <= psi0 + consts.ls_alpha * r * slope {
                    return Ok(next);
                }
            }
            Err(Error::Infeasible { .. }) => {}
            Err(e) => return Err(e),
        }
        r *= consts.ls_shrink;
    }
}

/// Auxiliary scheme: approximate analytic center `x̄` with `‖F'(x̄)‖*_{x̄} ≤ β`.
pub fn auxiliary_center(problem: &Problem, x0: Iterate, opts: &PathOptions<'_>) -> Result<PathResult> {
    let f0 = factor_at(problem, &x0)?;
    let g: Vec<f64> = f0.derivs.grad.iter().map(|v| -v).collect();
    run(problem, x0, Some(f0), Phase::Auxiliary, &g, 1.0, f64::NAN, opts)
}

/// Main scheme from an approximate analytic center to `c·x − c* ≤ ε_internal`.
pub fn main_path(problem: &Problem, x_bar: Iterate, epsilon_internal: f64, opts: &PathOptions<'_>) -> Result<PathResult> {
    let threshold = opts
        .constants
        .stopping_threshold(nu(problem.ops.n_elements(), problem.p), epsilon_internal);
    run(problem, x_bar, None, Phase::Main, &problem.cost, 0.0, threshold, opts)
}

#[allow(clippy::too_many_arguments)]
fn run(
    problem: &Problem,
    x0: Iterate,
    factored: Option<Factored>,
    phase: Phase,
    d: &[f64],
    t0: f64,
    threshold: f64,
    opts: &PathOptions<'_>,
) -> Result<PathResult> {
    let consts = &opts.constants;
    let method = opts.method;
    let kappa0 = method.initial_kappa();
    let gap_scale = problem.p.cost_scale();
    let gap_num = consts.gap_numerator(nu(problem.ops.n_elements(), problem.p));
    let sign = match phase {
        Phase::Auxiliary => -1.0,
        Phase::Main => 1.0,
    };

    let mut x = x0;
    let mut t = t0;
    let mut kappa = kappa0;
    let mut slow = 0usize;
    let mut last_accepted: Option<(Iterate, f64)> = None;
    let mut skip_kappa_update = false;
    let mut newton = 0usize;
    let mut rejections = 0usize;
    let mut trace = Vec::new();
    let mut factored = factored;

    for k in 0.. {
        if k >= opts.max_iterations {
            return Err(Error::IterationCap {
                phase: phase.name(),
                cap: opts.max_iterations,
            });
        }
        if opts.interrupt.is_some_and(|f| f()) {
            return Err(Error::Interrupted);
        }
        let f = match factored.take() {
            Some(f) => f,
            None => factor_at(problem, &x)?,
        };
        let r = residual(t, d, &f.derivs.grad);
        let lambda = f.sys.local_norm(&r)?;
        let accepted = lambda <= consts.beta;
        let energy = problem.energy(x.u());
        let gap_bound = match phase {
            Phase::Main if t > 0.0 => gap_num / t / gap_scale,
            _ => f64::INFINITY,
        };
        let mut record = TraceRecord {
            phase,
            k,
            t,
            kappa,
            decrement: lambda,
            event: if accepted { StepEvent::Accepted } else { StepEvent::Slow },
            energy,
            gap_bound,
        };

        match phase {
            Phase::Auxiliary => {
                if f.sys.local_norm(&f.derivs.grad)? <= consts.aux_stop {
                    trace.push(record);
                    let dir = f.sys.newton_direction(&f.derivs.grad);
                    let x_bar = full_step(problem, &x, &dir, t, consts.ls_shrink)?;
                    newton += 1;
                    return Ok(PathResult {
                        iterate: x_bar,
                        t,
                        newton,
                        rejections,
                        trace,
                    });
                }
            }
            Phase::Main => {
                if accepted && t >= threshold {
                    trace.push(record);
                    return Ok(PathResult {
                        iterate: x,
                        t,
                        newton,
                        rejections,
                        trace,
                    });
                }
            }
        }

        let adaptive = matches!(method, Method::Adaptive { .. });
        if adaptive && !accepted && slow >= consts.reject_after {
            if let Some((xa, ta)) = last_accepted.clone() {
                record.event = StepEvent::Rejected;
                trace.push(record);
                x = xa;
                t = ta;
                kappa = adaptive_next_kappa(kappa, kappa0, KappaEvent::Rejection, consts);
                slow = 0;
                rejections += 1;
                skip_kappa_update = true;
                continue;
            }
        }

        let short = consts.gamma / f.sys.local_norm(d)?;
        let t_next = match method {
            Method::Short => t + sign * short,
            Method::Long { .. } | Method::Adaptive { .. } => {
                if accepted {
                    if adaptive {
                        if !skip_kappa_update {
                            kappa = adaptive_next_kappa(kappa, kappa0, KappaEvent::Accepted { slow_steps: slow }, consts);
                        }
                        skip_kappa_update = false;
                        last_accepted = Some((x.clone(), t));
                    }
                    slow = 0;
                    match phase {
                        Phase::Main => (kappa * t).max(t + short),
                        Phase::Auxiliary => (t / kappa).min(t - short),
                    }
                } else {
                    slow += 1;
                    t
                }
            }
        };
        let t_next = if phase == Phase::Auxiliary { t_next.max(0.0) } else { t_next };
        record.kappa = kappa;
        trace.push(record);

        let rhs = residual(t_next, d, &f.derivs.grad);
        let dir = f.sys.newton_direction(&rhs);
        x = match method {
            Method::Short => full_step(problem, &x, &dir, t_next, consts.ls_shrink)?,
            _ => damped_step(problem, &x, &f, &dir, t_next, d, consts)?,
        };
        t = t_next;
        newton += 1;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::initial_point;
    use crate::discretization::DiscreteOperators;
    use crate::exponent::Exponent;
    use crate::mesh::Mesh;
    use alloc::sync::Arc;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn default_constants() {
        let c = SolverConstants::default();
        assert_eq!(c.beta, 1.0 / 9.0);
        assert_eq!(c.gamma, 5.0 / 36.0);
        assert_relative_eq!(c.aux_stop, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn kappa_schedule_examples() {
        let c = SolverConstants::default();
        assert_eq!(adaptive_next_kappa(10.0, 10.0, KappaEvent::Accepted { slow_steps: 1 }, &c), 10.0);
        assert_eq!(adaptive_next_kappa(9.0, 10.0, KappaEvent::Accepted { slow_steps: 8 }, &c), 3.0);
        assert_relative_eq!(
            adaptive_next_kappa(10.0, 10.0, KappaEvent::Rejection, &c),
            1.778_279_410_038_922_8,
            epsilon = 1e-12
        );
        assert_eq!(adaptive_next_kappa(2.0, 10.0, KappaEvent::Accepted { slow_steps: 0 }, &c), 4.0);
        assert_eq!(adaptive_next_kappa(2.0, 10.0, KappaEvent::Accepted { slow_steps: 5 }, &c), 2.0);
        assert_eq!(adaptive_next_kappa(2.0, 10.0, KappaEvent::Slow, &c), 2.0);
    }

    #[test]
    fn stopping_threshold_closed_form() {
        let c = SolverConstants::default();
        let beta = 1.0 / 9.0;
        let want = (12.0 + (beta + 12f64.sqrt()) * beta / (8.0 / 9.0)) / 2e-6;
        assert_relative_eq!(c.stopping_threshold(12.0, 2e-6), want, max_relative = 1e-15);
    }

    #[test]
    fn iteration_bound_example() {
        let n = predict_iteration_bound(12.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(n, 7.2 * 12f64.sqrt() * 2.0 * 12f64.ln(), max_relative = 1e-15);
        assert!((n - 123.9).abs() < 0.1);
        assert!(predict_iteration_bound(12.0, 1.0, 1.0, 1e-3) > predict_iteration_bound(12.0, 1.0, 1.0, 1e-2));
    }

    fn problem(p: Exponent, g_scale: f64) -> Problem {
        let mesh = Mesh::build_box(&[1.0, 1.0], 4, 2).unwrap();
        let ops = Arc::new(DiscreteOperators::assemble(&mesh).unwrap());
        let g = mesh.interpolate(|x| g_scale * (x[0] * x[0] + x[1]));
        Problem::with_full_g(ops.clone(), p, g, vec![0.0; ops.n_elements()], 1e-6).unwrap()
    }

    #[test]
    fn auxiliary_reaches_centered_point_with_decreasing_t() {
        for method in [Method::Short, Method::Long { kappa: 2.0 }, Method::Adaptive { kappa0: 10.0 }] {
            let prob = problem(Exponent::Finite(1.5), 1.0);
            let x0 = initial_point(&prob).unwrap();
            let res = auxiliary_center(&prob, x0, &PathOptions::new(method)).unwrap();
            let f = factor_at(&prob, &res.iterate).unwrap();
            assert!(f.sys.local_norm(&f.derivs.grad).unwrap() <= 1.0 / 9.0);
            let ts: Vec<f64> = res.trace.iter().filter(|r| r.event != StepEvent::Rejected).map(|r| r.t).collect();
            assert!(ts.windows(2).all(|w| w[1] <= w[0]), "{method:?}");
            assert!(ts.iter().all(|&t| t >= 0.0));
        }
    }

    #[test]
    fn auxiliary_from_center_stops_immediately() {
        let prob = problem(Exponent::Finite(2.0), 0.0);
        let x0 = initial_point(&prob).unwrap();
        let first = auxiliary_center(&prob, x0, &PathOptions::new(Method::Short)).unwrap();
        let again = auxiliary_center(&prob, first.iterate, &PathOptions::new(Method::Short)).unwrap();
        assert!(again.newton <= 2);
    }

    #[test]
    fn main_short_keeps_the_invariant() {
        let prob = problem(Exponent::Finite(2.0), 1.0);
        let opts = PathOptions::new(Method::Short);
        let aux = auxiliary_center(&prob, initial_point(&prob).unwrap(), &opts).unwrap();
        let res = main_path(&prob, aux.iterate, prob.epsilon_internal, &opts).unwrap();
        for r in &res.trace {
            assert!(r.decrement <= 1.0 / 9.0 + 1e-9, "k={} decrement {}", r.k, r.decrement);
        }
        assert!(res.trace.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn long_and_adaptive_need_fewer_steps_than_short() {
        let prob = problem(Exponent::Finite(2.0), 1.0);
        let count = |method| {
            let opts = PathOptions::new(method);
            let aux = auxiliary_center(&prob, initial_point(&prob).unwrap(), &opts).unwrap();
            let main = main_path(&prob, aux.iterate, prob.epsilon_internal, &opts).unwrap();
            for r in main.trace.iter().filter(|r| r.event == StepEvent::Accepted) {
                assert!(r.decrement <= 1.0 / 9.0);
            }
            aux.newton + main.newton
        };
        let short = count(Method::Short);
        let long = count(Method::Long { kappa: 2.0 });
        let adaptive = count(Method::Adaptive { kappa0: 10.0 });
        assert!(long < short, "long {long} short {short}");
        assert!(adaptive < short, "adaptive {adaptive} short {short}");
    }

    #[test]
    fn interrupt_aborts() {
        let prob = problem(Exponent::Finite(2.0), 1.0);
        let stop = || true;
        let mut opts = PathOptions::new(Method::Short);
        opts.interrupt = Some(&stop);
        assert!(matches!(
            auxiliary_center(&prob, initial_point(&prob).unwrap(), &opts),
            Err(Error::Interrupted)
        ));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let prob = problem(Exponent::Finite(2.0), 1.0);
        let mut opts = PathOptions::new(Method::Short);
        opts.max_iterations = 3;
        let aux = auxiliary_center(&prob, initial_point(&prob).unwrap(), &PathOptions::new(Method::Short)).unwrap();
        assert!(matches!(
            main_path(&prob, aux.iterate, prob.epsilon_internal, &opts),
            Err(Error::IterationCap { phase: "main", cap: 3 })
        ));
    }
}
