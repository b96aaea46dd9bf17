use approx::assert_relative_eq;
use plap_core::oracle::{brute_force_minimize, p2_direct, BruteForceOptions};
use plap_core::pathfollow::{Method, Phase, StepEvent};
use plap_core::{
    solve, solve_with, BoundaryData, BoundaryPreset, Error, Exponent, Forcing, Prolongation, SolveConfig,
};

fn square(cells: usize, p: Exponent, g: BoundaryPreset, method: Method) -> SolveConfig {
    SolveConfig::unit_square(cells, p, g, method)
}

#[test]
fn one_dimensional_p2_with_forcing_matches_direct_solve() {
    let config = SolveConfig {
        dim: 1,
        cells: 8,
        extents: vec![1.0],
        boundary: BoundaryData::Preset(BoundaryPreset::LinearX),
        forcing: Forcing::Constant(1.0),
        ..square(8, Exponent::Finite(2.0), BoundaryPreset::Zero, Method::Long { kappa: 10.0 })
    };
    let report = solve(&config).unwrap();
    let (_, problem) = config.build_problem().unwrap();
    let u = p2_direct(&problem.ops, &problem.g, &problem.f_node).unwrap();
    assert!((report.final_energy - problem.energy(&u)).abs() <= 1e-6);
    // P1 is nodally exact in 1-D: u + g = x + x(1 - x)/2
    for (i, v) in report.nodal.iter().enumerate() {
        let x = i as f64 / 8.0;
        assert!((v - (x + 0.5 * x * (1.0 - x))).abs() < 1e-3, "{i}: {v}");
    }
}

#[test]
fn zero_data_gives_zero_energy() {
    for p in [Exponent::Finite(1.0), Exponent::Finite(3.0), Exponent::Infinity] {
        let r = solve(&square(3, p, BoundaryPreset::Zero, Method::Adaptive { kappa0: 10.0 })).unwrap();
        assert!(r.final_energy.abs() <= 1e-6, "p={p}: {}", r.final_energy);
    }
}

#[test]
fn brute_force_agrees_on_two_unknowns() {
    // two interior unknowns on the unit interval
    for p in [1.5, 2.5] {
        let config = SolveConfig {
            dim: 1,
            cells: 3,
            extents: vec![1.0],
            epsilon: 1e-8,
            boundary: BoundaryData::Values(vec![0.0, 1.0]),
            forcing: Forcing::PerCell(vec![0.5, -0.25, 1.0]),
            ..square(3, Exponent::Finite(p), BoundaryPreset::Zero, Method::Adaptive { kappa0: 10.0 })
        };
        let report = solve(&config).unwrap();
        let (_, problem) = config.build_problem().unwrap();
        let (_, j) =
            brute_force_minimize(&problem.ops, &problem.g, &problem.f_node, problem.p, &BruteForceOptions::default())
                .unwrap();
        assert!((report.final_energy - j).abs() <= 1e-7, "p={p}: {} vs {j}", report.final_energy);
    }
}

#[test]
fn prolongation_choice_does_not_change_the_minimum() {
    let mut a = square(4, Exponent::Finite(1.5), BoundaryPreset::Fig1, Method::Adaptive { kappa0: 10.0 });
    let mut b = a.clone();
    a.prolongation = Prolongation::Harmonic;
    b.prolongation = Prolongation::Zero;
    let ja = solve(&a).unwrap().final_energy;
    let jb = solve(&b).unwrap().final_energy;
    assert!((ja - jb).abs() <= 2e-6, "{ja} vs {jb}");
}

#[test]
fn trace_is_consistent_with_the_counts() {
    let config = square(4, Exponent::Finite(1.5), BoundaryPreset::Fig1, Method::Adaptive { kappa0: 10.0 });
    let r = solve(&config).unwrap();
    let aux: Vec<_> = r.trace.iter().filter(|t| t.phase == Phase::Auxiliary).collect();
    let main: Vec<_> = r.trace.iter().filter(|t| t.phase == Phase::Main).collect();
    assert_eq!(aux.len() + main.len(), r.trace.len());
    assert!(aux.windows(2).all(|w| w[1].t <= w[0].t));
    let main_steps: Vec<_> = main.iter().filter(|t| t.event != StepEvent::Rejected).collect();
    assert!(main_steps.windows(2).all(|w| w[1].t >= w[0].t) || r.rejections > 0);
    assert_eq!(main.last().unwrap().event, StepEvent::Accepted);
    assert_relative_eq!(main.last().unwrap().t, r.t_final);
    // one record per Newton step, plus one for the final check
    let rejected = r.trace.iter().filter(|t| t.event == StepEvent::Rejected).count();
    assert_eq!(r.trace.len(), r.newton_total + rejected + 1);
    assert!(main.iter().any(|t| t.kappa > 1.0));
}

#[test]
fn infinity_on_a_stretched_box() {
    let config = SolveConfig {
        extents: vec![2.0, 1.0],
        cells: 3,
        ..square(3, Exponent::Infinity, BoundaryPreset::LinearX, Method::Adaptive { kappa0: 10.0 })
    };
    let r = solve(&config).unwrap();
    // g = x_1 has unit gradient and cannot be improved in the sup norm
    assert!((r.final_energy - 1.0).abs() <= 1e-5, "{}", r.final_energy);
}

#[test]
fn interrupt_and_errors_have_categories() {
    let config = square(4, Exponent::Finite(2.0), BoundaryPreset::Fig1, Method::Short);
    let stop = || true;
    let err = solve_with(&config, Some(&stop)).unwrap_err();
    assert_eq!(err, Error::Interrupted);
    assert_eq!(err.category(), "timeout");

    let mut capped = config.clone();
    capped.max_iterations = Some(3);
    let err = solve(&capped).unwrap_err();
    assert!(matches!(err, Error::IterationCap { .. }));
    assert_eq!(err.category(), "numerical");

    let mut bad = config;
    bad.forcing = Forcing::PerCell(vec![1.0; 3]);
    assert_eq!(solve(&bad).unwrap_err().category(), "config");
}
