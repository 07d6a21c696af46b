use kropina_core::analysis::p_functions;
use kropina_core::autodiff::{fd_partial, FdConfig, MultiIndex};
use kropina_core::geodesics::{fundamental_tensor, integrate_geodesic, spray, straightness, TraceSample};
use kropina_core::metrics::{make_metric, EvalPoint, Metric, MetricSpec};
use proptest::prelude::*;

fn projective() -> Vec<Metric> {
    [
        MetricSpec::canonical("sin(x1)*cos(x2)"),
        MetricSpec::canonical("x1^2 + 0.5*x1*x2"),
        MetricSpec::canonical_with_k("exp(0.2*x1)*x2 + 2*x1", 1.5),
        MetricSpec::minkowski_rational([2.0, 0.5, 0.1, 0.0]),
        MetricSpec::parabolic("x1^3"),
    ]
    .iter()
    .map(|s| make_metric(s).unwrap())
    .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spray_is_projective_factor_times_direction(
        x1 in 0.5f64..0.9, x2 in 0.2f64..0.8, angle in -1.0f64..1.0,
    ) {
        let pt = EvalPoint::new(x1, x2, angle.cos(), angle.sin());
        for m in projective() {
            // The parabolic indicatrix passes through the origin: g degenerates where L = 0.
            if m.value(&pt).unwrap().abs() < 1e-2 {
                continue;
            }
            let g = spray(&m, &pt).unwrap();
            let p = p_functions(&m, &pt).unwrap().p;
            let scale = p.abs().max(1.0);
            prop_assert!((g[0] - p * pt.x).abs() < 1e-8 * scale, "{:?}", m.kind());
            prop_assert!((g[1] - p * pt.y).abs() < 1e-8 * scale, "{:?}", m.kind());
            let g2 = spray(&m, &pt.scaled(2.0)).unwrap();
            prop_assert!((g2[0] - 4.0 * g[0]).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn fundamental_tensor_matches_finite_differences(
        x1 in -0.5f64..0.5, x2 in -0.5f64..0.5, angle in -1.0f64..1.0,
    ) {
        let m = make_metric(&MetricSpec::kropina_general("1 + 0.3*x2", "0.2*x1", "2", "0.1*x1")).unwrap();
        let pt = EvalPoint::new(x1, x2, angle.cos(), angle.sin());
        let t = fundamental_tensor(&m, &pt).unwrap();
        prop_assert_eq!(t.g[0][1], t.g[1][0]);
        let l2 = |q: [f64; 4]| m.value(&EvalPoint::new(q[0], q[1], q[2], q[3])).map(|l| l * l);
        for (i, j, idx) in [(0, 0, [0, 0, 2, 0]), (0, 1, [0, 0, 1, 1]), (1, 1, [0, 0, 0, 2])] {
            let fd = 0.5 * fd_partial(l2, pt.to_array(), &MultiIndex::new(idx), FdConfig::default()).unwrap();
            prop_assert!((t.g[i][j] - fd).abs() / t.g[i][j].abs().max(1.0) < 1e-5);
        }
    }
}

#[test]
fn projective_geodesics_conserve_length_and_stay_straight() {
    for m in projective() {
        for (x0, v0) in [([0.6, 0.4], [1.0, 0.3]), ([0.7, 0.5], [0.8, -0.6])] {
            let tr = integrate_geodesic(&m, x0, v0, 0.3, 200, None).unwrap();
            assert!(tr.completed(), "{:?}: {:?}", m.kind(), tr.termination);
            assert!(tr.deviation.unwrap() < 1e-6, "{:?}: {:?}", m.kind(), tr.deviation);
            assert!(tr.energy_drift(&m).unwrap() < 1e-6);
        }
    }
}

#[test]
fn bent_geodesics_conserve_length() {
    let m = make_metric(&MetricSpec::kropina_general("1 + x2", "0.3", "1", "0")).unwrap();
    let tr = integrate_geodesic(&m, [0.1, 0.2], [1.0, 0.4], 0.8, 200, None).unwrap();
    assert!(tr.deviation.unwrap() > 1e-3);
    assert!(tr.energy_drift(&m).unwrap() < 1e-6);
}

/// Deviation computed only at the sample times shared by every refinement.
fn coarse_deviation(samples: &[TraceSample], stride: usize) -> f64 {
    let pts: Vec<TraceSample> = samples.iter().step_by(stride).copied().collect();
    straightness(&pts).unwrap()
}

#[test]
fn straightness_error_converges_at_fourth_order() {
    let m = make_metric(&MetricSpec::kropina_general("1 + x2", "0", "1", "0")).unwrap();
    let run = |steps: usize| integrate_geodesic(&m, [0.1, 0.2], [1.0, 0.5], 1.0, steps, None).unwrap();
    let base = 16;
    let reference = coarse_deviation(&run(base * 64).samples, 64);
    let errors: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&r| (coarse_deviation(&run(base * r).samples, r) - reference).abs())
        .collect();
    // Least-squares slope of log(error) against log(step size).
    let xs = [0.0, -(2f64.ln()), -(4f64.ln())];
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let order = num / den;
    assert!(order >= 3.5, "observed order {order}, errors {errors:?}");
}
