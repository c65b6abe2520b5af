use std::sync::Arc;

use gapmaps_core::canonical::CanonicalParams;
use gapmaps_core::lift::SampledLift;
use gapmaps_core::sts::{self, StsParams};
use gapmaps_core::threshold::ThresholdSystemSpec;
use gapmaps_core::{Composition, Lift};
use proptest::prelude::*;

fn canonical() -> impl Strategy<Value = CanonicalParams> {
    (2u32..7, -1.0f64..1.0, 0.05f64..0.95, 0.0f64..1.0)
        .prop_map(|(n, a, b, t)| CanonicalParams::new(n, a, b, t * n as f64 * b / 2.0 * 0.999).unwrap())
}

fn sts_params() -> impl Strategy<Value = StsParams> {
    (0.05f64..4.0, 0.0f64..1.0, 0.1f64..2.0).prop_map(|(a, b, g)| StsParams::new(a, b, g).unwrap())
}

fn check_period(lift: &Lift, x: f64) -> Result<(), TestCaseError> {
    match (lift.eval(x), lift.eval(x + 1.0)) {
        (Ok(f0), Ok(f1)) => prop_assert!((f1 - f0 - 1.0).abs() < 1e-12, "F(x+1) - F(x) - 1 = {}", f1 - f0 - 1.0),
        (Err(_), Err(_)) => {}
        (a, b) => prop_assert!(false, "eval defined on one copy only: {a:?} {b:?}"),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_lift_has_degree_one(p in canonical(), x in -3.0f64..3.0) {
        check_period(&p.lift(), x)?;
    }

    #[test]
    fn sts_lift_has_degree_one(p in sts_params(), x in -3.0f64..3.0) {
        check_period(&p.lift(), x)?;
    }

    #[test]
    fn threshold_lift_has_degree_one(p in sts_params(), x in -2.0f64..2.0) {
        let spec = Arc::new(ThresholdSystemSpec::sts(&p).unwrap());
        check_period(&ThresholdSystemSpec::lift(&spec, Composition::UpAfterDown), x)?;
    }

    #[test]
    fn rotation_and_sampled_lifts_have_degree_one(shift in -2.0f64..2.0, x in -3.0f64..3.0) {
        check_period(&Lift::Rotation(shift), x)?;
        let xs: Vec<f64> = (0..16).map(|i| i as f64 / 16.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&v| v + 0.1 * (6.0 * v).sin() + shift).collect();
        check_period(&Lift::TorusReturn(Arc::new(SampledLift::new(xs, ys).unwrap())), x)?;
    }

    #[test]
    fn canonical_derivative_matches_differences(p in canonical(), x in 0.01f64..0.95) {
        let lift = p.lift();
        let h = 1e-6;
        let fd = (lift.eval(x + h).unwrap() - lift.eval(x - h).unwrap()) / (2.0 * h);
        let d = lift.eval_derivative(x).unwrap();
        prop_assert!((fd - d).abs() <= 1e-5 * (1.0 + d.abs()), "{d} vs {fd}");
    }

    #[test]
    fn sts_derivative_matches_differences(p in sts_params(), x in 0.0f64..1.0) {
        let lift = p.lift();
        let h = 1e-6;
        let near_gap = lift.locate_gaps().iter().any(|g| {
            let d = (x - g.x_gap).rem_euclid(1.0);
            d.min(1.0 - d) < 1e-3
        });
        prop_assume!(!near_gap);
        if let (Ok(a), Ok(b), Ok(d)) = (lift.eval(x + h), lift.eval(x - h), lift.eval_derivative(x)) {
            let fd = (a - b) / (2.0 * h);
            prop_assume!(fd.abs() < 1e3);
            prop_assert!((fd - d).abs() <= 1e-4 * (1.0 + d.abs()), "{d} vs {fd}");
        }
    }

    #[test]
    fn rotation_number_is_monotone_in_a(a1 in -0.5f64..1.5, da in 0.0f64..0.2) {
        let rho = |a: f64| CanonicalParams::new(5, a, 0.9, 1.2).unwrap().lift().rotation_number(0.0, 20_000).unwrap().value;
        prop_assert!(rho(a1 + da) >= rho(a1) - 2.0 / 20_000.0);
    }

    #[test]
    fn symmetry_translation_shifts_rotation(alpha in 0.1f64..0.45, beta in 0.0f64..1.0, m in -3i64..4) {
        let p = StsParams::new(alpha, beta, 0.5).unwrap();
        let t = sts::symmetry_translate(0, 1, m, &p);
        for x in [0.0, 0.3, 0.71] {
            let diff = t.lift().eval(x).unwrap() - p.lift().eval(x).unwrap();
            prop_assert!((diff - m as f64).abs() < 1e-9, "diff {diff}");
        }
    }
}

#[test]
fn gap_persists_under_perturbation() {
    for alpha in [0.55, 0.7, 1.0] {
        for d in [-1e-3, 0.0, 1e-3] {
            let p = StsParams::new(alpha + d, 0.2, 0.5).unwrap();
            let gaps = p.lift().locate_gaps();
            assert!(!gaps.is_empty(), "no gap at alpha = {}", alpha + d);
        }
    }
}

#[test]
fn composition_orders_agree_on_grid() {
    let p = StsParams::new(0.8, 0.3, 0.5).unwrap();
    let spec = ThresholdSystemSpec::sts(&p).unwrap();
    for i in 0..1000 {
        let x = i as f64 / 1000.0;
        let direct = sts::sts_step(&p, x).unwrap();
        let composed = spec.compose(x, Composition::UpAfterDown).unwrap();
        assert!((direct - composed).abs() < 1e-10, "x = {x}: {direct} vs {composed}");
    }
}
