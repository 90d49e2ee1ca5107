use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rectigeo::classify::{classify_points, Verdict};
use rectigeo::metric::{AmbientMetric, VectorField};
use rectigeo::sampling::sample_box;
use rectigeo::submanifold::Immersion;
use rectigeo::warped::{
    build_warped_ambient, cumulative_integral, fit_tanh_integral, trace_integral_curve,
    verify_ambient_decomposition, IntegralCurve,
};
use rectigeo::Tolerances;

fn radial3() -> VectorField {
    let r = "sqrt(x1^2+x2^2+x3^2)";
    let c: Vec<String> = (1..=3).map(|i| format!("x{i}/{r}")).collect();
    VectorField::parse(&["x1", "x2", "x3"], &c).unwrap()
}

#[test]
fn rk4_is_fourth_order() {
    // the plane z = 0 in the chart (u, v + u^2, 0); integral curves of the
    // tangent radial field are rays, so the end point is known exactly
    let imm = Immersion::parse(
        &["u", "v"],
        &["u", "v + u^2", "0"],
        vec![(-5.0, 5.0), (-40.0, 40.0)],
    )
    .unwrap();
    let amb = AmbientMetric::euclidean(3);
    let tol = Tolerances::default();
    let u0 = [1.0, 0.5];
    let p0 = [1.0f64, 1.5];
    let r0 = p0[0].hypot(p0[1]);
    let len = 2.0;
    let exact = [p0[0] * (1.0 + len / r0), p0[1] * (1.0 + len / r0)];
    let errors: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&h| {
            let c = trace_integral_curve(&imm, &amb, &radial3(), &u0, len, h, &tol).unwrap();
            c.check_complete().unwrap();
            let end = imm.point(&c.samples.last().unwrap().u).unwrap();
            assert!(c.samples.iter().all(|s| (s.lambda - 1.0).abs() < 1e-12));
            (end[0] - exact[0]).hypot(end[1] - exact[1])
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((4.0..=64.0).contains(&ratio), "errors {errors:?}");
    }
    assert!(errors[2] < 1e-6, "{errors:?}");
}

#[test]
fn integral_of_the_example_scalar() {
    // ∫ ds / sqrt(1 + s^2) = asinh(s)
    let h = 1e-2;
    let s0 = 0.5;
    let f: Vec<f64> = (0..=250)
        .map(|k| 1.0 / (1.0 + (s0 + k as f64 * h).powi(2)).sqrt())
        .collect();
    let int = cumulative_integral(&f, h);
    for (k, v) in int.iter().enumerate() {
        let s = s0 + k as f64 * h;
        assert!((v - (s.asinh() - s0.asinh())).abs() < 1e-8 * (s - s0).max(1.0));
    }
}

#[test]
fn tanh_model_recovers_the_constant() {
    let h = 1e-2;
    let c = 0.3;
    let n = 101;
    let lam: Vec<f64> = (0..n).map(|k| (k as f64 * h + c).tanh()).collect();
    let curve = IntegralCurve::from_samples(0.0, h, &lam, &vec![1.0; n]);
    let fit = fit_tanh_integral(&curve).unwrap();
    assert!((fit.c - c).abs() < 1e-8, "C = {}", fit.c);
    assert!(fit.deviation.value < 1e-8);
}

/// `a + b sin(k s + p) + q s^2`, bounded away from zero on `[0, 1]`.
fn random_warp(rng: &mut ChaCha8Rng) -> String {
    let b = rng.gen_range(-0.8..0.8);
    let q = rng.gen_range(-0.5..0.5);
    let a = 1.0 + f64::abs(b) + f64::abs(q) + rng.gen_range(0.0..1.0);
    format!(
        "{a:.6} + {b:.6}*sin({:.6}*s + {:.6}) + {q:.6}*s^2",
        rng.gen_range(0.5..3.0),
        rng.gen_range(0.0..6.0)
    )
}

#[test]
fn warped_round_trip_for_random_warps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = Tolerances::default();
    let flat = vec![vec!["1"], vec!["0", "1"]];
    for _ in 0..10 {
        let lam = random_warp(&mut rng);
        let w = build_warped_ambient(&lam, &["y1", "y2"], &flat, (0.0, 1.0), &[(-1.0, 1.0); 2])
            .unwrap();
        let pts = sample_box(&w.domain, 50, rng.gen(), |_| true).unwrap();
        let sc = classify_points(&w.metric, &w.field, &pts, &tol).unwrap();
        assert_eq!(sc.verdict, Verdict::AntiTorqued, "{lam}");
        for r in &sc.reports {
            let want = w.conformal_scalar(r.point[0]).unwrap();
            assert!(
                (r.f - want).abs() <= 1e-8 * want.abs().max(1.0),
                "{lam}: f {} vs {want}",
                r.f
            );
        }
        let d = verify_ambient_decomposition(&w.metric, &w.field, &pts, sc.verdict, &tol).unwrap();
        assert!(d.geodesic.value <= 1e-8, "{lam}");
        for item in [d.warp_ode, d.connection, d.fiber_gradient] {
            assert!(item.value <= 1e-7, "{lam}: {item:?}");
        }
    }
}

#[test]
fn curved_fiber_round_trip() {
    // the fiber metric does not enter the axis, only the connection forms
    let tol = Tolerances::default();
    let fiber = vec![vec!["1"], vec!["0", "sin(y1)^2"]];
    let w = build_warped_ambient(
        "cosh(s)",
        &["y1", "y2"],
        &fiber,
        (0.0, 1.0),
        &[(0.5, 2.5), (0.0, 6.0)],
    )
    .unwrap();
    let pts = sample_box(&w.domain, 50, 9, |_| true).unwrap();
    let sc = classify_points(&w.metric, &w.field, &pts, &tol).unwrap();
    assert_eq!(sc.verdict, Verdict::AntiTorqued);
    for r in &sc.reports {
        assert!((r.f - r.point[0].tanh()).abs() < 1e-12);
    }
    let d = verify_ambient_decomposition(&w.metric, &w.field, &pts, sc.verdict, &tol).unwrap();
    assert!(d.connection.value < 1e-7 && d.fiber_gradient.value < 1e-7);
}
