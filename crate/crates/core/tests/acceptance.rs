//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::FRAC_PI_4;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rectigeo::classify::{classify_points, geodesic_unit_check, Verdict};
use rectigeo::expr::{eval_jet, parse};
use rectigeo::metric::{christoffel, riemann_tensor, sectional_curvature, AmbientMetric};
use rectigeo::rectifying::{
    shape_of_normal_part, verify_normal_vanishes, verify_rectifying, verify_tangential_vanishes,
    RectifyingVerdict,
};
use rectigeo::runner::{ambient_points, parameter_points};
use rectigeo::scene::{builtin, builtin_names, Scene};
use rectigeo::submanifold::{frames, gauss_residual_frame, Immersion};
use rectigeo::warped::{
    build_warped_ambient, fit_tanh_integral, trace_through, verify_ambient_decomposition,
    warping_ode_residual,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn parts(scene: &Scene) -> (&Immersion, &rectigeo::metric::VectorField) {
    (
        scene.submanifold.as_ref().unwrap(),
        scene.field.as_ref().unwrap(),
    )
}

fn radial_classification() -> Outcome {
    let scene = builtin("radial-r4").map_err(|e| e.to_string())?;
    let pts = ambient_points(&scene, 200, scene.seed).map_err(|e| e.to_string())?;
    let field = scene.field.as_ref().unwrap();
    let sc = classify_points(&scene.metric, field, &pts, &scene.tolerances)
        .map_err(|e| e.to_string())?;
    ensure(
        sc.verdict == Verdict::AntiTorqued,
        format!("verdict {}", sc.verdict),
    )?;
    let rel = sc
        .reports
        .iter()
        .map(|r| {
            let want = 1.0 / r.point.iter().map(|x| x * x).sum::<f64>().sqrt();
            (r.f - want).abs() / want
        })
        .fold(0.0, f64::max);
    ensure(rel <= 1e-8, format!("relative f error {rel:.2e}"))?;
    Ok(format!(
        "anti-torqued at {} points, f rel err {rel:.2e}",
        pts.len()
    ))
}

fn radial_geodesic() -> Outcome {
    let scene = builtin("radial-r4").map_err(|e| e.to_string())?;
    let pts = ambient_points(&scene, 200, scene.seed).map_err(|e| e.to_string())?;
    let sc = classify_points(
        &scene.metric,
        scene.field.as_ref().unwrap(),
        &pts,
        &scene.tolerances,
    )
    .map_err(|e| e.to_string())?;
    let (geo, _) = geodesic_unit_check(&sc, &scene.tolerances).map_err(|e| e.to_string())?;
    ensure(geo <= 1e-9, format!("|∇V V| = {geo:.2e}"))?;
    Ok(format!("max |∇V V| = {geo:.2e}"))
}

fn clifford_torus() -> Outcome {
    let scene = builtin("clifford-torus").map_err(|e| e.to_string())?;
    let (imm, field) = parts(&scene);
    let us = parameter_points(&scene, 50, scene.seed).map_err(|e| e.to_string())?;
    let r = verify_tangential_vanishes(imm, &scene.metric, field, &us, &scene.tolerances)
        .map_err(|e| e.to_string())?;
    // f = 1 on the unit sphere, so A + f Id is A + Id; check that directly too
    let mut a_plus_id = 0.0f64;
    for u in &us {
        let p = frames(imm, &scene.metric, Some(field), u, &scene.tolerances)
            .map_err(|e| e.to_string())?;
        let a = shape_of_normal_part(&p);
        a_plus_id = a_plus_id.max((a + DMatrix::identity(2, 2)).norm());
    }
    ensure(
        r.max_tangential.value <= 1e-10,
        format!("|V^T| = {:.2e}", r.max_tangential.value),
    )?;
    ensure(a_plus_id <= 1e-8, format!("|A + Id| = {a_plus_id:.2e}"))?;
    ensure(
        r.normal_derivative.value <= 1e-8,
        format!("|D V^perp| = {:.2e}", r.normal_derivative.value),
    )?;
    Ok(format!(
        "|V^T| {:.2e}, |A+Id| {a_plus_id:.2e}, |D V^perp| {:.2e}",
        r.max_tangential.value, r.normal_derivative.value
    ))
}

fn tangent_axis_scene(name: &str, points: usize, curvature: bool) -> Outcome {
    let scene = builtin(name).map_err(|e| e.to_string())?;
    let (imm, field) = parts(&scene);
    let us = parameter_points(&scene, points, scene.seed).map_err(|e| e.to_string())?;
    let r = verify_normal_vanishes(imm, &scene.metric, field, &us, &scene.tolerances)
        .map_err(|e| e.to_string())?;
    ensure(
        r.max_normal.value <= 1e-8,
        format!("|V^perp| = {:.2e}", r.max_normal.value),
    )?;
    ensure(
        r.det.value <= 1e-8,
        format!("|det A| = {:.2e}", r.det.value),
    )?;
    let mut line = format!(
        "{} points, |V^perp| {:.2e}, |det A| {:.2e}",
        us.len(),
        r.max_normal.value,
        r.det.value
    );
    if curvature {
        let (d, ka, ki) = (
            r.sectional.value,
            r.ambient_sectional.value,
            r.intrinsic_sectional.value,
        );
        ensure(d <= 1e-7, format!("|K~ - K| = {d:.2e}"))?;
        ensure(
            ka <= 1e-7 && ki <= 1e-7,
            format!("K~ = {ka:.2e}, K = {ki:.2e}"),
        )?;
        line += &format!(", |K~-K| {d:.2e} (K~ {ka:.1e}, K {ki:.1e})");
    }
    Ok(line)
}

fn rectifying_example() -> Outcome {
    let scene = builtin("rectifying-psi").map_err(|e| e.to_string())?;
    let (imm, field) = parts(&scene);
    let tol = &scene.tolerances;
    let us = parameter_points(&scene, 50, scene.seed).map_err(|e| e.to_string())?;
    let r = verify_rectifying(imm, &scene.metric, field, &us, tol).map_err(|e| e.to_string())?;
    ensure(
        r.residual.value <= 1e-7,
        format!("residual {:.2e}", r.residual.value),
    )?;
    ensure(
        r.verdict == RectifyingVerdict::Proper,
        format!("verdict {:?}", r.verdict),
    )?;
    ensure(
        r.avperp.value <= 1e-8,
        format!("|A_V^perp| = {:.2e}", r.avperp.value),
    )?;
    let spec = scene.curve.as_ref().unwrap();
    let curve = trace_through(
        imm,
        &scene.metric,
        field,
        &spec.start,
        spec.length,
        spec.step,
        tol,
    )
    .map_err(|e| e.to_string())?;
    let ode = warping_ode_residual(&curve).map_err(|e| e.to_string())?;
    ensure(ode.value <= 1e-6, format!("ode residual {:.2e}", ode.value))?;
    let fit = fit_tanh_integral(&curve).map_err(|e| e.to_string())?;
    // along the traced curve the first parameter is the arc length of the closed form
    let closed = curve
        .samples
        .iter()
        .map(|c| (c.lambda - c.u[0] / (1.0 + c.u[0] * c.u[0]).sqrt()).abs())
        .fold(0.0, f64::max);
    let model = curve
        .samples
        .iter()
        .zip(&fit.model)
        .map(|(c, m)| (m - c.u[0] / (1.0 + c.u[0] * c.u[0]).sqrt()).abs())
        .fold(0.0, f64::max);
    ensure(
        curve.samples.iter().all(|c| c.lambda < 1.0),
        "lambda >= 1 on the curve".into(),
    )?;
    ensure(
        fit.deviation.value <= 1e-6,
        format!("tanh fit deviation {:.2e}", fit.deviation.value),
    )?;
    ensure(model <= 1e-6, format!("model vs s/sqrt(1+s^2) {model:.2e}"))?;
    ensure(
        closed <= 1e-6,
        format!("lambda vs s/sqrt(1+s^2) {closed:.2e}"),
    )?;
    Ok(format!(
        "residual {:.2e}, |A_V^perp| {:.2e}, ode {:.2e}, model vs closed form {model:.2e}",
        r.residual.value, r.avperp.value, ode.value
    ))
}

fn warped_round_trip() -> Outcome {
    let flat = vec![vec!["1"], vec!["0", "1"]];
    let tol = rectigeo::Tolerances::default();
    let mut worst_f = 0.0f64;
    for lam in ["exp(s)", "cosh(s)", "2 + sin(s)"] {
        let w = build_warped_ambient(lam, &["y1", "y2"], &flat, (0.0, 1.0), &[(-1.0, 1.0); 2])
            .map_err(|e| e.to_string())?;
        let pts = rectigeo::sampling::sample_box(&w.domain, 50, 42, |_| true)
            .map_err(|e| e.to_string())?;
        let sc = classify_points(&w.metric, &w.field, &pts, &tol).map_err(|e| e.to_string())?;
        ensure(
            sc.verdict == Verdict::AntiTorqued,
            format!("{lam}: verdict {}", sc.verdict),
        )?;
        for r in &sc.reports {
            let want = w.conformal_scalar(r.point[0]).map_err(|e| e.to_string())?;
            worst_f = worst_f.max((r.f - want).abs());
        }
        ensure(worst_f <= 1e-8, format!("{lam}: f error {worst_f:.2e}"))?;
        let d = verify_ambient_decomposition(&w.metric, &w.field, &pts, sc.verdict, &tol)
            .map_err(|e| e.to_string())?;
        ensure(
            d.geodesic.value <= 1e-8,
            format!("{lam}: (a) {:.2e}", d.geodesic.value),
        )?;
        for (tag, item) in [
            ("b", d.warp_ode),
            ("c", d.connection),
            ("d", d.fiber_gradient),
        ] {
            ensure(
                item.value <= 1e-7,
                format!("{lam}: ({tag}) {:.2e}", item.value),
            )?;
        }
    }
    Ok(format!(
        "e^s, cosh s, 2+sin s anti-torqued, f error {worst_f:.2e}, decomposition ok"
    ))
}

fn gauss_everywhere() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut count = 0;
    for name in builtin_names() {
        let scene = builtin(name).map_err(|e| e.to_string())?;
        let Some(imm) = scene.submanifold.as_ref() else {
            continue;
        };
        count += 1;
        let us = parameter_points(&scene, 50, scene.seed).map_err(|e| e.to_string())?;
        for u in &us {
            let p = frames(imm, &scene.metric, None, u, &scene.tolerances)
                .map_err(|e| format!("{name}: {e}"))?;
            let g = gauss_residual_frame(&p).map_err(|e| e.to_string())?;
            if g > worst.0 {
                worst = (g, name.to_string());
            }
        }
    }
    ensure(
        worst.0 <= 1e-7,
        format!("{} residual {:.2e}", worst.1, worst.0),
    )?;
    Ok(format!("{count} scenes x 50 points, worst {:.2e}", worst.0))
}

fn sphere_negative_control() -> Outcome {
    let scene = builtin("unit-sphere").map_err(|e| e.to_string())?;
    let (imm, field) = parts(&scene);
    let us = parameter_points(&scene, 50, scene.seed).map_err(|e| e.to_string())?;
    let r = verify_rectifying(imm, &scene.metric, field, &us, &scene.tolerances)
        .map_err(|e| e.to_string())?;
    ensure(
        r.verdict == RectifyingVerdict::NotRectifying,
        format!("verdict {:?}", r.verdict),
    )?;
    // every point fails, not just the worst one
    let mut min_res = f64::INFINITY;
    let mut a_dev = 0.0f64;
    for u in &us {
        let p = frames(imm, &scene.metric, Some(field), u, &scene.tolerances)
            .map_err(|e| e.to_string())?;
        min_res = min_res.min(rectigeo::rectifying::rectifying_residual_at(
            &p,
            &scene.tolerances,
        ));
        a_dev = a_dev.max((shape_of_normal_part(&p) + DMatrix::identity(2, 2)).norm());
    }
    ensure(min_res >= 0.99, format!("residual {min_res:.3}"))?;
    ensure(a_dev <= 1e-8, format!("|A_V^perp + Id| = {a_dev:.2e}"))?;
    Ok(format!(
        "rectifying fails, min residual {min_res:.3}, |A+Id| {a_dev:.2e}"
    ))
}

fn oracles() -> Outcome {
    let tol = rectigeo::Tolerances::default();
    let dv = |x: &[f64]| DVector::from_column_slice(x);
    let mut worst = 0.0f64;
    let mut cmp = |a: f64, b: f64| worst = worst.max((a - b).abs());

    let sphere = AmbientMetric::parse(&["th", "ph"], &[vec!["1"], vec!["0", "sin(th)^2"]]).unwrap();
    let th = FRAC_PI_4;
    let mp = sphere.at(&[th, 0.4], 2, &tol).map_err(|e| e.to_string())?;
    let gam = christoffel(&mp);
    cmp(gam.get(0, 1, 1), -0.5);
    cmp(gam.get(1, 0, 1), 1.0);
    let r = riemann_tensor(&mp).map_err(|e| e.to_string())?;
    cmp(r.get(0, 1, 0, 1), 0.5);
    cmp(
        sectional_curvature(&mp, &dv(&[1.0, 0.0]), &dv(&[0.0, 1.0]), 1e-10).unwrap(),
        1.0,
    );

    let warp = AmbientMetric::parse(&["s", "t"], &[vec!["1"], vec!["0", "exp(2*s)"]]).unwrap();
    let s = 0.6;
    let mp = warp.at(&[s, 0.0], 2, &tol).map_err(|e| e.to_string())?;
    let gam = christoffel(&mp);
    cmp(gam.get(1, 0, 1), 1.0);
    cmp(gam.get(0, 1, 1), -(2.0 * s).exp());
    cmp(
        sectional_curvature(&mp, &dv(&[1.0, 0.0]), &dv(&[0.0, 1.0]), 1e-10).unwrap(),
        -1.0,
    );

    let rad = 1.7;
    let polar = Immersion::parse(
        &["th", "ph"],
        &[
            format!("{rad}*sin(th)*cos(ph)"),
            format!("{rad}*sin(th)*sin(ph)"),
            format!("{rad}*cos(th)"),
        ],
        vec![(0.1, 3.0), (0.0, 6.2)],
    )
    .unwrap();
    let u = [1.1, 0.7];
    let p =
        frames(&polar, &AmbientMetric::euclidean(3), None, &u, &tol).map_err(|e| e.to_string())?;
    let n = dv(&p.point) / rad;
    for a in 0..2 {
        for b in 0..2 {
            let want = if a == b { -&n / rad } else { DVector::zeros(3) };
            worst = worst.max((p.h_vector(a, b) - want).amax());
        }
    }
    let gam = christoffel(&p.induced);
    worst = worst.max((gam.get(0, 1, 1) + u[0].sin() * u[0].cos()).abs());
    worst = worst.max((gam.get(1, 0, 1) - u[0].cos() / u[0].sin()).abs());
    ensure(worst <= 1e-9, format!("oracle mismatch {worst:.2e}"))?;

    // jets against Richardson differences
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vars = ["x", "y"];
    let mut jet_err = 0.0f64;
    for _ in 0..100 {
        let (a, b, c) = (
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(-1.0..1.0),
        );
        let src = match rng.gen_range(0..4) {
            0 => format!("sin({a}*x)*exp({c}*y) + y^3"),
            1 => format!("sqrt(1 + x^2 + {b}*y^2)*tanh({c}*x - y)"),
            2 => format!("log(2 + cos({a}*x*y)) / (1 + {b}*x^2)"),
            _ => format!("asinh({a}*x + y)^2 - atan({c}*y)*cosh({b}*x)"),
        };
        let e = parse(&src, &vars).map_err(|e| e.to_string())?;
        let pt = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let jet = eval_jet(&e, &pt, 1).map_err(|e| e.to_string())?;
        for i in 0..2 {
            let f = |t: f64| {
                let mut q = pt;
                q[i] += t;
                e.eval(&q).unwrap()
            };
            let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
            let rich = (4.0 * d(5e-3) - d(1e-2)) / 3.0;
            jet_err = jet_err.max((jet.d1(i) - rich).abs() / jet.d1(i).abs().max(1.0));
        }
    }
    ensure(jet_err <= 1e-6, format!("jet vs Richardson {jet_err:.2e}"))?;
    Ok(format!(
        "closed forms within {worst:.2e}, jets vs Richardson {jet_err:.2e}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 radial axis classification", radial_classification),
        ("2 geodesic unit axis", radial_geodesic),
        ("3 Clifford torus", clifford_torus),
        ("4 tangent developable", || {
            tangent_axis_scene("tangent-developable", 50, true)
        }),
        ("5 cone", || tangent_axis_scene("cone", 100, false)),
        ("6 rectifying example", rectifying_example),
        ("7 warped round trip", warped_round_trip),
        ("8 Gauss equation", gauss_everywhere),
        ("9 sphere negative control", sphere_negative_control),
        ("10 oracle equivalence", oracles),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
