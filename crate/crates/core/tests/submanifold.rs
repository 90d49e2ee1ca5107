use nalgebra::DVector;
use proptest::prelude::*;
use rectigeo::metric::{AmbientMetric, VectorField};
use rectigeo::submanifold::{
    derivative_along, field_along, frames, gauss_residual_frame, mean_curvature, shape_operator,
    FramePacket, Immersion,
};
use rectigeo::Tolerances;

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Surface in E^4 with coefficients `c`; `a`, `b` are substituted textually so
/// the same map can be written in other coordinates.
fn surface(c: &[f64], a: &str, b: &str) -> Vec<String> {
    vec![
        format!("({a}) + {:.4}*({b})^2", c[0]),
        format!("({b}) + {:.4}*sin({a})", c[1]),
        format!(
            "{:.4}*({a})^2 + {:.4}*({a})*({b}) + {:.4}*({b})^3",
            c[2], c[3], c[4]
        ),
        format!(
            "{:.4}*cos(({a}) - 2*({b})) + {:.4}*exp(({a})/2)",
            c[5], c[6]
        ),
    ]
}

/// Non-flat metric on the ambient 4-chart.
fn curved4() -> AmbientMetric {
    let rows = [
        vec!["1 + 0.2*sin(x2)^2"],
        vec!["0.1*cos(x1 + x3)", "exp(0.3*x1)"],
        vec!["0", "0.05*x4", "1 + 0.1*x2^2"],
        vec!["0.1*sin(x3)", "0", "0", "1.2 + 0.1*cos(x1*x2)"],
    ];
    AmbientMetric::parse(&["x1", "x2", "x3", "x4"], &rows).unwrap()
}

fn imm(c: &[f64]) -> Immersion {
    Immersion::parse(&["a", "b"], &surface(c, "a", "b"), vec![(-1.0, 1.0); 2]).unwrap()
}

fn coefficients() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.6f64..0.6, 7)
}

fn packet(c: &[f64], amb: &AmbientMetric, u: &[f64]) -> FramePacket {
    frames(&imm(c), amb, None, u, &Tolerances::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frames_are_orthonormal_and_reconstruct(c in coefficients(), u in prop::array::uniform2(-0.8f64..0.8)) {
        let p = packet(&c, &curved4(), &u);
        prop_assert!(p.frame_defect() < 1e-12);
        let rebuilt = &p.coord_tangents * &p.tangent_coeffs;
        prop_assert!((rebuilt - &p.tangent).amax() < 1e-12);
        let x = dv(&[0.3, -1.2]);
        prop_assert!((p.to_param(&p.push_forward(&x)) - &x).amax() < 1e-12);
        prop_assert!(p.h_asymmetry() < 1e-12);
    }

    #[test]
    fn gauss_equation_holds(c in coefficients(), u in prop::array::uniform2(-0.8f64..0.8)) {
        let p = packet(&c, &curved4(), &u);
        prop_assert!(gauss_residual_frame(&p).unwrap() < 1e-9);
    }

    #[test]
    fn shape_operator_is_dual_to_h(
        c in coefficients(),
        u in prop::array::uniform2(-0.8f64..0.8),
        k in prop::array::uniform2(-2.0f64..2.0),
        x in prop::array::uniform2(-1.0f64..1.0),
        y in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let p = packet(&c, &curved4(), &u);
        let xi = &p.normal * dv(&k);
        let a = shape_operator(&p, &xi, &Tolerances::default()).unwrap();
        // vectors given in the orthonormal tangent frame
        let (xf, yf) = (dv(&x), dv(&y));
        let lhs = yf.dot(&(&a * &xf));
        let rhs = p.ambient.inner(&p.h_of(&(&p.tangent * &xf), &(&p.tangent * &yf)), &xi);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        prop_assert!((&a - a.transpose()).amax() < 1e-12);
    }

    #[test]
    fn h_does_not_depend_on_the_chart(c in coefficients(), w in prop::array::uniform2(-0.5f64..0.5)) {
        // a = p + 0.3 q^2, b = q - 0.2 p is a diffeomorphism near the sample
        let (pa, pb) = ("(p + 0.3*q^2)", "(q - 0.2*p)");
        let other = Immersion::parse(&["p", "q"], &surface(&c, pa, pb), vec![(-2.0, 2.0); 2]).unwrap();
        let amb = curved4();
        let tol = Tolerances::default();
        let u = [w[0] + 0.3 * w[1] * w[1], w[1] - 0.2 * w[0]];
        let p1 = frames(&imm(&c), &amb, None, &u, &tol).unwrap();
        let p2 = frames(&other, &amb, None, &w, &tol).unwrap();
        prop_assert!((dv(&p1.point) - dv(&p2.point)).amax() < 1e-12);
        for (x, y) in [(0, 0), (0, 1), (1, 1)] {
            let (tx, ty) = (p2.coord_tangents.column(x).into_owned(), p2.coord_tangents.column(y).into_owned());
            let d = (p1.h_of(&tx, &ty) - p2.h_of(&tx, &ty)).amax();
            prop_assert!(d < 1e-10, "h({},{}) differs by {}", x, y, d);
        }
        prop_assert!((mean_curvature(&p1) - mean_curvature(&p2)).amax() < 1e-10);
    }

    #[test]
    fn weingarten_tangential_part(c in coefficients(), u in prop::array::uniform2(-0.8f64..0.8), x in prop::array::uniform2(-1.0f64..1.0)) {
        // (∇̃_X ξ)^T = -A_ξ X for the normal field ξ = V^⊥
        let amb = curved4();
        let field = VectorField::parse(&["x1", "x2", "x3", "x4"], &["1 + x2", "sin(x1)", "x3*x4", "2 - x1^2"]).unwrap();
        let tol = Tolerances::default();
        let m = imm(&c);
        let p = frames(&m, &amb, Some(&field), &u, &tol).unwrap();
        let along = field_along(&m, &amb, &field, &u).unwrap();
        let xi = p.field.as_ref().unwrap().normal.clone();
        let xp = dv(&x);
        let d = derivative_along(&p, &along.normal, &xp);
        let a = shape_operator(&p, &xi, &tol).unwrap();
        let xf = p.tangent_components(&p.push_forward(&xp));
        let want = -(&p.tangent * (&a * xf));
        prop_assert!((p.tangential_part(&d) - want).amax() < 1e-10);
    }
}

#[test]
fn h_matches_differenced_immersion() {
    // Euclidean oracle: h(∂_i, ∂_j) is the normal part of ∂_i∂_jΨ
    let c = [0.4, -0.3, 0.5, 0.2, -0.4, 0.3, 0.1];
    let m = imm(&c);
    let amb = AmbientMetric::euclidean(4);
    let u = [0.2, -0.35];
    let p = frames(&m, &amb, None, &u, &Tolerances::default()).unwrap();
    let psi = |a: f64, b: f64| dv(&m.point(&[a, b]).unwrap());
    let h = 1e-3;
    let second = |i: usize, j: usize, h: f64| {
        let e = |k: usize| if k == 0 { (h, 0.0) } else { (0.0, h) };
        let (ei, ej) = (e(i), e(j));
        (psi(u[0] + ei.0 + ej.0, u[1] + ei.1 + ej.1)
            - psi(u[0] + ei.0 - ej.0, u[1] + ei.1 - ej.1)
            - psi(u[0] - ei.0 + ej.0, u[1] - ei.1 + ej.1)
            + psi(u[0] - ei.0 - ej.0, u[1] - ei.1 - ej.1))
            / (4.0 * h * h)
    };
    for i in 0..2 {
        for j in 0..2 {
            let fd = (second(i, j, h / 2.0) * 4.0 - second(i, j, h)) / 3.0;
            let want = p.normal_part(&fd);
            let ti = p.coord_tangents.column(i).into_owned();
            let tj = p.coord_tangents.column(j).into_owned();
            let got = p.h_of(&ti, &tj);
            assert!((got - want).amax() < 1e-6, "h(∂{i}, ∂{j})");
        }
    }
}

#[test]
fn sphere_mean_curvature() {
    let r = 1.5;
    let m = Immersion::parse(
        &["th", "ph"],
        &[
            format!("{r}*sin(th)*cos(ph)"),
            format!("{r}*sin(th)*sin(ph)"),
            format!("{r}*cos(th)"),
        ],
        vec![(0.1, 3.0), (0.0, 6.2)],
    )
    .unwrap();
    let p = frames(
        &m,
        &AmbientMetric::euclidean(3),
        None,
        &[0.9, 2.2],
        &Tolerances::default(),
    )
    .unwrap();
    let want = -dv(&p.point) / (r * r);
    assert!((mean_curvature(&p) - want).amax() < 1e-12);
}
