//! Warped-product structure: integral curves of `V^⊤/|V^⊤|`, the warping
//! equation `dλ/ds = f(1 - λ²)` and its `tanh ∫ f` solution, the ambient
//! frame identities of an anti-torqued field, and synthetic warped ambients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::classify::{fit_torse_forming, Verdict};
use crate::error::{GeoError, Result};
use crate::expr::{eval_jet, parse, BinOp, Expr};
use crate::jet::Jet;
use crate::linalg::orthonormal_frame;
use crate::metric::{christoffel, covariant_jacobian, AmbientMetric, VectorField};
use crate::sampling::Worst;
use crate::submanifold::Immersion;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub s: f64,
    pub u: Vec<f64>,
    /// `|V^⊤|` at `u`.
    pub lambda: f64,
    /// Conformal scalar at `Ψ(u)`.
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCurve {
    pub samples: Vec<CurveSample>,
    pub step: f64,
    /// Set when tracing stopped at the parameter box before `length`.
    pub exited: bool,
    pub requested_steps: usize,
}

impl IntegralCurve {
    /// Curve from given samples with uniform spacing `step` (for synthetic data).
    pub fn from_samples(s0: f64, step: f64, lambda: &[f64], f: &[f64]) -> Self {
        let samples = lambda
            .iter()
            .zip(f)
            .enumerate()
            .map(|(k, (l, f))| CurveSample {
                s: s0 + k as f64 * step,
                u: Vec::new(),
                lambda: *l,
                f: *f,
            })
            .collect::<Vec<_>>();
        Self {
            requested_steps: samples.len().saturating_sub(1),
            samples,
            step,
            exited: false,
        }
    }

    pub fn check_complete(&self) -> Result<()> {
        if self.exited {
            return Err(GeoError::DomainExit {
                completed: self.samples.len().saturating_sub(1),
                requested: self.requested_steps,
            });
        }
        Ok(())
    }
}

/// Unit tangent `E_1 = V^⊤/|V^⊤|` in parameter coordinates, and `|V^⊤|`.
pub fn unit_axis_direction(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    u: &[f64],
    tol: &Tolerances,
) -> Result<(DVector<f64>, f64)> {
    let n = imm.n();
    let psi = imm.jets(u, 1)?;
    let x: Vec<f64> = psi.iter().map(Jet::value).collect();
    let gm = ambient.at(&x, 1, tol)?.g;
    let t = DMatrix::from_fn(imm.m(), n, |a, i| psi[a].d1(i));
    let v = field.value(&x)?;
    let gt = &gm * &t;
    let g = t.transpose() * &gt;
    let b = gt.transpose() * v;
    let c = g
        .clone()
        .cholesky()
        .ok_or(GeoError::RankDeficient {
            sigma_min: 0.0,
            tol: tol.rank_tol,
        })?
        .solve(&b);
    let lambda = c.dot(&(&g * &c)).max(0.0).sqrt();
    if !(lambda > tol.proper_tol) {
        return Err(GeoError::VanishingTangent { norm: lambda });
    }
    Ok((c / lambda, lambda))
}

/// Classical RK4 in the parameter domain for `du/ds = E_1(u)`, unit speed in
/// the induced metric. A negative `length` traces against `E_1`.
pub fn trace_integral_curve(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    u0: &[f64],
    length: f64,
    step: f64,
    tol: &Tolerances,
) -> Result<IntegralCurve> {
    let steps = (length.abs() / step).ceil().max(1.0) as usize;
    let h = length / steps as f64;
    let rhs = |u: &[f64]| unit_axis_direction(imm, ambient, field, u, tol);
    let sample = |s: f64, u: &DVector<f64>, lambda: f64| -> Result<CurveSample> {
        let x = imm.point(u.as_slice())?;
        let f = fit_torse_forming(ambient, field, &x, tol)?.f;
        Ok(CurveSample {
            s,
            u: u.as_slice().to_vec(),
            lambda,
            f,
        })
    };
    let mut u = DVector::from_column_slice(u0);
    let (_, l0) = rhs(u0)?;
    let mut samples = vec![sample(0.0, &u, l0)?];
    let mut exited = false;
    for k in 1..=steps {
        let k1 = rhs(u.as_slice())?.0;
        let k2 = rhs((&u + &k1 * (h / 2.0)).as_slice())?.0;
        let k3 = rhs((&u + &k2 * (h / 2.0)).as_slice())?.0;
        let k4 = rhs((&u + &k3 * h).as_slice())?.0;
        let next = &u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !imm.contains(next.as_slice()) {
            exited = true;
            break;
        }
        u = next;
        let (_, lambda) = rhs(u.as_slice())?;
        samples.push(sample(k as f64 * h, &u, lambda)?);
    }
    Ok(IntegralCurve {
        samples,
        step: h.abs(),
        exited,
        requested_steps: steps,
    })
}

/// Trace both ways from `u0` until the parameter box is left (or `max_len`
/// in each direction), giving one curve ordered by increasing `s`.
pub fn trace_through(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    u0: &[f64],
    max_len: f64,
    step: f64,
    tol: &Tolerances,
) -> Result<IntegralCurve> {
    let back = trace_integral_curve(imm, ambient, field, u0, -max_len, step, tol)?;
    let fwd = trace_integral_curve(imm, ambient, field, u0, max_len, step, tol)?;
    let mut samples: Vec<CurveSample> = back.samples.into_iter().skip(1).rev().collect();
    samples.extend(fwd.samples);
    Ok(IntegralCurve {
        samples,
        step: fwd.step,
        exited: false,
        requested_steps: back.requested_steps + fwd.requested_steps,
    })
}

/// `max |dλ/ds - f(1 - λ²)|` over interior samples, with a five-point
/// central difference for `dλ/ds`.
pub fn warping_ode_residual(curve: &IntegralCurve) -> Result<Worst> {
    let n = curve.samples.len();
    if n < 5 {
        return Err(GeoError::TooFewSamples { needed: 5, got: n });
    }
    let l: Vec<f64> = curve.samples.iter().map(|c| c.lambda).collect();
    let h = curve.step;
    let mut worst = Worst::default();
    for k in 2..n - 2 {
        let dl = (l[k - 2] - 8.0 * l[k - 1] + 8.0 * l[k + 1] - l[k + 2]) / (12.0 * h);
        let f = curve.samples[k].f;
        worst.push((dl - f * (1.0 - l[k] * l[k])).abs(), k);
    }
    Ok(worst)
}

/// Cumulative `∫ f ds` on uniform samples. Interior intervals use the cubic
/// weights `(-1, 13, 13, -1)/24`, the end intervals the quadratic ones
/// `(5, 8, -1)/12`; summed over interval pairs this agrees with composite
/// Simpson to the same order.
pub fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let piece = if n < 3 {
            0.5 * (f[k] + f[k + 1])
        } else if k == 0 {
            (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0
        } else if k + 2 >= n {
            (-f[k - 1] + 8.0 * f[k] + 5.0 * f[k + 1]) / 12.0
        } else {
            (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]) / 24.0
        };
        out[k + 1] = out[k] + h * piece;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpFit {
    pub c: f64,
    pub integral: Vec<f64>,
    pub model: Vec<f64>,
    pub deviation: Worst,
}

/// Fit `λ(s) = tanh(∫^s f + C)` with `C` fixed at the curve midpoint.
pub fn fit_tanh_integral(curve: &IntegralCurve) -> Result<WarpFit> {
    let n = curve.samples.len();
    if n < 3 {
        return Err(GeoError::TooFewSamples { needed: 3, got: n });
    }
    if let Some(bad) = curve.samples.iter().find(|c| c.lambda.abs() >= 1.0) {
        return Err(GeoError::ModelViolation {
            s: bad.s,
            lambda: bad.lambda,
        });
    }
    let f: Vec<f64> = curve.samples.iter().map(|c| c.f).collect();
    let integral = cumulative_integral(&f, curve.step);
    let mid = n / 2;
    let c = curve.samples[mid].lambda.atanh() - integral[mid];
    let model: Vec<f64> = integral.iter().map(|i| (i + c).tanh()).collect();
    let deviation = Worst::of(
        curve
            .samples
            .iter()
            .zip(&model)
            .map(|(s, m)| (s.lambda - m).abs()),
    );
    Ok(WarpFit {
        c,
        integral,
        model,
        deviation,
    })
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    /// `|∇_{E_1} E_1|`.
    pub geodesic: Worst,
    /// `|E_1(|V|) - f(1 - |V|²)|`.
    pub warp_ode: Worst,
    /// `|<∇_{E_j} E_1, E_k> - (f/|V|) δ_jk|` for `j, k >= 2`.
    pub connection: Worst,
    /// `|E_j(|V|)|` for `j >= 2`.
    pub fiber_gradient: Worst,
    pub f: Vec<f64>,
}

/// Frame identities behind the local splitting `I ×_λ F` of an ambient
/// carrying an anti-torqued field.
pub fn verify_ambient_decomposition(
    metric: &AmbientMetric,
    field: &VectorField,
    points: &[Vec<f64>],
    verdict: Verdict,
    tol: &Tolerances,
) -> Result<DecompositionReport> {
    if verdict != Verdict::AntiTorqued {
        return Err(GeoError::Precondition {
            check: "ambient-decomposition".into(),
            detail: format!("field classified {verdict}, not anti-torqued"),
        });
    }
    let rows = points
        .par_iter()
        .map(|p| decomposition_point(metric, field, p, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut r = DecompositionReport {
        geodesic: Worst::default(),
        warp_ode: Worst::default(),
        connection: Worst::default(),
        fiber_gradient: Worst::default(),
        f: Vec::with_capacity(rows.len()),
    };
    for (i, row) in rows.iter().enumerate() {
        r.geodesic.push(row[0], i);
        r.warp_ode.push(row[1], i);
        r.connection.push(row[2], i);
        r.fiber_gradient.push(row[3], i);
        r.f.push(row[4]);
    }
    Ok(r)
}

fn decomposition_point(
    metric: &AmbientMetric,
    field: &VectorField,
    point: &[f64],
    tol: &Tolerances,
) -> Result<[f64; 5]> {
    let fit = fit_torse_forming(metric, field, point, tol)?;
    let mp = metric.at(point, 1, tol)?;
    let vp = field.at(point)?;
    let nabla = covariant_jacobian(&christoffel(&mp), &vp)?;
    let v = &vp.components;
    let lam = mp.norm(v);
    let (e1s, rest) = orthonormal_frame(&mp.g, std::slice::from_ref(v));
    let e1 = &e1s[0];
    let grad_e1 = |x: &DVector<f64>| {
        let dv = &nabla * x;
        (&dv - e1 * mp.inner(&dv, e1)) / lam
    };
    let dir_lam = |x: &DVector<f64>| mp.inner(&(&nabla * x), v) / lam;
    let f = fit.f;
    let geodesic = mp.norm(&grad_e1(e1));
    let warp = (dir_lam(e1) - f * (1.0 - lam * lam)).abs();
    let mut conn = 0.0f64;
    let mut grad = 0.0f64;
    for (j, ej) in rest.iter().enumerate() {
        let d = grad_e1(ej);
        for (k, ek) in rest.iter().enumerate() {
            let want = if j == k { f / lam } else { 0.0 };
            conn = conn.max((mp.inner(&d, ek) - want).abs());
        }
        grad = grad.max(dir_lam(ej).abs());
    }
    Ok([geodesic, warp, conn, grad, f])
}

/// `ds² + λ(s)² g_F` on `I × F` with the axis `V = ∂/∂s`.
#[derive(Debug, Clone)]
pub struct WarpedAmbient {
    pub metric: AmbientMetric,
    pub field: VectorField,
    pub domain: Vec<(f64, f64)>,
    pub lambda: Expr,
}

impl WarpedAmbient {
    /// `d log λ / ds` at `s`.
    pub fn conformal_scalar(&self, s: f64) -> Result<f64> {
        let j = eval_jet(&self.lambda, &[s], 1)?;
        Ok(j.d1(0) / j.value())
    }
}

/// Assemble the warped metric. `lambda` is an expression in `s`; the fiber
/// metric entries (square or lower triangle) use `fiber_vars`.
pub fn build_warped_ambient<S: AsRef<str>>(
    lambda: &str,
    fiber_vars: &[S],
    fiber_metric: &[Vec<S>],
    s_range: (f64, f64),
    fiber_domain: &[(f64, f64)],
) -> Result<WarpedAmbient> {
    let k = fiber_vars.len();
    let mut vars = vec!["s".to_string()];
    vars.extend(fiber_vars.iter().map(|v| v.as_ref().to_string()));
    let lam_src = parse(lambda, &["s"])?;
    let lam = lam_src.remap_vars(&|_| ("s".to_string(), 0));
    let (lo, hi) = s_range;
    for i in 0..=200 {
        let s = lo + (hi - lo) * i as f64 / 200.0;
        let value = lam.eval(&[s])?;
        if !(value > 0.0) {
            return Err(GeoError::NonPositiveWarp { s, value });
        }
    }
    let shift = |e: &Expr| {
        let names = vars.clone();
        e.remap_vars(&move |i| (names[i + 1].clone(), i + 1))
    };
    if fiber_metric.len() != k {
        return Err(GeoError::DimensionMismatch {
            path: "fiber_metric".into(),
            expected: k,
            found: fiber_metric.len(),
        });
    }
    let lam2 = Expr::binary(BinOp::Pow, lam.clone(), Expr::Num(2.0));
    let mut entries: Vec<Vec<Expr>> = vec![vec![Expr::Num(1.0)]];
    for (i, row) in fiber_metric.iter().enumerate() {
        let mut out = vec![Expr::Num(0.0)];
        for src in row.iter().take(i + 1) {
            let e = shift(&parse(src.as_ref(), fiber_vars)?);
            out.push(Expr::binary(BinOp::Mul, lam2.clone(), e));
        }
        entries.push(out);
    }
    let metric = AmbientMetric::new(vars, entries)?;
    let mut comps = vec![Expr::Num(1.0)];
    comps.extend((0..k).map(|_| Expr::Num(0.0)));
    let mut domain = vec![s_range];
    domain.extend_from_slice(fiber_domain);
    Ok(WarpedAmbient {
        metric,
        field: VectorField::new(comps),
        domain,
        lambda: lam,
    })
}
