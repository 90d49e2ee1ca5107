//! Least-squares fit of `∇_X V = f X + ω(X) V` and the resulting class of `V`.
//!
//! The fit runs in a metric-orthonormal frame `E = L^{-T}` (`g = L L^T`), where
//! the covariant Jacobian becomes `B = E^{-1} (∇V) E` and the ansatz reads
//! `B ≈ f I + v w^T` with `v = E^{-1} V`, `w_j = ω(e_j)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::linalg::{frobenius, solve_spd};
use crate::metric::{christoffel, covariant_jacobian, AmbientMetric, VectorField};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Parallel,
    Concircular,
    AntiTorqued,
    Torqued,
    TorseForming,
    None,
}

impl Verdict {
    /// Precedence order, most specific first.
    pub const ORDER: [Verdict; 6] = [
        Verdict::Parallel,
        Verdict::Concircular,
        Verdict::AntiTorqued,
        Verdict::Torqued,
        Verdict::TorseForming,
        Verdict::None,
    ];

    /// Whether membership in `self` implies membership in `other`.
    pub fn implies(self, other: Verdict) -> bool {
        use Verdict::*;
        match (self, other) {
            (_, None) => true,
            (None, _) => false,
            (a, b) if a == b => true,
            (Parallel, _) => true,
            (_, TorseForming) => true,
            (Concircular, Torqued) => true,
            _ => false,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Parallel => "parallel",
            Verdict::Concircular => "concircular",
            Verdict::AntiTorqued => "anti-torqued",
            Verdict::Torqued => "torqued",
            Verdict::TorseForming => "torse-forming",
            Verdict::None => "none",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of fitting `B ≈ f I + v w^T` in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFit {
    pub f: f64,
    pub w: DVector<f64>,
    pub condition: f64,
    /// `|B|_F`.
    pub grad_norm: f64,
    /// Residuals of the free and constrained fits, divided by `max(1, |B|_F)`.
    pub residual_torse: f64,
    pub residual_concircular: f64,
    pub residual_antitorqued_fit: f64,
    pub residual_torqued_fit: f64,
    pub f_concircular: f64,
    pub f_antitorqued: f64,
}

/// Fit all variants of the ansatz to a frame matrix `b` and frame vector `v`.
pub fn fit_frame(b: &DMatrix<f64>, v: &DVector<f64>) -> Result<FrameFit> {
    let m = b.nrows();
    let vv = v.norm_squared();
    let mut gram = DMatrix::<f64>::zeros(m + 1, m + 1);
    gram[(0, 0)] = m as f64;
    for j in 0..m {
        gram[(0, j + 1)] = v[j];
        gram[(j + 1, 0)] = v[j];
        gram[(j + 1, j + 1)] = vv;
    }
    let vtb = b.transpose() * v;
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[0] = b.trace();
    rhs.rows_mut(1, m).copy_from(&vtb);
    let (sol, condition) = solve_spd(&gram, &rhs)?;
    let f = sol[0];
    let w = sol.rows(1, m).into_owned();

    let id = DMatrix::<f64>::identity(m, m);
    let grad_norm = frobenius(b);
    let scale = grad_norm.max(1.0);
    let residual_torse = frobenius(&(b - &id * f - v * w.transpose())) / scale;

    let f_conc = b.trace() / m as f64;
    let residual_concircular = frobenius(&(b - &id * f_conc)) / scale;

    let p = &id - v * v.transpose();
    let pp = (p.transpose() * &p).trace();
    let f_anti = (b.transpose() * &p).trace() / pp;
    let residual_antitorqued_fit = frobenius(&(b - &p * f_anti)) / scale;

    // with w ⟂ v the identity and v w^T parts are orthogonal, so the fit splits
    let w_perp = (&vtb - v * (v.dot(&vtb) / vv)) / vv;
    let residual_torqued_fit = frobenius(&(b - &id * f_conc - v * w_perp.transpose())) / scale;

    Ok(FrameFit {
        f,
        w,
        condition,
        grad_norm,
        residual_torse,
        residual_concircular,
        residual_antitorqued_fit,
        residual_torqued_fit,
        f_concircular: f_conc,
        f_antitorqued: f_anti,
    })
}

impl FrameFit {
    /// Classes whose residual is within tolerance, in precedence order.
    pub fn satisfied(&self, tol: &Tolerances) -> Vec<Verdict> {
        let mut out = Vec::new();
        if self.grad_norm <= tol.parallel_tol {
            out.push(Verdict::Parallel);
        }
        if self.residual_concircular <= tol.class_tol {
            out.push(Verdict::Concircular);
        }
        if self.residual_antitorqued_fit <= tol.class_tol {
            out.push(Verdict::AntiTorqued);
        }
        if self.residual_torqued_fit <= tol.class_tol {
            out.push(Verdict::Torqued);
        }
        if self.residual_torse <= tol.class_tol {
            out.push(Verdict::TorseForming);
        }
        out.push(Verdict::None);
        out
    }

    pub fn verdict(&self, tol: &Tolerances) -> Verdict {
        self.satisfied(tol)[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub point: Vec<f64>,
    pub f: f64,
    /// Coordinate components `ω_i = ω(∂_i)`.
    pub omega: DVector<f64>,
    /// Metric dual of `ω`.
    pub w: DVector<f64>,
    pub residual_torse: f64,
    pub residual_concircular: f64,
    /// `|ω(V)|`.
    pub residual_torqued: f64,
    /// `|ω + f ν|`.
    pub residual_antitorqued: f64,
    pub fit: FrameFit,
    pub verdict: Verdict,
    pub v_norm: f64,
    /// `|∇_V V|`.
    pub geodesic: f64,
    /// `∇V` with column `i` equal to `∇_{∂_i} V`.
    pub covariant_jacobian: DMatrix<f64>,
    pub v: DVector<f64>,
}

pub fn fit_torse_forming(
    metric: &AmbientMetric,
    field: &VectorField,
    point: &[f64],
    tol: &Tolerances,
) -> Result<ClassificationReport> {
    let mp = metric.at(point, 1, tol)?;
    let vp = field.at(point)?;
    let v_norm = mp.norm(&vp.components);
    if !(v_norm > tol.zero_field_tol) {
        return Err(GeoError::ZeroField { norm: v_norm });
    }
    let gamma = christoffel(&mp);
    let nabla = covariant_jacobian(&gamma, &vp)?;
    let lt = mp.cholesky_factor().transpose();
    let e = lt.clone().try_inverse().ok_or(GeoError::SingularMetric {
        pivot: 0,
        value: 0.0,
        tol: tol.spd_tol,
    })?;
    let b = &lt * &nabla * &e;
    let v = &lt * &vp.components;
    let fit = fit_frame(&b, &v)?;

    // ω(∂_i) = Σ_j w_j (E^{-1})_{j i}
    let omega = lt.transpose() * &fit.w;
    let w = mp.raise(&omega);
    let residual_torqued = omega.dot(&vp.components).abs();
    let nu = mp.lower(&vp.components);
    let residual_antitorqued = mp.inverse().quadratic_form_norm(&(&omega + &nu * fit.f));
    let verdict = fit.verdict(tol);
    Ok(ClassificationReport {
        point: point.to_vec(),
        f: fit.f,
        residual_torse: fit.residual_torse,
        residual_concircular: fit.residual_concircular,
        residual_torqued,
        residual_antitorqued,
        verdict,
        v_norm,
        geodesic: mp.norm(&(&nabla * &vp.components)),
        covariant_jacobian: nabla,
        omega,
        w,
        fit,
        v: vp.components,
    })
}

trait QuadNorm {
    fn quadratic_form_norm(&self, a: &DVector<f64>) -> f64;
}

impl QuadNorm for DMatrix<f64> {
    fn quadratic_form_norm(&self, a: &DVector<f64>) -> f64 {
        a.dot(&(self * a)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneClassification {
    pub verdict: Verdict,
    pub reports: Vec<ClassificationReport>,
    /// Index of the point with the largest residual for `verdict`.
    pub witness: usize,
    pub worst_residual: f64,
}

fn class_residual(r: &ClassificationReport, v: Verdict) -> f64 {
    match v {
        Verdict::Parallel => r.fit.grad_norm,
        Verdict::Concircular => r.fit.residual_concircular,
        Verdict::AntiTorqued => r.fit.residual_antitorqued_fit,
        Verdict::Torqued => r.fit.residual_torqued_fit,
        Verdict::TorseForming | Verdict::None => r.fit.residual_torse,
    }
}

/// Fit every point (in parallel) and reduce to a scene verdict.
pub fn classify_points(
    metric: &AmbientMetric,
    field: &VectorField,
    points: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<SceneClassification> {
    let reports = points
        .par_iter()
        .map(|p| fit_torse_forming(metric, field, p, tol))
        .collect::<Result<Vec<_>>>()?;
    classify(reports, tol)
}

/// Most specific class satisfied at every sampled point.
pub fn classify(
    reports: Vec<ClassificationReport>,
    tol: &Tolerances,
) -> Result<SceneClassification> {
    if reports.len() < tol.class_min_points {
        return Err(GeoError::TooFewSamples {
            needed: tol.class_min_points,
            got: reports.len(),
        });
    }
    let sets: Vec<Vec<Verdict>> = reports.iter().map(|r| r.fit.satisfied(tol)).collect();
    let verdict = Verdict::ORDER
        .into_iter()
        .find(|v| sets.iter().all(|s| s.contains(v)))
        .unwrap_or(Verdict::None);
    if matches!(verdict, Verdict::TorseForming | Verdict::None) {
        let firsts: Vec<Verdict> = sets.iter().map(|s| s[0]).collect();
        let clash = firsts.iter().enumerate().find_map(|(i, a)| {
            firsts[i + 1..]
                .iter()
                .find(|b| !a.implies(**b) && !b.implies(*a))
                .map(|b| (*a, *b))
        });
        let mixed = verdict == Verdict::None && firsts.iter().any(|v| *v != Verdict::None);
        if let Some((a, b)) = clash {
            return Err(GeoError::InconsistentSample {
                detail: format!("points classified both {a} and {b}"),
            });
        }
        if mixed {
            return Err(GeoError::InconsistentSample {
                detail: "field is torse-forming at some points but not at others".into(),
            });
        }
    }
    let (witness, worst_residual) = reports
        .iter()
        .map(|r| class_residual(r, verdict))
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
        );
    Ok(SceneClassification {
        verdict,
        reports,
        witness,
        worst_residual,
    })
}

/// Largest `|∇_V V|` over the points, for a unit anti-torqued field.
pub fn geodesic_unit_check(scene: &SceneClassification, tol: &Tolerances) -> Result<(f64, usize)> {
    if scene.verdict != Verdict::AntiTorqued {
        return Err(GeoError::Precondition {
            check: "geodesic-unit".into(),
            detail: format!("field classified {}, not anti-torqued", scene.verdict),
        });
    }
    let unit_dev = scene
        .reports
        .iter()
        .map(|r| (r.v_norm - 1.0).abs())
        .fold(0.0, f64::max);
    if unit_dev > tol.unit_tol {
        return Err(GeoError::Precondition {
            check: "geodesic-unit".into(),
            detail: format!("field is not unit: max ||V| - 1| = {unit_dev:.3e}"),
        });
    }
    Ok(scene
        .reports
        .iter()
        .enumerate()
        .map(|(i, r)| (r.geodesic, i))
        .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a }))
}
