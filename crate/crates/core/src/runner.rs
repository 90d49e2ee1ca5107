//! Runs the checks of a scene in dependency order and assembles a [`Report`].

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::classify::{classify_points, geodesic_unit_check, SceneClassification, Verdict};
use crate::error::{GeoError, Result};
use crate::rectifying::{
    verify_normal_vanishes, verify_rectifying, verify_tangential_vanishes, verify_torqued_props,
    RectifyingReport, RectifyingVerdict, TorquedCase,
};
use crate::report::{CheckResult, ClassificationSummary, FSummary, Report, Status, Witness};
use crate::sampling::{sample_box, Worst};
use crate::scene::{center, CheckName, CurveSpec, Scene};
use crate::submanifold::{frames, gauss_residual_frame};
use crate::warped::{
    fit_tanh_integral, trace_through, verify_ambient_decomposition, warping_ode_residual,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checks: Option<Vec<CheckName>>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
}

/// Ambient sample points: inside the box, outside the excluded ball, with
/// a nonvanishing field.
pub fn ambient_points(scene: &Scene, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let tol = &scene.tolerances;
    sample_box(&scene.ambient_domain, count, seed, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r < scene.exclude_radius {
            return false;
        }
        match &scene.field {
            Some(f) => match (f.value(x), scene.metric.at(x, 1, tol)) {
                (Ok(v), Ok(g)) => g.norm(&v) > tol.zero_field_tol,
                _ => false,
            },
            None => true,
        }
    })
}

pub fn parameter_points(scene: &Scene, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sm = scene
        .submanifold
        .as_ref()
        .ok_or_else(|| GeoError::Precondition {
            check: "sampling".into(),
            detail: "scene has no submanifold".into(),
        })?;
    sample_box(sm.domain(), count, seed, |_| true)
}

struct Ctx<'a> {
    scene: &'a Scene,
    seed: u64,
    points: Option<usize>,
    classification: Option<Result<SceneClassification>>,
    ambient: Option<Result<Vec<Vec<f64>>>>,
    params: Option<Result<Vec<Vec<f64>>>>,
    rectifying: Option<Result<RectifyingReport>>,
}

impl Ctx<'_> {
    fn ambient_points(&mut self) -> Result<Vec<Vec<f64>>> {
        if self.ambient.is_none() {
            let n = self
                .points
                .unwrap_or(50)
                .max(self.scene.tolerances.class_min_points);
            self.ambient = Some(ambient_points(self.scene, n, self.seed));
        }
        self.ambient.clone().expect("just set")
    }

    fn params(&mut self) -> Result<Vec<Vec<f64>>> {
        if self.params.is_none() {
            let n = self.points.unwrap_or(50);
            self.params = Some(parameter_points(self.scene, n, self.seed));
        }
        self.params.clone().expect("just set")
    }

    fn classification(&mut self) -> Result<SceneClassification> {
        if self.classification.is_none() {
            let res = self.ambient_points().and_then(|pts| {
                let field = self.scene.field.as_ref().expect("validated");
                classify_points(&self.scene.metric, field, &pts, &self.scene.tolerances)
            });
            self.classification = Some(res);
        }
        self.classification.clone().expect("just set")
    }

    fn rectifying(&mut self) -> Result<RectifyingReport> {
        if self.rectifying.is_none() {
            let res = self.params().and_then(|us| {
                verify_rectifying(
                    self.scene.submanifold.as_ref().expect("validated"),
                    &self.scene.metric,
                    self.scene.field.as_ref().expect("validated"),
                    &us,
                    &self.scene.tolerances,
                )
            });
            self.rectifying = Some(res);
        }
        self.rectifying.clone().expect("just set")
    }
}

fn values(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn result(
    name: CheckName,
    pass: bool,
    residual: f64,
    point: Option<Vec<f64>>,
    vals: BTreeMap<String, f64>,
) -> CheckResult {
    CheckResult {
        name: name.name().into(),
        status: if pass { Status::Pass } else { Status::Fail },
        residual: Some(residual),
        witness: Some(Witness {
            point: point.unwrap_or_default(),
            values: vals,
        }),
        detail: None,
    }
}

fn from_error(name: CheckName, e: &GeoError) -> CheckResult {
    let status = match e {
        GeoError::Precondition { .. } => Status::NotApplicable,
        _ => Status::Error,
    };
    CheckResult {
        name: name.name().into(),
        status,
        residual: None,
        witness: None,
        detail: Some(e.to_string()),
    }
}

fn at(points: &[Vec<f64>], w: &Worst) -> Option<Vec<f64>> {
    w.index.map(|i| points[i].clone())
}

/// The worst of several `(value, tolerance)` items, as a ratio-free maximum
/// of the raw values, plus whether every item is within its tolerance.
fn judge(items: &[(Worst, f64)]) -> (bool, Worst) {
    let pass = items.iter().all(|(w, t)| w.value <= *t);
    let mut worst = Worst::default();
    for (w, t) in items {
        // witness comes from the item that is furthest over its tolerance
        let ratio = if *t > 0.0 { w.value / t } else { w.value };
        if worst.index.is_none() || ratio > worst.value {
            worst = Worst {
                value: ratio,
                index: w.index,
            };
        }
    }
    (pass, worst)
}

fn max_value(items: &[(Worst, f64)]) -> f64 {
    items.iter().map(|(w, _)| w.value).fold(0.0, f64::max)
}

pub fn run(scene: &Scene, opts: &RunOptions) -> Report {
    let mut checks: Vec<CheckName> = opts.checks.clone().unwrap_or_else(|| scene.checks.clone());
    checks.sort();
    checks.dedup();
    let mut ctx = Ctx {
        scene,
        seed: opts.seed.unwrap_or(scene.seed),
        points: opts.points.or(scene.points),
        classification: None,
        ambient: None,
        params: None,
        rectifying: None,
    };
    let mut results = Vec::with_capacity(checks.len());
    for c in &checks {
        let r = if c.needs_field() && scene.field.is_none() {
            Err(GeoError::Precondition {
                check: c.name().into(),
                detail: "scene has no field".into(),
            })
        } else if c.needs_submanifold() && scene.submanifold.is_none() {
            Err(GeoError::Precondition {
                check: c.name().into(),
                detail: "scene has no submanifold".into(),
            })
        } else {
            run_check(*c, &mut ctx)
        };
        results.push(r.unwrap_or_else(|e| from_error(*c, &e)));
    }
    let classification = match &ctx.classification {
        Some(Ok(sc)) => Some(summarize(sc)),
        _ => None,
    };
    Report {
        scene: scene.name.clone(),
        seed: ctx.seed,
        checks: results,
        classification,
    }
}

fn summarize(sc: &SceneClassification) -> ClassificationSummary {
    let r = &sc.reports;
    let max = |f: &dyn Fn(&crate::classify::ClassificationReport) -> f64| {
        r.iter().map(f).fold(0.0, f64::max)
    };
    ClassificationSummary {
        verdict: sc.verdict,
        points: r.len(),
        f_summary: FSummary {
            min: r.iter().map(|x| x.f).fold(f64::INFINITY, f64::min),
            max: r.iter().map(|x| x.f).fold(f64::NEG_INFINITY, f64::max),
        },
        residuals: values(&[
            ("torse", max(&|x| x.residual_torse)),
            ("concircular", max(&|x| x.residual_concircular)),
            ("torqued", max(&|x| x.residual_torqued)),
            ("anti_torqued", max(&|x| x.residual_antitorqued)),
            ("torqued_fit", max(&|x| x.fit.residual_torqued_fit)),
            ("anti_torqued_fit", max(&|x| x.fit.residual_antitorqued_fit)),
            ("condition", max(&|x| x.fit.condition)),
        ]),
    }
}

fn run_check(c: CheckName, ctx: &mut Ctx) -> Result<CheckResult> {
    let scene = ctx.scene;
    let tol = &scene.tolerances;
    match c {
        CheckName::Classify => {
            let sc = ctx.classification()?;
            let pass = match scene.expect {
                Some(v) => sc.verdict == v,
                None => sc.verdict != Verdict::None,
            };
            let w = &sc.reports[sc.witness];
            let mut r = result(
                c,
                pass,
                sc.worst_residual,
                Some(w.point.clone()),
                values(&[
                    ("f", w.f),
                    ("v_norm", w.v_norm),
                    ("residual_torse", w.residual_torse),
                ]),
            );
            r.detail = Some(match scene.expect {
                Some(v) if v != sc.verdict => format!("verdict {}, expected {v}", sc.verdict),
                _ => format!("verdict {}", sc.verdict),
            });
            Ok(r)
        }
        CheckName::GeodesicUnit => {
            let sc = ctx.classification()?;
            let (geo, i) = geodesic_unit_check(&sc, tol)?;
            Ok(result(
                c,
                geo <= tol.geodesic_tol,
                geo,
                Some(sc.reports[i].point.clone()),
                values(&[("nabla_v_v", geo)]),
            ))
        }
        CheckName::AmbientDecomposition => {
            let sc = ctx.classification()?;
            let pts = ctx.ambient_points()?;
            let field = scene.field.as_ref().expect("validated");
            let d = verify_ambient_decomposition(&scene.metric, field, &pts, sc.verdict, tol)?;
            let items = [
                (d.geodesic, tol.decomposition_geodesic_tol),
                (d.warp_ode, tol.decomposition_tol),
                (d.connection, tol.decomposition_tol),
                (d.fiber_gradient, tol.decomposition_tol),
            ];
            let (pass, worst) = judge(&items);
            Ok(result(
                c,
                pass,
                max_value(&items),
                at(&pts, &worst),
                values(&[
                    ("geodesic", d.geodesic.value),
                    ("warp_ode", d.warp_ode.value),
                    ("connection", d.connection.value),
                    ("fiber_gradient", d.fiber_gradient.value),
                ]),
            ))
        }
        CheckName::GaussEquation => {
            let us = ctx.params()?;
            let sm = scene.submanifold.as_ref().expect("validated");
            let res = us
                .par_iter()
                .map(|u| {
                    frames(sm, &scene.metric, None, u, tol).and_then(|p| gauss_residual_frame(&p))
                })
                .collect::<Result<Vec<_>>>()?;
            let w = Worst::of(res);
            Ok(result(
                c,
                w.value <= tol.gauss_tol,
                w.value,
                at(&us, &w),
                values(&[("gauss", w.value)]),
            ))
        }
        CheckName::Rectifying => {
            let us = ctx.params()?;
            let r = ctx.rectifying()?;
            let pass = r.verdict == RectifyingVerdict::Proper && r.avperp.value <= tol.avperp_tol;
            let mut out = result(
                c,
                pass,
                r.residual.value,
                at(&us, &r.residual),
                values(&[
                    ("residual", r.residual.value),
                    ("min_tangential", r.min_tangential.value),
                    ("min_normal", r.min_normal.value),
                    ("a_vperp", r.avperp.value),
                    ("a_vperp_plus_f_id", r.avperp_plus_f.value),
                ]),
            );
            out.detail = Some(match r.verdict {
                RectifyingVerdict::Proper => "proper rectifying".into(),
                RectifyingVerdict::Improper => "rectifying but not proper".into(),
                RectifyingVerdict::NotRectifying => "not rectifying".into(),
                RectifyingVerdict::TangentAxisHypersurface => {
                    out.status = Status::NotApplicable;
                    "hypersurface with tangent axis; see normal-theorem".into()
                }
            });
            Ok(out)
        }
        CheckName::TangentialTheorem => {
            let us = ctx.params()?;
            let r = verify_tangential_vanishes(
                scene.submanifold.as_ref().expect("validated"),
                &scene.metric,
                scene.field.as_ref().expect("validated"),
                &us,
                tol,
            )?;
            let items = [
                (r.normal_derivative, tol.normal_parallel_tol),
                (r.shape, tol.umbilic_tol),
            ];
            let (pass, worst) = judge(&items);
            Ok(result(
                c,
                pass,
                max_value(&items),
                at(&us, &worst),
                values(&[
                    ("max_tangential", r.max_tangential.value),
                    ("normal_derivative", r.normal_derivative.value),
                    ("a_vperp_plus_f_id", r.shape.value),
                ]),
            ))
        }
        CheckName::NormalTheorem => {
            let us = ctx.params()?;
            let r = verify_normal_vanishes(
                scene.submanifold.as_ref().expect("validated"),
                &scene.metric,
                scene.field.as_ref().expect("validated"),
                &us,
                tol,
            )?;
            let items = [
                (r.det, tol.det_tol),
                (r.h_tangent, tol.h_tangent_tol),
                (r.curvature, tol.curvature_match_tol),
                (r.sectional, tol.curvature_match_tol),
            ];
            let (pass, worst) = judge(&items);
            Ok(result(
                c,
                pass,
                max_value(&items),
                at(&us, &worst),
                values(&[
                    ("max_normal", r.max_normal.value),
                    ("det", r.det.value),
                    ("h_tangent", r.h_tangent.value),
                    ("curvature", r.curvature.value),
                    ("sectional", r.sectional.value),
                    ("ambient_sectional", r.ambient_sectional.value),
                    ("intrinsic_sectional", r.intrinsic_sectional.value),
                ]),
            ))
        }
        CheckName::TorquedProps => {
            let sc = ctx.classification()?;
            let us = ctx.params()?;
            let r = verify_torqued_props(
                scene.submanifold.as_ref().expect("validated"),
                &scene.metric,
                scene.field.as_ref().expect("validated"),
                &us,
                sc.verdict,
                tol,
            )?;
            let (items, vals) = match r.case {
                TorquedCase::TangentAxis => (
                    vec![
                        (r.concircular, tol.concircular_fit_tol),
                        (r.det, tol.det_tol),
                    ],
                    values(&[
                        ("concircular", r.concircular.value),
                        ("f_mismatch", r.f_mismatch.value),
                        ("det", r.det.value),
                    ]),
                ),
                TorquedCase::NormalAxis => (
                    vec![
                        (r.shape, tol.umbilic_tol),
                        (r.normal_derivative, tol.normal_parallel_tol),
                        (r.w_derivative, tol.umbilic_tol),
                    ],
                    values(&[
                        ("a_vperp_plus_f_id", r.shape.value),
                        ("normal_derivative", r.normal_derivative.value),
                        ("w_derivative", r.w_derivative.value),
                        ("w_tangent_zero_points", r.w_tangent_zero as f64),
                    ]),
                ),
            };
            let (pass, worst) = judge(&items);
            let mut out = result(c, pass, max_value(&items), at(&us, &worst), vals);
            out.detail = Some(match r.case {
                TorquedCase::TangentAxis => "axis tangent to M".into(),
                TorquedCase::NormalAxis if r.w_tangent_zero > 0 => format!(
                    "axis normal to M; W^T vanished at {} points",
                    r.w_tangent_zero
                ),
                TorquedCase::NormalAxis => "axis normal to M".into(),
            });
            Ok(out)
        }
        CheckName::WarpFit => {
            let r = ctx.rectifying()?;
            if r.verdict != RectifyingVerdict::Proper {
                return Err(GeoError::Precondition {
                    check: "warp-fit".into(),
                    detail: "submanifold is not proper rectifying".into(),
                });
            }
            let sm = scene.submanifold.as_ref().expect("validated");
            let spec = scene.curve.clone().unwrap_or_else(|| CurveSpec {
                start: center(sm.domain()),
                step: 1e-2,
                length: 100.0,
            });
            let field = scene.field.as_ref().expect("validated");
            let curve = trace_through(
                sm,
                &scene.metric,
                field,
                &spec.start,
                spec.length,
                spec.step,
                tol,
            )?;
            let ode = warping_ode_residual(&curve)?;
            let fit = fit_tanh_integral(&curve)?;
            let pass = ode.value <= tol.ode_tol && fit.deviation.value <= tol.warp_tol;
            let worst = if ode.value / tol.ode_tol >= fit.deviation.value / tol.warp_tol {
                ode
            } else {
                fit.deviation
            };
            let first = &curve.samples[0];
            let last = &curve.samples[curve.samples.len() - 1];
            Ok(result(
                c,
                pass,
                ode.value.max(fit.deviation.value),
                worst.index.map(|i| curve.samples[i].u.clone()),
                values(&[
                    ("ode_residual", ode.value),
                    ("tanh_deviation", fit.deviation.value),
                    ("integration_constant", fit.c),
                    ("arc_length", last.s - first.s),
                    ("samples", curve.samples.len() as f64),
                ]),
            ))
        }
    }
}
