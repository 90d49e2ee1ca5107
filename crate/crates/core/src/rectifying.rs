//! Rectifying condition `g̃(V^⊥, Im h) = 0` and the structure results for
//! axes that are purely tangent or purely normal to the submanifold.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::classify::{fit_torse_forming, ClassificationReport, Verdict};
use crate::error::{GeoError, Result};
use crate::linalg::frobenius;
use crate::metric::{apply_riemann, sectional_from_tensor, AmbientMetric, VectorField};
use crate::sampling::Worst;
use crate::submanifold::{
    curvature_pair, derivative_along, field_along, frames, FieldAlong, FramePacket, Immersion,
};
use crate::tolerances::Tolerances;

/// Everything the checks need at one parameter point.
pub struct PointData {
    pub packet: FramePacket,
    pub along: FieldAlong,
    pub fit: ClassificationReport,
}

pub fn point_data(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    u: &[f64],
    tol: &Tolerances,
) -> Result<PointData> {
    let packet = frames(imm, ambient, Some(field), u, tol)?;
    let along = field_along(imm, ambient, field, u)?;
    let fit = fit_torse_forming(ambient, field, &packet.point, tol)?;
    Ok(PointData { packet, along, fit })
}

fn collect(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    us: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<Vec<PointData>> {
    us.par_iter()
        .map(|u| point_data(imm, ambient, field, u, tol))
        .collect()
}

fn split(p: &FramePacket) -> &crate::submanifold::FieldSplit {
    p.field.as_ref().expect("packet built with a field")
}

/// `A_{V^⊥}` in the orthonormal tangent frame.
pub fn shape_of_normal_part(packet: &FramePacket) -> DMatrix<f64> {
    let c = packet.normal_components(&split(packet).v);
    let n = packet.n();
    packet
        .h
        .iter()
        .enumerate()
        .fold(DMatrix::zeros(n, n), |a, (al, h)| a + h * c[al])
}

/// `max_{p<=q} |g̃(V^⊥, h(e_p, e_q))| / (max|h| |V^⊥|)`; zero when `h` or
/// `V^⊥` vanishes.
pub fn rectifying_residual_at(packet: &FramePacket, tol: &Tolerances) -> f64 {
    let s = split(packet);
    let hmax = packet.h_max_norm();
    if hmax <= tol.totally_geodesic_tol || s.normal_norm <= tol.proper_tol {
        return 0.0;
    }
    let a = shape_of_normal_part(packet);
    a.amax() / (hmax * s.normal_norm)
}

pub fn rectifying_residual(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    u: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    let p = frames(imm, ambient, Some(field), u, tol)?;
    Ok(rectifying_residual_at(&p, tol))
}

/// Frobenius norm of `A_{V^⊥}`.
pub fn check_avperp_zero(packet: &FramePacket) -> f64 {
    frobenius(&shape_of_normal_part(packet))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectifyingVerdict {
    /// Rectifying with both parts of the axis nonzero everywhere.
    Proper,
    /// Rectifying but `V^⊤` or `V^⊥` vanishes somewhere.
    Improper,
    /// Hypersurface with a tangent axis; handled by the normal theorem.
    TangentAxisHypersurface,
    NotRectifying,
}

#[derive(Debug, Clone)]
pub struct RectifyingReport {
    pub residual: Worst,
    pub min_tangential: Worst,
    pub min_normal: Worst,
    pub avperp: Worst,
    /// `|A_{V^⊥} + f Id|_F`, for contrast with umbilic directions.
    pub avperp_plus_f: Worst,
    pub verdict: RectifyingVerdict,
}

pub fn verify_rectifying(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    us: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<RectifyingReport> {
    let data = collect(imm, ambient, field, us, tol)?;
    let mut residual = Worst::default();
    let mut avperp = Worst::default();
    let mut avperp_plus_f = Worst::default();
    let mut min_t = Worst::default();
    let mut min_n = Worst::default();
    for (i, d) in data.iter().enumerate() {
        let p = &d.packet;
        let s = split(p);
        residual.push(rectifying_residual_at(p, tol), i);
        let a = shape_of_normal_part(p);
        avperp.push(frobenius(&a), i);
        let n = p.n();
        avperp_plus_f.push(frobenius(&(&a + DMatrix::identity(n, n) * d.fit.f)), i);
        // track minima as maxima of the negated value
        min_t.push(-s.tangential_norm, i);
        min_n.push(-s.normal_norm, i);
    }
    min_t.value = -min_t.value;
    min_n.value = -min_n.value;
    let codim = imm.m() - imm.n();
    let verdict = if codim == 1 && max_normal(&data) <= tol.proper_tol {
        RectifyingVerdict::TangentAxisHypersurface
    } else if residual.value > tol.rect_tol {
        RectifyingVerdict::NotRectifying
    } else if min_t.value > tol.proper_tol && min_n.value > tol.proper_tol {
        RectifyingVerdict::Proper
    } else {
        RectifyingVerdict::Improper
    };
    Ok(RectifyingReport {
        residual,
        min_tangential: min_t,
        min_normal: min_n,
        avperp,
        avperp_plus_f,
        verdict,
    })
}

fn max_normal(data: &[PointData]) -> f64 {
    data.iter()
        .map(|d| split(&d.packet).normal_norm)
        .fold(0.0, f64::max)
}

fn precondition(check: &str, what: &str, w: Worst, us: &[Vec<f64>]) -> GeoError {
    GeoError::Precondition {
        check: check.into(),
        detail: format!(
            "{what} = {:.3e} at u = {:?}",
            w.value,
            w.index.map(|i| us[i].clone()).unwrap_or_default()
        ),
    }
}

/// Normal covariant derivative `D_X V^⊥` for an ambient tangent vector `x`.
fn normal_derivative(p: &FramePacket, along: &FieldAlong, x: &DVector<f64>) -> DVector<f64> {
    let d = derivative_along(p, &along.normal, &p.to_param(x));
    p.normal_part(&d)
}

/// Intrinsic `∇_X V^⊤` for an ambient tangent vector `x`.
fn tangential_derivative(p: &FramePacket, along: &FieldAlong, x: &DVector<f64>) -> DVector<f64> {
    let d = derivative_along(p, &along.tangential, &p.to_param(x));
    p.tangential_part(&d)
}

#[derive(Debug, Clone)]
pub struct TangentialReport {
    pub max_tangential: Worst,
    /// `|D_X V^⊥|` over frame vectors.
    pub normal_derivative: Worst,
    /// `|A_{V^⊥} + f Id|_F`.
    pub shape: Worst,
    pub f: Vec<f64>,
}

/// Axis normal to `M`: `V^⊥` is parallel in the normal bundle and an umbilic
/// direction with `A_{V^⊥} = -f Id`.
pub fn verify_tangential_vanishes(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    us: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<TangentialReport> {
    let data = collect(imm, ambient, field, us, tol)?;
    let max_tangential = Worst::of(data.iter().map(|d| split(&d.packet).tangential_norm));
    if max_tangential.value > tol.vanish_tol {
        return Err(precondition(
            "tangential-theorem",
            "|V^T|",
            max_tangential,
            us,
        ));
    }
    let mut nd = Worst::default();
    let mut shape = Worst::default();
    for (i, d) in data.iter().enumerate() {
        let p = &d.packet;
        for k in 0..p.n() {
            let dn = normal_derivative(p, &d.along, &p.tangent_vec(k));
            nd.push(p.ambient.norm(&dn), i);
        }
        let a = shape_of_normal_part(p);
        shape.push(
            frobenius(&(a + DMatrix::identity(p.n(), p.n()) * d.fit.f)),
            i,
        );
    }
    Ok(TangentialReport {
        max_tangential,
        normal_derivative: nd,
        shape,
        f: data.iter().map(|d| d.fit.f).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct NormalReport {
    pub max_normal: Worst,
    /// `|det A_ξ|` over the normal frame.
    pub det: Worst,
    /// `|h(X, V^⊤)|` over tangent frame vectors.
    pub h_tangent: Worst,
    /// `|g̃(R̃(X,Y)V^⊤, W) - g(R(X,Y)V^⊤, W)|` over frame triples.
    pub curvature: Worst,
    /// `|K̃(π) - K(π)|` for planes containing `V^⊤`.
    pub sectional: Worst,
    pub ambient_sectional: Worst,
    pub intrinsic_sectional: Worst,
}

/// Axis tangent to `M`: `h(·, V^⊤) = 0`, so every shape operator is
/// singular and sectional curvatures through `V^⊤` agree.
pub fn verify_normal_vanishes(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    us: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<NormalReport> {
    let data = collect(imm, ambient, field, us, tol)?;
    let max_normal = Worst::of(data.iter().map(|d| split(&d.packet).normal_norm));
    if max_normal.value > tol.vanish_tol {
        return Err(precondition("normal-theorem", "|V^perp|", max_normal, us));
    }
    let per_point = data
        .par_iter()
        .map(|d| normal_point(&d.packet, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut r = NormalReport {
        max_normal,
        det: Worst::default(),
        h_tangent: Worst::default(),
        curvature: Worst::default(),
        sectional: Worst::default(),
        ambient_sectional: Worst::default(),
        intrinsic_sectional: Worst::default(),
    };
    for (i, v) in per_point.iter().enumerate() {
        r.det.push(v[0], i);
        r.h_tangent.push(v[1], i);
        r.curvature.push(v[2], i);
        r.sectional.push(v[3], i);
        r.ambient_sectional.push(v[4], i);
        r.intrinsic_sectional.push(v[5], i);
    }
    Ok(r)
}

fn normal_point(p: &FramePacket, tol: &Tolerances) -> Result<[f64; 6]> {
    let vt = &split(p).tangential;
    let n = p.n();
    let det =
        p.h.iter()
            .map(|h| h.determinant().abs())
            .fold(0.0, f64::max);
    let h_tangent = (0..n)
        .map(|k| p.ambient.norm(&p.h_of(&p.tangent_vec(k), vt)))
        .fold(0.0, f64::max);

    let curv = curvature_pair(p)?;
    let vt_param = p.to_param(vt);
    let frame: Vec<DVector<f64>> = (0..n)
        .map(|k| p.tangent_coeffs.column(k).into_owned())
        .collect();
    let vt_amb = p.push_forward(&vt_param);
    let mut curvature = 0.0f64;
    for x in &frame {
        for y in &frame {
            let (xa, ya) = (p.push_forward(x), p.push_forward(y));
            let amb = apply_riemann(&curv.ambient, &xa, &ya, &vt_amb);
            let int = apply_riemann(&curv.intrinsic, x, y, &vt_param);
            for w in &frame {
                let d = p.ambient.inner(&amb, &p.push_forward(w)) - p.induced.inner(&int, w);
                curvature = curvature.max(d.abs());
            }
        }
    }

    let (mut sectional, mut kt, mut k) = (0.0f64, 0.0f64, 0.0f64);
    let vt_norm = p.induced.norm(&vt_param);
    if vt_norm > tol.proper_tol {
        let unit = &vt_param / vt_norm;
        for x in &frame {
            let x_perp = x - &unit * p.induced.inner(x, &unit);
            if p.induced.norm(&x_perp) < 1e-6 {
                continue;
            }
            let ki = sectional_from_tensor(
                &p.induced,
                &curv.intrinsic,
                &x_perp,
                &unit,
                tol.degeneracy_tol,
            )?;
            let ka = sectional_from_tensor(
                &p.ambient,
                &curv.ambient,
                &p.push_forward(&x_perp),
                &p.push_forward(&unit),
                tol.degeneracy_tol,
            )?;
            sectional = sectional.max((ka - ki).abs());
            kt = kt.max(ka.abs());
            k = k.max(ki.abs());
        }
    }
    Ok([det, h_tangent, curvature, sectional, kt, k])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorquedCase {
    /// `V^⊥ = 0`.
    TangentAxis,
    /// `V^⊤ = 0`.
    NormalAxis,
}

#[derive(Debug, Clone)]
pub struct TorquedReport {
    pub case: TorquedCase,
    /// Tangent axis: residual of `∇_X V^⊤ = f_M X` and `|f_M - f|`.
    pub concircular: Worst,
    pub f_mismatch: Worst,
    pub det: Worst,
    /// Normal axis: `|A_{V^⊥} + f Id|_F`, `|D_X V^⊥|` for `X ⟂ W^⊤`,
    /// and `|D_{W^⊤}V^⊥ - |W^⊤|² V^⊥|`.
    pub shape: Worst,
    pub normal_derivative: Worst,
    pub w_derivative: Worst,
    /// Number of points where `W^⊤` vanished (only the `X ⟂ W^⊤` check applies there).
    pub w_tangent_zero: usize,
}

/// Structure of a torqued axis that is tangent or normal to `M`.
pub fn verify_torqued_props(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    us: &[Vec<f64>],
    verdict: Verdict,
    tol: &Tolerances,
) -> Result<TorquedReport> {
    if !verdict.implies(Verdict::Torqued) {
        return Err(GeoError::Precondition {
            check: "torqued-props".into(),
            detail: format!("field classified {verdict}, not torqued"),
        });
    }
    let data = collect(imm, ambient, field, us, tol)?;
    let max_t = Worst::of(data.iter().map(|d| split(&d.packet).tangential_norm));
    let max_n = Worst::of(data.iter().map(|d| split(&d.packet).normal_norm));
    let case = if max_n.value <= tol.vanish_tol {
        TorquedCase::TangentAxis
    } else if max_t.value <= tol.vanish_tol {
        TorquedCase::NormalAxis
    } else {
        return Err(GeoError::Precondition {
            check: "torqued-props".into(),
            detail: format!(
                "axis is neither tangent nor normal: max |V^T| = {:.3e}, max |V^perp| = {:.3e}",
                max_t.value, max_n.value
            ),
        });
    };
    let mut r = TorquedReport {
        case,
        concircular: Worst::default(),
        f_mismatch: Worst::default(),
        det: Worst::default(),
        shape: Worst::default(),
        normal_derivative: Worst::default(),
        w_derivative: Worst::default(),
        w_tangent_zero: 0,
    };
    for (i, d) in data.iter().enumerate() {
        let p = &d.packet;
        let n = p.n();
        let f = d.fit.f;
        match case {
            TorquedCase::TangentAxis => {
                let b = DMatrix::from_fn(n, n, |q, k| {
                    let dv = tangential_derivative(p, &d.along, &p.tangent_vec(k));
                    p.tangent_components(&dv)[q]
                });
                let f_m = b.trace() / n as f64;
                let id = DMatrix::<f64>::identity(n, n);
                r.concircular
                    .push(frobenius(&(&b - &id * f_m)) / frobenius(&b).max(1.0), i);
                r.f_mismatch.push((f_m - f).abs(), i);
                let det =
                    p.h.iter()
                        .map(|h| h.determinant().abs())
                        .fold(0.0, f64::max);
                r.det.push(det, i);
            }
            TorquedCase::NormalAxis => {
                let a = shape_of_normal_part(p);
                r.shape
                    .push(frobenius(&(a + DMatrix::identity(n, n) * f)), i);
                let wt = p.tangential_part(&d.fit.w);
                let wt_norm = p.ambient.norm(&wt);
                let vperp = &split(p).normal;
                let perp_frame: Vec<DVector<f64>> = if wt_norm > tol.vanish_tol {
                    r.w_derivative.push(
                        p.ambient
                            .norm(&(normal_derivative(p, &d.along, &wt) - vperp * wt_norm.powi(2))),
                        i,
                    );
                    let unit = &wt / wt_norm;
                    complement_in_tangent(p, &unit)
                } else {
                    r.w_tangent_zero += 1;
                    (0..n).map(|k| p.tangent_vec(k)).collect()
                };
                for x in &perp_frame {
                    r.normal_derivative
                        .push(p.ambient.norm(&normal_derivative(p, &d.along, x)), i);
                }
            }
        }
    }
    Ok(r)
}

/// Orthonormal basis of the tangent vectors orthogonal to `unit`.
fn complement_in_tangent(p: &FramePacket, unit: &DVector<f64>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    let mut all = vec![unit.clone()];
    for k in 0..p.n() {
        let mut x = p.tangent_vec(k);
        for _ in 0..2 {
            for e in &all {
                let c = p.ambient.inner(&x, e);
                x -= e * c;
            }
        }
        let len = p.ambient.norm(&x);
        if len > 1e-6 && out.len() + 1 < p.n() {
            let e = x / len;
            all.push(e.clone());
            out.push(e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radial3() -> VectorField {
        VectorField::parse(
            &["x1", "x2", "x3"],
            &[
                "x1/sqrt(x1^2+x2^2+x3^2)",
                "x2/sqrt(x1^2+x2^2+x3^2)",
                "x3/sqrt(x1^2+x2^2+x3^2)",
            ],
        )
        .unwrap()
    }

    fn unit_sphere() -> Immersion {
        Immersion::parse(
            &["th", "ph"],
            &["sin(th)*cos(ph)", "sin(th)*sin(ph)", "cos(th)"],
            vec![(0.3, 2.8), (0.0, 6.0)],
        )
        .unwrap()
    }

    #[test]
    fn sphere_with_radial_axis_is_not_rectifying() {
        let tol = Tolerances::default();
        let e3 = AmbientMetric::euclidean(3);
        let p = frames(&unit_sphere(), &e3, Some(&radial3()), &[1.0, 2.0], &tol).unwrap();
        assert!((rectifying_residual_at(&p, &tol) - 1.0).abs() < 1e-12);
        let a = shape_of_normal_part(&p);
        assert!((a + DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!((check_avperp_zero(&p) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn offset_plane_is_trivially_rectifying() {
        let tol = Tolerances::default();
        let plane = Immersion::parse(&["u", "v"], &["u", "v", "1"], vec![(-1.0, 1.0); 2]).unwrap();
        let r = rectifying_residual(
            &plane,
            &AmbientMetric::euclidean(3),
            &radial3(),
            &[0.3, 0.2],
            &tol,
        )
        .unwrap();
        assert_eq!(r, 0.0);
        let us = vec![vec![0.3, 0.2], vec![-0.5, 0.1]];
        assert!(matches!(
            verify_tangential_vanishes(&plane, &AmbientMetric::euclidean(3), &radial3(), &us, &tol),
            Err(GeoError::Precondition { .. })
        ));
    }

    #[test]
    fn sphere_normal_axis_is_umbilic_and_parallel() {
        let tol = Tolerances::default();
        let us = vec![vec![0.7, 0.2], vec![1.9, 4.0]];
        let r = verify_tangential_vanishes(
            &unit_sphere(),
            &AmbientMetric::euclidean(3),
            &radial3(),
            &us,
            &tol,
        )
        .unwrap();
        assert!(r.max_tangential.value < 1e-14);
        assert!(r.normal_derivative.value < 1e-12);
        assert!(r.shape.value < 1e-12);
    }

    #[test]
    fn plane_through_origin_with_radial_axis() {
        let tol = Tolerances::default();
        let plane = Immersion::parse(&["u", "v"], &["u", "v", "0"], vec![(0.2, 1.0); 2]).unwrap();
        let us = vec![vec![0.3, 0.5], vec![0.9, 0.4]];
        let r = verify_normal_vanishes(&plane, &AmbientMetric::euclidean(3), &radial3(), &us, &tol)
            .unwrap();
        assert_eq!(r.det.value, 0.0);
        assert_eq!(r.h_tangent.value, 0.0);
        assert!(r.curvature.value < 1e-14 && r.sectional.value < 1e-14);
    }

    #[test]
    fn anti_torqued_axis_rejected_by_torqued_check() {
        let tol = Tolerances::default();
        let us = vec![vec![0.7, 0.2]];
        assert!(matches!(
            verify_torqued_props(
                &unit_sphere(),
                &AmbientMetric::euclidean(3),
                &radial3(),
                &us,
                Verdict::AntiTorqued,
                &tol
            ),
            Err(GeoError::Precondition { .. })
        ));
    }
}
