//! Every numeric threshold the toolkit uses, in one record.
//!
//! Scenes may override any field by name (see [`Tolerances::set`]). Values
//! are absolute unless the field doc says otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Smallest admissible Cholesky pivot of a metric.
    pub spd_tol: f64,
    /// Plane sections with `|u|^2|v|^2 - <u,v>^2 <= degeneracy_tol * |u|^2|v|^2` are rejected.
    pub degeneracy_tol: f64,
    /// Orthonormality of frames and normality of shape-operator arguments.
    pub frame_tol: f64,
    /// Symmetry of the second fundamental form.
    pub h_symmetry_tol: f64,
    /// Immersion regularity, relative to the largest singular value of the Jacobian.
    pub rank_tol: f64,
    /// First-normal-space rank, relative to the largest singular value of the h-matrix.
    pub svd_rank_tol: f64,
    /// Entries of h below this are treated as zero (totally geodesic detector).
    pub totally_geodesic_tol: f64,
    /// Points where the attached field is shorter than this are excluded.
    pub zero_field_tol: f64,

    pub class_tol: f64,
    /// Frobenius bound on the covariant derivative for a parallel verdict.
    pub parallel_tol: f64,
    pub class_min_points: usize,
    pub unit_tol: f64,
    pub geodesic_tol: f64,

    pub proper_tol: f64,
    pub rect_tol: f64,
    pub avperp_tol: f64,
    /// Precondition bound for "V is normal" (`|V^T|`) and "V is tangent" (`|V^perp|`).
    pub vanish_tol: f64,
    /// Normal-connection derivative `|D_X V^perp|`.
    pub normal_parallel_tol: f64,
    /// `|A_{V^perp} + f Id|`.
    pub umbilic_tol: f64,
    pub det_tol: f64,
    pub h_tangent_tol: f64,
    pub curvature_match_tol: f64,
    pub gauss_tol: f64,
    pub concircular_fit_tol: f64,

    pub ode_tol: f64,
    pub warp_tol: f64,
    pub decomposition_geodesic_tol: f64,
    pub decomposition_tol: f64,
    /// Agreement of the fitted conformal scalar with `d log(lambda)/ds`.
    pub warp_f_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spd_tol: 1e-12,
            degeneracy_tol: 1e-10,
            frame_tol: 1e-10,
            h_symmetry_tol: 1e-9,
            rank_tol: 1e-10,
            svd_rank_tol: 1e-8,
            totally_geodesic_tol: 1e-9,
            zero_field_tol: 1e-12,

            class_tol: 1e-7,
            parallel_tol: 1e-9,
            class_min_points: 50,
            unit_tol: 1e-8,
            geodesic_tol: 1e-8,

            proper_tol: 1e-8,
            rect_tol: 1e-7,
            avperp_tol: 1e-8,
            vanish_tol: 1e-8,
            normal_parallel_tol: 1e-8,
            umbilic_tol: 1e-7,
            det_tol: 1e-8,
            h_tangent_tol: 1e-8,
            curvature_match_tol: 1e-7,
            gauss_tol: 1e-7,
            concircular_fit_tol: 1e-7,

            ode_tol: 1e-6,
            warp_tol: 1e-6,
            decomposition_geodesic_tol: 1e-8,
            decomposition_tol: 1e-7,
            warp_f_tol: 1e-8,
        }
    }
}

impl Tolerances {
    /// Override a single field by its name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(GeoError::Schema {
                path: format!("tolerances.{name}"),
                detail: format!("must be a finite non-negative number, got {value}"),
            });
        }
        let slot = match name {
            "spd_tol" => &mut self.spd_tol,
            "degeneracy_tol" => &mut self.degeneracy_tol,
            "frame_tol" => &mut self.frame_tol,
            "h_symmetry_tol" => &mut self.h_symmetry_tol,
            "rank_tol" => &mut self.rank_tol,
            "svd_rank_tol" => &mut self.svd_rank_tol,
            "totally_geodesic_tol" => &mut self.totally_geodesic_tol,
            "zero_field_tol" => &mut self.zero_field_tol,
            "class_tol" => &mut self.class_tol,
            "parallel_tol" => &mut self.parallel_tol,
            "class_min_points" => {
                self.class_min_points = value as usize;
                return Ok(());
            }
            "unit_tol" => &mut self.unit_tol,
            "geodesic_tol" => &mut self.geodesic_tol,
            "proper_tol" => &mut self.proper_tol,
            "rect_tol" => &mut self.rect_tol,
            "avperp_tol" => &mut self.avperp_tol,
            "vanish_tol" => &mut self.vanish_tol,
            "normal_parallel_tol" => &mut self.normal_parallel_tol,
            "umbilic_tol" => &mut self.umbilic_tol,
            "det_tol" => &mut self.det_tol,
            "h_tangent_tol" => &mut self.h_tangent_tol,
            "curvature_match_tol" => &mut self.curvature_match_tol,
            "gauss_tol" => &mut self.gauss_tol,
            "concircular_fit_tol" => &mut self.concircular_fit_tol,
            "ode_tol" => &mut self.ode_tol,
            "warp_tol" => &mut self.warp_tol,
            "decomposition_geodesic_tol" => &mut self.decomposition_geodesic_tol,
            "decomposition_tol" => &mut self.decomposition_tol,
            "warp_f_tol" => &mut self.warp_f_tol,
            _ => {
                return Err(GeoError::Schema {
                    path: format!("tolerances.{name}"),
                    detail: "unknown tolerance".into(),
                })
            }
        };
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_by_name() {
        let mut t = Tolerances::default();
        t.set("rect_tol", 1e-5).unwrap();
        assert_eq!(t.rect_tol, 1e-5);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("rect_tol", -1.0).is_err());
    }
}
