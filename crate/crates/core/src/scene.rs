//! Scene documents (JSON) and the built-in examples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::Verdict;
use crate::error::{GeoError, Result};
use crate::expr::{default_vars, parse};
use crate::metric::{AmbientMetric, VectorField};
use crate::submanifold::Immersion;
use crate::tolerances::Tolerances;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Classify,
    GeodesicUnit,
    AmbientDecomposition,
    GaussEquation,
    Rectifying,
    TangentialTheorem,
    NormalTheorem,
    TorquedProps,
    WarpFit,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::Classify,
        CheckName::GeodesicUnit,
        CheckName::AmbientDecomposition,
        CheckName::GaussEquation,
        CheckName::Rectifying,
        CheckName::TangentialTheorem,
        CheckName::NormalTheorem,
        CheckName::TorquedProps,
        CheckName::WarpFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::Classify => "classify",
            CheckName::GeodesicUnit => "geodesic-unit",
            CheckName::AmbientDecomposition => "ambient-decomposition",
            CheckName::GaussEquation => "gauss-equation",
            CheckName::Rectifying => "rectifying",
            CheckName::TangentialTheorem => "tangential-theorem",
            CheckName::NormalTheorem => "normal-theorem",
            CheckName::TorquedProps => "torqued-props",
            CheckName::WarpFit => "warp-fit",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn needs_field(self) -> bool {
        self != CheckName::GaussEquation
    }

    pub fn needs_submanifold(self) -> bool {
        !matches!(
            self,
            CheckName::Classify | CheckName::GeodesicUnit | CheckName::AmbientDecomposition
        )
    }
}

impl std::fmt::Display for CheckName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientDoc {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    pub metric: Vec<Vec<String>>,
    pub domain: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmanifoldDoc {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    pub immersion: Vec<String>,
    pub domain: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

/// Scene document as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    pub name: String,
    pub ambient: AmbientDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submanifold: Option<SubmanifoldDoc>,
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveDoc>,
    /// Expected class of the field; `classify` fails on a different verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Verdict>,
}

#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub start: Vec<f64>,
    pub step: f64,
    pub length: f64,
}

/// Validated scene with parsed expressions.
#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub metric: AmbientMetric,
    pub ambient_domain: Vec<(f64, f64)>,
    pub exclude_radius: f64,
    pub field: Option<VectorField>,
    pub submanifold: Option<Immersion>,
    pub checks: Vec<CheckName>,
    pub seed: u64,
    pub points: Option<usize>,
    pub tolerances: Tolerances,
    pub curve: Option<CurveSpec>,
    pub expect: Option<Verdict>,
}

fn schema(path: impl Into<String>, detail: impl Into<String>) -> GeoError {
    GeoError::Schema {
        path: path.into(),
        detail: detail.into(),
    }
}

fn with_path(e: GeoError, path: &str) -> GeoError {
    match e {
        GeoError::Syntax { .. } | GeoError::UnknownIdentifier { .. } => schema(path, e.to_string()),
        other => other,
    }
}

fn check_len(path: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(GeoError::DimensionMismatch {
            path: path.into(),
            expected,
            found,
        });
    }
    Ok(())
}

fn domain(path: &str, d: &[[f64; 2]], dim: usize) -> Result<Vec<(f64, f64)>> {
    check_len(path, dim, d.len())?;
    d.iter()
        .enumerate()
        .map(|(i, [lo, hi])| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok((*lo, *hi))
            } else {
                Err(schema(
                    format!("{path}[{i}]"),
                    format!("invalid interval [{lo}, {hi}]"),
                ))
            }
        })
        .collect()
}

fn variables(
    path: &str,
    given: &Option<Vec<String>>,
    prefix: &str,
    dim: usize,
) -> Result<Vec<String>> {
    match given {
        Some(v) => {
            check_len(path, dim, v.len())?;
            Ok(v.clone())
        }
        None => Ok(default_vars(prefix, dim)),
    }
}

pub fn load_scene(text: &str) -> Result<Scene> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    scene_from_doc(&doc)
}

pub fn scene_from_doc(doc: &SceneDoc) -> Result<Scene> {
    let m = doc.ambient.dim;
    if m == 0 {
        return Err(schema("ambient.dim", "must be positive"));
    }
    let vars = variables("ambient.variables", &doc.ambient.variables, "x", m)?;
    check_len("ambient.metric", m, doc.ambient.metric.len())?;
    let mut entries = Vec::with_capacity(m);
    for (i, row) in doc.ambient.metric.iter().enumerate() {
        if row.len() != i + 1 && row.len() != m {
            return Err(GeoError::DimensionMismatch {
                path: format!("ambient.metric[{i}]"),
                expected: i + 1,
                found: row.len(),
            });
        }
        let parsed = row
            .iter()
            .enumerate()
            .map(|(j, s)| {
                parse(s, &vars).map_err(|e| with_path(e, &format!("ambient.metric[{i}][{j}]")))
            })
            .collect::<Result<Vec<_>>>()?;
        entries.push(parsed);
    }
    let metric = AmbientMetric::new(vars.clone(), entries)?;
    let ambient_domain = domain("ambient.domain", &doc.ambient.domain, m)?;
    let exclude_radius = doc.ambient.exclude_radius.unwrap_or(0.0);
    if !(exclude_radius >= 0.0 && exclude_radius.is_finite()) {
        return Err(schema(
            "ambient.exclude_radius",
            "must be a non-negative number",
        ));
    }

    let field = match &doc.field {
        Some(f) => {
            check_len("field", m, f.len())?;
            let comps = f
                .iter()
                .enumerate()
                .map(|(i, s)| parse(s, &vars).map_err(|e| with_path(e, &format!("field[{i}]"))))
                .collect::<Result<Vec<_>>>()?;
            Some(VectorField::new(comps))
        }
        None => None,
    };

    let submanifold = match &doc.submanifold {
        Some(sm) => {
            let n = sm.dim;
            if !(1 <= n && n < m) {
                return Err(schema(
                    "submanifold.dim",
                    format!("need 1 <= dim < {m}, got {n}"),
                ));
            }
            let uvars = variables("submanifold.variables", &sm.variables, "u", n)?;
            check_len("submanifold.immersion", m, sm.immersion.len())?;
            let comps = sm
                .immersion
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    parse(s, &uvars)
                        .map_err(|e| with_path(e, &format!("submanifold.immersion[{i}]")))
                })
                .collect::<Result<Vec<_>>>()?;
            let dom = domain("submanifold.domain", &sm.domain, n)?;
            Some(Immersion::new(uvars, comps, dom)?)
        }
        None => None,
    };

    if field.is_none() && submanifold.is_none() {
        return Err(schema("$", "scene needs a field, a submanifold, or both"));
    }

    let mut checks = Vec::with_capacity(doc.checks.len());
    for (i, c) in doc.checks.iter().enumerate() {
        let path = format!("checks[{i}]");
        let name =
            CheckName::from_name(c).ok_or_else(|| schema(&path, format!("unknown check `{c}`")))?;
        if name.needs_field() && field.is_none() {
            return Err(schema(&path, format!("`{c}` needs a field")));
        }
        if name.needs_submanifold() && submanifold.is_none() {
            return Err(schema(&path, format!("`{c}` needs a submanifold")));
        }
        if !checks.contains(&name) {
            checks.push(name);
        }
    }
    checks.sort();

    let mut tolerances = Tolerances::default();
    if let Some(t) = &doc.tolerances {
        for (k, v) in t {
            tolerances.set(k, *v).map_err(|e| match e {
                GeoError::Schema { detail, .. } => schema(format!("tolerances.{k}"), detail),
                other => other,
            })?;
        }
    }

    let curve = match (&doc.curve, &submanifold) {
        (Some(c), Some(sm)) => {
            let start = match &c.start {
                Some(s) => {
                    check_len("curve.start", sm.n(), s.len())?;
                    if !sm.contains(s) {
                        return Err(schema(
                            "curve.start",
                            "start lies outside the parameter domain",
                        ));
                    }
                    s.clone()
                }
                None => center(sm.domain()),
            };
            let step = c.step.unwrap_or(1e-2);
            if !(step > 0.0 && step.is_finite()) {
                return Err(schema("curve.step", "must be positive"));
            }
            let length = c.length.unwrap_or(100.0);
            if !(length > 0.0 && length.is_finite()) {
                return Err(schema("curve.length", "must be positive"));
            }
            Some(CurveSpec {
                start,
                step,
                length,
            })
        }
        (Some(_), None) => return Err(schema("curve", "needs a submanifold")),
        _ => None,
    };

    if let Some(p) = doc.points {
        if p == 0 {
            return Err(schema("points", "must be positive"));
        }
    }

    Ok(Scene {
        name: doc.name.clone(),
        metric,
        ambient_domain,
        exclude_radius,
        field,
        submanifold,
        checks,
        seed: doc.seed.unwrap_or(DEFAULT_SEED),
        points: doc.points,
        tolerances,
        curve,
        expect: doc.expect,
    })
}

pub fn center(domain: &[(f64, f64)]) -> Vec<f64> {
    domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
}

const BUILTINS: [(&str, &str); 11] = [
    ("radial-r4", include_str!("../scenes/radial-r4.json")),
    (
        "clifford-torus",
        include_str!("../scenes/clifford-torus.json"),
    ),
    (
        "tangent-developable",
        include_str!("../scenes/tangent-developable.json"),
    ),
    ("cone", include_str!("../scenes/cone.json")),
    (
        "rectifying-psi",
        include_str!("../scenes/rectifying-psi.json"),
    ),
    ("hypersphere", include_str!("../scenes/hypersphere.json")),
    ("unit-sphere", include_str!("../scenes/unit-sphere.json")),
    ("warped-exp", include_str!("../scenes/warped-exp.json")),
    ("warped-cosh", include_str!("../scenes/warped-cosh.json")),
    ("twisted-leaf", include_str!("../scenes/twisted-leaf.json")),
    (
        "twisted-fiber",
        include_str!("../scenes/twisted-fiber.json"),
    ),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<Scene> {
    let src = builtin_source(name).ok_or_else(|| {
        schema(
            "builtin",
            format!(
                "unknown scene `{name}`; available: {}",
                builtin_names().collect::<Vec<_>>().join(", ")
            ),
        )
    })?;
    load_scene(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_loads() {
        for name in builtin_names() {
            let s = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
            assert_eq!(s.seed, DEFAULT_SEED);
        }
    }

    #[test]
    fn radial_scene_shape() {
        let s = builtin("radial-r4").unwrap();
        assert_eq!(s.metric.dim(), 4);
        assert_eq!(s.field.as_ref().unwrap().dim(), 4);
        assert_eq!(s.exclude_radius, 0.1);
        let v = s.field.unwrap().value(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_field_and_submanifold() {
        let doc = r#"{"name":"x","ambient":{"dim":2,"metric":[["1"],["0","1"]],"domain":[[0,1],[0,1]]},"checks":[]}"#;
        assert!(matches!(load_scene(doc), Err(GeoError::Schema { .. })));
    }

    #[test]
    fn metric_dimension_mismatch() {
        let doc = r#"{"name":"x","ambient":{"dim":3,"metric":[["1"],["0","1"]],"domain":[[0,1],[0,1],[0,1]]},"field":["1","0","0"],"checks":[]}"#;
        match load_scene(doc) {
            Err(GeoError::DimensionMismatch {
                path,
                expected,
                found,
            }) => {
                assert_eq!((path.as_str(), expected, found), ("ambient.metric", 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_paths() {
        let doc = r#"{"name":"x","ambient":{"dim":1,"metric":[["1"]],"domain":[[0,1]]},"field":["y"],"checks":[]}"#;
        match load_scene(doc) {
            Err(GeoError::Schema { path, .. }) => assert_eq!(path, "field[0]"),
            other => panic!("unexpected {other:?}"),
        }
        let doc = r#"{"name":"x","ambient":{"dim":1,"metric":[["1"]],"domain":[[0,1]]},"field":["1"],"checks":["rectifying"]}"#;
        match load_scene(doc) {
            Err(GeoError::Schema { path, .. }) => assert_eq!(path, "checks[0]"),
            other => panic!("unexpected {other:?}"),
        }
        let doc = r#"{"name":"x","ambient":{"dim":1,"metric":[["1"]],"domain":[[0,1]]},"field":["1"],"checks":[],"tolerances":{"nope":1}}"#;
        match load_scene(doc) {
            Err(GeoError::Schema { path, .. }) => assert_eq!(path, "tolerances.nope"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_scene("{"), Err(GeoError::Schema { .. })));
    }

    #[test]
    fn checks_are_ordered_by_dependency() {
        let doc = r#"{"name":"x","ambient":{"dim":1,"metric":[["1"]],"domain":[[0,1]]},"field":["1"],"checks":["geodesic-unit","classify","classify"]}"#;
        let s = load_scene(doc).unwrap();
        assert_eq!(s.checks, vec![CheckName::Classify, CheckName::GeodesicUnit]);
    }
}
