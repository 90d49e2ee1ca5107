//! Intrinsic tensor calculus of a metric given in one coordinate chart.
//!
//! Index conventions: `christoffel[(k, i, j)] = Γ^k_{ij}` and
//! `riemann[(l, k, i, j)] = R^l_{kij}`, so that
//! `R(∂_i, ∂_j) ∂_k = R^l_{kij} ∂_l` with
//! `R(X, Y) Z = ∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::expr::{default_vars, parse, Expr};
use crate::jet::Jet;
use crate::linalg::{cholesky, cholesky_inverse, inner, Array3, Array4};
use crate::tolerances::Tolerances;

/// Metric components and their first (and optionally second) partial
/// derivatives at one chart point.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    /// `dg[(k, i, j)] = ∂_k g_ij`
    pub dg: Array3,
    /// `d2g[(l, k, i, j)] = ∂_l ∂_k g_ij`
    pub d2g: Option<Array4>,
    chol: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl MetricAtPoint {
    /// Build from a symmetric matrix of jets (order 1 or higher).
    pub fn from_jets(point: Vec<f64>, jets: &[Vec<Jet>], spd_tol: f64) -> Result<Self> {
        let m = jets.len();
        let order = jets.iter().flatten().map(Jet::order).min().unwrap_or(0);
        if order < 1 {
            return Err(GeoError::OrderInsufficient {
                needed: 1,
                have: order,
            });
        }
        let nv = jets[0][0].nvars();
        assert_eq!(nv, m, "metric jets must be taken in the chart variables");
        let mut g = DMatrix::<f64>::zeros(m, m);
        let mut dg = Array3::zeros(m);
        let mut d2g = (order >= 2).then(|| Array4::zeros(m));
        for i in 0..m {
            for j in 0..m {
                // symmetrize explicitly so round-off never breaks symmetry
                let (a, b) = (&jets[i][j], &jets[j][i]);
                g[(i, j)] = 0.5 * (a.value() + b.value());
                for k in 0..m {
                    dg.set(k, i, j, 0.5 * (a.d1(k) + b.d1(k)));
                    if let Some(d2) = d2g.as_mut() {
                        for l in 0..m {
                            let v = 0.25 * (a.d2(l, k) + a.d2(k, l) + b.d2(l, k) + b.d2(k, l));
                            d2.set(l, k, i, j, v);
                        }
                    }
                }
            }
        }
        let chol = cholesky(&g, spd_tol)?;
        let inverse = cholesky_inverse(&chol);
        Ok(Self {
            point,
            g,
            dg,
            d2g,
            chol,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        inner(&self.g, a, b)
    }

    pub fn norm(&self, a: &DVector<f64>) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Index lowering: the covector `g(v, ·)`.
    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.g * v
    }

    /// Index raising of a covector.
    pub fn raise(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.inverse * w
    }
}

/// Field value and optional Jacobian `jacobian[(i, j)] = ∂_j V^i` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAtPoint {
    pub components: DVector<f64>,
    pub jacobian: Option<DMatrix<f64>>,
}

impl VectorAtPoint {
    pub fn constant(components: DVector<f64>) -> Self {
        let m = components.len();
        Self {
            components,
            jacobian: Some(DMatrix::zeros(m, m)),
        }
    }
}

/// Γ^k_ij = ½ g^{kl} (∂_i g_lj + ∂_j g_li - ∂_l g_ij)
pub fn christoffel(metric: &MetricAtPoint) -> Array3 {
    let m = metric.dim();
    let ginv = metric.inverse();
    let dg = &metric.dg;
    let mut first = Array3::zeros(m); // Γ_{l i j}
    for l in 0..m {
        for i in 0..m {
            for j in i..m {
                let v = 0.5 * (dg.get(i, l, j) + dg.get(j, l, i) - dg.get(l, i, j));
                first.set(l, i, j, v);
                first.set(l, j, i, v);
            }
        }
    }
    let mut gamma = Array3::zeros(m);
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let v: f64 = (0..m).map(|l| ginv[(k, l)] * first.get(l, i, j)).sum();
                gamma.set(k, i, j, v);
                gamma.set(k, j, i, v);
            }
        }
    }
    gamma
}

/// `dgamma[(p, k, i, j)] = ∂_p Γ^k_ij`; needs second metric derivatives.
pub fn christoffel_derivative(metric: &MetricAtPoint, gamma: &Array3) -> Result<Array4> {
    let d2g = metric
        .d2g
        .as_ref()
        .ok_or(GeoError::OrderInsufficient { needed: 2, have: 1 })?;
    let m = metric.dim();
    let ginv = metric.inverse();
    let dg = &metric.dg;
    let mut out = Array4::zeros(m);
    for p in 0..m {
        for i in 0..m {
            for j in i..m {
                // ∂_p Γ_{l i j}
                let dfirst: Vec<f64> = (0..m)
                    .map(|l| {
                        0.5 * (d2g.get(p, i, l, j) + d2g.get(p, j, l, i) - d2g.get(p, l, i, j))
                    })
                    .collect();
                for k in 0..m {
                    // ∂_p g^{kl} Γ_{lij} = -g^{ka} ∂_p g_{ab} Γ^b_{ij}
                    let mut v = 0.0;
                    for a in 0..m {
                        let mut s = 0.0;
                        for b in 0..m {
                            s += dg.get(p, a, b) * gamma.get(b, i, j);
                        }
                        v -= ginv[(k, a)] * s;
                        v += ginv[(k, a)] * dfirst[a];
                    }
                    out.set(p, k, i, j, v);
                    out.set(p, k, j, i, v);
                }
            }
        }
    }
    Ok(out)
}

/// `R^l_{kij} = ∂_i Γ^l_jk - ∂_j Γ^l_ik + Γ^l_ip Γ^p_jk - Γ^l_jp Γ^p_ik`
pub fn riemann_tensor(metric: &MetricAtPoint) -> Result<Array4> {
    let m = metric.dim();
    let gamma = christoffel(metric);
    let dgamma = christoffel_derivative(metric, &gamma)?;
    let mut r = Array4::zeros(m);
    for l in 0..m {
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let mut v = dgamma.get(i, l, j, k) - dgamma.get(j, l, i, k);
                    for p in 0..m {
                        v += gamma.get(l, i, p) * gamma.get(p, j, k)
                            - gamma.get(l, j, p) * gamma.get(p, i, k);
                    }
                    r.set(l, k, i, j, v);
                }
            }
        }
    }
    Ok(r)
}

/// Apply a precomputed Riemann tensor: `R(x, y) z`.
pub fn apply_riemann(
    r: &Array4,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> DVector<f64> {
    let m = r.dim();
    let mut out = DVector::<f64>::zeros(m);
    for l in 0..m {
        let mut s = 0.0;
        for k in 0..m {
            if z[k] == 0.0 {
                continue;
            }
            for i in 0..m {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..m {
                    s += r.get(l, k, i, j) * z[k] * x[i] * y[j];
                }
            }
        }
        out[l] = s;
    }
    out
}

/// `R(x, y) z` at the point of `metric`.
pub fn riemann(
    metric: &MetricAtPoint,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(apply_riemann(&riemann_tensor(metric)?, x, y, z))
}

/// Sectional curvature of the plane spanned by `u` and `v`, using a
/// precomputed Riemann tensor.
pub fn sectional_from_tensor(
    metric: &MetricAtPoint,
    r: &Array4,
    u: &DVector<f64>,
    v: &DVector<f64>,
    degeneracy_tol: f64,
) -> Result<f64> {
    let uu = metric.inner(u, u);
    let vv = metric.inner(v, v);
    let uv = metric.inner(u, v);
    let denom = uu * vv - uv * uv;
    let tol = degeneracy_tol * uu * vv;
    if !(denom > tol) {
        return Err(GeoError::DegeneratePlane { denom, tol });
    }
    let ruvv = apply_riemann(r, u, v, v);
    Ok(metric.inner(&ruvv, u) / denom)
}

pub fn sectional_curvature(
    metric: &MetricAtPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    degeneracy_tol: f64,
) -> Result<f64> {
    let r = riemann_tensor(metric)?;
    sectional_from_tensor(metric, &r, u, v, degeneracy_tol)
}

/// `(∇_X V)^k = X^i ∂_i V^k + Γ^k_ij X^i V^j`
pub fn covariant_derivative(
    gamma: &Array3,
    v: &VectorAtPoint,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let jac = v.jacobian.as_ref().ok_or_else(|| GeoError::Precondition {
        check: "covariant_derivative".into(),
        detail: "field Jacobian is not available".into(),
    })?;
    let m = gamma.dim();
    let mut out = jac * x;
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                out[k] += gamma.get(k, i, j) * x[i] * v.components[j];
            }
        }
    }
    Ok(out)
}

/// Matrix whose column `i` is `∇_{∂_i} V`.
pub fn covariant_jacobian(gamma: &Array3, v: &VectorAtPoint) -> Result<DMatrix<f64>> {
    let m = gamma.dim();
    let mut out = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let mut e = DVector::<f64>::zeros(m);
        e[i] = 1.0;
        out.set_column(i, &covariant_derivative(gamma, v, &e)?);
    }
    Ok(out)
}

/// Metric of the ambient chart as expressions in the chart variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientMetric {
    vars: Vec<String>,
    entries: Vec<Vec<Expr>>,
}

impl AmbientMetric {
    /// `entries` must be square; only the lower triangle is read and mirrored.
    pub fn new(vars: Vec<String>, entries: Vec<Vec<Expr>>) -> Result<Self> {
        let m = vars.len();
        if entries.len() != m {
            return Err(GeoError::DimensionMismatch {
                path: "ambient.metric".into(),
                expected: m,
                found: entries.len(),
            });
        }
        let mut full = Vec::with_capacity(m);
        for i in 0..m {
            if entries[i].len() != m && entries[i].len() != i + 1 {
                return Err(GeoError::DimensionMismatch {
                    path: format!("ambient.metric[{i}]"),
                    expected: m,
                    found: entries[i].len(),
                });
            }
            let row: Vec<Expr> = (0..m)
                .map(|j| {
                    if j <= i {
                        entries[i][j].clone()
                    } else {
                        entries[j][i].clone()
                    }
                })
                .collect();
            full.push(row);
        }
        for row in &full {
            for e in row {
                if e.max_var_index().is_some_and(|k| k >= m) {
                    return Err(GeoError::Schema {
                        path: "ambient.metric".into(),
                        detail: format!("`{e}` uses a variable outside the chart"),
                    });
                }
            }
        }
        Ok(Self {
            vars,
            entries: full,
        })
    }

    pub fn euclidean(m: usize) -> Self {
        let vars = default_vars("x", m);
        let entries = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| Expr::Num(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        Self { vars, entries }
    }

    /// Parse from string entries.
    pub fn parse<S: AsRef<str>, T: AsRef<str>>(vars: &[S], entries: &[Vec<T>]) -> Result<Self> {
        let names: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let parsed = entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse(s.as_ref(), vars))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(names, parsed)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    /// Metric data at `point`, with jets of the given order (1 or 2).
    pub fn at(&self, point: &[f64], order: usize, tol: &Tolerances) -> Result<MetricAtPoint> {
        let inputs = Jet::variables(point, order);
        let jets = self.compose(&inputs)?;
        MetricAtPoint::from_jets(point.to_vec(), &jets, tol.spd_tol)
    }

    /// Metric entries evaluated on arbitrary input jets (e.g. an immersion).
    pub fn compose(&self, inputs: &[Jet]) -> Result<Vec<Vec<Jet>>> {
        let m = self.dim();
        let (nv, ord) = (inputs[0].nvars(), inputs[0].order());
        let mut out: Vec<Vec<Option<Jet>>> = vec![vec![None; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let v = self.entries[i][j].eval_jets(inputs, nv, ord)?;
                out[j][i] = Some(v.clone());
                out[i][j] = Some(v);
            }
        }
        Ok(out
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.expect("filled")).collect())
            .collect())
    }
}

/// Vector field on the ambient chart.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> Self {
        Self { components }
    }

    pub fn parse<S: AsRef<str>, T: AsRef<str>>(vars: &[S], components: &[T]) -> Result<Self> {
        let c = components
            .iter()
            .map(|s| parse(s.as_ref(), vars))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(c))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn at(&self, point: &[f64]) -> Result<VectorAtPoint> {
        let inputs = Jet::variables(point, 1);
        let jets = self.compose(&inputs)?;
        let m = jets.len();
        let mut comps = DVector::<f64>::zeros(m);
        let mut jac = DMatrix::<f64>::zeros(m, point.len());
        for (i, j) in jets.iter().enumerate() {
            comps[i] = j.value();
            for k in 0..point.len() {
                jac[(i, k)] = j.d1(k);
            }
        }
        Ok(VectorAtPoint {
            components: comps,
            jacobian: Some(jac),
        })
    }

    pub fn value(&self, point: &[f64]) -> Result<DVector<f64>> {
        let inputs = Jet::variables(point, 0);
        let jets = self.compose(&inputs)?;
        Ok(DVector::from_iterator(
            jets.len(),
            jets.iter().map(Jet::value),
        ))
    }

    pub fn compose(&self, inputs: &[Jet]) -> Result<Vec<Jet>> {
        let (nv, ord) = (inputs[0].nvars(), inputs[0].order());
        self.components
            .iter()
            .map(|e| e.eval_jets(inputs, nv, ord))
            .collect()
    }
}

/// `∇_X V` for fields given as expressions.
pub fn covariant_derivative_at(
    metric: &AmbientMetric,
    field: &VectorField,
    point: &[f64],
    x: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let mp = metric.at(point, 1, tol)?;
    let gamma = christoffel(&mp);
    covariant_derivative(&gamma, &field.at(point)?, x)
}
