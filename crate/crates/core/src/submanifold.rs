//! Extrinsic geometry of an immersed submanifold `Ψ: U ⊂ R^n -> chart ⊂ R^m`.
//!
//! All quantities at a parameter point are gathered in a [`FramePacket`]:
//! orthonormal tangent and normal frames (ambient components), the second
//! fundamental form in those frames, and the induced metric with 2-jets.
//! Tangent vectors passed around as `DVector`s with `n` entries are in
//! parameter coordinates; `m` entries means ambient chart components.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::expr::{parse, Expr};
use crate::jet::{invert_jet_matrix, Jet};
use crate::linalg::{frobenius, orthonormal_frame, singular_values, Array3, Array4};
use crate::metric::{
    apply_riemann, christoffel, riemann_tensor, AmbientMetric, MetricAtPoint, VectorField,
};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct Immersion {
    vars: Vec<String>,
    components: Vec<Expr>,
    domain: Vec<(f64, f64)>,
}

impl Immersion {
    pub fn new(vars: Vec<String>, components: Vec<Expr>, domain: Vec<(f64, f64)>) -> Result<Self> {
        let n = vars.len();
        let m = components.len();
        if !(1 <= n && n < m) {
            return Err(GeoError::Schema {
                path: "submanifold".into(),
                detail: format!("need 1 <= n < m, got n = {n}, m = {m}"),
            });
        }
        if domain.len() != n {
            return Err(GeoError::DimensionMismatch {
                path: "submanifold.domain".into(),
                expected: n,
                found: domain.len(),
            });
        }
        for (i, (lo, hi)) in domain.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GeoError::Schema {
                    path: format!("submanifold.domain[{i}]"),
                    detail: format!("invalid interval [{lo}, {hi}]"),
                });
            }
        }
        for e in &components {
            if e.max_var_index().is_some_and(|k| k >= n) {
                return Err(GeoError::Schema {
                    path: "submanifold.immersion".into(),
                    detail: format!("`{e}` uses a variable outside the parameter domain"),
                });
            }
        }
        Ok(Self {
            vars,
            components,
            domain,
        })
    }

    pub fn parse<S: AsRef<str>, T: AsRef<str>>(
        vars: &[S],
        components: &[T],
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let parsed = components
            .iter()
            .map(|c| parse(c.as_ref(), vars))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            vars.iter().map(|v| v.as_ref().to_string()).collect(),
            parsed,
            domain,
        )
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(&self.domain)
            .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    /// Jets of the components `Ψ^a` in the parameters.
    pub fn jets(&self, u: &[f64], order: usize) -> Result<Vec<Jet>> {
        let inputs = Jet::variables(u, order);
        self.components
            .iter()
            .map(|e| e.eval_jets(&inputs, u.len(), order))
            .collect()
    }

    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jets(u, 0)?.iter().map(Jet::value).collect())
    }
}

/// Tangential/normal split of an ambient vector at a submanifold point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSplit {
    pub v: DVector<f64>,
    pub tangential: DVector<f64>,
    pub normal: DVector<f64>,
    pub tangential_norm: f64,
    pub normal_norm: f64,
}

/// Span of the values of the second fundamental form at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstNormalSpace {
    /// Orthonormal normal vectors (ambient components).
    pub basis: Vec<DVector<f64>>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FramePacket {
    pub u: Vec<f64>,
    pub point: Vec<f64>,
    /// Ambient metric at `Ψ(u)` with 2-jets.
    pub ambient: MetricAtPoint,
    pub ambient_christoffel: Array3,
    /// Columns `∂Ψ/∂u^i`.
    pub coord_tangents: DMatrix<f64>,
    /// Induced metric in the coordinate basis, with 2-jets in `u`.
    pub induced: MetricAtPoint,
    /// Orthonormal tangent frame `e_1..e_n` as columns.
    pub tangent: DMatrix<f64>,
    /// `tangent = coord_tangents * tangent_coeffs`.
    pub tangent_coeffs: DMatrix<f64>,
    /// Orthonormal normal frame `ξ_1..ξ_{m-n}` as columns.
    pub normal: DMatrix<f64>,
    /// `h[α][(p, q)] = g̃(h(e_p, e_q), ξ_α)`.
    pub h: Vec<DMatrix<f64>>,
    pub field: Option<FieldSplit>,
}

impl FramePacket {
    pub fn n(&self) -> usize {
        self.tangent.ncols()
    }

    pub fn m(&self) -> usize {
        self.tangent.nrows()
    }

    pub fn codim(&self) -> usize {
        self.normal.ncols()
    }

    pub fn tangent_vec(&self, p: usize) -> DVector<f64> {
        self.tangent.column(p).into_owned()
    }

    pub fn normal_vec(&self, a: usize) -> DVector<f64> {
        self.normal.column(a).into_owned()
    }

    /// Push a parameter-coordinate vector into the ambient chart.
    pub fn push_forward(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.coord_tangents * x
    }

    /// Parameter coordinates of the tangential part of an ambient vector.
    pub fn to_param(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.tangent_coeffs * self.tangent_components(w)
    }

    /// Components of an ambient vector in the orthonormal tangent frame.
    pub fn tangent_components(&self, w: &DVector<f64>) -> DVector<f64> {
        self.tangent.transpose() * (&self.ambient.g * w)
    }

    pub fn normal_components(&self, w: &DVector<f64>) -> DVector<f64> {
        self.normal.transpose() * (&self.ambient.g * w)
    }

    pub fn tangential_part(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.tangent * self.tangent_components(w)
    }

    pub fn normal_part(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.normal * self.normal_components(w)
    }

    /// `h(e_p, e_q)` as an ambient vector.
    pub fn h_vector(&self, p: usize, q: usize) -> DVector<f64> {
        let mut out = DVector::<f64>::zeros(self.m());
        for (a, ha) in self.h.iter().enumerate() {
            out.axpy(ha[(p, q)], &self.normal.column(a).into_owned(), 1.0);
        }
        out
    }

    /// `h(x, y)` for ambient tangent vectors.
    pub fn h_of(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let a = self.tangent_components(x);
        let b = self.tangent_components(y);
        let mut coeffs = DVector::<f64>::zeros(self.codim());
        for (al, ha) in self.h.iter().enumerate() {
            coeffs[al] = a.dot(&(ha * &b));
        }
        &self.normal * coeffs
    }

    /// Largest `|h(e_p, e_q)|` over the frame.
    pub fn h_max_norm(&self) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        for p in 0..n {
            for q in p..n {
                let s: f64 = self.h.iter().map(|ha| ha[(p, q)].powi(2)).sum();
                best = best.max(s.sqrt());
            }
        }
        best
    }

    pub fn h_asymmetry(&self) -> f64 {
        self.h
            .iter()
            .map(|ha| (ha - ha.transpose()).amax())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the combined frame from orthonormality.
    pub fn frame_defect(&self) -> f64 {
        let mut all = self
            .tangent
            .clone()
            .insert_columns(self.n(), self.codim(), 0.0);
        all.columns_mut(self.n(), self.codim())
            .copy_from(&self.normal);
        let gram = all.transpose() * &self.ambient.g * &all;
        (gram - DMatrix::identity(self.m(), self.m())).amax()
    }
}

/// Induced metric `g_ij = g̃(∂_iΨ, ∂_jΨ)` with 2-jets in the parameters.
pub fn induced_metric(
    imm: &Immersion,
    ambient: &AmbientMetric,
    u: &[f64],
    tol: &Tolerances,
) -> Result<MetricAtPoint> {
    let psi = imm.jets(u, 3)?;
    let x: Vec<f64> = psi.iter().map(Jet::value).collect();
    let amb = ambient.at(&x, 1, tol)?;
    let t = coord_tangents(&psi, imm.n());
    check_rank(&amb, &t, tol)?;
    induced_from_jets(ambient, &psi, u, tol)
}

fn coord_tangents(psi: &[Jet], n: usize) -> DMatrix<f64> {
    let m = psi.len();
    DMatrix::from_fn(m, n, |a, i| psi[a].d1(i))
}

fn check_rank(amb: &MetricAtPoint, t: &DMatrix<f64>, tol: &Tolerances) -> Result<()> {
    // |T c|_g = |L^T T c| with g = L L^T
    let lt = amb.cholesky_factor().transpose() * t;
    let s = singular_values(&lt);
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    let bound = tol.rank_tol * max;
    if !(min > bound) {
        return Err(GeoError::RankDeficient {
            sigma_min: min,
            tol: bound,
        });
    }
    Ok(())
}

fn induced_from_jets(
    ambient: &AmbientMetric,
    psi: &[Jet],
    u: &[f64],
    tol: &Tolerances,
) -> Result<MetricAtPoint> {
    let n = u.len();
    let m = psi.len();
    let psi2: Vec<Jet> = psi.iter().map(|j| j.truncate(2)).collect();
    let gt = ambient.compose(&psi2)?;
    let dpsi: Vec<Vec<Jet>> = psi
        .iter()
        .map(|j| (0..n).map(|i| j.derivative(i).truncate(2)).collect())
        .collect();
    // G ∂_j Ψ, reused for every i
    let mut g_dpsi: Vec<Vec<Jet>> = vec![Vec::with_capacity(n); m];
    for a in 0..m {
        for j in 0..n {
            let mut s = Jet::constant(0.0, n, 2);
            for b in 0..m {
                s = &s + &(&gt[a][b] * &dpsi[b][j]);
            }
            g_dpsi[a].push(s);
        }
    }
    let mut g: Vec<Vec<Jet>> = vec![vec![Jet::constant(0.0, n, 2); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut s = Jet::constant(0.0, n, 2);
            for a in 0..m {
                s = &s + &(&dpsi[a][i] * &g_dpsi[a][j]);
            }
            g[j][i] = s.clone();
            g[i][j] = s;
        }
    }
    MetricAtPoint::from_jets(u.to_vec(), &g, tol.spd_tol)
}

/// Frames, second fundamental form and (optionally) the split of `field`
/// at the parameter point `u`.
pub fn frames(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: Option<&VectorField>,
    u: &[f64],
    tol: &Tolerances,
) -> Result<FramePacket> {
    let n = imm.n();
    let m = imm.m();
    if ambient.dim() != m {
        return Err(GeoError::DimensionMismatch {
            path: "submanifold.immersion".into(),
            expected: ambient.dim(),
            found: m,
        });
    }
    let psi = imm.jets(u, 3)?;
    let x: Vec<f64> = psi.iter().map(Jet::value).collect();
    let amb = ambient.at(&x, 2, tol)?;
    let t = coord_tangents(&psi, n);
    check_rank(&amb, &t, tol)?;
    let induced = induced_from_jets(ambient, &psi, u, tol)?;

    let seeds: Vec<DVector<f64>> = (0..n).map(|i| t.column(i).into_owned()).collect();
    let (tan, nor) = orthonormal_frame(&amb.g, &seeds);
    let tangent = DMatrix::from_columns(&tan);
    let normal = DMatrix::from_columns(&nor);
    let tangent_coeffs = induced.inverse() * (t.transpose() * &amb.g * &tangent);

    let gamma = christoffel(&amb);
    // ∇̃_{∂_i} ∂_j Ψ = ∂_i ∂_j Ψ + Γ̃(∂_iΨ, ∂_jΨ), projected on each ξ_α
    let mut h_coord = vec![DMatrix::<f64>::zeros(n, n); m - n];
    for i in 0..n {
        for j in i..n {
            let mut acc = DVector::<f64>::zeros(m);
            for k in 0..m {
                let mut v = psi[k].d2(i, j);
                for a in 0..m {
                    for b in 0..m {
                        v += gamma.get(k, a, b) * t[(a, i)] * t[(b, j)];
                    }
                }
                acc[k] = v;
            }
            let comps = normal.transpose() * (&amb.g * &acc);
            for (al, h) in h_coord.iter_mut().enumerate() {
                h[(i, j)] = comps[al];
                h[(j, i)] = comps[al];
            }
        }
    }
    let h = h_coord
        .iter()
        .map(|hc| tangent_coeffs.transpose() * hc * &tangent_coeffs)
        .map(|hm| (&hm + hm.transpose()) * 0.5)
        .collect();

    let mut packet = FramePacket {
        u: u.to_vec(),
        point: x,
        ambient: amb,
        ambient_christoffel: gamma,
        coord_tangents: t,
        induced,
        tangent,
        tangent_coeffs,
        normal,
        h,
        field: None,
    };
    if let Some(f) = field {
        let v = f.value(&packet.point)?;
        packet.field = Some(decompose_field(&packet, &v));
    }
    Ok(packet)
}

/// Second fundamental form components and the first normal space.
pub fn second_fundamental_form(
    imm: &Immersion,
    ambient: &AmbientMetric,
    u: &[f64],
    tol: &Tolerances,
) -> Result<(Vec<DMatrix<f64>>, FirstNormalSpace)> {
    let p = frames(imm, ambient, None, u, tol)?;
    let fns = first_normal_space(&p, tol);
    Ok((p.h, fns))
}

/// Rank and basis of `Span{h(X, Y)}` from the SVD of the
/// `n(n+1)/2 × (m-n)` matrix of h-components.
pub fn first_normal_space(packet: &FramePacket, tol: &Tolerances) -> FirstNormalSpace {
    let n = packet.n();
    let c = packet.codim();
    let rows: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
    let k = DMatrix::from_fn(rows.len(), c, |r, a| packet.h[a][rows[r]]);
    if c == 0 {
        return FirstNormalSpace {
            basis: Vec::new(),
            rank: 0,
            singular_values: Vec::new(),
        };
    }
    let svd = k.clone().svd(false, true);
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let v_t = svd.v_t.as_ref().expect("requested V^T");
            (*s, v_t.row(i).transpose().into_owned())
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let smax = pairs.first().map(|p| p.0).unwrap_or(0.0);
    let cutoff = (tol.svd_rank_tol * smax).max(tol.totally_geodesic_tol);
    let rank = pairs.iter().filter(|(s, _)| *s > cutoff).count();
    let basis = pairs
        .iter()
        .take(rank)
        .map(|(_, v)| &packet.normal * v)
        .collect();
    FirstNormalSpace {
        basis,
        rank,
        singular_values: pairs.iter().map(|p| p.0).collect(),
    }
}

/// `A_ξ` in the orthonormal tangent frame: `g(A_ξ e_p, e_q) = g̃(h(e_p, e_q), ξ)`.
pub fn shape_operator(
    packet: &FramePacket,
    xi: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let tangential = packet.tangent_components(xi).norm();
    if tangential > tol.frame_tol * packet.ambient.norm(xi).max(1.0) {
        return Err(GeoError::NotNormal { tangential });
    }
    let c = packet.normal_components(xi);
    let n = packet.n();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (al, ha) in packet.h.iter().enumerate() {
        a += ha * c[al];
    }
    Ok(a)
}

/// `H = (1/n) Σ h(e_i, e_i)` as an ambient vector.
pub fn mean_curvature(packet: &FramePacket) -> DVector<f64> {
    let n = packet.n();
    let mut h = DVector::<f64>::zeros(packet.m());
    for p in 0..n {
        h += packet.h_vector(p, p);
    }
    h / n as f64
}

pub fn decompose_field(packet: &FramePacket, v: &DVector<f64>) -> FieldSplit {
    let tangential = packet.tangential_part(v);
    let normal = v - &tangential;
    FieldSplit {
        v: v.clone(),
        tangential_norm: packet.ambient.norm(&tangential),
        normal_norm: packet.ambient.norm(&normal),
        tangential,
        normal,
    }
}

/// Both curvature tensors needed to compare the two sides of the Gauss equation.
pub struct CurvaturePair {
    pub intrinsic: Array4,
    pub ambient: Array4,
}

pub fn curvature_pair(packet: &FramePacket) -> Result<CurvaturePair> {
    Ok(CurvaturePair {
        intrinsic: riemann_tensor(&packet.induced)?,
        ambient: riemann_tensor(&packet.ambient)?,
    })
}

/// `|g(R(X,Y)Z,W) - g̃(R̃(X,Y)Z,W) - g̃(h(X,W),h(Y,Z)) + g̃(h(X,Z),h(Y,W))|`
/// for parameter-coordinate tangent vectors.
pub fn gauss_equation_residual(
    packet: &FramePacket,
    curv: &CurvaturePair,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
    w: &DVector<f64>,
) -> f64 {
    let lhs = packet
        .induced
        .inner(&apply_riemann(&curv.intrinsic, x, y, z), w);
    let (xa, ya, za, wa) = (
        packet.push_forward(x),
        packet.push_forward(y),
        packet.push_forward(z),
        packet.push_forward(w),
    );
    let amb = &packet.ambient;
    let rhs = amb.inner(&apply_riemann(&curv.ambient, &xa, &ya, &za), &wa)
        + amb.inner(&packet.h_of(&xa, &wa), &packet.h_of(&ya, &za))
        - amb.inner(&packet.h_of(&xa, &za), &packet.h_of(&ya, &wa));
    (lhs - rhs).abs()
}

/// Largest Gauss-equation residual over all quadruples of orthonormal frame vectors.
pub fn gauss_residual_frame(packet: &FramePacket) -> Result<f64> {
    let curv = curvature_pair(packet)?;
    let n = packet.n();
    let cols: Vec<DVector<f64>> = (0..n)
        .map(|p| packet.tangent_coeffs.column(p).into_owned())
        .collect();
    let mut worst = 0.0f64;
    for x in &cols {
        for y in &cols {
            for z in &cols {
                for w in &cols {
                    worst = worst.max(gauss_equation_residual(packet, &curv, x, y, z, w));
                }
            }
        }
    }
    Ok(worst)
}

/// `V`, `V^T` and `V^⊥` along the immersion as first-order jets in the
/// parameters, so they can be differentiated along `M`.
///
/// `V^T = T g^{-1} T^t g̃ V` with `T = ∂Ψ`, evaluated entirely in jet
/// arithmetic.
#[derive(Debug, Clone)]
pub struct FieldAlong {
    pub full: Vec<Jet>,
    pub tangential: Vec<Jet>,
    pub normal: Vec<Jet>,
}

pub fn field_along(
    imm: &Immersion,
    ambient: &AmbientMetric,
    field: &VectorField,
    u: &[f64],
) -> Result<FieldAlong> {
    let n = imm.n();
    let m = imm.m();
    let psi = imm.jets(u, 2)?;
    let psi1: Vec<Jet> = psi.iter().map(|j| j.truncate(1)).collect();
    let t: Vec<Vec<Jet>> = psi
        .iter()
        .map(|j| (0..n).map(|i| j.derivative(i)).collect())
        .collect();
    let gt = ambient.compose(&psi1)?;
    let v = field.compose(&psi1)?;
    let zero = || Jet::constant(0.0, n, 1);
    // G T and G V
    let gv: Vec<Jet> = (0..m)
        .map(|a| (0..m).fold(zero(), |s, b| &s + &(&gt[a][b] * &v[b])))
        .collect();
    let gt_t: Vec<Vec<Jet>> = (0..m)
        .map(|a| {
            (0..n)
                .map(|j| (0..m).fold(zero(), |s, b| &s + &(&gt[a][b] * &t[b][j])))
                .collect()
        })
        .collect();
    let g: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..m).fold(zero(), |s, a| &s + &(&t[a][i] * &gt_t[a][j])))
                .collect()
        })
        .collect();
    let b: Vec<Jet> = (0..n)
        .map(|i| (0..m).fold(zero(), |s, a| &s + &(&t[a][i] * &gv[a])))
        .collect();
    let ginv = invert_jet_matrix(&g).ok_or(GeoError::RankDeficient {
        sigma_min: 0.0,
        tol: 0.0,
    })?;
    let c: Vec<Jet> = (0..n)
        .map(|i| (0..n).fold(zero(), |s, j| &s + &(&ginv[i][j] * &b[j])))
        .collect();
    let tangential: Vec<Jet> = (0..m)
        .map(|a| (0..n).fold(zero(), |s, i| &s + &(&t[a][i] * &c[i])))
        .collect();
    let normal: Vec<Jet> = v.iter().zip(&tangential).map(|(x, y)| x - y).collect();
    Ok(FieldAlong {
        full: v,
        tangential,
        normal,
    })
}

/// `∇̃_X W` for a field `W` along the immersion given as first-order jets,
/// with `X` in parameter coordinates.
pub fn derivative_along(packet: &FramePacket, w: &[Jet], x: &DVector<f64>) -> DVector<f64> {
    let m = packet.m();
    let n = packet.n();
    let xa = packet.push_forward(x);
    let gamma = &packet.ambient_christoffel;
    DVector::from_fn(m, |k, _| {
        let mut s: f64 = (0..n).map(|i| x[i] * w[k].d1(i)).sum();
        for a in 0..m {
            for b in 0..m {
                s += gamma.get(k, a, b) * xa[a] * w[b].value();
            }
        }
        s
    })
}

/// Values of a jet field as a vector.
pub fn jet_values(w: &[Jet]) -> DVector<f64> {
    DVector::from_iterator(w.len(), w.iter().map(Jet::value))
}

/// Frobenius norm helper re-exported for callers comparing matrices.
pub fn matrix_norm(a: &DMatrix<f64>) -> f64 {
    frobenius(a)
}
