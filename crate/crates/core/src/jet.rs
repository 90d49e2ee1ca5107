//! Truncated multivariate Taylor jets up to third order.
//!
//! A [`Jet`] stores the value of a scalar function together with all of its
//! partial derivatives up to `order` at one point. Derivatives are kept as
//! full (symmetric) tensors: `d2[i*n + j] = d_i d_j f`, `d3[(i*n + j)*n + k]`.
//! Arithmetic follows the Leibniz rule and univariate composition follows
//! Faa di Bruno, both truncated at the stored order, so results are exact up
//! to round-off.
//!
//! [`Jet::coeff`] converts to Taylor coefficients (derivative divided by the
//! multi-index factorial).

use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    nvars: usize,
    order: usize,
    value: f64,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, nvars: usize, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} > {MAX_ORDER}");
        let n = nvars;
        Self {
            nvars,
            order,
            value,
            d1: if order >= 1 { vec![0.0; n] } else { Vec::new() },
            d2: if order >= 2 {
                vec![0.0; n * n]
            } else {
                Vec::new()
            },
            d3: if order >= 3 {
                vec![0.0; n * n * n]
            } else {
                Vec::new()
            },
        }
    }

    /// The coordinate function `x_index` expanded at `value`.
    pub fn variable(value: f64, index: usize, nvars: usize, order: usize) -> Self {
        assert!(index < nvars);
        let mut j = Self::constant(value, nvars, order);
        if order >= 1 {
            j.d1[index] = 1.0;
        }
        j
    }

    /// One variable jet per coordinate of `point`.
    pub fn variables(point: &[f64], order: usize) -> Vec<Self> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Self::variable(x, i, n, order))
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn d1(&self, i: usize) -> f64 {
        self.d1[i]
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.d2[i * self.nvars + j]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.nvars;
        self.d3[(i * n + j) * n + k]
    }

    pub fn gradient(&self) -> &[f64] {
        &self.d1
    }

    /// Partial derivative along the listed variables (`[]` is the value).
    pub fn partial(&self, vars: &[usize]) -> f64 {
        match *vars {
            [] => self.value,
            [i] => self.d1(i),
            [i, j] => self.d2(i, j),
            [i, j, k] => self.d3(i, j, k),
            _ => panic!("partial of order {} > {MAX_ORDER}", vars.len()),
        }
    }

    /// Taylor coefficient for the multi-index `alpha` (exponent per variable).
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        assert_eq!(alpha.len(), self.nvars);
        let total: usize = alpha.iter().sum();
        assert!(total <= self.order, "multi-index beyond stored order");
        let mut vars = Vec::with_capacity(total);
        let mut factorial = 1.0;
        for (i, &a) in alpha.iter().enumerate() {
            for k in 1..=a {
                vars.push(i);
                factorial *= k as f64;
            }
        }
        self.partial(&vars) / factorial
    }

    /// Drop derivative information above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        let mut j = self.clone();
        j.order = order;
        if order < 3 {
            j.d3 = Vec::new();
        }
        if order < 2 {
            j.d2 = Vec::new();
        }
        if order < 1 {
            j.d1 = Vec::new();
        }
        j
    }

    /// Jet of `d f / d x_i`, one order lower.
    pub fn derivative(&self, i: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.nvars;
        let order = self.order - 1;
        let mut j = Self::constant(self.d1[i], n, order);
        if order >= 1 {
            for a in 0..n {
                j.d1[a] = self.d2(i, a);
            }
        }
        if order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    j.d2[a * n + b] = self.d3(i, a, b);
                }
            }
        }
        j
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_all(|x| c * x)
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        let mut j = self.clone();
        j.value += c;
        j
    }

    fn map_all(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nvars: self.nvars,
            order: self.order,
            value: f(self.value),
            d1: self.d1.iter().map(|&x| f(x)).collect(),
            d2: self.d2.iter().map(|&x| f(x)).collect(),
            d3: self.d3.iter().map(|&x| f(x)).collect(),
        }
    }

    fn common(&self, other: &Self) -> (usize, usize) {
        assert_eq!(self.nvars, other.nvars, "jets over different variable sets");
        (self.nvars, self.order.min(other.order))
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let (n, order) = self.common(other);
        let mut out = Self::constant(f(self.value, other.value), n, order);
        for (o, (a, b)) in out.d1.iter_mut().zip(self.d1.iter().zip(&other.d1)) {
            *o = f(*a, *b);
        }
        for (o, (a, b)) in out.d2.iter_mut().zip(self.d2.iter().zip(&other.d2)) {
            *o = f(*a, *b);
        }
        for (o, (a, b)) in out.d3.iter_mut().zip(self.d3.iter().zip(&other.d3)) {
            *o = f(*a, *b);
        }
        out
    }

    pub fn mul_jet(&self, b: &Self) -> Self {
        let a = self;
        let (n, order) = a.common(b);
        let mut c = Self::constant(a.value * b.value, n, order);
        if order >= 1 {
            for i in 0..n {
                c.d1[i] = a.d1[i] * b.value + a.value * b.d1[i];
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    c.d2[i * n + j] = a.d2(i, j) * b.value
                        + a.d1[i] * b.d1[j]
                        + a.d1[j] * b.d1[i]
                        + a.value * b.d2(i, j);
                }
            }
        }
        if order >= 3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        c.d3[(i * n + j) * n + k] = a.d3(i, j, k) * b.value
                            + a.d2(i, j) * b.d1[k]
                            + a.d2(i, k) * b.d1[j]
                            + a.d2(j, k) * b.d1[i]
                            + a.d1[i] * b.d2(j, k)
                            + a.d1[j] * b.d2(i, k)
                            + a.d1[k] * b.d2(i, j)
                            + a.value * b.d3(i, j, k);
                    }
                }
            }
        }
        c
    }

    /// `phi(self)` given `derivs = [phi, phi', phi'', phi''']` at `self.value()`.
    ///
    /// Only the first `order + 1` entries of `derivs` are read.
    pub fn compose(&self, derivs: [f64; 4]) -> Self {
        let a = self;
        let n = a.nvars;
        let [p0, p1, p2, p3] = derivs;
        let mut c = Self::constant(p0, n, a.order);
        if a.order >= 1 {
            for i in 0..n {
                c.d1[i] = p1 * a.d1[i];
            }
        }
        if a.order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    c.d2[i * n + j] = p2 * a.d1[i] * a.d1[j] + p1 * a.d2(i, j);
                }
            }
        }
        if a.order >= 3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        c.d3[(i * n + j) * n + k] = p3 * a.d1[i] * a.d1[j] * a.d1[k]
                            + p2 * (a.d2(i, j) * a.d1[k]
                                + a.d2(i, k) * a.d1[j]
                                + a.d2(j, k) * a.d1[i])
                            + p1 * a.d3(i, j, k);
                    }
                }
            }
        }
        c
    }

    /// `1 / self`; the caller guarantees a non-zero value.
    pub fn recip(&self) -> Self {
        let r = 1.0 / self.value;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn div_jet(&self, other: &Self) -> Self {
        self.mul_jet(&other.recip())
    }

    /// Integer power by repeated multiplication (valid for any base).
    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::constant(1.0, self.nvars, self.order);
        for _ in 0..k {
            acc = acc.mul_jet(self);
        }
        acc
    }

    /// Real power with constant exponent; the caller guarantees a positive base.
    pub fn powf(&self, p: f64) -> Self {
        let x = self.value;
        self.compose([
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
        ])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn tan(&self) -> Self {
        let t = self.value.tan();
        let q = 1.0 + t * t;
        self.compose([t, q, 2.0 * t * q, q * (2.0 + 6.0 * t * t)])
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.compose([s, c, s, c])
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.compose([c, s, c, s])
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let q = 1.0 - t * t;
        self.compose([t, q, -2.0 * t * q, q * (6.0 * t * t - 2.0)])
    }

    pub fn asinh(&self) -> Self {
        let x = self.value;
        let q = 1.0 + x * x;
        let r = q.sqrt();
        self.compose([
            x.asinh(),
            1.0 / r,
            -x / (q * r),
            (2.0 * x * x - 1.0) / (q * q * r),
        ])
    }

    /// Caller guarantees `|x| < 1`.
    pub fn atanh(&self) -> Self {
        let x = self.value;
        let q = 1.0 - x * x;
        self.compose([
            x.atanh(),
            1.0 / q,
            2.0 * x / (q * q),
            (2.0 + 6.0 * x * x) / (q * q * q),
        ])
    }

    pub fn atan(&self) -> Self {
        let x = self.value;
        let q = 1.0 + x * x;
        self.compose([
            x.atan(),
            1.0 / q,
            -2.0 * x / (q * q),
            (6.0 * x * x - 2.0) / (q * q * q),
        ])
    }

    /// Caller guarantees a positive value (or zero for an order-0 jet).
    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        if self.order == 0 {
            return self.compose([r, 0.0, 0.0, 0.0]);
        }
        self.compose([r, 0.5 / r, -0.25 / (r * r * r), 0.375 / (r * r * r * r * r)])
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose([e, e, e, e])
    }

    /// Caller guarantees a positive value.
    pub fn ln(&self) -> Self {
        let x = self.value;
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    /// Caller guarantees a non-zero value unless the jet has order 0.
    pub fn abs(&self) -> Self {
        let s = if self.value < 0.0 { -1.0 } else { 1.0 };
        self.compose([self.value.abs(), s, 0.0, 0.0])
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// Square matrix of jets inverted by Gauss-Jordan elimination with partial
/// pivoting on the values. Returns `None` when a pivot vanishes.
pub fn invert_jet_matrix(a: &[Vec<Jet>]) -> Option<Vec<Vec<Jet>>> {
    let n = a.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let proto = &a[0][0];
    let (nv, ord) = (proto.nvars(), proto.order());
    let mut m: Vec<Vec<Jet>> = a.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, nv, ord))
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r][col].value().abs().total_cmp(&m[s][col].value().abs()))?;
        if m[pivot][col].value().abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let r = m[col][col].recip();
        for j in 0..n {
            m[col][j] = &m[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row][col].clone();
            for j in 0..n {
                m[row][j] = &m[row][j] - &(&factor * &m[col][j]);
                inv[row][j] = &inv[row][j] - &(&factor * &inv[col][j]);
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn polynomial_coefficients() {
        let v = Jet::variables(&[2.0, 3.0], 2);
        let e = &(&v[0] * &v[0]) + &v[1];
        assert_eq!(e.value(), 7.0);
        assert_eq!(e.d1(0), 4.0);
        assert_eq!(e.d1(1), 1.0);
        assert_eq!(e.coeff(&[2, 0]), 1.0);
        assert_eq!(e.coeff(&[1, 1]), 0.0);
    }

    #[test]
    fn univariate_series() {
        // exp at 0: all derivatives 1
        let x = Jet::variable(0.0, 0, 1, 3);
        let e = x.exp();
        assert_eq!(e.coeff(&[3]), 1.0 / 6.0);
        // sin at 0: 0, 1, 0, -1
        let s = x.sin();
        assert_eq!(s.d3(0, 0, 0), -1.0);
        // ln(1 + x): 0, 1, -1, 2
        let l = x.add_scalar(1.0).ln();
        assert!(close(l.d2(0, 0), -1.0, 1e-15));
        assert!(close(l.d3(0, 0, 0), 2.0, 1e-15));
    }

    #[test]
    fn composition_matches_product_rule() {
        // (x*y)^2 expanded two ways
        let v = Jet::variables(&[0.7, -1.3], 3);
        let xy = &v[0] * &v[1];
        let a = xy.powi(2);
        let b = xy.powf(2.0).scale(1.0);
        let xy_sq = &xy * &xy;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(close(a.d3(i, j, k), xy_sq.d3(i, j, k), 1e-14));
                    assert!((a.d3(i, j, k) - b.d3(i, j, k)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn tanh_of_asinh_closed_form() {
        // tanh(asinh(s)) = s / sqrt(1 + s^2)
        let s = Jet::variable(1.0, 0, 1, 3);
        let lhs = s.asinh().tanh();
        let rhs = s.div_jet(&(&s * &s).add_scalar(1.0).sqrt());
        assert!(close(lhs.value(), 1.0 / 2f64.sqrt(), 1e-15));
        for k in 0..=3 {
            let vars = vec![0; k];
            assert!(close(lhs.partial(&vars), rhs.partial(&vars), 1e-13));
        }
    }

    #[test]
    fn derivative_shifts_order() {
        let v = Jet::variables(&[1.5, 0.5], 3);
        let f = (&v[0] * &v[0]).mul_jet(&v[1]); // x^2 y
        let fx = f.derivative(0); // 2xy
        assert_eq!(fx.order(), 2);
        assert!(close(fx.value(), 1.5, 1e-15));
        assert!(close(fx.d1(1), 3.0, 1e-15));
        assert!(close(fx.d2(0, 1), 2.0, 1e-15));
    }

    #[test]
    fn jet_matrix_inverse() {
        let v = Jet::variables(&[0.3, 0.8], 2);
        let one = Jet::constant(1.0, 2, 2);
        let a = vec![
            vec![(&v[0] * &v[0]).add_scalar(2.0), v[1].clone()],
            vec![v[1].clone(), &one + &v[0]],
        ];
        let inv = invert_jet_matrix(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Jet::constant(0.0, 2, 2);
                for k in 0..2 {
                    s = &s + &(&a[i][k] * &inv[k][j]);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((s.value() - target).abs() < 1e-14);
                for p in 0..2 {
                    assert!(s.d1(p).abs() < 1e-14);
                    for q in 0..2 {
                        assert!(s.d2(p, q).abs() < 1e-13);
                    }
                }
            }
        }
    }
}
