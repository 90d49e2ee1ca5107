//! Small dense helpers: metric Cholesky, metric Gram-Schmidt, index tensors.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};

/// Cube of reals indexed `[(a, b, c)]`, each index in `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Array3 {
    n: usize,
    data: Vec<f64>,
}

impl Array3 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.n + b) * self.n + c] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Four-index analogue of [`Array3`].
#[derive(Debug, Clone, PartialEq)]
pub struct Array4 {
    n: usize,
    data: Vec<f64>,
}

impl Array4 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Lower-triangular `L` with `g = L L^T`. Fails when a pivot drops to `spd_tol`.
pub fn cholesky(g: &DMatrix<f64>, spd_tol: f64) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > spd_tol) {
            return Err(GeoError::SingularMetric {
                pivot: j,
                value: d,
                tol: spd_tol,
            });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solve `L L^T x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

pub fn cholesky_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::<f64>::zeros(n);
        e[j] = 1.0;
        inv.set_column(j, &cholesky_solve(l, &e));
    }
    inv
}

pub fn inner(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(&(g * b))
}

pub fn norm(g: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    inner(g, a, a).max(0.0).sqrt()
}

fn project_out(g: &DMatrix<f64>, v: &mut DVector<f64>, frame: &[DVector<f64>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for e in frame {
            let c = inner(g, v, e);
            v.axpy(-c, e, 1.0);
        }
    }
}

/// Orthonormalize `seeds` in the metric `g` (modified Gram-Schmidt, in the
/// given order), then complete to a full basis of size `g.nrows()` with
/// coordinate axes. At each completion step the axis with the largest
/// remaining component is taken; ties go to the lowest index.
///
/// Returns `(seed_frame, completion)`. Seeds must be linearly independent.
pub fn orthonormal_frame(
    g: &DMatrix<f64>,
    seeds: &[DVector<f64>],
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let m = g.nrows();
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(m);
    for s in seeds {
        let mut v = s.clone();
        project_out(g, &mut v, &frame);
        let len = norm(g, &v);
        frame.push(v / len);
    }
    let n_seed = frame.len();
    let mut used = vec![false; m];
    while frame.len() < m {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for (axis, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut v = DVector::<f64>::zeros(m);
            v[axis] = 1.0;
            project_out(g, &mut v, &frame);
            let len = norm(g, &v);
            if best.as_ref().is_none_or(|(_, _, b)| len > *b) {
                best = Some((axis, v, len));
            }
        }
        let (axis, v, len) = best.expect("an unused axis remains");
        used[axis] = true;
        frame.push(v / len);
    }
    let completion = frame.split_off(n_seed);
    (frame, completion)
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve a small symmetric positive-definite system; also returns the
/// 2-norm condition number of `a`.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let eig = a.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(GeoError::SingularNormalEquations { condition });
    }
    let l = cholesky(a, 0.0).map_err(|_| GeoError::SingularNormalEquations { condition })?;
    Ok((cholesky_solve(&l, b), condition))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_rejects_indefinite() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            cholesky(&g, 1e-12),
            Err(GeoError::SingularMetric { pivot: 1, .. })
        ));
    }

    #[test]
    fn cholesky_inverse_roundtrip() {
        let g = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let l = cholesky(&g, 1e-12).unwrap();
        let inv = cholesky_inverse(&l);
        let id = &g * &inv;
        assert!((id - DMatrix::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn frame_is_orthonormal_and_deterministic() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
        let seeds = vec![DVector::from_vec(vec![1.0, 1.0, 0.0])];
        let (t, n) = orthonormal_frame(&g, &seeds);
        let all: Vec<_> = t.iter().chain(n.iter()).collect();
        assert_eq!(all.len(), 3);
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((inner(&g, a, b) - want).abs() < 1e-14);
            }
        }
        let (t2, n2) = orthonormal_frame(&g, &seeds);
        assert_eq!(t, t2);
        assert_eq!(n, n2);
    }

    #[test]
    fn completion_prefers_lowest_index_on_ties() {
        let g = DMatrix::identity(3, 3);
        let (_, n) = orthonormal_frame(&g, &[DVector::from_vec(vec![0.0, 0.0, 1.0])]);
        assert_eq!(n[0], DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert_eq!(n[1], DVector::from_vec(vec![0.0, 1.0, 0.0]));
    }
}
