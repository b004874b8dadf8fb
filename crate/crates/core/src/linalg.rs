//! Small dense complex linear algebra: row-major matrices, a Hermitian
//! eigensolver (Householder tridiagonalization followed by implicit QL),
//! a cyclic Jacobi solver used as an independent cross-check, and LU
//! determinants.

use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        if let Some(bad) = rows.iter().find(|v| v.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: bad.len(),
            });
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    /// Row-major data of length `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Outer product `x yᵀ` (no conjugation), the lifted form of the pair.
    pub fn outer(x: &[C64], y: &[C64]) -> Self {
        Self::from_fn(x.len(), y.len(), |i, j| x[i] * y[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᴴ w`.
    pub fn adjoint_matvec(&self, w: &[C64]) -> Vec<C64> {
        debug_assert_eq!(w.len(), self.rows);
        let mut out = vec![ZERO; self.cols];
        for (i, wi) in w.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * wi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    /// Principal submatrix on the (sorted or unsorted) index list `idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// `Aᴴ A`.
    pub fn gram(&self) -> CMatrix {
        self.adjoint().matmul(self)
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

fn check_square(a: &CMatrix) -> Result<()> {
    if a.rows != a.cols {
        return invalid(format!("expected a square matrix, got {}x{}", a.rows, a.cols));
    }
    Ok(())
}

/// Householder reduction `A = Q T Qᴴ` followed by a diagonal phase change that
/// makes the tridiagonal `T` real. Returns the diagonal, the (nonnegative)
/// subdiagonal with `e[0] = 0`, `e[i] = T[i, i-1]`, and the accumulated
/// unitary `Q D` when requested.
fn tridiagonalize(a: &CMatrix, want_vectors: bool) -> (Vec<f64>, Vec<f64>, Option<CMatrix>) {
    let n = a.rows;
    let mut t = a.clone();
    let mut q = want_vectors.then(|| CMatrix::identity(n));
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<C64> = (0..len).map(|i| t[(k + 1 + i, k)]).collect();
        let alpha = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = v[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if alpha == 0.0 || tail == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { ONE };
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let beta = 2.0 / vnorm2;
        // Left: rows k+1.. of T  <-  (I - beta v vᴴ) T
        for j in 0..n {
            let mut s = ZERO;
            for i in 0..len {
                s += v[i].conj() * t[(k + 1 + i, j)];
            }
            s *= beta;
            if s != ZERO {
                for i in 0..len {
                    t[(k + 1 + i, j)] -= v[i] * s;
                }
            }
        }
        // Right: columns k+1.. of T  <-  T (I - beta v vᴴ)
        for i in 0..n {
            let mut s = ZERO;
            for j in 0..len {
                s += t[(i, k + 1 + j)] * v[j];
            }
            s *= beta;
            if s != ZERO {
                for j in 0..len {
                    t[(i, k + 1 + j)] -= s * v[j].conj();
                }
            }
        }
        if let Some(q) = q.as_mut() {
            for i in 0..n {
                let mut s = ZERO;
                for j in 0..len {
                    s += q[(i, k + 1 + j)] * v[j];
                }
                s *= beta;
                if s != ZERO {
                    for j in 0..len {
                        q[(i, k + 1 + j)] -= s * v[j].conj();
                    }
                }
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| t[(i, i)].re).collect();
    let mut e = vec![0.0; n];
    let mut phases = vec![ONE; n];
    for i in 1..n {
        let sub = t[(i, i - 1)];
        let mag = sub.norm();
        e[i] = mag;
        phases[i] = if mag > 0.0 { phases[i - 1] * sub / mag } else { phases[i - 1] };
    }
    if let Some(q) = q.as_mut() {
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] *= phases[j];
            }
        }
    }
    (d, e, q)
}

/// Implicit QL iteration with Wilkinson-type shifts on a real symmetric
/// tridiagonal matrix (EISPACK `tql2`). Rotations are applied to the columns
/// of `v` when given. Eigenvalues are sorted ascending on return.
fn tql2(d: &mut [f64], e: &mut [f64], mut v: Option<&mut CMatrix>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return invalid("tridiagonal QL iteration did not converge");
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..v.rows {
                            let hk = v[(k, i + 1)];
                            let vi = v[(k, i)];
                            v[(k, i + 1)] = vi * s + hk * c;
                            v[(k, i)] = vi * c - hk * s;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // selection sort, ascending
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            if let Some(v) = v.as_deref_mut() {
                for r in 0..v.rows {
                    let tmp = v[(r, i)];
                    v[(r, i)] = v[(r, k)];
                    v[(r, k)] = tmp;
                }
            }
        }
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix. Only the lower triangle
/// influences the result up to rounding; the input is assumed Hermitian.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    check_square(a)?;
    let (mut d, mut e, q) = tridiagonalize(a, true);
    let mut q = q.expect("vectors requested");
    match tql2(&mut d, &mut e, Some(&mut q)) {
        Ok(()) => Ok(HermitianEigen { values: d, vectors: q }),
        Err(_) => jacobi_eigen(a),
    }
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    check_square(a)?;
    let (mut d, mut e, _) = tridiagonalize(a, false);
    match tql2(&mut d, &mut e, None) {
        Ok(()) => Ok(d),
        Err(_) => jacobi_eigen(a).map(|r| r.values),
    }
}

pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    hermitian_eigenvalues(a).map(|v| v.first().copied().unwrap_or(f64::INFINITY))
}

/// Cyclic complex Jacobi eigensolver. Slower than [`hermitian_eigen`] but
/// structurally independent of it.
pub fn jacobi_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    check_square(a)?;
    let n = a.rows;
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let ph = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let zeta = (aqq - app) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, conj(ph)) * [[c, s], [-s, c]]
                let jqp = -ph.conj() * s;
                let jqq = ph.conj() * c;
                for r in 0..n {
                    let mp = m[(r, p)];
                    let mq = m[(r, q)];
                    m[(r, p)] = mp * c + mq * jqp;
                    m[(r, q)] = mp * s + mq * jqq;
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c + vq * jqp;
                    v[(r, q)] = vp * s + vq * jqq;
                }
                for col in 0..n {
                    let mp = m[(p, col)];
                    let mq = m[(q, col)];
                    m[(p, col)] = mp * c + mq * jqp.conj();
                    m[(q, col)] = mp * s + mq * jqq.conj();
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// LU factorization with partial pivoting, stored compactly.
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        check_square(a)?;
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            sign,
            singular,
        })
    }

    pub fn determinant(&self) -> C64 {
        if self.singular {
            return ZERO;
        }
        (0..self.lu.rows).fold(C64::new(self.sign, 0.0), |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        if self.singular {
            return invalid("matrix is singular");
        }
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }
}

pub fn determinant(a: &CMatrix) -> Result<C64> {
    Lu::new(a).map(|lu| lu.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, seeded};
    use proptest::prelude::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_hermitian(seed: u64, n: usize) -> CMatrix {
        let mut rng = seeded(seed);
        let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(&mut rng, 1.0));
        g.add(&g.adjoint()).scale(r(0.5))
    }

    fn check_decomposition(a: &CMatrix, eig: &HermitianEigen, tol: f64) {
        let n = a.rows();
        let v = &eig.vectors;
        let vhv = v.adjoint().matmul(v);
        assert!(vhv.max_abs_diff(&CMatrix::identity(n)) < tol, "vectors not orthonormal");
        let lam = CMatrix::from_fn(n, n, |i, j| if i == j { r(eig.values[i]) } else { ZERO });
        let rec = v.matmul(&lam).matmul(&v.adjoint());
        assert!(rec.max_abs_diff(a) < tol * (1.0 + a.frobenius_norm()));
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = CMatrix::from_rows(&[vec![r(1.0), r(0.5)], vec![r(0.5), r(1.0)]]).unwrap();
        let ev = hermitian_eigenvalues(&a).unwrap();
        assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[1] - 1.5).abs() < 1e-14);
        // complex off-diagonal: a, d real, |b|: (a+d)/2 ± sqrt(((a-d)/2)^2 + |b|^2)
        let b = C64::new(0.3, -0.4);
        let a = CMatrix::from_rows(&[vec![r(2.0), b], vec![b.conj(), r(-1.0)]]).unwrap();
        let disc = (1.5f64 * 1.5 + 0.25).sqrt();
        let ev = hermitian_eigenvalues(&a).unwrap();
        assert!((ev[0] - (0.5 - disc)).abs() < 1e-13);
        assert!((ev[1] - (0.5 + disc)).abs() < 1e-13);
    }

    #[test]
    fn three_by_three_against_cubic_roots() {
        // tridiagonal Toeplitz with diagonal 1 and off-diagonal 0.5:
        // eigenvalues 1 + cos(k pi / 4), k = 1, 2, 3
        let a = CMatrix::from_fn(3, 3, |i, j| match i.abs_diff(j) {
            0 => r(1.0),
            1 => r(0.5),
            _ => ZERO,
        });
        let ev = hermitian_eigenvalues(&a).unwrap();
        let pi = std::f64::consts::PI;
        let mut want: Vec<f64> = (1..=3).map(|k| 1.0 + (k as f64 * pi / 4.0).cos()).collect();
        want.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((ev[0] - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn complex_three_by_three_char_poly() {
        let a = random_hermitian(17, 3);
        // det(A - l I) at each eigenvalue must vanish
        for l in hermitian_eigenvalues(&a).unwrap() {
            let shifted = a.sub(&CMatrix::identity(3).scale(r(l)));
            assert!(determinant(&shifted).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn householder_ql_and_jacobi_agree() {
        for (seed, n) in [(1u64, 1usize), (2, 2), (3, 5), (4, 16), (5, 33), (6, 64)] {
            let a = random_hermitian(seed, n);
            let h = hermitian_eigen(&a).unwrap();
            let j = jacobi_eigen(&a).unwrap();
            check_decomposition(&a, &h, 1e-10);
            check_decomposition(&a, &j, 1e-10);
            for (x, y) in h.values.iter().zip(&j.values) {
                assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let n = 6;
        let mut a = CMatrix::identity(n);
        a[(0, 0)] = r(3.0);
        let eig = hermitian_eigen(&a).unwrap();
        check_decomposition(&a, &eig, 1e-12);
        assert_eq!(eig.values[..5], [1.0; 5]);
        // rank-one projector x xᴴ
        let mut rng = seeded(8);
        let x: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let p = CMatrix::from_fn(n, n, |i, j| x[i] * x[j].conj());
        let eig = hermitian_eigen(&p).unwrap();
        check_decomposition(&p, &eig, 1e-10);
        assert!(eig.values[..n - 1].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn lu_determinant_and_solve() {
        let a = CMatrix::from_rows(&[vec![r(1.0), r(0.5)], vec![r(0.5), r(1.0)]]).unwrap();
        assert!((determinant(&a).unwrap() - r(0.75)).norm() < 1e-15);
        let mut rng = seeded(9);
        let n = 7;
        let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(&mut rng, 1.0));
        let x: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let b = g.matvec(&x);
        let sol = Lu::new(&g).unwrap().solve(&b).unwrap();
        assert!(sol.iter().zip(&x).all(|(p, q)| (p - q).norm() < 1e-10));
        // product of eigenvalues of a Hermitian matrix
        let h = random_hermitian(10, 5);
        let prod: f64 = hermitian_eigenvalues(&h).unwrap().iter().product();
        assert!((determinant(&h).unwrap() - r(prod)).norm() < 1e-10 * (1.0 + prod.abs()));
        let sing = CMatrix::zeros(3, 3);
        assert_eq!(determinant(&sing).unwrap(), ZERO);
    }

    proptest! {
        #[test]
        fn eigen_reconstructs(seed in any::<u64>(), n in 1usize..12) {
            let a = random_hermitian(seed, n);
            let eig = hermitian_eigen(&a).unwrap();
            check_decomposition(&a, &eig, 1e-10);
        }
    }
}
