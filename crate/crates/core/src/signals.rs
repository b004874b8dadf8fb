//! Sparse complex vectors, convolution and correlation on `Z` and `Z_n`, the
//! unitary DFT and time reversal.
//!
//! The DFT is unitary with a negative exponent in the forward direction:
//! `(F x)_k = n^{-1/2} sum_l x_l e^{-i 2 pi k l / n}`. With this convention
//! `F(x ⊛ y) = sqrt(n) (F x ⊙ F y)` and `F(x ⊚ x) = sqrt(n) |F x|^2`.
//! Intensity measurements `|F x|^2` do not depend on the sign choice.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::C64;

/// Relative magnitude below which entries produced by sparse arithmetic are
/// dropped from the support.
pub const PRUNE_RELATIVE: f64 = 1e-14;

/// Support-pair products below this count use the direct double sum.
pub const DIRECT_PRODUCT_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DftNormalization {
    Unitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DftSign {
    NegativeExponentForward,
}

/// The DFT convention used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DftConvention {
    pub normalization: DftNormalization,
    pub sign: DftSign,
}

pub const DFT_CONVENTION: DftConvention = DftConvention {
    normalization: DftNormalization::Unitary,
    sign: DftSign::NegativeExponentForward,
};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized in-place FFT (`e^{-i..}` forward, `e^{+i..}` inverse).
pub(crate) fn fft_raw(buf: &mut [C64], inverse: bool) {
    if buf.len() <= 1 {
        return;
    }
    plan(buf.len(), inverse).process(buf);
}

/// Unitary forward DFT.
pub fn dft(x: &[C64]) -> Vec<C64> {
    let mut out = x.to_vec();
    fft_raw(&mut out, false);
    let s = 1.0 / (x.len().max(1) as f64).sqrt();
    out.iter_mut().for_each(|v| *v *= s);
    out
}

/// Unitary inverse DFT.
pub fn idft(x: &[C64]) -> Vec<C64> {
    let mut out = x.to_vec();
    fft_raw(&mut out, true);
    let s = 1.0 / (x.len().max(1) as f64).sqrt();
    out.iter_mut().for_each(|v| *v *= s);
    out
}

pub fn norm_sq(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    norm_sq(x).sqrt()
}

/// `<a, b> = sum conj(a_i) b_i`.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn conj(a: &[C64]) -> Vec<C64> {
    a.iter().map(|v| v.conj()).collect()
}

pub fn scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|v| v * s).collect()
}

/// Dense `(Γx)_k = x_{-k mod n}`.
pub fn time_reverse_dense(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    (0..n).map(|k| x[(n - k) % n]).collect()
}

/// Dense circular convolution via FFT. Both inputs must have equal length.
pub fn circular_convolve_dense(x: &[C64], y: &[C64]) -> Vec<C64> {
    assert_eq!(x.len(), y.len(), "circular convolution needs equal lengths");
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut fx = x.to_vec();
    let mut fy = y.to_vec();
    fft_raw(&mut fx, false);
    fft_raw(&mut fy, false);
    for (a, b) in fx.iter_mut().zip(&fy) {
        *a *= b;
    }
    fft_raw(&mut fx, true);
    let s = 1.0 / n as f64;
    fx.iter_mut().for_each(|v| *v *= s);
    fx
}

/// Dense circular correlation `x ⊚ y = x ⊛ Γ conj(y)` evaluated in the
/// Fourier domain as `sqrt(n) F*(F x ⊙ conj(F y))`.
pub fn circular_correlate_dense(x: &[C64], y: &[C64]) -> Vec<C64> {
    assert_eq!(x.len(), y.len(), "circular correlation needs equal lengths");
    let n = x.len();
    let fx = dft(x);
    let fy = dft(y);
    let prod: Vec<C64> = fx.iter().zip(&fy).map(|(a, b)| a * b.conj()).collect();
    let s = (n as f64).sqrt();
    idft(&prod).into_iter().map(|v| v * s).collect()
}

/// Dense linear convolution of length `x.len() + y.len() - 1` via zero-padded FFT.
pub fn linear_convolve_dense(x: &[C64], y: &[C64]) -> Vec<C64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + y.len() - 1;
    let l = out_len.next_power_of_two();
    let mut a = x.to_vec();
    a.resize(l, C64::new(0.0, 0.0));
    let mut b = y.to_vec();
    b.resize(l, C64::new(0.0, 0.0));
    let mut z = circular_convolve_dense(&a, &b);
    z.truncate(out_len);
    z
}

/// Dense complex vector serialized as separate real and imaginary arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReIm {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ReIm {
    pub fn to_complex(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).map(|(a, b)| C64::new(*a, *b)).collect()
    }
}

impl From<&[C64]> for ReIm {
    fn from(v: &[C64]) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

/// Complex vector of ambient dimension `n` stored as its support and the
/// values on it. Support indices are strictly increasing and all stored
/// values are nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    n: usize,
    support: Vec<usize>,
    values: Vec<C64>,
}

impl SparseVector {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<C64>) -> Result<Self> {
        if n == 0 {
            return invalid("ambient dimension must be positive");
        }
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: values.len(),
            });
        }
        if let Some(&bad) = support.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("support must be strictly increasing");
        }
        if values.iter().any(|v| *v == C64::new(0.0, 0.0)) {
            return invalid("stored values must be nonzero");
        }
        Ok(Self { n, support, values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Canonical basis vector `e_j`.
    pub fn basis(n: usize, j: usize) -> Result<Self> {
        Self::new(n, vec![j], vec![C64::new(1.0, 0.0)])
    }

    /// Sparsify a dense vector, keeping every entry that is not exactly zero.
    pub fn from_dense(x: &[C64]) -> Self {
        Self::from_dense_pruned(x, 0.0)
    }

    /// Sparsify a dense vector, dropping entries with `|x_i| <= tol`.
    pub fn from_dense_pruned(x: &[C64], tol: f64) -> Self {
        let mut support = Vec::new();
        let mut values = Vec::new();
        for (i, v) in x.iter().enumerate() {
            if v.norm() > tol {
                support.push(i);
                values.push(*v);
            }
        }
        Self {
            n: x.len(),
            support,
            values,
        }
    }

    /// Dense vector of dimension `n` whose entries at `support` are `values`;
    /// exact zeros are dropped.
    pub fn from_parts(n: usize, support: &[usize], values: &[C64]) -> Result<Self> {
        let mut dense = vec![C64::new(0.0, 0.0); n];
        for (&i, &v) in support.iter().zip(values) {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            dense[i] += v;
        }
        Ok(Self::from_dense(&dense))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, i: usize) -> C64 {
        match self.support.binary_search(&i) {
            Ok(p) => self.values[p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn conj(&self) -> Self {
        Self {
            n: self.n,
            support: self.support.clone(),
            values: conj(&self.values),
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(self.n);
        }
        Self {
            n: self.n,
            support: self.support.clone(),
            values: scale(&self.values, s),
        }
    }

    /// Unit-norm copy.
    pub fn normalized(&self) -> Result<Self> {
        let nrm = self.norm();
        if nrm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.scaled(C64::new(1.0 / nrm, 0.0)))
    }

    /// Same values in a larger ambient dimension (zero padding at the end).
    pub fn padded(&self, n: usize) -> Result<Self> {
        if n < self.n {
            return invalid(format!("cannot pad dimension {} down to {n}", self.n));
        }
        Ok(Self {
            n,
            support: self.support.clone(),
            values: self.values.clone(),
        })
    }

    /// Translate the support cyclically by `shift` in `Z_n`.
    pub fn cyclic_shift(&self, shift: usize) -> Self {
        let mut pairs: Vec<(usize, C64)> =
            self.iter().map(|(i, v)| ((i + shift) % self.n, v)).collect();
        pairs.sort_by_key(|p| p.0);
        Self {
            n: self.n,
            support: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

fn pruned_from_dense(z: &[C64], scale: f64) -> SparseVector {
    SparseVector::from_dense_pruned(z, PRUNE_RELATIVE * scale)
}

/// Convolution on `Z`: supports are absolute positions starting at 0 and the
/// result has ambient dimension `n_x + n_y - 1`.
pub fn linear_convolve(x: &SparseVector, y: &SparseVector) -> SparseVector {
    let out_n = x.dim() + y.dim() - 1;
    let scale = x.norm() * y.norm();
    if x.is_zero() || y.is_zero() {
        return SparseVector::zeros(out_n);
    }
    let z = if x.sparsity() * y.sparsity() < DIRECT_PRODUCT_LIMIT {
        let mut z = vec![C64::new(0.0, 0.0); out_n];
        for (i, a) in x.iter() {
            for (j, b) in y.iter() {
                z[i + j] += a * b;
            }
        }
        z
    } else {
        linear_convolve_dense(&x.dense(), &y.dense())
    };
    pruned_from_dense(&z, scale)
}

fn check_dims(x: &SparseVector, y: &SparseVector, n: usize) -> Result<()> {
    for d in [x.dim(), y.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: d,
            });
        }
    }
    Ok(())
}

/// Circular convolution on `Z_n`: `z_k = sum_i x_i y_{k ⊖ i}`.
pub fn circular_convolve(x: &SparseVector, y: &SparseVector, n: usize) -> Result<SparseVector> {
    check_dims(x, y, n)?;
    let scale = x.norm() * y.norm();
    if x.is_zero() || y.is_zero() {
        return Ok(SparseVector::zeros(n));
    }
    let z = if x.sparsity() * y.sparsity() < DIRECT_PRODUCT_LIMIT {
        let mut z = vec![C64::new(0.0, 0.0); n];
        for (i, a) in x.iter() {
            for (j, b) in y.iter() {
                z[(i + j) % n] += a * b;
            }
        }
        z
    } else {
        circular_convolve_dense(&x.dense(), &y.dense())
    };
    Ok(pruned_from_dense(&z, scale))
}

/// Circular correlation `x ⊚ y = x ⊛ Γ conj(y)`, i.e.
/// `z_k = sum_i x_i conj(y_{i ⊖ k})`.
pub fn circular_correlate(x: &SparseVector, y: &SparseVector, n: usize) -> Result<SparseVector> {
    check_dims(x, y, n)?;
    let scale = x.norm() * y.norm();
    if x.is_zero() || y.is_zero() {
        return Ok(SparseVector::zeros(n));
    }
    let z = if x.sparsity() * y.sparsity() < DIRECT_PRODUCT_LIMIT {
        let mut z = vec![C64::new(0.0, 0.0); n];
        for (i, a) in x.iter() {
            for (j, b) in y.iter() {
                z[(i + n - j) % n] += a * b.conj();
            }
        }
        z
    } else {
        circular_correlate_dense(&x.dense(), &y.dense())
    };
    Ok(pruned_from_dense(&z, scale))
}

/// `(Γx)_k = x_{-k mod n}`.
pub fn time_reverse(x: &SparseVector) -> SparseVector {
    let n = x.dim();
    let mut pairs: Vec<(usize, C64)> = x.iter().map(|(i, v)| ((n - i) % n, v)).collect();
    pairs.sort_by_key(|p| p.0);
    SparseVector {
        n,
        support: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Unitary DFT of a sparse vector, as a dense vector of length `n`.
pub fn dft_sparse(x: &SparseVector) -> Vec<C64> {
    dft(&x.dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, random_subset, seeded};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_sparse(rng: &mut crate::rng::SeededRng, n: usize, s: usize) -> SparseVector {
        let supp = random_subset(rng, n, s);
        let vals = supp.iter().map(|_| complex_gaussian(rng, 1.0)).collect();
        SparseVector::new(n, supp, vals).unwrap()
    }

    // Straight from the definitions, no FFT and no support bookkeeping.
    fn direct_linear(x: &[C64], y: &[C64]) -> Vec<C64> {
        let mut z = vec![c(0.0, 0.0); x.len() + y.len() - 1];
        for k in 0..z.len() {
            for i in 0..x.len() {
                if k >= i && k - i < y.len() {
                    z[k] += x[i] * y[k - i];
                }
            }
        }
        z
    }

    fn direct_circular(x: &[C64], y: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|k| (0..n).map(|i| x[i] * y[(k + n - i) % n]).sum())
            .collect()
    }

    fn direct_dft(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        let ang = -2.0 * std::f64::consts::PI * (k * l) as f64 / n as f64;
                        x[l] * C64::from_polar(1.0, ang)
                    })
                    .sum::<C64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(SparseVector::new(4, vec![1, 1], vec![c(1.0, 0.0); 2]).is_err());
        assert!(SparseVector::new(4, vec![2, 1], vec![c(1.0, 0.0); 2]).is_err());
        assert!(matches!(
            SparseVector::new(4, vec![4], vec![c(1.0, 0.0)]),
            Err(Error::IndexOutOfRange { index: 4, n: 4 })
        ));
        assert!(SparseVector::new(4, vec![0], vec![c(0.0, 0.0)]).is_err());
        assert!(SparseVector::new(4, vec![0, 1], vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn densify_sparsify_roundtrip_is_exact() {
        let mut rng = seeded(3);
        let x = random_sparse(&mut rng, 12, 5);
        assert_eq!(SparseVector::from_dense(&x.dense()), x);
    }

    #[test]
    fn identity_element_pads_y() {
        let mut rng = seeded(1);
        let e0 = SparseVector::basis(4, 0).unwrap();
        let y = random_sparse(&mut rng, 4, 4);
        let z = linear_convolve(&e0, &y);
        assert_eq!(z.dim(), 7);
        let mut want = y.dense();
        want.resize(7, c(0.0, 0.0));
        assert!(max_diff(&z.dense(), &want) == 0.0);
    }

    #[test]
    fn exact_cancellation_is_pruned() {
        let x = SparseVector::new(2, vec![0, 1], vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let y = SparseVector::new(2, vec![0, 1], vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let z = linear_convolve(&x, &y);
        assert_eq!(z.dim(), 3);
        assert_eq!(z.support(), &[0, 2]);
        assert_eq!(z.values(), &[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(direct_linear(&x.dense(), &y.dense()), z.dense());
    }

    #[test]
    fn young_upper_bound_on_random_pairs() {
        let mut rng = seeded(11);
        for _ in 0..100 {
            let x = random_sparse(&mut rng, 16, 3).normalized().unwrap();
            let y = random_sparse(&mut rng, 16, 3).normalized().unwrap();
            assert!(linear_convolve(&x, &y).norm() <= 3f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn circular_convolution_small_case() {
        let x = SparseVector::from_dense(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let y = SparseVector::from_dense(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let z = circular_convolve(&x, &y, 4).unwrap();
        assert_eq!(z.dense(), vec![c(1.0, 0.0); 4]);
        assert_eq!(direct_circular(&x.dense(), &y.dense()), z.dense());
    }

    #[test]
    fn circular_convolution_by_basis_is_shift() {
        let mut rng = seeded(5);
        let y = random_sparse(&mut rng, 9, 4);
        for j in 0..9 {
            let e = SparseVector::basis(9, j).unwrap();
            assert_eq!(circular_convolve(&e, &y, 9).unwrap(), y.cyclic_shift(j));
        }
    }

    #[test]
    fn circular_dimension_mismatch_is_error() {
        let x = SparseVector::basis(4, 0).unwrap();
        let y = SparseVector::basis(5, 0).unwrap();
        assert!(matches!(
            circular_convolve(&x, &y, 4),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(circular_correlate(&x, &y, 5).is_err());
    }

    #[test]
    fn zero_padded_circular_equals_linear() {
        let mut rng = seeded(8);
        let np = 6;
        let n = 2 * np - 1;
        for _ in 0..20 {
            let x = random_sparse(&mut rng, np, 3);
            let y = random_sparse(&mut rng, np, 4);
            let lin = linear_convolve(&x, &y);
            let circ = circular_convolve(&x.padded(n).unwrap(), &y.padded(n).unwrap(), n).unwrap();
            assert!(max_diff(&lin.dense(), &circ.dense()) < 1e-14);
        }
    }

    #[test]
    fn correlation_examples() {
        let x = SparseVector::from_dense(&[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let e0 = SparseVector::basis(3, 0).unwrap();
        assert_eq!(circular_correlate(&x, &e0, 3).unwrap(), x);
        let mut rng = seeded(2);
        let x = random_sparse(&mut rng, 10, 6);
        let e0 = SparseVector::basis(10, 0).unwrap();
        assert!(max_diff(&circular_correlate(&x, &e0, 10).unwrap().dense(), &x.dense()) < 1e-15);
    }

    #[test]
    fn correlation_time_and_fourier_domains_agree() {
        let mut rng = seeded(21);
        for n in [5usize, 8, 13, 32] {
            let x = random_sparse(&mut rng, n, n.min(7));
            let y = random_sparse(&mut rng, n, n.min(5));
            let t = circular_correlate(&x, &y, n).unwrap().dense();
            let f = circular_correlate_dense(&x.dense(), &y.dense());
            let via_reverse = circular_convolve(&x, &time_reverse(&y.conj()), n).unwrap().dense();
            let scale = x.norm() * y.norm();
            assert!(max_diff(&t, &f) <= 1e-12 * scale);
            assert!(max_diff(&t, &via_reverse) <= 1e-12 * scale);
        }
    }

    #[test]
    fn autocorrelation_spectrum_is_intensity() {
        let mut rng = seeded(4);
        let n = 11;
        let x = random_sparse(&mut rng, n, 6);
        let lhs = dft(&circular_correlate(&x, &x, n).unwrap().dense());
        let fx = dft(&x.dense());
        let sq = (n as f64).sqrt();
        for (a, b) in lhs.iter().zip(&fx) {
            assert!((a - C64::new(sq * b.norm_sqr(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn time_reverse_examples() {
        let e0 = SparseVector::basis(5, 0).unwrap();
        assert_eq!(time_reverse(&e0), e0);
        let v = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        let r = time_reverse(&SparseVector::from_dense(&v)).dense();
        assert_eq!(r, vec![v[0], v[3], v[2], v[1]]);
    }

    #[test]
    fn time_reverse_is_dft_squared() {
        let mut rng = seeded(9);
        let x = random_sparse(&mut rng, 7, 5);
        let ff = dft(&dft(&x.dense()));
        assert!(max_diff(&ff, &time_reverse(&x).dense()) < 1e-12);
    }

    #[test]
    fn dft_matches_definition_and_basics() {
        let mut rng = seeded(6);
        let x: Vec<C64> = (0..12).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        assert!(max_diff(&dft(&x), &direct_dft(&x)) < 1e-12);
        assert!((norm(&dft(&x)) - norm(&x)).abs() < 1e-12 * norm(&x));
        assert!(max_diff(&idft(&dft(&x)), &x) < 1e-12);
        let e0 = SparseVector::basis(8, 0).unwrap();
        let f = dft_sparse(&e0);
        assert!(f.iter().all(|v| (v - c(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-15));
    }

    #[test]
    fn convolution_theorem_against_direct_sum() {
        let mut rng = seeded(10);
        let n = 8;
        let x: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let y: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let lhs = dft(&direct_circular(&x, &y));
        let fx = dft(&x);
        let fy = dft(&y);
        let sq = (n as f64).sqrt();
        for k in 0..n {
            assert!((lhs[k] - fx[k] * fy[k] * sq).norm() < 1e-12);
        }
    }

    #[test]
    fn fft_path_matches_direct_sum_up_to_64() {
        let mut rng = seeded(12);
        for n in [16usize, 31, 40, 64] {
            // dense enough to push s*f over the direct-sum limit
            let x = random_sparse(&mut rng, n, n.min(30));
            let y = random_sparse(&mut rng, n, n.min(30));
            assert!(x.sparsity() * y.sparsity() >= DIRECT_PRODUCT_LIMIT || n < 30);
            let scale = x.norm() * y.norm();
            let lin = linear_convolve(&x, &y);
            assert!(max_diff(&lin.dense(), &direct_linear(&x.dense(), &y.dense())) <= 1e-11 * scale);
            let circ = circular_convolve(&x, &y, n).unwrap();
            assert!(max_diff(&circ.dense(), &direct_circular(&x.dense(), &y.dense())) <= 1e-11 * scale);
        }
    }

    #[test]
    fn support_translation_keeps_norm() {
        let mut rng = seeded(13);
        let x = random_sparse(&mut rng, 10, 3);
        let y = random_sparse(&mut rng, 10, 4);
        let base = linear_convolve(&x, &y).norm();
        for shift in 1..5 {
            let xs = SparseVector::new(
                10 + shift,
                x.support().iter().map(|i| i + shift).collect(),
                x.values().to_vec(),
            )
            .unwrap();
            assert!((linear_convolve(&xs, &y).norm() - base).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn convolutions_commute(seed in any::<u64>(), n in 2usize..24, s in 1usize..6, f in 1usize..6) {
            let mut rng = seeded(seed);
            let x = random_sparse(&mut rng, n, s.min(n));
            let y = random_sparse(&mut rng, n, f.min(n));
            let a = linear_convolve(&x, &y).dense();
            let b = linear_convolve(&y, &x).dense();
            prop_assert!(max_diff(&a, &b) <= 1e-14 * x.norm() * y.norm());
            let a = circular_convolve(&x, &y, n).unwrap().dense();
            let b = circular_convolve(&y, &x, n).unwrap().dense();
            prop_assert!(max_diff(&a, &b) <= 1e-14 * x.norm() * y.norm());
        }

        #[test]
        fn time_reverse_is_involutive_isometry(seed in any::<u64>(), n in 1usize..30) {
            let mut rng = seeded(seed);
            let x = random_sparse(&mut rng, n, (n / 2).max(1));
            let r = time_reverse(&x);
            prop_assert_eq!(time_reverse(&r), x.clone());
            prop_assert!((r.norm() - x.norm()).abs() <= 1e-15 * x.norm());
        }
    }
}
