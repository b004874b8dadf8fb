//! Restricted norm multiplicativity of sparse convolutions.
//!
//! For `x` supported on `I` and `y` on `J`, `‖x ∗ y‖² = x_Iᴴ (B_ȳ)_{I,I} x_I`
//! where `B_t` is the Hermitian Toeplitz matrix with first row
//! `b_k(t) = Σ_j conj(t_j) t_{j+k}`. Everything here is built on that identity:
//! restricted eigenvalues, determinant bounds, the minimal determinant
//! `D_{n,k}` and an alternating-minimization search for `α(s, f)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rng::{complex_gaussian, random_subset, seeded, split, SeededRng, GENERATOR};
use crate::signals::{self, ReIm, SparseVector};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Support enumerations up to this many candidates are exhaustive.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;

/// Largest compressed dimension for which the determinant bound is evaluated.
pub const MAX_DETERMINANT_DIM: usize = 64;

/// `n × n` Hermitian Toeplitz matrix given by its first row `b_0..b_{n-1}`
/// (`b_{-k} = conj(b_k)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianToeplitz {
    first_row: Vec<C64>,
}

impl HermitianToeplitz {
    /// `b_0` must be real up to `1e-12` relative; its imaginary part is dropped.
    pub fn new(mut first_row: Vec<C64>) -> Result<Self> {
        let Some(b0) = first_row.first_mut() else {
            return invalid("toeplitz matrix needs at least one entry");
        };
        if b0.im.abs() > 1e-12 * b0.norm().max(1.0) {
            return invalid("diagonal entry of a Hermitian toeplitz matrix must be real");
        }
        b0.im = 0.0;
        Ok(Self { first_row })
    }

    pub fn identity(n: usize) -> Self {
        let mut row = vec![ZERO; n.max(1)];
        row[0] = C64::new(1.0, 0.0);
        Self { first_row: row }
    }

    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[C64] {
        &self.first_row
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        if j >= i {
            self.first_row[j - i]
        } else {
            self.first_row[i - j].conj()
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// Principal submatrix on the index list `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entry(idx[i], idx[j]))
    }

    /// `xᴴ B x`.
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            if x[i] == ZERO {
                continue;
            }
            for j in 0..n {
                acc += x[i].conj() * self.entry(i, j) * x[j];
            }
        }
        acc.re
    }

    /// `Σ_{k=-(n-1)}^{n-1} |b_k|²`.
    pub fn coefficient_energy(&self) -> f64 {
        self.first_row[0].norm_sqr() + 2.0 * self.first_row[1..].iter().map(|b| b.norm_sqr()).sum::<f64>()
    }
}

/// First row `b_k(t) = Σ_j conj(t_j) t_{j+k}` for `k < n` of a dense `t`
/// (no normalization).
pub fn autocorrelation_row(t: &[C64], n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            if k >= t.len() {
                return ZERO;
            }
            t.iter().zip(&t[k..]).map(|(a, b)| a.conj() * b).sum()
        })
        .collect()
}

/// `B_t` for the normalized `t`, so that `b_0 = 1`.
pub fn autocorrelation_toeplitz(t: &SparseVector, n: usize) -> Result<HermitianToeplitz> {
    if n == 0 {
        return invalid("toeplitz dimension must be positive");
    }
    let t = t.normalized()?;
    let mut row = vec![ZERO; n];
    for (a, (i, ti)) in t.iter().enumerate() {
        for (j, tj) in t.iter().skip(a) {
            let k = j - i;
            if k < n {
                row[k] += ti.conj() * tj;
            }
        }
    }
    row[0] = C64::new(row[0].re, 0.0);
    HermitianToeplitz::new(row)
}

/// Symbol `b(ω) = Σ_{k=-(n-1)}^{n-1} b_k e^{ikω}`, which is real.
pub fn symbol_eval(t: &HermitianToeplitz, omega: f64) -> f64 {
    let row = t.first_row();
    let tail: f64 = row
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, b)| (b * C64::from_polar(1.0, k as f64 * omega)).re)
        .sum();
    row[0].re + 2.0 * tail
}

/// Minimum of the symbol over `points` equispaced frequencies in `[0, 2π)`.
pub fn symbol_grid_min(t: &HermitianToeplitz, points: usize) -> f64 {
    (0..points)
        .map(|i| symbol_eval(t, 2.0 * std::f64::consts::PI * i as f64 / points as f64))
        .fold(f64::INFINITY, f64::min)
}

pub fn min_eigenvalue(t: &HermitianToeplitz) -> Result<f64> {
    linalg::min_eigenvalue(&t.to_matrix())
}

/// Result of a restricted eigenvalue search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedEigen {
    pub value: f64,
    pub support: Vec<usize>,
    /// False when the value came from the greedy heuristic and is only an
    /// upper bound on the true minimum.
    pub exhaustive: bool,
}

/// Number of `k`-subsets of an `n`-set, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `items` in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Supports of size `k` in `[n]` whose smallest element is 0.
fn anchored_supports(n: usize, k: usize) -> Vec<Vec<usize>> {
    let rest: Vec<usize> = (1..n).collect();
    combinations(&rest, k - 1)
        .into_iter()
        .map(|mut c| {
            c.insert(0, 0);
            c
        })
        .collect()
}

fn random_anchored_support(rng: &mut SeededRng, n: usize, k: usize) -> Vec<usize> {
    let mut s: Vec<usize> = random_subset(rng, n - 1, k - 1).into_iter().map(|i| i + 1).collect();
    s.insert(0, 0);
    s
}

fn submatrix_min(t: &HermitianToeplitz, support: &[usize]) -> f64 {
    linalg::min_eigenvalue(&t.submatrix(support)).unwrap_or(f64::INFINITY)
}

/// `min_{|T| = s} λ_min(B_T)`. Exhaustive when `C(n, s) <= 1e5`, otherwise a
/// greedy swap descent with 16 restarts (flagged non-exhaustive).
pub fn restricted_min_eigenvalue(t: &HermitianToeplitz, s: usize) -> Result<RestrictedEigen> {
    restricted_min_eigenvalue_seeded(t, s, 0)
}

pub fn restricted_min_eigenvalue_seeded(t: &HermitianToeplitz, s: usize, seed: u64) -> Result<RestrictedEigen> {
    let n = t.dim();
    if s == 0 || s > n {
        return invalid(format!("restriction size {s} must lie in 1..={n}"));
    }
    if binomial(n, s) <= EXHAUSTIVE_LIMIT {
        let all: Vec<usize> = (0..n).collect();
        let supports = combinations(&all, s);
        let (value, idx) = supports
            .par_iter()
            .enumerate()
            .map(|(i, sup)| (submatrix_min(t, sup), i))
            .reduce(|| (f64::INFINITY, usize::MAX), min_pair);
        return Ok(RestrictedEigen {
            value,
            support: supports[idx].clone(),
            exhaustive: true,
        });
    }
    let (value, support) = (0..16u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded(split(seed, r));
            let mut sup = random_subset(&mut rng, n, s);
            let mut best = submatrix_min(t, &sup);
            loop {
                let mut improved = None;
                for pos in 0..s {
                    for cand in 0..n {
                        if sup.contains(&cand) {
                            continue;
                        }
                        let mut trial = sup.clone();
                        trial[pos] = cand;
                        trial.sort_unstable();
                        let v = submatrix_min(t, &trial);
                        if v < best - 1e-15 && improved.as_ref().is_none_or(|(bv, _)| v < *bv) {
                            improved = Some((v, trial));
                        }
                    }
                }
                match improved {
                    Some((v, trial)) => {
                        best = v;
                        sup = trial;
                    }
                    None => break,
                }
            }
            (best, sup)
        })
        .reduce(|| (f64::INFINITY, Vec::new()), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok(RestrictedEigen {
        value,
        support,
        exhaustive: false,
    })
}

fn min_pair(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// `|det T| / (sqrt(n) (Σ_k |b_k|²)^{(n-1)/2})`, a lower bound on `λ_min(T)`
/// for positive semidefinite `T`.
pub fn eigen_det_lower_bound(t: &HermitianToeplitz) -> Result<f64> {
    let n = t.dim();
    let det = linalg::determinant(&t.to_matrix())?.norm();
    let energy = t.coefficient_energy();
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok(det / ((n as f64).sqrt() * energy.powf((n as f64 - 1.0) / 2.0)))
}

/// Estimate of `D_{n,k} = min { |det B_t| : t ∈ Σ_k^n, ‖t‖ = 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantEstimate {
    pub n: usize,
    pub k: usize,
    pub value: f64,
    /// Minimizing `t` (dense, length `n`); re-evaluate with
    /// [`autocorrelation_toeplitz`] to reproduce `value`.
    pub argmin: ReIm,
    pub support: Vec<usize>,
    pub exhaustive_supports: bool,
    pub starts_per_support: usize,
    pub seed: u64,
    /// True when `value` is a search result (an upper estimate of the
    /// minimum) rather than exact.
    pub upper_estimate: bool,
}

fn det_of(t: &[C64], n: usize) -> f64 {
    let row = autocorrelation_row(t, n);
    let nrm: f64 = row[0].re;
    if nrm <= 0.0 {
        return f64::INFINITY;
    }
    let row: Vec<C64> = row.iter().map(|b| b / nrm).collect();
    let toe = HermitianToeplitz { first_row: row };
    linalg::determinant(&toe.to_matrix()).map(|d| d.norm()).unwrap_or(f64::INFINITY)
}

/// Minimize `f` over the unit sphere of `R^d` with finite-difference projected
/// gradient steps and backtracking. Returns the final point and value.
pub(crate) fn minimize_on_sphere(f: &dyn Fn(&[f64]) -> f64, start: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let normalize = |p: &mut [f64]| {
        let s = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s > 0.0 {
            p.iter_mut().for_each(|v| *v /= s);
        }
    };
    let mut p = start.to_vec();
    normalize(&mut p);
    let mut val = f(&p);
    let mut step = 0.1;
    let h = 1e-7;
    for _ in 0..max_iter {
        let mut g = vec![0.0; p.len()];
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i] += h;
            let fp = f(&q);
            q[i] -= 2.0 * h;
            let fm = f(&q);
            g[i] = (fp - fm) / (2.0 * h);
        }
        let radial: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(&p).for_each(|(gi, pi)| *gi -= radial * pi);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn < 1e-12 {
            break;
        }
        let mut accepted = false;
        while step > 1e-12 {
            let mut q: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
            normalize(&mut q);
            let fq = f(&q);
            if fq < val {
                let gain = val - fq;
                p = q;
                val = fq;
                step *= 2.0;
                accepted = true;
                if gain <= 1e-15 * val.abs().max(1e-300) {
                    return (p, val);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (p, val)
}

fn embed(support: &[usize], p: &[f64], n: usize) -> Vec<C64> {
    let mut t = vec![ZERO; n];
    for (a, &i) in support.iter().enumerate() {
        t[i] = C64::new(p[2 * a], p[2 * a + 1]);
    }
    t
}

/// Estimate `D_{n,k}` by enumerating supports that contain 0 (translation
/// leaves `B_t` unchanged) and running `search_budget` multi-start local
/// minimizations per support. More than 2000 supports are subsampled.
pub fn restricted_determinant(n: usize, k: usize, search_budget: usize, seed: u64) -> Result<DeterminantEstimate> {
    if search_budget == 0 {
        return invalid("search budget must be positive");
    }
    if k == 0 || k > n {
        return invalid(format!("sparsity {k} must lie in 1..={n}"));
    }
    if k == 1 {
        let mut t = vec![ZERO; n];
        t[0] = C64::new(1.0, 0.0);
        return Ok(DeterminantEstimate {
            n,
            k,
            value: 1.0,
            argmin: ReIm::from(t.as_slice()),
            support: vec![0],
            exhaustive_supports: true,
            starts_per_support: 0,
            seed,
            upper_estimate: false,
        });
    }
    let total = binomial(n - 1, k - 1);
    let (supports, exhaustive) = if total <= 2000 {
        (anchored_supports(n, k), true)
    } else {
        let mut rng = seeded(split(seed, u64::MAX));
        let mut set: Vec<Vec<usize>> = (0..2000).map(|_| random_anchored_support(&mut rng, n, k)).collect();
        set.sort();
        set.dedup();
        (set, false)
    };
    let results: Vec<(f64, Vec<f64>)> = supports
        .par_iter()
        .enumerate()
        .map(|(si, sup)| {
            let mut rng = seeded(split(seed, si as u64));
            let obj = |p: &[f64]| det_of(&embed(sup, p, n), n);
            let mut best = (f64::INFINITY, Vec::new());
            for start in 0..search_budget {
                let p0: Vec<f64> = if start == 0 {
                    // equal magnitudes, real: the extremal profile for k = 2
                    (0..2 * k).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect()
                } else {
                    (0..k)
                        .flat_map(|_| {
                            let z = complex_gaussian(&mut rng, 1.0);
                            [z.re, z.im]
                        })
                        .collect()
                };
                let (p, v) = minimize_on_sphere(&obj, &p0, 300);
                if v < best.0 {
                    best = (v, p);
                }
            }
            best
        })
        .collect();
    let mut bi = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 < results[bi].0 {
            bi = i;
        }
    }
    let (value, p) = (&results[bi].0, &results[bi].1);
    let t = embed(&supports[bi], p, n);
    Ok(DeterminantEstimate {
        n,
        k,
        value: *value,
        argmin: ReIm::from(t.as_slice()),
        support: supports[bi].clone(),
        exhaustive_supports: exhaustive,
        starts_per_support: search_budget,
        seed,
        upper_estimate: true,
    })
}

/// `ñ = ⌊2^{2q log₂ q}⌋ = q^{2q}` with `q = s + f - 2`, clipped by `n_ambient`.
/// For `q <= 1` no compression is needed and `ñ = s + f - 1`.
pub fn compressed_dimension(s: usize, f: usize, n_ambient: Option<usize>) -> usize {
    let q = (s + f).saturating_sub(2);
    let raw = if q <= 1 {
        (s + f).saturating_sub(1)
    } else {
        u32::try_from(2 * q)
            .ok()
            .and_then(|e| (q as u128).checked_pow(e))
            .map_or(usize::MAX, |v| usize::try_from(v).unwrap_or(usize::MAX))
    };
    match n_ambient {
        Some(n) => raw.min(n),
        None => raw,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    /// `min(s, f) = 1`, where `α = 1` exactly.
    AnalyticEquality,
    /// `α² >= D_{ñ,k} / sqrt(ñ k^{ñ-1})` with a searched `D_{ñ,k}`.
    DeterminantFormula,
    /// `ñ` too large to evaluate the determinant; `value` is the trivial 0.
    NotComputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBound {
    pub s: usize,
    pub f: usize,
    pub n_effective: usize,
    pub k: usize,
    pub value: f64,
    pub method: BoundMethod,
    pub determinant: Option<DeterminantEstimate>,
}

fn check_sparsities(s: usize, f: usize, n: usize) -> Result<()> {
    if s == 0 || f == 0 {
        return invalid("sparsities must be positive");
    }
    if s > n || f > n {
        return invalid(format!("sparsities ({s}, {f}) exceed dimension {n}"));
    }
    Ok(())
}

/// Lower bound on `α(s, f)` for zero-padded convolutions of vectors supported
/// in `[n]`.
pub fn alpha_lower_bound(s: usize, f: usize, n: usize, search_budget: usize, seed: u64) -> Result<AlphaBound> {
    check_sparsities(s, f, n)?;
    let k = s.min(f);
    let n_eff = compressed_dimension(s, f, Some(n));
    if k == 1 {
        return Ok(AlphaBound {
            s,
            f,
            n_effective: n_eff,
            k,
            value: 1.0,
            method: BoundMethod::AnalyticEquality,
            determinant: None,
        });
    }
    if n_eff > MAX_DETERMINANT_DIM {
        return Ok(AlphaBound {
            s,
            f,
            n_effective: n_eff,
            k,
            value: 0.0,
            method: BoundMethod::NotComputed,
            determinant: None,
        });
    }
    let det = restricted_determinant(n_eff, k, search_budget, seed)?;
    let value = alpha_from_determinant(det.value, n_eff, k);
    Ok(AlphaBound {
        s,
        f,
        n_effective: n_eff,
        k,
        value,
        method: BoundMethod::DeterminantFormula,
        determinant: Some(det),
    })
}

/// `sqrt(D / sqrt(n k^{n-1}))`.
pub fn alpha_from_determinant(d: f64, n: usize, k: usize) -> f64 {
    let log_den = 0.5 * ((n as f64).ln() + (n as f64 - 1.0) * (k as f64).ln());
    (d.max(0.0) * (-log_den).exp()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub s: usize,
    pub f: usize,
    pub n: usize,
    /// Smallest `‖x ∗ y‖` found over unit `x ∈ Σ_s`, `y ∈ Σ_f` in `[n]`.
    pub value: f64,
    pub x: ReIm,
    pub y: ReIm,
    pub support_pairs: usize,
    pub exhaustive_supports: bool,
    pub restarts: usize,
    pub seed: u64,
}

/// Bottom eigenpair of `(B_{conj(t)})_{I,I}`: minimizes `‖u ∗ t‖` over unit
/// `u` supported on `I`.
fn best_partner(t: &[C64], support: &[usize], n: usize) -> (f64, Vec<C64>) {
    let row: Vec<C64> = autocorrelation_row(&signals::conj(t), n);
    let toe = HermitianToeplitz { first_row: row };
    let eig = linalg::hermitian_eigen(&toe.submatrix(support)).expect("square submatrix");
    let mut u = vec![ZERO; n];
    for (a, &i) in support.iter().enumerate() {
        u[i] = eig.vectors[(a, 0)];
    }
    (eig.values[0].max(0.0), u)
}

/// Alternating minimization on fixed supports from a random start.
/// Returns `(‖x ∗ y‖, x, y)`.
fn alternate(i_sup: &[usize], j_sup: &[usize], n: usize, rng: &mut SeededRng) -> (f64, Vec<C64>, Vec<C64>) {
    let mut y = vec![ZERO; n];
    for &j in j_sup {
        y[j] = complex_gaussian(rng, 1.0);
    }
    let s = 1.0 / signals::norm(&y);
    y.iter_mut().for_each(|v| *v *= s);
    let mut x = vec![ZERO; n];
    let mut prev = f64::INFINITY;
    for _ in 0..200 {
        let (_, nx) = best_partner(&y, i_sup, n);
        x = nx;
        let (v, ny) = best_partner(&x, j_sup, n);
        y = ny;
        if prev.is_finite() && (prev - v).abs() <= 1e-10 * prev.max(1e-300) {
            break;
        }
        prev = v;
    }
    let val = signals::norm(&signals::linear_convolve_dense(&x, &y));
    (val, x, y)
}

/// Empirical `α(s, f)`: minimum of `‖x ∗ y‖` over unit `x ∈ Σ_s`, `y ∈ Σ_f`
/// supported in `[n]`. Supports are anchored at 0 (translation invariance)
/// and enumerated when there are at most `1e5` pairs, otherwise 2000 random
/// pairs are used. Each pair gets `trials` alternating-minimization restarts.
pub fn alpha_empirical(s: usize, f: usize, n: usize, trials: usize, seed: u64) -> Result<AlphaEstimate> {
    check_sparsities(s, f, n)?;
    if trials == 0 {
        return invalid("alpha search needs at least one trial");
    }
    if s.min(f) == 1 {
        let mut e0 = vec![ZERO; n];
        e0[0] = C64::new(1.0, 0.0);
        return Ok(AlphaEstimate {
            s,
            f,
            n,
            value: 1.0,
            x: ReIm::from(e0.as_slice()),
            y: ReIm::from(e0.as_slice()),
            support_pairs: 0,
            exhaustive_supports: true,
            restarts: trials,
            seed,
        });
    }
    let pairs_total = binomial(n - 1, s - 1).saturating_mul(binomial(n - 1, f - 1));
    let (pairs, exhaustive): (Vec<(Vec<usize>, Vec<usize>)>, bool) = if pairs_total <= EXHAUSTIVE_LIMIT {
        let is = anchored_supports(n, s);
        let js = anchored_supports(n, f);
        let mut out = Vec::with_capacity(is.len() * js.len());
        for i in &is {
            for j in &js {
                out.push((i.clone(), j.clone()));
            }
        }
        (out, true)
    } else {
        let mut rng = seeded(split(seed, u64::MAX));
        let out = (0..2000)
            .map(|_| (random_anchored_support(&mut rng, n, s), random_anchored_support(&mut rng, n, f)))
            .collect();
        (out, false)
    };
    let best = pairs
        .par_iter()
        .enumerate()
        .map(|(pi, (i_sup, j_sup))| {
            let mut rng = seeded(split(seed, pi as u64));
            let mut best = (f64::INFINITY, Vec::new(), Vec::new());
            for _ in 0..trials {
                let r = alternate(i_sup, j_sup, n, &mut rng);
                if r.0 < best.0 {
                    best = r;
                }
            }
            (best, pi)
        })
        .reduce(
            || ((f64::INFINITY, Vec::new(), Vec::new()), usize::MAX),
            |a, b| if b.0 .0 < a.0 .0 || (b.0 .0 == a.0 .0 && b.1 < a.1) { b } else { a },
        );
    let ((value, x, y), _) = best;
    Ok(AlphaEstimate {
        s,
        f,
        n,
        value,
        x: ReIm::from(x.as_slice()),
        y: ReIm::from(y.as_slice()),
        support_pairs: pairs.len(),
        exhaustive_supports: exhaustive,
        restarts: trials,
        seed,
    })
}

/// Provenance of one reported number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub quantity: String,
    pub method: String,
    pub seed: Option<u64>,
    pub generator: String,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnmpBounds {
    pub s: usize,
    pub f: usize,
    pub n: usize,
    pub n_effective: usize,
    pub alpha_lower: f64,
    pub alpha_empirical: f64,
    pub beta: f64,
    pub lower: AlphaBound,
    pub empirical: AlphaEstimate,
    pub certificates: Vec<Certificate>,
}

/// Lower bound, empirical value and `β = sqrt(min(s, f))` in one record.
pub fn rnmp_bounds(s: usize, f: usize, n: usize, trials: usize, det_budget: usize, seed: u64) -> Result<RnmpBounds> {
    let lower = alpha_lower_bound(s, f, n, det_budget, split(seed, 1))?;
    let empirical = alpha_empirical(s, f, n, trials, split(seed, 2))?;
    let beta = (s.min(f) as f64).sqrt();
    let certificates = vec![
        Certificate {
            quantity: "alpha_lower".into(),
            method: match lower.method {
                BoundMethod::AnalyticEquality => "equality case min(s,f)=1".into(),
                BoundMethod::DeterminantFormula => "determinant formula with searched D".into(),
                BoundMethod::NotComputed => "not computed (compressed dimension too large)".into(),
            },
            seed: lower.determinant.as_ref().map(|d| d.seed),
            generator: GENERATOR.into(),
            exhaustive: lower.determinant.as_ref().is_none_or(|d| d.exhaustive_supports),
        },
        Certificate {
            quantity: "alpha_empirical".into(),
            method: "alternating restricted-eigenvector minimization".into(),
            seed: Some(empirical.seed),
            generator: GENERATOR.into(),
            exhaustive: empirical.exhaustive_supports,
        },
        Certificate {
            quantity: "beta".into(),
            method: "closed form sqrt(min(s,f))".into(),
            seed: None,
            generator: GENERATOR.into(),
            exhaustive: true,
        },
    ];
    Ok(RnmpBounds {
        s,
        f,
        n,
        n_effective: lower.n_effective,
        alpha_lower: lower.value,
        alpha_empirical: empirical.value,
        beta,
        lower,
        empirical,
        certificates,
    })
}

/// Reject zero vectors before forming a Toeplitz matrix.
pub fn check_nonzero(t: &[C64]) -> Result<()> {
    if t.iter().all(|v| *v == ZERO) {
        return Err(Error::ZeroVector);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_sparse(seed: u64, n: usize, s: usize) -> SparseVector {
        let mut rng = seeded(seed);
        let supp = random_subset(&mut rng, n, s);
        let vals = supp.iter().map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        SparseVector::new(n, supp, vals).unwrap().normalized().unwrap()
    }

    fn half() -> HermitianToeplitz {
        HermitianToeplitz::new(vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap()
    }

    fn tri3() -> HermitianToeplitz {
        HermitianToeplitz::new(vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn autocorrelation_examples() {
        let e0 = SparseVector::basis(5, 0).unwrap();
        let t = autocorrelation_toeplitz(&e0, 5).unwrap();
        assert_eq!(t.to_matrix(), CMatrix::identity(5));
        let r = 1.0 / 2f64.sqrt();
        let v = SparseVector::new(2, vec![0, 1], vec![c(r, 0.0), c(r, 0.0)]).unwrap();
        let t = autocorrelation_toeplitz(&v, 2).unwrap();
        assert!((t.entry(0, 1) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((t.entry(1, 0) - c(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(autocorrelation_toeplitz(&SparseVector::zeros(3), 3), Err(Error::ZeroVector)));
    }

    #[test]
    fn autocorrelation_energy_bounded_by_sparsity() {
        for seed in 0..100 {
            let f = 1 + (seed as usize % 5);
            let t = random_sparse(seed, 16, f);
            let toe = autocorrelation_toeplitz(&t, 16).unwrap();
            assert!((toe.first_row()[0].re - 1.0).abs() < 1e-12);
            assert!(toe.coefficient_energy() <= f as f64 + 1e-12);
            assert!(toe.to_matrix().is_hermitian(1e-15));
        }
    }

    #[test]
    fn quadratic_form_is_convolution_energy() {
        for seed in 0..20 {
            let n = 9;
            let x = random_sparse(seed, n, 3).dense();
            let y = random_sparse(seed + 100, n, 4).dense();
            let toe = HermitianToeplitz::new(autocorrelation_row(&signals::conj(&y), n)).unwrap();
            let direct = signals::norm_sq(&signals::linear_convolve_dense(&x, &y));
            assert!((toe.quadratic_form(&x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_examples() {
        let id = HermitianToeplitz::identity(4);
        assert_eq!(symbol_eval(&id, 1.3), 1.0);
        let h = half();
        for w in [0.0, 0.7, 2.0, 3.1] {
            assert!((symbol_eval(&h, w) - (1.0 + w.cos())).abs() < 1e-14);
        }
        for seed in 0..100 {
            let t = random_sparse(seed, 12, 4);
            let toe = autocorrelation_toeplitz(&t, 12).unwrap();
            assert!(symbol_grid_min(&toe, 4096) >= -1e-10);
        }
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((min_eigenvalue(&half()).unwrap() - 0.5).abs() < 1e-12);
        let want = 1.0 - 2f64.sqrt() / 2.0;
        assert!((min_eigenvalue(&tri3()).unwrap() - want).abs() < 1e-10);
        assert!((min_eigenvalue(&HermitianToeplitz::identity(6)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn restricted_eigenvalue_examples() {
        let r = restricted_min_eigenvalue(&tri3(), 2).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!(r.exhaustive);
        assert!(r.support == vec![0, 1] || r.support == vec![1, 2]);
        let far = tri3().submatrix(&[0, 2]);
        assert!((linalg::min_eigenvalue(&far).unwrap() - 1.0).abs() < 1e-14);
        let full = restricted_min_eigenvalue(&tri3(), 3).unwrap();
        assert!((full.value - min_eigenvalue(&tri3()).unwrap()).abs() < 1e-12);
        assert!(restricted_min_eigenvalue(&tri3(), 0).is_err());
        assert!(restricted_min_eigenvalue(&tri3(), 4).is_err());
    }

    #[test]
    fn restricted_eigenvalue_monotone_and_interlaced() {
        for seed in 0..10 {
            let toe = autocorrelation_toeplitz(&random_sparse(seed, 10, 4), 10).unwrap();
            let lmin = min_eigenvalue(&toe).unwrap();
            let mut prev = f64::INFINITY;
            for s in 1..=10 {
                let v = restricted_min_eigenvalue(&toe, s).unwrap().value;
                assert!(v >= lmin - 1e-12);
                assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn greedy_heuristic_is_flagged_and_valid() {
        // C(40, 6) > 1e5 forces the heuristic
        let toe = autocorrelation_toeplitz(&random_sparse(4, 40, 5), 40).unwrap();
        let r = restricted_min_eigenvalue(&toe, 6).unwrap();
        assert!(!r.exhaustive);
        assert_eq!(r.support.len(), 6);
        let check = linalg::min_eigenvalue(&toe.submatrix(&r.support)).unwrap();
        assert!((check - r.value).abs() < 1e-12);
        assert!(r.value >= min_eigenvalue(&toe).unwrap() - 1e-12);
    }

    #[test]
    fn eigen_det_bound_examples() {
        let b = eigen_det_lower_bound(&half()).unwrap();
        assert!((b - 0.75 / (2f64.sqrt() * 1.5f64.sqrt())).abs() < 1e-12);
        assert!((b - 0.4330).abs() < 1e-4);
        assert!(b <= 0.5);
        let b = eigen_det_lower_bound(&HermitianToeplitz::identity(9)).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
        for seed in 0..100 {
            let n = 2 + seed as usize % 15;
            let t = random_sparse(seed, n, 1 + seed as usize % n.min(5));
            let toe = autocorrelation_toeplitz(&t, n).unwrap();
            assert!(eigen_det_lower_bound(&toe).unwrap() <= min_eigenvalue(&toe).unwrap() + 1e-12);
        }
    }

    #[test]
    fn restricted_determinant_examples() {
        let d = restricted_determinant(5, 1, 1, 0).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(!d.upper_estimate);
        let d = restricted_determinant(2, 2, 4, 1).unwrap();
        assert!((d.value - 0.75).abs() < 1e-9, "{}", d.value);
        let t = d.argmin.to_complex();
        let toe = autocorrelation_toeplitz(&SparseVector::from_dense(&t), 2).unwrap();
        let det = linalg::determinant(&toe.to_matrix()).unwrap().norm();
        assert!((det - d.value).abs() < 1e-9);
        assert!(restricted_determinant(4, 2, 0, 0).is_err());
    }

    #[test]
    fn restricted_determinant_nonincreasing_in_n() {
        let mut prev = f64::INFINITY;
        for n in 2..=8 {
            let d = restricted_determinant(n, 2, 3, 7).unwrap().value;
            assert!(d <= prev + 1e-9, "D_{n},2 = {d} > {prev}");
            prev = d;
        }
    }

    #[test]
    fn compressed_dimension_examples() {
        assert_eq!(compressed_dimension(2, 2, None), 16);
        assert_eq!(compressed_dimension(2, 3, None), 729);
        assert_eq!(compressed_dimension(1, 1, None), 1);
        assert_eq!(compressed_dimension(1, 2, Some(10)), 2);
        assert_eq!(compressed_dimension(2, 2, Some(5)), 5);
        assert_eq!(compressed_dimension(40, 40, None), usize::MAX);
    }

    #[test]
    fn alpha_lower_bound_examples() {
        let b = alpha_lower_bound(1, 4, 10, 1, 0).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.method, BoundMethod::AnalyticEquality);
        let b = alpha_lower_bound(2, 2, 2, 4, 0).unwrap();
        assert_eq!(b.n_effective, 2);
        let d = b.determinant.as_ref().unwrap().value;
        assert!((b.value - (d / (2.0f64 * 2.0).sqrt()).sqrt()).abs() < 1e-12);
        let emp = alpha_empirical(2, 2, 2, 8, 0).unwrap();
        assert!(b.value <= emp.value + 1e-9);
        let big = alpha_lower_bound(3, 3, 1000, 1, 0).unwrap();
        assert_eq!(big.method, BoundMethod::NotComputed);
    }

    #[test]
    fn alpha_empirical_known_values() {
        let a = alpha_empirical(1, 3, 8, 4, 0).unwrap();
        assert_eq!(a.value, 1.0);
        let a = alpha_empirical(2, 2, 4, 32, 1).unwrap();
        assert!((a.value - 0.5f64.sqrt()).abs() < 1e-6, "{}", a.value);
        let x = a.x.to_complex();
        let y = a.y.to_complex();
        let direct = signals::norm(&signals::linear_convolve_dense(&x, &y));
        assert!((direct - a.value).abs() < 1e-12);
        assert!((signals::norm(&x) - 1.0).abs() < 1e-10 && (signals::norm(&y) - 1.0).abs() < 1e-10);
        assert!(alpha_empirical(2, 2, 4, 0, 1).is_err());
        assert!(alpha_empirical(5, 2, 4, 1, 1).is_err());
    }

    #[test]
    fn alpha_empirical_decreases_with_sparsity() {
        let n = 6;
        let a22 = alpha_empirical(2, 2, n, 8, 3).unwrap().value;
        let a23 = alpha_empirical(2, 3, n, 8, 3).unwrap().value;
        let a33 = alpha_empirical(3, 3, n, 8, 3).unwrap().value;
        assert!(a23 <= a22 + 1e-9);
        assert!(a33 <= a23 + 1e-9);
        assert!(a33 <= 3f64.sqrt());
    }

    #[test]
    fn combinations_enumerate_all() {
        let items: Vec<usize> = (0..6).collect();
        for k in 0..=6 {
            let c = combinations(&items, k);
            assert_eq!(c.len() as u128, binomial(6, k));
            assert!(c.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(combinations(&items, 7).is_empty());
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
    }

    proptest! {
        #[test]
        fn unit_pairs_respect_rnmp_upper_bound(seed in any::<u64>(), s in 1usize..5, f in 1usize..5) {
            let n = 12;
            let x = random_sparse(seed, n, s).dense();
            let y = random_sparse(seed ^ 0xABCD, n, f).dense();
            let v = signals::norm(&signals::linear_convolve_dense(&x, &y));
            prop_assert!(v <= (s.min(f) as f64).sqrt() + 1e-9);
        }
    }
}
