//! Covering-number and sample-complexity calculators, random draws from the
//! structured signal sets, and Monte Carlo checks of `‖Φv‖ ≈ ‖v‖` on
//! `V = B(U)`.
//!
//! All logarithms are natural. The absolute constants (`c`, `c″`, `ρ`, `λ`)
//! are inputs; the formulas only fix how the bounds scale.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::operators::{BilinearDescriptor, BilinearMap, LinearOperator, OperatorDescriptor};
use crate::rng::{complex_gaussian, random_subset, seeded, split, SeededRng, GENERATOR};
use crate::rnmp::binomial;
use crate::signals;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const LN2: f64 = std::f64::consts::LN_2;

/// Relative threshold below which `‖B(u)‖` counts as a near-kernel draw.
pub const NEAR_KERNEL: f64 = 1e-12;

fn check_eps(eps_hat: f64) -> Result<()> {
    if !(eps_hat > 0.0 && eps_hat < 1.0) {
        return invalid(format!("covering radius must lie in (0, 1), got {eps_hat}"));
    }
    Ok(())
}

/// `d ln(3/ε̂) + ln L` for a union of `L` subspaces of dimension `d`.
pub fn entropy_union_subspaces(d: usize, l: f64, eps_hat: f64) -> Result<f64> {
    check_eps(eps_hat)?;
    if l < 1.0 {
        return invalid("number of subspaces must be at least 1");
    }
    Ok(d as f64 * (3.0 / eps_hat).ln() + l.ln())
}

/// Entropy of `Σ_{2k}` in `C^n`: the union bound with `d = 2k` and
/// `L = C(n, 2k)`.
pub fn entropy_sparse_vectors(k: usize, n: usize, eps_hat: f64) -> Result<f64> {
    let d = 2 * k;
    if d > n {
        return invalid(format!("2k = {d} exceeds n = {n}"));
    }
    entropy_union_subspaces(d, binomial(n, d) as f64, eps_hat)
}

/// `(2s + 2f + 1) 2κ ln(9/ε̂) + 2(s + f) ln(e n / (2 min(s, f)))`.
pub fn entropy_sparse_lowrank(s: usize, f: usize, kappa: usize, n: usize, eps_hat: f64) -> Result<f64> {
    check_eps(eps_hat)?;
    if s == 0 || f == 0 || kappa == 0 || n == 0 {
        return invalid("s, f, kappa and n must be positive");
    }
    let first = (2 * s + 2 * f + 1) as f64 * 2.0 * kappa as f64 * (9.0 / eps_hat).ln();
    let second = 2.0 * (s + f) as f64 * (std::f64::consts::E * n as f64 / (2 * s.min(f)) as f64).ln();
    Ok(first + second)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("distortion delta must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

/// `⌈c″ δ⁻² (s + f) ln(n / (κ min(s, f)))⌉`, with `κ = 1` for the rank-one
/// model and `κ = 2` for differences.
pub fn sample_complexity_bilinear(s: usize, f: usize, kappa: usize, n: usize, delta: f64, c2: f64) -> Result<usize> {
    check_delta(delta)?;
    if s == 0 || f == 0 || kappa == 0 {
        return invalid("s, f and kappa must be positive");
    }
    if c2 <= 0.0 {
        return invalid("constant c'' must be positive");
    }
    let arg = n as f64 / (kappa * s.min(f)) as f64;
    if arg <= 1.0 {
        return invalid(format!("log argument n/(kappa min(s,f)) = {arg} must exceed 1"));
    }
    Ok((c2 * (s + f) as f64 * arg.ln() / (delta * delta)).ceil() as usize)
}

/// `⌈40 (ρ + H + 3 ln 2)⌉`.
pub fn jl_sparsity_requirement(rho: f64, entropy: f64) -> Result<usize> {
    if rho <= 0.0 || entropy < 0.0 {
        return invalid("rho must be positive and the entropy nonnegative");
    }
    Ok((40.0 * (rho + entropy + 3.0 * LN2)).ceil() as usize)
}

/// `h_ε̂ = H_ε̂(U) + 4 ln 2`.
pub fn demodulator_entropy_term(entropy: f64) -> f64 {
    entropy + 4.0 * LN2
}

/// `⌈64 c δ⁻² (λ + h) max((ln(λ + h) ln n)², λ + ln 2)⌉` with
/// `h = H + 4 ln 2`, where `entropy` is `H_ε̂(U)`.
pub fn demodulator_measurement_bound(lambda: f64, entropy: f64, n: usize, delta: f64, c: f64) -> Result<usize> {
    check_delta(delta)?;
    if lambda <= 0.0 || entropy < 0.0 || c <= 0.0 || n < 2 {
        return invalid("need lambda > 0, entropy >= 0, c > 0 and n >= 2");
    }
    let lh = lambda + demodulator_entropy_term(entropy);
    let inner = (lh.ln() * (n as f64).ln()).powi(2).max(lambda + LN2);
    Ok((64.0 * c * lh * inner / (delta * delta)).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetStrictness {
    /// `ε < δ/7`.
    General,
    /// `ε < δ/4`, available when the approximation preserves norms.
    NormPreserving,
}

/// Largest admissible covering radius `ε̂ = α δ / (β σ d)` (`d = 7` or `4`),
/// shrunk by `0.999` to make the inequality strict.
pub fn epsilon_hat(delta: f64, alpha: f64, beta: f64, sigma: f64, strict: NetStrictness) -> Result<f64> {
    check_delta(delta)?;
    if !(alpha > 0.0 && alpha <= beta) || sigma < 1.0 {
        return invalid("need 0 < alpha <= beta and sigma >= 1");
    }
    let div = match strict {
        NetStrictness::General => 7.0,
        NetStrictness::NormPreserving => 4.0,
    };
    Ok(alpha * delta / (beta * sigma * div) * 0.999)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetKind {
    /// `Σ_s ⊂ C^{n1}`.
    SparseVectors,
    /// `x ⊗ y` with `x ∈ Σ_s ⊂ C^{n1}`, `y ∈ Σ_f ⊂ C^{n2}`.
    SparseRankOne,
    /// Difference of two independent sparse rank-one matrices.
    SparseRankOneDiff,
    /// Rank at most `κ` with `s` nonzero rows and `f` nonzero columns.
    SparseLowRank,
    /// `(x1 - x2) ⊗ (x1 + x2)` with `x1, x2 ∈ Σ_s`, square `n1 = n2`.
    SymmetricQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuredSetSpec {
    pub kind: SetKind,
    pub n1: usize,
    pub n2: usize,
    pub s: usize,
    pub f: usize,
    pub kappa: usize,
}

impl StructuredSetSpec {
    pub fn sparse_rank_one(n: usize, s: usize, f: usize) -> Self {
        Self {
            kind: SetKind::SparseRankOne,
            n1: n,
            n2: n,
            s,
            f,
            kappa: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.s == 0 || self.kappa == 0 {
            return invalid("dimensions, s and kappa must be positive");
        }
        if self.s > self.n1 {
            return invalid(format!("s = {} exceeds n1 = {}", self.s, self.n1));
        }
        match self.kind {
            SetKind::SparseVectors => Ok(()),
            SetKind::SymmetricQuadratic => {
                if self.n1 != self.n2 {
                    return invalid("symmetric quadratic sets need n1 = n2");
                }
                Ok(())
            }
            _ => {
                if self.f == 0 || self.f > self.n2 {
                    return invalid(format!("f = {} must lie in 1..={}", self.f, self.n2));
                }
                if self.kappa > self.s.min(self.f) {
                    return invalid("kappa must not exceed min(s, f)");
                }
                Ok(())
            }
        }
    }

    /// Length of a lifted sample.
    pub fn lifted_len(&self) -> usize {
        match self.kind {
            SetKind::SparseVectors => self.n1,
            _ => self.n1 * self.n2,
        }
    }
}

/// One draw from a structured set, normalized to unit (Frobenius) norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSample {
    /// The vector itself, or `vec` of the matrix (row-major).
    pub lifted: Vec<C64>,
    /// `(x, y)` for rank-one kinds, with `lifted = vec(x ⊗ y)`.
    pub factors: Option<(Vec<C64>, Vec<C64>)>,
    pub support_x: Vec<usize>,
    pub support_y: Vec<usize>,
}

fn sparse_unit(rng: &mut SeededRng, n: usize, support: &[usize]) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    for &i in support {
        v[i] = complex_gaussian(rng, 1.0);
    }
    let s = 1.0 / signals::norm(&v);
    v.iter_mut().for_each(|z| *z *= s);
    v
}

fn normalize(v: &mut [C64]) {
    let nrm = signals::norm(v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|z| *z /= nrm);
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// Uniform random supports and i.i.d. complex Gaussian values.
pub fn sample_structured(spec: &StructuredSetSpec, seed: u64) -> Result<StructuredSample> {
    spec.validate()?;
    let mut rng = seeded(seed);
    Ok(sample_with(spec, &mut rng))
}

fn sample_with(spec: &StructuredSetSpec, rng: &mut SeededRng) -> StructuredSample {
    let (n1, n2, s, f) = (spec.n1, spec.n2, spec.s, spec.f);
    match spec.kind {
        SetKind::SparseVectors => {
            let sx = random_subset(rng, n1, s);
            StructuredSample {
                lifted: sparse_unit(rng, n1, &sx),
                factors: None,
                support_x: sx,
                support_y: Vec::new(),
            }
        }
        SetKind::SparseRankOne => {
            let sx = random_subset(rng, n1, s);
            let sy = random_subset(rng, n2, f);
            let x = sparse_unit(rng, n1, &sx);
            let y = sparse_unit(rng, n2, &sy);
            StructuredSample {
                lifted: crate::operators::rank_one_pack(&x, &y),
                factors: Some((x, y)),
                support_x: sx,
                support_y: sy,
            }
        }
        SetKind::SparseRankOneDiff => {
            let sx1 = random_subset(rng, n1, s);
            let sy1 = random_subset(rng, n2, f);
            let sx2 = random_subset(rng, n1, s);
            let sy2 = random_subset(rng, n2, f);
            let x1 = sparse_unit(rng, n1, &sx1);
            let y1 = sparse_unit(rng, n2, &sy1);
            let x2 = sparse_unit(rng, n1, &sx2);
            let y2 = sparse_unit(rng, n2, &sy2);
            let mut lifted = signals::sub(&crate::operators::rank_one_pack(&x1, &y1), &crate::operators::rank_one_pack(&x2, &y2));
            normalize(&mut lifted);
            StructuredSample {
                lifted,
                factors: None,
                support_x: union(&sx1, &sx2),
                support_y: union(&sy1, &sy2),
            }
        }
        SetKind::SparseLowRank => {
            let sx = random_subset(rng, n1, s);
            let sy = random_subset(rng, n2, f);
            let mut lifted = vec![ZERO; n1 * n2];
            for _ in 0..spec.kappa {
                let x = sparse_unit(rng, n1, &sx);
                let y = sparse_unit(rng, n2, &sy);
                for (l, v) in lifted.iter_mut().zip(crate::operators::rank_one_pack(&x, &y)) {
                    *l += v;
                }
            }
            normalize(&mut lifted);
            StructuredSample {
                lifted,
                factors: None,
                support_x: sx,
                support_y: sy,
            }
        }
        SetKind::SymmetricQuadratic => {
            let s1 = random_subset(rng, n1, s);
            let s2 = random_subset(rng, n1, s);
            let x1 = sparse_unit(rng, n1, &s1);
            let x2 = sparse_unit(rng, n1, &s2);
            let mut a = signals::sub(&x1, &x2);
            let mut b = signals::add(&x1, &x2);
            normalize(&mut a);
            normalize(&mut b);
            let sup = union(&s1, &s2);
            StructuredSample {
                lifted: crate::operators::rank_one_pack(&a, &b),
                factors: Some((a, b)),
                support_x: sup.clone(),
                support_y: sup,
            }
        }
    }
}

/// Per-trial line of a [`DistortionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    /// `‖Φv‖ / ‖v‖`; `None` for near-kernel draws.
    pub ratio: Option<f64>,
    pub support_x: Vec<usize>,
    pub support_y: Vec<usize>,
}

/// Monte Carlo distortion statistics. `delta_hat` is the largest observed
/// `|ratio - 1|`, a lower estimate of the uniform distortion over the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub trials: usize,
    pub evaluated: usize,
    pub near_kernel: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub delta_hat: f64,
    pub mean_abs_deviation: f64,
    pub rms_deviation: f64,
    pub seed: u64,
    pub generator: String,
    pub operator: OperatorDescriptor,
    pub bilinear: Option<BilinearDescriptor>,
    pub set: StructuredSetSpec,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

fn join(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

impl DistortionReport {
    /// One row per trial: `trial_id,ratio,distortion,support_x,support_y`.
    /// Near-kernel draws have empty ratio and distortion fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial_id,ratio,distortion,support_x,support_y\n");
        for r in &self.records {
            let (ratio, dist) = match r.ratio {
                Some(v) => (v.to_string(), (v - 1.0).abs().to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{},{},{},{}", r.trial_id, ratio, dist, join(&r.support_x), join(&r.support_y));
        }
        out
    }
}

/// Draw `trials` samples `u` from `spec`, map them through `B` (or use them
/// directly when `bilinear` is `None`) and record `‖Φv‖/‖v‖`. Draws with
/// `‖v‖ < 1e-12 ‖u‖` are counted as near-kernel and left out of the
/// statistics. Trial `t` uses the seed `split(seed, t)`.
pub fn verify_embedding(
    phi: &dyn LinearOperator,
    bilinear: Option<&BilinearMap>,
    spec: &StructuredSetSpec,
    trials: usize,
    seed: u64,
) -> Result<DistortionReport> {
    spec.validate()?;
    if trials == 0 {
        return invalid("need at least one trial");
    }
    match bilinear {
        Some(b) => {
            if spec.kind == SetKind::SparseVectors {
                return invalid("sparse-vector sets are embedded directly, without a bilinear map");
            }
            if (b.n1(), b.n2()) != (spec.n1, spec.n2) {
                return invalid(format!(
                    "bilinear map acts on {}x{}, set lives in {}x{}",
                    b.n1(),
                    b.n2(),
                    spec.n1,
                    spec.n2
                ));
            }
            if phi.cols() != b.out_dim() {
                return Err(Error::DimensionMismatch {
                    expected: b.out_dim(),
                    got: phi.cols(),
                });
            }
        }
        None => {
            if phi.cols() != spec.lifted_len() {
                return Err(Error::DimensionMismatch {
                    expected: spec.lifted_len(),
                    got: phi.cols(),
                });
            }
        }
    }
    let lifted_op = bilinear.map(|b| b.as_operator());
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(split(seed, t as u64));
            let u = sample_with(spec, &mut rng);
            let v = match &lifted_op {
                Some(op) => op.apply(&u.lifted),
                None => u.lifted.clone(),
            };
            let nv = signals::norm(&v);
            let nu = signals::norm(&u.lifted);
            let ratio = (nv >= NEAR_KERNEL * nu && nv > 0.0).then(|| signals::norm(&phi.apply(&v)) / nv);
            TrialRecord {
                trial_id: t,
                ratio,
                support_x: u.support_x,
                support_y: u.support_y,
            }
        })
        .collect();
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    let evaluated = ratios.len();
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let denom = evaluated.max(1) as f64;
    Ok(DistortionReport {
        trials,
        evaluated,
        near_kernel: trials - evaluated,
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        delta_hat: dev.iter().copied().fold(0.0, f64::max),
        mean_abs_deviation: dev.iter().sum::<f64>() / denom,
        rms_deviation: (dev.iter().map(|d| d * d).sum::<f64>() / denom).sqrt(),
        seed,
        generator: GENERATOR.into(),
        operator: phi.descriptor(),
        bilinear: bilinear.map(|b| b.descriptor()),
        set: *spec,
        records,
    })
}

/// Empirical RNMP constants of a bilinear map on a rank-one set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnmpDistortion {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Gram matrix of the columns `B(e_a, y)`, `a ∈ support`, or of
/// `B(x, e_b)` when `left` is false.
fn partial_gram(b: &BilinearMap, fixed: &[C64], support: &[usize], left: bool) -> linalg::CMatrix {
    let dim = if left { b.n1() } else { b.n2() };
    let cols: Vec<Vec<C64>> = support
        .iter()
        .map(|&a| {
            let mut e = vec![ZERO; dim];
            e[a] = C64::new(1.0, 0.0);
            if left {
                b.apply_pair(&e, fixed).expect("dimensions checked")
            } else {
                b.apply_pair(fixed, &e).expect("dimensions checked")
            }
        })
        .collect();
    linalg::CMatrix::from_fn(support.len(), support.len(), |i, j| signals::vdot(&cols[i], &cols[j]))
}

/// Alternating extremal-eigenvector refinement on fixed supports; `minimize`
/// picks the bottom or top eigenvector. Returns the final ratio.
fn refine_pair(b: &BilinearMap, x: &[C64], y: &[C64], sx: &[usize], sy: &[usize], minimize: bool) -> f64 {
    let pick = |g: &linalg::CMatrix| -> (f64, Vec<C64>) {
        let eig = linalg::hermitian_eigen(g).expect("square gram");
        let idx = if minimize { 0 } else { eig.values.len() - 1 };
        (eig.values[idx], eig.vectors.column(idx))
    };
    let mut x = x.to_vec();
    let mut y = y.to_vec();
    let mut prev = f64::NAN;
    for _ in 0..100 {
        let (_, cx) = pick(&partial_gram(b, &y, sx, true));
        x = vec![ZERO; b.n1()];
        for (a, &i) in sx.iter().enumerate() {
            x[i] = cx[a];
        }
        let (v, cy) = pick(&partial_gram(b, &x, sy, false));
        y = vec![ZERO; b.n2()];
        for (a, &j) in sy.iter().enumerate() {
            y[j] = cy[a];
        }
        if (prev - v).abs() <= 1e-12 * v.abs().max(1e-300) {
            break;
        }
        prev = v;
    }
    signals::norm(&b.apply_pair(&x, &y).expect("dimensions checked"))
}

/// Empirical `(α̂, β̂)` with `α̂ ‖u‖ <= ‖B(u)‖ <= β̂ ‖u‖` over sampled
/// rank-one `u = x ⊗ y` from `spec`, refined by alternating eigenvector
/// updates started from the four most extreme draws on each side.
pub fn rnmp_distortion_of_b(b: &BilinearMap, spec: &StructuredSetSpec, trials: usize, seed: u64) -> Result<RnmpDistortion> {
    spec.validate()?;
    if spec.kind != SetKind::SparseRankOne {
        return invalid("RNMP distortion is defined on sparse rank-one sets");
    }
    if (b.n1(), b.n2()) != (spec.n1, spec.n2) {
        return invalid("bilinear map and set dimensions differ");
    }
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let draws: Vec<(f64, StructuredSample)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(split(seed, t as u64));
            let u = sample_with(spec, &mut rng);
            let (x, y) = u.factors.as_ref().expect("rank-one sample");
            let r = signals::norm(&b.apply_pair(x, y).expect("dimensions checked"));
            (r, u)
        })
        .collect();
    let mut order: Vec<usize> = (0..trials).collect();
    order.sort_by(|&i, &j| draws[i].0.total_cmp(&draws[j].0).then(i.cmp(&j)));
    let sampled_min = draws[order[0]].0;
    let sampled_max = draws[order[trials - 1]].0;
    let refine = |idx: usize, minimize: bool| {
        let u = &draws[idx].1;
        let (x, y) = u.factors.as_ref().expect("rank-one sample");
        refine_pair(b, x, y, &u.support_x, &u.support_y, minimize)
    };
    let k = trials.min(4);
    let lo = order[..k].par_iter().map(|&i| refine(i, true)).reduce(|| f64::INFINITY, f64::min);
    let hi = order[trials - k..]
        .par_iter()
        .map(|&i| refine(i, false))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(RnmpDistortion {
        alpha_hat: lo.min(sampled_min),
        beta_hat: hi.max(sampled_max),
        sampled_min,
        sampled_max,
        trials,
        seed,
    })
}
