//! Complex ℓ1 recovery for lifted bilinear problems and rank-one
//! factorization of the recovered matrix.
//!
//! `‖u‖₁` is the sum of complex magnitudes; soft-thresholding shrinks
//! magnitudes and keeps phases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operators::LinearOperator;
use crate::rng::{complex_gaussian, random_subset, seeded, split, GENERATOR};
use crate::signals::{self, norm};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative tolerance on the primal residual `‖u - z‖` and on the change
    /// of the sparse iterate.
    pub tolerance: f64,
    /// ADMM penalty `ρ` (threshold `1/ρ`). `None` picks `ρ` from the
    /// least-norm solution's scale.
    pub penalty: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-8,
            penalty: None,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.tolerance > 0.0) || self.penalty.is_some_and(|p| !(p > 0.0)) {
            return invalid("solver options must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpdnResult {
    /// Feasible iterate (`‖A u - b‖ <= ε` up to rounding).
    pub solution: Vec<C64>,
    /// Sparse iterate after the final shrinkage step.
    pub sparse: Vec<C64>,
    pub objective: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub penalty: f64,
    /// `sqrt(‖z_{k+1} - z_k‖² + ‖w_{k+1} - w_k‖²)` per iteration, which is
    /// nonincreasing for ADMM.
    pub fixed_point_residual: Vec<f64>,
}

pub fn l1_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Complex soft-thresholding at level `t`.
pub fn soft_threshold(v: &[C64], t: f64) -> Vec<C64> {
    v.iter()
        .map(|z| {
            let a = z.norm();
            if a <= t {
                ZERO
            } else {
                z * ((a - t) / a)
            }
        })
        .collect()
}

/// Exact Euclidean projection onto `{u : ‖A u - b‖ <= ε}` through the
/// eigendecomposition `A Aᴴ = V Λ Vᴴ`.
pub struct BallProjector {
    /// `Q = Vᴴ A`.
    q: CMatrix,
    lambda: Vec<f64>,
    /// `Vᴴ b`.
    vb: Vec<C64>,
    eps: f64,
    zero_tol: f64,
}

impl BallProjector {
    pub fn new(a: &CMatrix, b: &[C64], eps: f64) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        if !(eps >= 0.0) {
            return invalid("noise level must be nonnegative");
        }
        let aah = a.matmul(&a.adjoint());
        let eig = linalg::hermitian_eigen(&aah)?;
        let vh = eig.vectors.adjoint();
        let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
        Ok(Self {
            q: vh.matmul(a),
            vb: vh.matvec(b),
            lambda: eig.values.iter().map(|l| l.max(0.0)).collect(),
            eps,
            zero_tol: 1e-12 * top.max(f64::MIN_POSITIVE),
        })
    }

    /// Shrink factors `μ/(1 + μλ_i)` (or `1/λ_i` for `μ = ∞`) for the
    /// rotated residual `r`.
    fn multipliers(&self, r: &[C64]) -> Vec<f64> {
        let mag: Vec<f64> = r.iter().map(|z| z.norm_sqr()).collect();
        let eps2 = self.eps * self.eps;
        let total: f64 = mag.iter().sum();
        if total <= eps2 {
            return vec![0.0; r.len()];
        }
        let stuck: f64 = mag
            .iter()
            .zip(&self.lambda)
            .filter(|(_, l)| **l <= self.zero_tol)
            .map(|(m, _)| m)
            .sum();
        let inf_mult = || {
            self.lambda
                .iter()
                .map(|&l| if l > self.zero_tol { 1.0 / l } else { 0.0 })
                .collect()
        };
        if self.eps == 0.0 || stuck >= eps2 {
            return inf_mult();
        }
        // g(μ) = Σ m_i / (1 + μ λ_i)² - ε² is convex and decreasing; Newton
        // from μ = 0 increases monotonically to the root.
        let mut mu = 0.0f64;
        for _ in 0..200 {
            let mut g = -eps2;
            let mut dg = 0.0;
            for (m, &l) in mag.iter().zip(&self.lambda) {
                let d = 1.0 + mu * l;
                g += m / (d * d);
                dg -= 2.0 * m * l / (d * d * d);
            }
            if g <= 1e-15 * eps2 || dg == 0.0 {
                break;
            }
            let step = g / dg;
            mu -= step;
            if (-step) <= 1e-14 * mu {
                break;
            }
        }
        if !mu.is_finite() {
            return inf_mult();
        }
        self.lambda
            .iter()
            .map(|&l| if l > self.zero_tol { mu / (1.0 + mu * l) } else { mu })
            .collect()
    }

    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let qv = self.q.matvec(v);
        let r: Vec<C64> = qv.iter().zip(&self.vb).map(|(a, b)| a - b).collect();
        let mult = self.multipliers(&r);
        if mult.iter().all(|m| *m == 0.0) {
            return v.to_vec();
        }
        let scaled: Vec<C64> = r.iter().zip(&mult).map(|(z, m)| z * m).collect();
        let corr = self.q.adjoint_matvec(&scaled);
        v.iter().zip(&corr).map(|(a, c)| a - c).collect()
    }
}

fn check_system(a_rows: usize, b: &[C64], eps: f64, opts: &SolverOptions) -> Result<()> {
    opts.validate()?;
    if b.len() != a_rows {
        return Err(Error::DimensionMismatch {
            expected: a_rows,
            got: b.len(),
        });
    }
    if !(eps >= 0.0) {
        return invalid("noise level must be nonnegative");
    }
    Ok(())
}

fn auto_penalty(scale: f64, dim: usize) -> f64 {
    if scale > 0.0 {
        10.0 * (dim as f64).sqrt() / scale
    } else {
        1.0
    }
}

/// Synthesis program `min ‖u‖₁ s.t. ‖A u - b‖ <= ε` by scaled ADMM with an
/// exact projection step:
/// `u ← P_C(z - w)`, `z ← soft(u + w, 1/ρ)`, `w ← w + u - z`.
pub fn bpdn_synthesis(a: &dyn LinearOperator, b: &[C64], eps: f64, opts: &SolverOptions) -> Result<BpdnResult> {
    check_system(a.rows(), b, eps, opts)?;
    let mat = a.materialize();
    bpdn_synthesis_dense(&mat, b, eps, opts)
}

/// [`bpdn_synthesis`] on an explicit matrix.
pub fn bpdn_synthesis_dense(a: &CMatrix, b: &[C64], eps: f64, opts: &SolverOptions) -> Result<BpdnResult> {
    check_system(a.rows(), b, eps, opts)?;
    let n = a.cols();
    let proj = BallProjector::new(a, b, eps)?;
    let u0 = proj.project(&vec![ZERO; n]);
    let scale = norm(&u0);
    let rho = opts.penalty.unwrap_or_else(|| auto_penalty(scale, n));
    let thr = 1.0 / rho;
    let mut z = soft_threshold(&u0, thr);
    let mut w = signals::sub(&u0, &z);
    let mut u = u0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..opts.max_iterations {
        iterations = k + 1;
        let zw = signals::sub(&z, &w);
        u = proj.project(&zw);
        let uw = signals::add(&u, &w);
        let z_new = soft_threshold(&uw, thr);
        let w_new: Vec<C64> = uw.iter().zip(&z_new).map(|(a, b)| a - b).collect();
        let dz = norm(&signals::sub(&z_new, &z));
        let dw = norm(&signals::sub(&w_new, &w));
        history.push((dz * dz + dw * dw).sqrt());
        let primal = norm(&signals::sub(&u, &z_new));
        z = z_new;
        w = w_new;
        let zn = norm(&z).max(norm(&u));
        if primal <= opts.tolerance * zn.max(f64::MIN_POSITIVE) && dz <= opts.tolerance * zn.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        if zn == 0.0 && primal == 0.0 && dz == 0.0 {
            converged = true;
            break;
        }
    }
    let residual_norm = norm(&signals::sub(&a.matvec(&u), b));
    Ok(BpdnResult {
        objective: l1_norm(&u),
        solution: u,
        sparse: z,
        residual_norm,
        iterations,
        converged,
        penalty: rho,
        fixed_point_residual: history,
    })
}

/// Largest eigenvalue of `Bᴴ B` by power iteration.
fn operator_norm_sq(op: &dyn LinearOperator) -> f64 {
    let mut rng = seeded(0x5eed);
    let mut v: Vec<C64> = (0..op.cols()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
    let mut est = 0.0;
    for _ in 0..500 {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let next = op.adjoint(&op.apply(&v));
        let new_est = norm(&next);
        v = next;
        if (new_est - est).abs() <= 1e-12 * new_est {
            est = new_est;
            break;
        }
        est = new_est;
    }
    est
}

/// Analysis program `min ‖Bᴴ z‖₁ s.t. ‖Φ z - b‖ <= ε`, where `B` is the
/// lifted synthesis operator (`C^{n1 n2} → C^n`). Solved by linearized
/// ADMM on the split `p = Bᴴ z`:
/// `z ← P_C(z - B(Bᴴz - p + w)/L)`, `p ← soft(Bᴴz + w, 1/ρ)`,
/// `w ← w + Bᴴz - p`, with `L` slightly above `‖B‖²`.
pub fn bpdn_analysis(
    phi: &dyn LinearOperator,
    synthesis: &dyn LinearOperator,
    b: &[C64],
    eps: f64,
    opts: &SolverOptions,
) -> Result<BpdnResult> {
    check_system(phi.rows(), b, eps, opts)?;
    if phi.cols() != synthesis.rows() {
        return Err(Error::DimensionMismatch {
            expected: synthesis.rows(),
            got: phi.cols(),
        });
    }
    let mat = phi.materialize();
    let proj = BallProjector::new(&mat, b, eps)?;
    let n = phi.cols();
    let l = operator_norm_sq(synthesis) * (1.0 + 1e-6);
    if l == 0.0 {
        return invalid("synthesis operator is zero");
    }
    let mut z = proj.project(&vec![ZERO; n]);
    let bz0 = synthesis.adjoint(&z);
    let rho = opts.penalty.unwrap_or_else(|| auto_penalty(norm(&bz0), bz0.len()));
    let thr = 1.0 / rho;
    let mut p = soft_threshold(&bz0, thr);
    let mut w = signals::sub(&bz0, &p);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..opts.max_iterations {
        iterations = k + 1;
        let bz = synthesis.adjoint(&z);
        let resid: Vec<C64> = bz.iter().zip(&p).zip(&w).map(|((a, b), c)| a - b + c).collect();
        let grad = synthesis.apply(&resid);
        let step: Vec<C64> = z.iter().zip(&grad).map(|(a, g)| a - g / l).collect();
        let z_new = proj.project(&step);
        let bz_new = synthesis.adjoint(&z_new);
        let bw = signals::add(&bz_new, &w);
        let p_new = soft_threshold(&bw, thr);
        let w_new: Vec<C64> = bw.iter().zip(&p_new).map(|(a, b)| a - b).collect();
        let dz = norm(&signals::sub(&z_new, &z));
        let dp = norm(&signals::sub(&p_new, &p));
        let dw = norm(&signals::sub(&w_new, &w));
        history.push((dp * dp + dw * dw).sqrt());
        let primal = norm(&signals::sub(&bz_new, &p_new));
        z = z_new;
        p = p_new;
        w = w_new;
        let scale = norm(&z).max(norm(&p)).max(f64::MIN_POSITIVE);
        if (primal <= opts.tolerance * scale && dz <= opts.tolerance * scale) || (norm(&z) == 0.0 && dz == 0.0) {
            converged = true;
            break;
        }
    }
    let residual_norm = norm(&signals::sub(&mat.matvec(&z), b));
    Ok(BpdnResult {
        objective: l1_norm(&synthesis.adjoint(&z)),
        solution: z,
        sparse: p,
        residual_norm,
        iterations,
        converged,
        penalty: rho,
        fixed_point_residual: history,
    })
}

/// `(x, y)` with `x ⊗ y` the best rank-one approximation of `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneFactor {
    pub x: Vec<C64>,
    pub y: Vec<C64>,
    pub sigma: f64,
    /// `‖M - x ⊗ y‖_F / ‖M‖_F`.
    pub residual: f64,
}

/// Top singular pair of `M = σ u vᴴ + ...`, returned as `x = sqrt(σ) u`,
/// `y = sqrt(σ) conj(v)` so that `x yᵀ ≈ M` and `‖x‖ = ‖y‖`. The gauge makes
/// the largest-magnitude entry of `x` real and positive (first one on ties).
pub fn rank_one_factor(m: &CMatrix) -> Result<RankOneFactor> {
    let fro = m.frobenius_norm();
    if fro == 0.0 {
        return Err(Error::ZeroVector);
    }
    let eig = linalg::hermitian_eigen(&m.gram())?;
    let last = eig.values.len() - 1;
    let sigma = eig.values[last].max(0.0).sqrt();
    let v = eig.vectors.column(last);
    let mv = m.matvec(&v);
    let root = sigma.sqrt();
    let mut x: Vec<C64> = mv.iter().map(|z| z / root).collect();
    let mut y: Vec<C64> = v.iter().map(|z| z.conj() * root).collect();
    let mut lead = 0;
    for (i, z) in x.iter().enumerate() {
        if z.norm() > x[lead].norm() * (1.0 + 1e-12) {
            lead = i;
        }
    }
    let ph = x[lead] / x[lead].norm();
    x.iter_mut().for_each(|z| *z /= ph);
    y.iter_mut().for_each(|z| *z *= ph);
    let approx = CMatrix::outer(&x, &y);
    let residual = m.sub(&approx).frobenius_norm() / fro;
    Ok(RankOneFactor { x, y, sigma, residual })
}

/// One row of a phase-transition sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub success_rate: f64,
    pub successes: usize,
    pub trials: usize,
    pub unconverged: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub n1: usize,
    pub n2: usize,
    pub s: usize,
    pub f: usize,
    pub success_threshold: f64,
    pub generator: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,success_rate,trials,seed,successes,unconverged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.m, r.success_rate, r.trials, r.seed, r.successes, r.unconverged
            ));
        }
        out
    }
}

/// Planted recovery of `vec(x ⊗ y)` (`x ∈ Σ_s ⊂ C^{n1}`, `y ∈ Σ_f ⊂ C^{n2}`)
/// from `m` noiseless Gaussian measurements, for each `m` in `m_values`.
/// Within a trial the measurement rows are nested (the first `m` rows of one
/// `max(m) × n1 n2` draw), so a larger `m` only adds constraints. Success
/// means relative error at most `success_threshold`.
pub fn recovery_sweep(
    n1: usize,
    n2: usize,
    s: usize,
    f: usize,
    m_values: &[usize],
    trials: usize,
    seed: u64,
    success_threshold: f64,
    opts: &SolverOptions,
) -> Result<SweepReport> {
    if s == 0 || f == 0 || s > n1 || f > n2 {
        return invalid("sparsities must lie in 1..=n");
    }
    if trials == 0 || m_values.is_empty() {
        return invalid("need at least one trial and one m value");
    }
    let n = n1 * n2;
    let m_max = *m_values.iter().max().expect("nonempty");
    if m_values.contains(&0) || m_max > n {
        return invalid(format!("m values must lie in 1..={n}"));
    }
    let outcomes: Vec<Vec<(bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(split(seed, t as u64));
            let sx = random_subset(&mut rng, n1, s);
            let sy = random_subset(&mut rng, n2, f);
            let mut x = vec![ZERO; n1];
            let mut y = vec![ZERO; n2];
            sx.iter().for_each(|&i| x[i] = complex_gaussian(&mut rng, 1.0));
            sy.iter().for_each(|&j| y[j] = complex_gaussian(&mut rng, 1.0));
            let u0 = crate::operators::rank_one_pack(&x, &y);
            let full = CMatrix::from_fn(m_max, n, |_, _| complex_gaussian(&mut rng, 1.0));
            m_values
                .iter()
                .map(|&m| {
                    let a = CMatrix::from_fn(m, n, |i, j| full[(i, j)]);
                    let b = a.matvec(&u0);
                    match bpdn_synthesis_dense(&a, &b, 0.0, opts) {
                        Ok(r) => {
                            let err = norm(&signals::sub(&r.solution, &u0)) / norm(&u0);
                            (err <= success_threshold, r.converged)
                        }
                        Err(_) => (false, false),
                    }
                })
                .collect()
        })
        .collect();
    let rows = m_values
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let successes = outcomes.iter().filter(|o| o[k].0).count();
            let unconverged = outcomes.iter().filter(|o| !o[k].1).count();
            SweepRow {
                m,
                success_rate: successes as f64 / trials as f64,
                successes,
                trials,
                unconverged,
                seed,
            }
        })
        .collect();
    Ok(SweepReport {
        n1,
        n2,
        s,
        f,
        success_threshold,
        generator: GENERATOR.into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{gaussian_operator, weyl_heisenberg, DenseOperator};
    use crate::rng::complex_gaussian;

    fn planted(seed: u64, n: usize, k: usize) -> Vec<C64> {
        let mut rng = seeded(seed);
        let mut u = vec![ZERO; n];
        for i in random_subset(&mut rng, n, k) {
            u[i] = complex_gaussian(&mut rng, 1.0);
        }
        u
    }

    #[test]
    fn soft_threshold_keeps_phase() {
        let v = [C64::new(3.0, 4.0), C64::new(0.1, 0.0)];
        let s = soft_threshold(&v, 1.0);
        assert!((s[0] - C64::new(2.4, 3.2)).norm() < 1e-15);
        assert_eq!(s[1], ZERO);
    }

    #[test]
    fn projection_is_exact() {
        let mut rng = seeded(1);
        let a = CMatrix::from_fn(6, 15, |_, _| complex_gaussian(&mut rng, 1.0));
        let b: Vec<C64> = (0..6).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let v: Vec<C64> = (0..15).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        for eps in [0.0, 0.3, 1.0] {
            let p = BallProjector::new(&a, &b, eps).unwrap();
            let u = p.project(&v);
            let r = norm(&signals::sub(&a.matvec(&u), &b));
            assert!(r <= eps * (1.0 + 1e-9) + 1e-10, "eps {eps}: {r}");
            // optimality: v - u is in the range of Aᴴ and u is idempotent
            let again = p.project(&u);
            assert!(norm(&signals::sub(&again, &u)) < 1e-9);
            // any other feasible point is farther from v
            let other = p.project(&signals::add(&u, &v.iter().map(|z| z * 0.01).collect::<Vec<_>>()));
            assert!(norm(&signals::sub(&other, &v)) >= norm(&signals::sub(&u, &v)) - 1e-12);
        }
        // a feasible point is left alone
        let p = BallProjector::new(&a, &b, 1e6).unwrap();
        assert_eq!(p.project(&v), v);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = gaussian_operator(10, 30, 1).unwrap();
        let r = bpdn_synthesis(&g, &[ZERO; 10], 0.0, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.solution.iter().all(|z| *z == ZERO));
        let id = crate::operators::Identity::new(30);
        let r = bpdn_analysis(&g, &id, &[ZERO; 10], 0.0, &SolverOptions::default()).unwrap();
        assert!(r.solution.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn recovers_planted_sparse_vector() {
        let (m, n) = (40, 100);
        let u0 = planted(3, n, 3);
        let g = gaussian_operator(m, n, 4).unwrap();
        let b = g.apply(&u0);
        let r = bpdn_synthesis(&g, &b, 0.0, &SolverOptions::default()).unwrap();
        assert!(r.converged, "{} iterations", r.iterations);
        let err = norm(&signals::sub(&r.solution, &u0)) / norm(&u0);
        assert!(err <= 1e-3, "relative error {err}");
        assert!(r.residual_norm <= 1e-10 * norm(&b));
    }

    #[test]
    fn noisy_program_is_feasible() {
        let (m, n) = (30, 60);
        let u0 = planted(5, n, 4);
        let g = gaussian_operator(m, n, 6).unwrap();
        let mut b = g.apply(&u0);
        let mut rng = seeded(7);
        b.iter_mut().for_each(|z| *z += complex_gaussian(&mut rng, 1e-8));
        let eps = 0.01;
        let r = bpdn_synthesis(&g, &b, eps, &SolverOptions::default()).unwrap();
        assert!(r.residual_norm <= eps * (1.0 + 1e-6));
        assert!(r.objective <= l1_norm(&u0) + 1e-6);
    }

    #[test]
    fn fixed_point_residual_is_nonincreasing() {
        let (m, n) = (20, 50);
        let u0 = planted(8, n, 3);
        let g = gaussian_operator(m, n, 9).unwrap();
        let b = g.apply(&u0);
        let opts = SolverOptions {
            max_iterations: 400,
            ..Default::default()
        };
        let r = bpdn_synthesis(&g, &b, 0.0, &opts).unwrap();
        let h = &r.fixed_point_residual;
        for k in 1..h.len() {
            assert!(h[k] <= h[k - 1] * (1.0 + 1e-9) + 1e-12, "step {k}: {} > {}", h[k], h[k - 1]);
        }
    }

    #[test]
    fn analysis_equals_synthesis_for_unitary_b() {
        let n = 16;
        let phi = gaussian_operator(8, n, 11).unwrap();
        // unitary synthesis operator: a time-frequency shift
        let psi = weyl_heisenberg(3, 5, n).unwrap();
        let dict = DenseOperator::new(psi.materialize());
        let u0 = planted(12, n, 2);
        let b = phi.apply(&dict.apply(&u0));
        let opts = SolverOptions {
            max_iterations: 20000,
            tolerance: 1e-11,
            penalty: None,
        };
        let a = phi.materialize().matmul(dict.matrix());
        let syn = bpdn_synthesis_dense(&a, &b, 0.0, &opts).unwrap();
        let ana = bpdn_analysis(&phi, &dict, &b, 0.0, &opts).unwrap();
        assert!((syn.objective - ana.objective).abs() < 1e-6, "{} vs {}", syn.objective, ana.objective);
    }

    #[test]
    fn analysis_recovers_planted_instance() {
        let n = 32;
        let phi = gaussian_operator(20, n, 2).unwrap();
        let id = crate::operators::Identity::new(n);
        let z0 = planted(3, n, 2);
        let b = phi.apply(&z0);
        let r = bpdn_analysis(&phi, &id, &b, 0.0, &SolverOptions::default()).unwrap();
        assert!(norm(&signals::sub(&r.solution, &z0)) / norm(&z0) < 1e-3);
    }

    #[test]
    fn rank_one_factor_exact_and_gauge() {
        let mut rng = seeded(4);
        let x: Vec<C64> = (0..5).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let y: Vec<C64> = (0..7).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let m = CMatrix::outer(&x, &y);
        let f = rank_one_factor(&m).unwrap();
        assert!(f.residual <= 1e-10);
        assert!((norm(&f.x) - norm(&f.y)).abs() < 1e-10);
        let lead = (0..5).max_by(|&a, &b| f.x[a].norm().total_cmp(&f.x[b].norm())).unwrap();
        assert!(f.x[lead].im.abs() < 1e-12 && f.x[lead].re > 0.0);
        // f.x is a complex multiple of x
        let ratio = f.x[0] / x[0];
        assert!(f.x.iter().zip(&x).all(|(a, b)| (a - b * ratio).norm() < 1e-9));
        // scaling invariance of the direction
        let g = rank_one_factor(&m.scale(C64::new(-2.0, 3.0))).unwrap();
        let s = g.x[0] / f.x[0];
        assert!(g.x.iter().zip(&f.x).all(|(a, b)| (a - b * s).norm() < 1e-9));
        assert!(s.im.abs() < 1e-9 && s.re > 0.0);
        assert!(matches!(rank_one_factor(&CMatrix::zeros(2, 2)), Err(Error::ZeroVector)));
    }

    #[test]
    fn rank_two_residual_is_second_singular_value() {
        let mut rng = seeded(5);
        let v = |n: usize, rng: &mut crate::rng::SeededRng| -> Vec<C64> { (0..n).map(|_| complex_gaussian(rng, 1.0)).collect() };
        let m = CMatrix::outer(&v(6, &mut rng), &v(4, &mut rng)).add(&CMatrix::outer(&v(6, &mut rng), &v(4, &mut rng)).scale(C64::new(0.3, 0.0)));
        let f = rank_one_factor(&m).unwrap();
        // power-iteration oracle for sigma_1, then sigma_2 from the Frobenius norm
        let g = m.gram();
        let mut q: Vec<C64> = v(4, &mut rng);
        for _ in 0..2000 {
            let next = g.matvec(&q);
            let nn = norm(&next);
            q = next.iter().map(|z| z / nn).collect();
        }
        let s1sq = norm(&g.matvec(&q));
        let fro2 = m.frobenius_norm().powi(2);
        let s2 = (fro2 - s1sq).max(0.0).sqrt();
        assert!((f.residual - s2 / fro2.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn sweep_is_monotone_and_deterministic() {
        let opts = SolverOptions::default();
        let ms = [4, 8, 12, 16, 20, 24];
        let r = recovery_sweep(12, 2, 2, 1, &ms, 8, 3, 1e-3, &opts).unwrap();
        for w in r.rows.windows(2) {
            assert!(w[1].success_rate >= w[0].success_rate);
        }
        assert_eq!(r.rows.last().unwrap().success_rate, 1.0);
        let again = recovery_sweep(12, 2, 2, 1, &ms, 8, 3, 1e-3, &opts).unwrap();
        assert_eq!(r.to_csv(), again.to_csv());
    }
}
