//! Symmetrization maps, Fourier intensity measurements and empirical
//! stability of phase retrieval up to a global sign.
//!
//! `S(x) = (x_0, ..., x_{n-1}, conj x_{n-1}, ..., conj x_1)` needs a real
//! `x_0`; `S'(x) = (0_n, x, conj x reversed, 0_{n-1})` works for every `x`.
//! Both are fixed by `v ↦ Γ conj(v)`, so their DFTs are real and
//! `F(S ⊛ S) = sqrt(N) |F S|²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operators::BilinearMap;
use crate::rng::{complex_gaussian, real_gaussian, seeded, split, GENERATOR};
use crate::signals::{self, norm, ReIm};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Pairs whose denominator falls below this are treated as the global-sign
/// ambiguity and skipped.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;

/// Pattern-search sweeps applied to the best Monte Carlo pairs.
pub const PATTERN_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetrizationKind {
    /// `S`, length `2n - 1`.
    Plain,
    /// Zero padding to `2n - 1`, then `S`: length `4n - 3`.
    Padded,
    /// `S'`, length `4n - 1`.
    Prime,
}

impl SymmetrizationKind {
    pub fn output_len(self, n: usize) -> usize {
        match self {
            Self::Plain => 2 * n - 1,
            Self::Padded => 4 * n - 3,
            Self::Prime => 4 * n - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedVector {
    pub n: usize,
    pub kind: SymmetrizationKind,
    pub data: Vec<C64>,
}

impl SymmetrizedVector {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `max_k |v_k - conj v_{-k}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let rev = signals::time_reverse_dense(&self.data);
        self.data
            .iter()
            .zip(&rev)
            .map(|(a, b)| (a - b.conj()).norm())
            .fold(0.0, f64::max)
    }
}

fn check_real_lead(x: &[C64]) -> Result<()> {
    if x.is_empty() {
        return invalid("symmetrization needs n >= 1");
    }
    if x[0].im.abs() > 1e-12 * norm(x) {
        return invalid(format!("first entry must be real, got imaginary part {}", x[0].im));
    }
    Ok(())
}

pub fn symmetrize(x: &[C64]) -> Result<SymmetrizedVector> {
    check_real_lead(x)?;
    let n = x.len();
    let mut data = Vec::with_capacity(2 * n - 1);
    data.push(C64::new(x[0].re, 0.0));
    data.extend_from_slice(&x[1..]);
    data.extend(x[1..].iter().rev().map(|z| z.conj()));
    Ok(SymmetrizedVector {
        n,
        kind: SymmetrizationKind::Plain,
        data,
    })
}

/// `S` applied after zero padding to length `2n - 1`.
pub fn symmetrize_padded(x: &[C64]) -> Result<SymmetrizedVector> {
    check_real_lead(x)?;
    let n = x.len();
    let mut padded = x.to_vec();
    padded.resize(2 * n - 1, ZERO);
    let mut s = symmetrize(&padded)?;
    s.n = n;
    s.kind = SymmetrizationKind::Padded;
    Ok(s)
}

pub fn symmetrize_prime(x: &[C64]) -> Result<SymmetrizedVector> {
    if x.is_empty() {
        return invalid("symmetrization needs n >= 1");
    }
    let n = x.len();
    let mut data = vec![ZERO; n];
    data.extend_from_slice(x);
    data.extend(x.iter().rev().map(|z| z.conj()));
    data.resize(4 * n - 1, ZERO);
    Ok(SymmetrizedVector {
        n,
        kind: SymmetrizationKind::Prime,
        data,
    })
}

pub fn symmetrize_as(x: &[C64], kind: SymmetrizationKind) -> Result<SymmetrizedVector> {
    match kind {
        SymmetrizationKind::Plain => symmetrize(x),
        SymmetrizationKind::Padded => symmetrize_padded(x),
        SymmetrizationKind::Prime => symmetrize_prime(x),
    }
}

/// `|F v|²` for the symmetrized `v`, with the unitary DFT of its length.
pub fn intensity_measurements(x: &[C64], kind: SymmetrizationKind) -> Result<Vec<f64>> {
    let s = symmetrize_as(x, kind)?;
    Ok(signals::dft(&s.data).iter().map(|z| z.norm_sqr()).collect())
}

/// Residual of `B(x1,x1) - B(x2,x2) = B(x1 - x2, x1 + x2)`, relative to
/// `‖B(x1,x1)‖ + ‖B(x2,x2)‖` (zero when both sides vanish). `B` must be
/// symmetric.
pub fn binomial_difference_check(x1: &[C64], x2: &[C64], b: &BilinearMap) -> Result<f64> {
    if !b.is_symmetric() {
        return invalid("binomial identity needs a symmetric bilinear map");
    }
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x1.len(),
            got: x2.len(),
        });
    }
    let a1 = b.apply_pair(x1, x1)?;
    let a2 = b.apply_pair(x2, x2)?;
    let rhs = b.apply_pair(&signals::sub(x1, x2), &signals::add(x1, x2))?;
    Ok(relative_residual(&a1, &a2, &rhs))
}

/// The same identity for the sesquilinear correlation `(x, y) ↦ x ⊚ y`,
/// which fails for generic complex inputs.
pub fn correlation_binomial_residual(x1: &[C64], x2: &[C64]) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x1.len(),
            got: x2.len(),
        });
    }
    let a1 = signals::circular_correlate_dense(x1, x1);
    let a2 = signals::circular_correlate_dense(x2, x2);
    let rhs = signals::circular_correlate_dense(&signals::sub(x1, x2), &signals::add(x1, x2));
    Ok(relative_residual(&a1, &a2, &rhs))
}

fn relative_residual(a1: &[C64], a2: &[C64], rhs: &[C64]) -> f64 {
    let scale = norm(a1) + norm(a2);
    let diff: Vec<C64> = a1.iter().zip(a2).zip(rhs).map(|((p, q), r)| p - q - r).collect();
    let num = norm(&diff);
    if num == 0.0 {
        0.0
    } else {
        num / scale.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVariant {
    /// Zero padding then `S`, first entries real, denominator
    /// `‖S(x1 - x2)‖ ‖S(x1 + x2)‖`.
    Padded,
    /// `S'`, any complex input, denominator `2 ‖x1 - x2‖ ‖x1 + x2‖`.
    Prime,
}

impl StabilityVariant {
    pub fn kind(self) -> SymmetrizationKind {
        match self {
            Self::Padded => SymmetrizationKind::Padded,
            Self::Prime => SymmetrizationKind::Prime,
        }
    }

    /// Length of the measured vector.
    pub fn measurement_dim(self, n: usize) -> usize {
        self.kind().output_len(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstPair {
    pub x1: ReIm,
    pub x2: ReIm,
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    pub n: usize,
    pub variant: StabilityVariant,
    pub measurement_dim: usize,
    pub c_hat: f64,
    /// `c_hat` before local refinement.
    pub c_monte_carlo: f64,
    pub positive: bool,
    pub worst_pair: Option<WorstPair>,
    pub trials: usize,
    pub excluded: usize,
    pub seed: u64,
    pub generator: String,
}

/// `(numerator, denominator)` of the stability ratio, or `None` when the
/// denominator is below [`DENOMINATOR_FLOOR`].
pub fn stability_ratio_parts(x1: &[C64], x2: &[C64], variant: StabilityVariant) -> Result<Option<(f64, f64)>> {
    let kind = variant.kind();
    let i1 = intensity_measurements(x1, kind)?;
    let i2 = intensity_measurements(x2, kind)?;
    let num = i1.iter().zip(&i2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let d = signals::sub(x1, x2);
    let s = signals::add(x1, x2);
    let den = match variant {
        StabilityVariant::Padded => norm(&symmetrize_padded(&d)?.data) * norm(&symmetrize_padded(&s)?.data),
        StabilityVariant::Prime => 2.0 * norm(&d) * norm(&s),
    };
    if den <= DENOMINATOR_FLOOR {
        return Ok(None);
    }
    Ok(Some((num, den)))
}

fn draw(rng: &mut crate::rng::SeededRng, n: usize, variant: StabilityVariant) -> Vec<C64> {
    let mut x: Vec<C64> = (0..n).map(|_| complex_gaussian(rng, 1.0)).collect();
    if variant == StabilityVariant::Padded {
        x[0] = C64::new(real_gaussian(rng), 0.0);
    }
    x
}

fn pack(x1: &[C64], x2: &[C64]) -> Vec<f64> {
    x1.iter().chain(x2).flat_map(|z| [z.re, z.im]).collect()
}

fn unpack(p: &[f64], n: usize) -> (Vec<C64>, Vec<C64>) {
    let v: Vec<C64> = p.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
    (v[..n].to_vec(), v[n..].to_vec())
}

fn ratio_of(p: &[f64], n: usize, variant: StabilityVariant) -> f64 {
    let (x1, x2) = unpack(p, n);
    match stability_ratio_parts(&x1, &x2, variant) {
        Ok(Some((num, den))) => num / den,
        _ => f64::INFINITY,
    }
}

/// Coordinate pattern search on the real parameters of `(x1, x2)`. For the
/// padded variant the imaginary parts of the first entries stay zero.
fn pattern_search(start: Vec<f64>, n: usize, variant: StabilityVariant, sweeps: usize) -> (Vec<f64>, f64) {
    let free: Vec<usize> = (0..start.len())
        .filter(|&i| !(variant == StabilityVariant::Padded && (i == 1 || i == 2 * n + 1)))
        .collect();
    let scale = start.iter().map(|v| v * v).sum::<f64>().sqrt() / (start.len() as f64).sqrt();
    let mut h = 0.25 * scale.max(1e-3);
    let mut p = start;
    let mut best = ratio_of(&p, n, variant);
    for _ in 0..sweeps {
        let mut improved = false;
        for &i in &free {
            for dir in [1.0, -1.0] {
                let old = p[i];
                p[i] = old + dir * h;
                let r = ratio_of(&p, n, variant);
                if r < best {
                    best = r;
                    improved = true;
                    break;
                }
                p[i] = old;
            }
        }
        if !improved {
            h *= 0.5;
            if h < 1e-12 * scale.max(1e-300) {
                break;
            }
        }
    }
    (p, best)
}

/// Estimates the stability constant `c` in
/// `‖|F S(x1)|² - |F S(x2)|²‖ >= c ‖S(x1 - x2)‖ ‖S(x1 + x2)‖` by Monte Carlo
/// over Gaussian pairs followed by pattern search from the four best pairs.
pub fn stability_constant_estimate(n: usize, trials: usize, seed: u64, variant: StabilityVariant) -> Result<StabilityEstimate> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if trials == 0 {
        return invalid("stability estimate needs at least one trial");
    }
    let samples: Vec<(usize, Option<f64>, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(split(seed, t as u64));
            let x1 = draw(&mut rng, n, variant);
            let x2 = draw(&mut rng, n, variant);
            let ratio = stability_ratio_parts(&x1, &x2, variant)
                .expect("first entries are real")
                .map(|(a, b)| a / b);
            (t, ratio, pack(&x1, &x2))
        })
        .collect();
    let excluded = samples.iter().filter(|s| s.1.is_none()).count();
    let mut ranked: Vec<&(usize, Option<f64>, Vec<f64>)> = samples.iter().filter(|s| s.1.is_some()).collect();
    ranked.sort_by(|a, b| a.1.unwrap().total_cmp(&b.1.unwrap()).then(a.0.cmp(&b.0)));
    let c_monte_carlo = ranked.first().and_then(|s| s.1).unwrap_or(f64::INFINITY);
    let refined: Vec<(Vec<f64>, f64)> = ranked
        .iter()
        .take(4)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|s| pattern_search(s.2.clone(), n, variant, PATTERN_STEPS))
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = ranked.first().map(|s| (s.2.clone(), s.1.unwrap()));
    for (p, r) in refined {
        if best.as_ref().is_none_or(|b| r < b.1) {
            best = Some((p, r));
        }
    }
    let worst_pair = match &best {
        Some((p, _)) => {
            let (x1, x2) = unpack(p, n);
            let (num, den) = stability_ratio_parts(&x1, &x2, variant)?.expect("refined pair has a positive denominator");
            Some(WorstPair {
                x1: ReIm::from(x1.as_slice()),
                x2: ReIm::from(x2.as_slice()),
                ratio: num / den,
                numerator: num,
                denominator: den,
            })
        }
        None => None,
    };
    let c_hat = worst_pair.as_ref().map_or(f64::INFINITY, |w| w.ratio);
    Ok(StabilityEstimate {
        n,
        variant,
        measurement_dim: variant.measurement_dim(n),
        c_hat,
        c_monte_carlo,
        positive: c_hat > 1e-8,
        worst_pair,
        trials,
        excluded,
        seed,
        generator: GENERATOR.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_real_lead(seed: u64, n: usize) -> Vec<C64> {
        let mut rng = seeded(seed);
        draw(&mut rng, n, StabilityVariant::Padded)
    }

    #[test]
    fn symmetrize_examples() {
        let e0 = [c(1.0, 0.0), ZERO, ZERO];
        assert_eq!(symmetrize(&e0).unwrap().data, vec![c(1.0, 0.0), ZERO, ZERO, ZERO, ZERO]);
        let s = symmetrize(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(s.data, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]);
        assert!(symmetrize(&[c(1.0, 0.5)]).is_err());
        assert!(symmetrize(&[]).is_err());
    }

    #[test]
    fn prime_examples() {
        let s = symmetrize_prime(&[c(0.0, 1.0)]).unwrap();
        assert_eq!(s.data, vec![ZERO, c(0.0, 1.0), c(0.0, -1.0)]);
        let z = symmetrize_prime(&[ZERO; 3]).unwrap();
        assert_eq!(z.len(), 11);
        assert!(z.data.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn padded_length_and_symmetry() {
        let x = random_real_lead(3, 4);
        let s = symmetrize_padded(&x).unwrap();
        assert_eq!(s.len(), 13);
        assert!(s.symmetry_defect() <= 1e-12);
        assert!((norm(&s.data) - norm(&symmetrize(&x).unwrap().data)).abs() < 1e-12);
    }

    #[test]
    fn intensity_of_delta_is_flat() {
        let n = 3;
        let mut x = vec![ZERO; n];
        x[0] = c(1.0, 0.0);
        let i = intensity_measurements(&x, SymmetrizationKind::Padded).unwrap();
        let big_n = 4 * n - 3;
        assert_eq!(i.len(), big_n);
        assert!(i.iter().all(|v| (v - 1.0 / big_n as f64).abs() < 1e-15));
    }

    #[test]
    fn fourier_of_autoconvolution_is_scaled_intensity() {
        for n in [2, 3, 5] {
            let x = random_real_lead(n as u64, n);
            let s = symmetrize_padded(&x).unwrap();
            let big_n = s.len() as f64;
            let lhs = signals::dft(&signals::circular_convolve_dense(&s.data, &s.data));
            let i = intensity_measurements(&x, SymmetrizationKind::Padded).unwrap();
            for (a, b) in lhs.iter().zip(&i) {
                assert!((a - C64::new(big_n.sqrt() * b, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn correlation_breaks_binomial_identity() {
        let mut rng = seeded(9);
        let x1: Vec<C64> = (0..6).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let x2: Vec<C64> = (0..6).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let conv = BilinearMap::circular_convolution(6).unwrap();
        assert!(binomial_difference_check(&x1, &x2, &conv).unwrap() <= 1e-10);
        assert!(correlation_binomial_residual(&x1, &x2).unwrap() > 0.1);
        assert_eq!(binomial_difference_check(&x1, &x1, &conv).unwrap(), 0.0);
        let spreading = BilinearMap::spreading(3).unwrap();
        assert!(binomial_difference_check(&x1[..3], &x2[..3], &spreading).is_err());
    }

    #[test]
    fn sign_flip_is_excluded() {
        let x = random_real_lead(2, 4);
        let neg: Vec<C64> = x.iter().map(|z| -z).collect();
        assert_eq!(stability_ratio_parts(&x, &neg, StabilityVariant::Padded).unwrap(), None);
        assert_eq!(stability_ratio_parts(&x, &x, StabilityVariant::Prime).unwrap(), None);
    }

    #[test]
    fn random_unitaries_change_intensities() {
        let n = 4;
        for seed in 0..5 {
            let mut rng = seeded(100 + seed);
            let m = crate::linalg::CMatrix::from_fn(n, n, |_, _| complex_gaussian(&mut rng, 1.0));
            let u = crate::linalg::hermitian_eigen(&m.add(&m.adjoint())).unwrap().vectors;
            let x: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let ux = u.matvec(&x);
            let a = intensity_measurements(&x, SymmetrizationKind::Prime).unwrap();
            let b = intensity_measurements(&ux, SymmetrizationKind::Prime).unwrap();
            let d: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum();
            assert!(d > 1e-6);
        }
    }

    #[test]
    fn stability_estimate_is_positive_and_deterministic() {
        let a = stability_constant_estimate(3, 500, 5, StabilityVariant::Padded).unwrap();
        assert!(a.positive);
        assert!(a.c_hat <= a.c_monte_carlo);
        let w = a.worst_pair.as_ref().unwrap();
        let (num, den) = stability_ratio_parts(&w.x1.to_complex(), &w.x2.to_complex(), StabilityVariant::Padded)
            .unwrap()
            .unwrap();
        assert!((num / den - a.c_hat).abs() < 1e-12);
        let b = stability_constant_estimate(3, 500, 5, StabilityVariant::Padded).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let p = stability_constant_estimate(2, 300, 5, StabilityVariant::Prime).unwrap();
        assert!(p.positive);
        assert!(stability_constant_estimate(3, 0, 5, StabilityVariant::Padded).is_err());
    }

    proptest! {
        #[test]
        fn symmetrized_vectors_are_self_conjugate(
            parts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..8),
        ) {
            let mut x: Vec<C64> = parts.iter().map(|(a, b)| c(*a, *b)).collect();
            let p = symmetrize_prime(&x).unwrap();
            prop_assert!(p.symmetry_defect() <= 1e-12);
            prop_assert!((signals::norm_sq(&p.data) - 2.0 * signals::norm_sq(&x)).abs() <= 1e-12 * (1.0 + signals::norm_sq(&x)));
            x[0].im = 0.0;
            let nx = signals::norm_sq(&x);
            for s in [symmetrize(&x).unwrap(), symmetrize_padded(&x).unwrap()] {
                prop_assert!(s.symmetry_defect() <= 1e-12);
                let ns = signals::norm_sq(&s.data);
                prop_assert!(ns >= nx - 1e-12 && ns <= 2.0 * nx + 1e-12);
            }
        }

        #[test]
        fn intensities_are_sign_invariant_and_nonnegative(
            parts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6),
        ) {
            let mut x: Vec<C64> = parts.iter().map(|(a, b)| c(*a, *b)).collect();
            x[0].im = 0.0;
            let neg: Vec<C64> = x.iter().map(|z| -z).collect();
            for kind in [SymmetrizationKind::Padded, SymmetrizationKind::Prime] {
                let a = intensity_measurements(&x, kind).unwrap();
                let b = intensity_measurements(&neg, kind).unwrap();
                prop_assert!(a.iter().all(|v| *v >= -1e-12));
                prop_assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + p.abs())));
            }
        }

        #[test]
        fn binomial_identity_for_symmetrized_inputs(
            a in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..5),
            b in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..5),
        ) {
            let n = a.len().min(b.len());
            let mut x1: Vec<C64> = a[..n].iter().map(|(p, q)| c(*p, *q)).collect();
            let mut x2: Vec<C64> = b[..n].iter().map(|(p, q)| c(*p, *q)).collect();
            x1[0].im = 0.0;
            x2[0].im = 0.0;
            let s1 = symmetrize_padded(&x1).unwrap().data;
            let s2 = symmetrize_padded(&x2).unwrap().data;
            let conv = BilinearMap::circular_convolution(s1.len()).unwrap();
            prop_assert!(binomial_difference_check(&s1, &s2, &conv).unwrap() <= 1e-10);
        }
    }
}
