//! Measurement operators and bilinear maps.
//!
//! Every operator knows its adjoint and can describe itself through a
//! serializable [`OperatorDescriptor`]; rebuilding from the descriptor gives
//! a bit-identical operator.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::rng::{complex_gaussian, rademacher, random_subset, real_gaussian, seeded, split};
use crate::signals::{self, fft_raw, SparseVector};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Distribution of the random multipliers `η` and `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SignLaw {
    #[default]
    Rademacher,
    /// Real standard normal entries.
    Gaussian,
}

impl SignLaw {
    fn draw(self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = seeded(seed);
        (0..n)
            .map(|_| match self {
                SignLaw::Rademacher => rademacher(&mut rng),
                SignLaw::Gaussian => real_gaussian(&mut rng),
            })
            .collect()
    }
}

/// Row selection `Ω`: explicit indices or a seed for a uniform draw without
/// replacement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowSelection {
    Seed(u64),
    Indices(Vec<usize>),
}

impl RowSelection {
    fn resolve(&self, m: usize, n: usize) -> Result<Vec<usize>> {
        if m == 0 || m > n {
            return invalid(format!("need 1 <= m <= n, got m={m}, n={n}"));
        }
        match self {
            RowSelection::Seed(seed) => Ok(random_subset(&mut seeded(*seed), n, m)),
            RowSelection::Indices(idx) => {
                if idx.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: idx.len(),
                    });
                }
                if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
                    return Err(Error::IndexOutOfRange { index: bad, n });
                }
                let mut sorted = idx.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return invalid("row selection contains duplicates");
                }
                Ok(sorted)
            }
        }
    }
}

/// Serializable recipe for an operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ensemble", rename_all = "kebab-case")]
pub enum OperatorDescriptor {
    Identity {
        n: usize,
    },
    Gaussian {
        m: usize,
        n: usize,
        seed: u64,
    },
    SignDiagonal {
        n: usize,
        seed: u64,
        #[serde(default)]
        law: SignLaw,
    },
    PartialCirculant {
        m: usize,
        n: usize,
        seed_eta: u64,
        omega: RowSelection,
        #[serde(default)]
        law: SignLaw,
    },
    UniversalDemodulator {
        m: usize,
        n: usize,
        seed_eta: u64,
        seed_xi: u64,
        omega: RowSelection,
        #[serde(default)]
        law: SignLaw,
    },
    WeylHeisenberg {
        n: usize,
        j1: usize,
        j2: usize,
    },
    Composition {
        outer: Box<OperatorDescriptor>,
        inner: Box<OperatorDescriptor>,
    },
    Bilinear {
        map: BilinearDescriptor,
    },
    /// An explicit matrix; not reconstructible from the descriptor alone.
    Dense {
        m: usize,
        n: usize,
    },
}

impl OperatorDescriptor {
    pub fn build(&self) -> Result<Arc<dyn LinearOperator>> {
        Ok(match self {
            OperatorDescriptor::Identity { n } => Arc::new(Identity::new(*n)),
            OperatorDescriptor::Gaussian { m, n, seed } => Arc::new(gaussian_operator(*m, *n, *seed)?),
            OperatorDescriptor::SignDiagonal { n, seed, law } => {
                Arc::new(SignDiagonal::with_law(*n, *seed, *law)?)
            }
            OperatorDescriptor::PartialCirculant {
                m,
                n,
                seed_eta,
                omega,
                law,
            } => Arc::new(PartialCirculant::with_law(*m, *n, *seed_eta, omega.clone(), *law)?),
            OperatorDescriptor::UniversalDemodulator {
                m,
                n,
                seed_eta,
                seed_xi,
                omega,
                law,
            } => Arc::new(UniversalDemodulator::with_law(
                *m,
                *n,
                *seed_eta,
                *seed_xi,
                omega.clone(),
                *law,
            )?),
            OperatorDescriptor::WeylHeisenberg { n, j1, j2 } => Arc::new(weyl_heisenberg(*j1, *j2, *n)?),
            OperatorDescriptor::Composition { outer, inner } => {
                Arc::new(Composition::new(outer.build()?, inner.build()?)?)
            }
            OperatorDescriptor::Bilinear { map } => Arc::new(LiftedMap::new(map.build()?)),
            OperatorDescriptor::Dense { .. } => {
                return invalid("a dense operator cannot be rebuilt from its descriptor")
            }
        })
    }
}

/// An `m × n` complex linear map with its adjoint.
pub trait LinearOperator: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `Φ x`; `x.len()` must equal `cols()`.
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    /// `Φᴴ w`; `w.len()` must equal `rows()`.
    fn adjoint(&self, w: &[C64]) -> Vec<C64>;
    fn descriptor(&self) -> OperatorDescriptor;

    fn try_apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                got: x.len(),
            });
        }
        Ok(self.apply(x))
    }

    fn try_adjoint(&self, w: &[C64]) -> Result<Vec<C64>> {
        if w.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                got: w.len(),
            });
        }
        Ok(self.adjoint(w))
    }

    /// Dense matrix, built column by column from `apply`.
    fn materialize(&self) -> CMatrix {
        let (m, n) = (self.rows(), self.cols());
        let mut out = CMatrix::zeros(m, n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            out.set_column(j, &self.apply(&e));
            e[j] = ZERO;
        }
        out
    }
}

impl fmt::Debug for dyn LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearOperator({:?})", self.descriptor())
    }
}

#[derive(Debug, Clone)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl LinearOperator for Identity {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        x.to_vec()
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        w.to_vec()
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::Identity { n: self.n }
    }
}

/// Explicit matrix operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: CMatrix,
    descriptor: Option<OperatorDescriptor>,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix) -> Self {
        Self {
            matrix,
            descriptor: None,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.matrix.rows()
    }
    fn cols(&self) -> usize {
        self.matrix.cols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.matvec(x)
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        self.matrix.adjoint_matvec(w)
    }
    fn descriptor(&self) -> OperatorDescriptor {
        self.descriptor.clone().unwrap_or(OperatorDescriptor::Dense {
            m: self.rows(),
            n: self.cols(),
        })
    }
    fn materialize(&self) -> CMatrix {
        self.matrix.clone()
    }
}

/// i.i.d. circularly-symmetric complex Gaussian entries with `E|Φ_ij|² = 1/m`,
/// so that `E‖Φx‖² = ‖x‖²`.
pub fn gaussian_operator(m: usize, n: usize, seed: u64) -> Result<DenseOperator> {
    if m == 0 || n == 0 {
        return invalid("gaussian operator needs m, n >= 1");
    }
    let mut rng = seeded(seed);
    let var = 1.0 / m as f64;
    let matrix = CMatrix::from_fn(m, n, |_, _| complex_gaussian(&mut rng, var));
    Ok(DenseOperator {
        matrix,
        descriptor: Some(OperatorDescriptor::Gaussian { m, n, seed }),
    })
}

/// Pointwise multiplication `D_ξ x = ξ ⊙ x`.
#[derive(Debug, Clone)]
pub struct SignDiagonal {
    xi: Vec<f64>,
    seed: u64,
    law: SignLaw,
}

impl SignDiagonal {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        Self::with_law(n, seed, SignLaw::Rademacher)
    }

    pub fn with_law(n: usize, seed: u64, law: SignLaw) -> Result<Self> {
        if n == 0 {
            return invalid("sign diagonal needs n >= 1");
        }
        Ok(Self {
            xi: law.draw(seed, n),
            seed,
            law,
        })
    }

    pub fn signs(&self) -> &[f64] {
        &self.xi
    }
}

pub fn sign_diagonal(n: usize, seed: u64) -> Result<SignDiagonal> {
    SignDiagonal::new(n, seed)
}

impl LinearOperator for SignDiagonal {
    fn rows(&self) -> usize {
        self.xi.len()
    }
    fn cols(&self) -> usize {
        self.xi.len()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        x.iter().zip(&self.xi).map(|(v, s)| v * s).collect()
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        self.apply(w)
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::SignDiagonal {
            n: self.xi.len(),
            seed: self.seed,
            law: self.law,
        }
    }
}

/// `Φ x = sqrt(n/m) [F* (η ⊙ F x)]_Ω`: rows `Ω` of the circulant with
/// Fourier multiplier `η`, scaled so that `E‖Φx‖² = ‖x‖²`. For `m = n` and
/// Rademacher `η` the operator is unitary. Applied with two FFTs.
#[derive(Debug, Clone)]
pub struct PartialCirculant {
    n: usize,
    eta: Vec<f64>,
    omega: Vec<usize>,
    seed_eta: u64,
    selection: RowSelection,
    law: SignLaw,
}

impl PartialCirculant {
    pub fn new(m: usize, n: usize, seed_eta: u64, omega: RowSelection) -> Result<Self> {
        Self::with_law(m, n, seed_eta, omega, SignLaw::Rademacher)
    }

    pub fn with_law(m: usize, n: usize, seed_eta: u64, selection: RowSelection, law: SignLaw) -> Result<Self> {
        let omega = selection.resolve(m, n)?;
        Ok(Self {
            n,
            eta: law.draw(seed_eta, n),
            omega,
            seed_eta,
            selection,
            law,
        })
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.eta
    }

    fn scale(&self) -> f64 {
        // raw FFT pair contributes a factor n; target factor is sqrt(n/m)
        1.0 / ((self.n * self.omega.len()) as f64).sqrt()
    }
}

pub fn partial_circulant_demodulator(
    m: usize,
    n: usize,
    seed_eta: u64,
    omega: RowSelection,
) -> Result<PartialCirculant> {
    PartialCirculant::new(m, n, seed_eta, omega)
}

impl LinearOperator for PartialCirculant {
    fn rows(&self) -> usize {
        self.omega.len()
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut buf = x.to_vec();
        fft_raw(&mut buf, false);
        for (b, e) in buf.iter_mut().zip(&self.eta) {
            *b *= e;
        }
        fft_raw(&mut buf, true);
        let s = self.scale();
        self.omega.iter().map(|&k| buf[k] * s).collect()
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        let mut buf = vec![ZERO; self.n];
        for (&k, v) in self.omega.iter().zip(w) {
            buf[k] = *v;
        }
        fft_raw(&mut buf, false);
        // η is real, so conj(η) = η
        for (b, e) in buf.iter_mut().zip(&self.eta) {
            *b *= e;
        }
        fft_raw(&mut buf, true);
        let s = self.scale();
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::PartialCirculant {
            m: self.omega.len(),
            n: self.n,
            seed_eta: self.seed_eta,
            omega: self.selection.clone(),
            law: self.law,
        }
    }
}

/// `P_Ω D̂_η D_ξ`: the partial circulant composed with a random sign flip.
#[derive(Debug, Clone)]
pub struct UniversalDemodulator {
    circulant: PartialCirculant,
    signs: SignDiagonal,
}

impl UniversalDemodulator {
    pub fn new(m: usize, n: usize, seed_eta: u64, seed_xi: u64, omega: RowSelection) -> Result<Self> {
        Self::with_law(m, n, seed_eta, seed_xi, omega, SignLaw::Rademacher)
    }

    pub fn with_law(
        m: usize,
        n: usize,
        seed_eta: u64,
        seed_xi: u64,
        omega: RowSelection,
        law: SignLaw,
    ) -> Result<Self> {
        Ok(Self {
            circulant: PartialCirculant::with_law(m, n, seed_eta, omega, law)?,
            signs: SignDiagonal::with_law(n, seed_xi, law)?,
        })
    }

    /// All three random ingredients derived from one seed.
    pub fn from_seed(m: usize, n: usize, seed: u64) -> Result<Self> {
        Self::new(m, n, split(seed, 0), split(seed, 1), RowSelection::Seed(split(seed, 2)))
    }
}

pub fn universal_random_demodulator(
    m: usize,
    n: usize,
    seed_eta: u64,
    seed_xi: u64,
    omega: RowSelection,
) -> Result<UniversalDemodulator> {
    UniversalDemodulator::new(m, n, seed_eta, seed_xi, omega)
}

impl LinearOperator for UniversalDemodulator {
    fn rows(&self) -> usize {
        self.circulant.rows()
    }
    fn cols(&self) -> usize {
        self.circulant.cols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.circulant.apply(&self.signs.apply(x))
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        self.signs.adjoint(&self.circulant.adjoint(w))
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::UniversalDemodulator {
            m: self.circulant.omega.len(),
            n: self.circulant.n,
            seed_eta: self.circulant.seed_eta,
            seed_xi: self.signs.seed,
            omega: self.circulant.selection.clone(),
            law: self.circulant.law,
        }
    }
}

/// Time-frequency shift `(Ψ_j y)_k = e^{i 2π j1 (k ⊖ j2)/n} y_{k ⊖ j2}`: a
/// modulation by `j1` followed by a cyclic shift by `j2`. With `j1 = 0` this
/// is the shift used by circular convolution, `Ψ_{(0, j2)} y = e_{j2} ⊛ y`.
#[derive(Debug, Clone)]
pub struct WeylHeisenberg {
    n: usize,
    j1: usize,
    j2: usize,
}

impl WeylHeisenberg {
    fn phase(&self, l: usize) -> C64 {
        let ang = 2.0 * std::f64::consts::PI * ((self.j1 * l) % self.n) as f64 / self.n as f64;
        C64::from_polar(1.0, ang)
    }
}

/// Indices are reduced modulo `n`.
pub fn weyl_heisenberg(j1: usize, j2: usize, n: usize) -> Result<WeylHeisenberg> {
    if n == 0 {
        return invalid("weyl-heisenberg operator needs n >= 1");
    }
    Ok(WeylHeisenberg {
        n,
        j1: j1 % n,
        j2: j2 % n,
    })
}

impl LinearOperator for WeylHeisenberg {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn apply(&self, y: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![ZERO; n];
        for (l, v) in y.iter().enumerate() {
            out[(l + self.j2) % n] = self.phase(l) * v;
        }
        out
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n).map(|l| self.phase(l).conj() * w[(l + self.j2) % n]).collect()
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::WeylHeisenberg {
            n: self.n,
            j1: self.j1,
            j2: self.j2,
        }
    }
}

/// `outer ∘ inner`.
#[derive(Clone)]
pub struct Composition {
    outer: Arc<dyn LinearOperator>,
    inner: Arc<dyn LinearOperator>,
}

impl Composition {
    pub fn new(outer: Arc<dyn LinearOperator>, inner: Arc<dyn LinearOperator>) -> Result<Self> {
        if outer.cols() != inner.rows() {
            return Err(Error::DimensionMismatch {
                expected: outer.cols(),
                got: inner.rows(),
            });
        }
        Ok(Self { outer, inner })
    }
}

impl LinearOperator for Composition {
    fn rows(&self) -> usize {
        self.outer.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.outer.apply(&self.inner.apply(x))
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        self.inner.adjoint(&self.outer.adjoint(w))
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::Composition {
            outer: Box::new(self.outer.descriptor()),
            inner: Box::new(self.inner.descriptor()),
        }
    }
}

/// Serializable form of a [`BilinearMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BilinearDescriptor {
    CircularConvolution { n: usize },
    ZeroPaddedConvolution { n: usize },
    Spreading { n: usize },
    Lifted { n1: usize, n2: usize, op: Box<OperatorDescriptor> },
}

impl BilinearDescriptor {
    pub fn build(&self) -> Result<BilinearMap> {
        match self {
            BilinearDescriptor::CircularConvolution { n } => BilinearMap::circular_convolution(*n),
            BilinearDescriptor::ZeroPaddedConvolution { n } => BilinearMap::zero_padded_convolution(*n),
            BilinearDescriptor::Spreading { n } => BilinearMap::spreading(*n),
            BilinearDescriptor::Lifted { n1, n2, op } => BilinearMap::lifted(*n1, *n2, op.build()?),
        }
    }
}

#[derive(Clone)]
enum BilinearKind {
    CircularConvolution,
    ZeroPaddedConvolution,
    Spreading,
    Lifted(Arc<dyn LinearOperator>),
}

/// A bilinear map `B: C^{n1} × C^{n2} → C^n`, equivalently a linear map on
/// `vec(x ⊗ y)` (row-major: entry `i*n2 + j` holds `x_i y_j`).
#[derive(Clone)]
pub struct BilinearMap {
    kind: BilinearKind,
    n1: usize,
    n2: usize,
    n: usize,
}

impl fmt::Debug for BilinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BilinearMap({:?})", self.descriptor())
    }
}

impl BilinearMap {
    /// `B(x, y) = x ⊛ y` on `Z_n`.
    pub fn circular_convolution(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("convolution needs n >= 1");
        }
        Ok(Self {
            kind: BilinearKind::CircularConvolution,
            n1: n,
            n2: n,
            n,
        })
    }

    /// `B(x, y) = x ∗ y` for `x, y ∈ C^n`, output dimension `2n - 1`
    /// (circular convolution of the zero-padded inputs).
    pub fn zero_padded_convolution(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("convolution needs n >= 1");
        }
        Ok(Self {
            kind: BilinearKind::ZeroPaddedConvolution,
            n1: n,
            n2: n,
            n: 2 * n - 1,
        })
    }

    /// `B(x, y) = Σ_j x_j Ψ_j y` with `x ∈ C^{n²}` indexed `j1 * n + j2`.
    pub fn spreading(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("spreading channel needs n >= 1");
        }
        Ok(Self {
            kind: BilinearKind::Spreading,
            n1: n * n,
            n2: n,
            n,
        })
    }

    /// Arbitrary linear map on the lifted space `C^{n1 n2}`.
    pub fn lifted(n1: usize, n2: usize, op: Arc<dyn LinearOperator>) -> Result<Self> {
        if op.cols() != n1 * n2 {
            return Err(Error::DimensionMismatch {
                expected: n1 * n2,
                got: op.cols(),
            });
        }
        let n = op.rows();
        Ok(Self {
            kind: BilinearKind::Lifted(op),
            n1,
            n2,
            n,
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn out_dim(&self) -> usize {
        self.n
    }

    /// True for maps with `B(x, y) = B(y, x)`.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self.kind,
            BilinearKind::CircularConvolution | BilinearKind::ZeroPaddedConvolution
        )
    }

    pub fn is_convolution(&self) -> bool {
        self.is_symmetric()
    }

    pub fn descriptor(&self) -> BilinearDescriptor {
        match &self.kind {
            BilinearKind::CircularConvolution => BilinearDescriptor::CircularConvolution { n: self.n },
            BilinearKind::ZeroPaddedConvolution => BilinearDescriptor::ZeroPaddedConvolution { n: self.n1 },
            BilinearKind::Spreading => BilinearDescriptor::Spreading { n: self.n },
            BilinearKind::Lifted(op) => BilinearDescriptor::Lifted {
                n1: self.n1,
                n2: self.n2,
                op: Box::new(op.descriptor()),
            },
        }
    }

    fn check_pair(&self, x: &[C64], y: &[C64]) -> Result<()> {
        if x.len() != self.n1 {
            return Err(Error::DimensionMismatch {
                expected: self.n1,
                got: x.len(),
            });
        }
        if y.len() != self.n2 {
            return Err(Error::DimensionMismatch {
                expected: self.n2,
                got: y.len(),
            });
        }
        Ok(())
    }

    /// `B(x, y)`.
    pub fn apply_pair(&self, x: &[C64], y: &[C64]) -> Result<Vec<C64>> {
        self.check_pair(x, y)?;
        Ok(match &self.kind {
            BilinearKind::CircularConvolution => {
                if self.n <= 32 {
                    let mut z = vec![ZERO; self.n];
                    for (i, a) in x.iter().enumerate() {
                        if *a == ZERO {
                            continue;
                        }
                        for (j, b) in y.iter().enumerate() {
                            z[(i + j) % self.n] += a * b;
                        }
                    }
                    z
                } else {
                    signals::circular_convolve_dense(x, y)
                }
            }
            BilinearKind::ZeroPaddedConvolution => {
                if self.n1 <= 32 {
                    let mut z = vec![ZERO; self.n];
                    for (i, a) in x.iter().enumerate() {
                        if *a == ZERO {
                            continue;
                        }
                        for (j, b) in y.iter().enumerate() {
                            z[i + j] += a * b;
                        }
                    }
                    z
                } else {
                    signals::linear_convolve_dense(x, y)
                }
            }
            BilinearKind::Spreading => {
                let n = self.n;
                let mut z = vec![ZERO; n];
                for j1 in 0..n {
                    let profile = &x[j1 * n..(j1 + 1) * n];
                    if profile.iter().all(|v| *v == ZERO) {
                        continue;
                    }
                    let psi = WeylHeisenberg { n, j1, j2: 0 };
                    let my = psi.apply(y);
                    for (j2, p) in profile.iter().enumerate() {
                        if *p == ZERO {
                            continue;
                        }
                        for (l, v) in my.iter().enumerate() {
                            z[(l + j2) % n] += p * v;
                        }
                    }
                }
                z
            }
            BilinearKind::Lifted(op) => op.apply(&rank_one_pack(x, y)),
        })
    }

    /// `B` applied to an arbitrary `n1 × n2` matrix.
    pub fn lifted_apply(&self, m: &CMatrix) -> Result<Vec<C64>> {
        if (m.rows(), m.cols()) != (self.n1, self.n2) {
            return invalid(format!(
                "lifted argument must be {}x{}, got {}x{}",
                self.n1,
                self.n2,
                m.rows(),
                m.cols()
            ));
        }
        Ok(self.lifted_apply_vec(m.as_slice()))
    }

    fn lifted_apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let (n1, n2, n) = (self.n1, self.n2, self.n);
        match &self.kind {
            BilinearKind::CircularConvolution => {
                let mut z = vec![ZERO; n];
                for i in 0..n1 {
                    for j in 0..n2 {
                        z[(i + j) % n] += v[i * n2 + j];
                    }
                }
                z
            }
            BilinearKind::ZeroPaddedConvolution => {
                let mut z = vec![ZERO; n];
                for i in 0..n1 {
                    for j in 0..n2 {
                        z[i + j] += v[i * n2 + j];
                    }
                }
                z
            }
            BilinearKind::Spreading => {
                let mut z = vec![ZERO; n];
                for j1 in 0..n {
                    let psi = WeylHeisenberg { n, j1, j2: 0 };
                    for j2 in 0..n {
                        let row = (j1 * n + j2) * n2;
                        for l in 0..n2 {
                            z[(l + j2) % n] += v[row + l] * psi.phase(l);
                        }
                    }
                }
                z
            }
            BilinearKind::Lifted(op) => op.apply(v),
        }
    }

    /// Adjoint of the lifted map, returned as an `n1 × n2` matrix.
    pub fn lifted_adjoint(&self, z: &[C64]) -> Result<CMatrix> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        CMatrix::from_vec(self.n1, self.n2, self.lifted_adjoint_vec(z))
    }

    fn lifted_adjoint_vec(&self, z: &[C64]) -> Vec<C64> {
        let (n1, n2, n) = (self.n1, self.n2, self.n);
        let mut out = vec![ZERO; n1 * n2];
        match &self.kind {
            BilinearKind::CircularConvolution => {
                for i in 0..n1 {
                    for j in 0..n2 {
                        out[i * n2 + j] = z[(i + j) % n];
                    }
                }
            }
            BilinearKind::ZeroPaddedConvolution => {
                for i in 0..n1 {
                    for j in 0..n2 {
                        out[i * n2 + j] = z[i + j];
                    }
                }
            }
            BilinearKind::Spreading => {
                for j1 in 0..n {
                    let psi = WeylHeisenberg { n, j1, j2: 0 };
                    for j2 in 0..n {
                        let row = (j1 * n + j2) * n2;
                        for l in 0..n2 {
                            out[row + l] = psi.phase(l).conj() * z[(l + j2) % n];
                        }
                    }
                }
            }
            BilinearKind::Lifted(op) => out = op.adjoint(z),
        }
        out
    }

    /// The lifted map as a [`LinearOperator`] from `C^{n1 n2}` to `C^n`.
    pub fn as_operator(&self) -> LiftedMap {
        LiftedMap::new(self.clone())
    }
}

/// `vec(x ⊗ y)`, row-major.
pub fn rank_one_pack(x: &[C64], y: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(x.len() * y.len());
    for a in x {
        for b in y {
            out.push(a * b);
        }
    }
    out
}

/// Reshape a lifted vector into its `n1 × n2` matrix.
pub fn rank_one_unpack(v: &[C64], n1: usize, n2: usize) -> Result<CMatrix> {
    CMatrix::from_vec(n1, n2, v.to_vec())
}

/// Lifted bilinear map viewed as a linear operator.
#[derive(Debug, Clone)]
pub struct LiftedMap {
    map: BilinearMap,
}

impl LiftedMap {
    pub fn new(map: BilinearMap) -> Self {
        Self { map }
    }

    pub fn bilinear(&self) -> &BilinearMap {
        &self.map
    }
}

impl LinearOperator for LiftedMap {
    fn rows(&self) -> usize {
        self.map.n
    }
    fn cols(&self) -> usize {
        self.map.n1 * self.map.n2
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.map.lifted_apply_vec(x)
    }
    fn adjoint(&self, w: &[C64]) -> Vec<C64> {
        self.map.lifted_adjoint_vec(w)
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::Bilinear {
            map: self.map.descriptor(),
        }
    }
}

/// `Σ_j x_j Ψ_j y` for a sparse spreading function `x` over `[n]²`
/// (flat index `j1 * n + j2`).
pub fn spreading_channel(x: &SparseVector, y: &[C64]) -> Result<Vec<C64>> {
    let n = y.len();
    if x.dim() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: x.dim(),
        });
    }
    let mut z = vec![ZERO; n];
    for (j, v) in x.iter() {
        let psi = weyl_heisenberg(j / n, j % n, n)?;
        for (o, p) in z.iter_mut().zip(psi.apply(y)) {
            *o += v * p;
        }
    }
    Ok(z)
}

/// Relative adjoint mismatch `|<Φx, w> - <x, Φᴴw>| / (‖Φx‖‖w‖ + ‖x‖‖Φᴴw‖)`
/// on one random pair.
pub fn adjoint_mismatch(op: &dyn LinearOperator, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let x: Vec<C64> = (0..op.cols()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
    let w: Vec<C64> = (0..op.rows()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
    let ax = op.apply(&x);
    let aw = op.adjoint(&w);
    let lhs = signals::vdot(&w, &ax);
    let rhs = signals::vdot(&aw, &x);
    let scale = signals::norm(&ax) * signals::norm(&w) + signals::norm(&x) * signals::norm(&aw);
    if scale == 0.0 {
        return 0.0;
    }
    (lhs - rhs).norm() / scale
}
