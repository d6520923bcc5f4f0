//! Small dense complex matrices, a cyclic Jacobi eigensolver for Hermitian
//! matrices, and the entropy functions (in bits) used by every other module.
//!
//! Dimensions are tiny here (2, 4 or 16), so everything is a flat row-major
//! `Vec<Complex64>` and the algorithms favour clarity over blocking.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used when a routine requires Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Most negative probability accepted before data is rejected.
pub const NEGATIVE_FLOOR: f64 = -0.05;

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-qubit Pauli operator label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        let data = match self {
            Pauli::I => vec![l, o, o, l],
            Pauli::X => vec![o, l, l, o],
            Pauli::Y => vec![o, c(0.0, -1.0), c(0.0, 1.0), o],
            Pauli::Z => vec![l, o, o, -l],
        };
        CMatrix { dim: 2, data }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(ch: char) -> Result<Self> {
        match ch.to_ascii_uppercase() {
            'I' | '0' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::Parse(format!("unknown Pauli label '{other}'"))),
        }
    }

    /// `+1` when the two operators commute, `-1` when they anticommute.
    pub fn commutation_sign(self, other: Pauli) -> f64 {
        if self == Pauli::I || other == Pauli::I || self == other {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign picked up under transposition (`Y^T = -Y`).
    pub fn transpose_sign(self) -> f64 {
        if self == Pauli::Y {
            -1.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Measurement axis: one of the three non-identity Paulis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_pauli(p: Pauli) -> Option<Axis> {
        match p {
            Pauli::I => None,
            Pauli::X => Some(Axis::X),
            Pauli::Y => Some(Axis::Y),
            Pauli::Z => Some(Axis::Z),
        }
    }

    pub fn from_char(ch: char) -> Result<Self> {
        Axis::from_pauli(Pauli::from_char(ch)?)
            .ok_or_else(|| Error::Parse(format!("'{ch}' is not a measurement axis")))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pauli())
    }
}

/// Tensor product of Pauli operators, leftmost factor is the most significant
/// subsystem.
pub fn pauli_string_matrix(paulis: &[Pauli]) -> CMatrix {
    paulis
        .iter()
        .fold(CMatrix::identity(1), |acc, p| acc.kron(&p.matrix()))
}

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch(
                "matrix dimension must be positive".into(),
            ));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::identity(dim).scale(1.0 / dim as f64)
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = c(d, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self * other)
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim;
        let mut acc = C64::default();
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `<v| M |v>`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let n = self.dim;
        let mut acc = C64::default();
        for i in 0..n {
            let mut row = C64::default();
            for j in 0..n {
                row += self[(i, j)] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let max_asymmetry = self.max_asymmetry();
        if max_asymmetry > tol {
            return Err(Error::NotHermitian { max_asymmetry });
        }
        Ok(())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a == C64::default() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Partial trace over every subsystem whose `keep` flag is false.
    ///
    /// `dims` lists the subsystem dimensions, most significant first.
    pub fn partial_trace(&self, keep: &[bool], dims: &[usize]) -> Result<Self> {
        if keep.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "keep mask has {} entries for {} subsystems",
                keep.len(),
                dims.len()
            )));
        }
        let total: usize = dims.iter().product();
        if total != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims multiply to {total}, matrix is {}x{}",
                self.dim, self.dim
            )));
        }
        let kept_dim: usize = dims
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(d, _)| d)
            .product();
        let split = |mut idx: usize| -> Vec<usize> {
            let mut digits = vec![0; dims.len()];
            for s in (0..dims.len()).rev() {
                digits[s] = idx % dims[s];
                idx /= dims[s];
            }
            digits
        };
        let kept_index = |digits: &[usize]| -> usize {
            digits
                .iter()
                .zip(dims)
                .zip(keep)
                .filter(|(_, &k)| k)
                .fold(0, |acc, ((&d, &size), _)| acc * size + d)
        };
        let digits: Vec<Vec<usize>> = (0..total).map(split).collect();
        let mut out = Self::zeros(kept_dim);
        for i in 0..total {
            for j in 0..total {
                let traced_match = digits[i]
                    .iter()
                    .zip(&digits[j])
                    .zip(keep)
                    .all(|((a, b), &k)| k || a == b);
                if traced_match {
                    out[(kept_index(&digits[i]), kept_index(&digits[j]))] += self[(i, j)];
                }
            }
        }
        Ok(out)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::default() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the normalized eigenvector for `values[k]`.
    pub vectors: Vec<Vec<C64>>,
}

/// Diagonalizes a Hermitian matrix with cyclic complex Jacobi rotations.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    m.ensure_hermitian(HERMITIAN_TOL)?;
    let n = m.dim();
    // symmetrize so round-off in the input cannot leak into the rotations
    let mut a = CMatrix::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let mut v = CMatrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    Ok(HermitianEigen {
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|r| v[(r, k)]).collect())
            .collect(),
    })
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(m)?.values)
}

// One two-sided rotation zeroing a[p][q]. The unitary is diag(1, e^{-iφ})
// followed by a real Givens rotation on the (p, q) plane.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let n = a.dim();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;

    // U = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on columns (p, q)
    let u_pp = c(cs, 0.0);
    let u_pq = c(sn, 0.0);
    let u_qp = -phase.conj() * sn;
    let u_qq = phase.conj() * cs;

    for r in 0..n {
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * u_pp + arq * u_qp;
        a[(r, q)] = arp * u_pq + arq * u_qq;
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp * u_pp + vrq * u_qp;
        v[(r, q)] = vrp * u_pq + vrq * u_qq;
    }
    for col in 0..n {
        let apc = a[(p, col)];
        let aqc = a[(q, col)];
        a[(p, col)] = u_pp.conj() * apc + u_qp.conj() * aqc;
        a[(q, col)] = u_pq.conj() * apc + u_qq.conj() * aqc;
    }
    a[(p, q)] = C64::default();
    a[(q, p)] = C64::default();
    a[(p, p)] = c(a[(p, p)].re, 0.0);
    a[(q, q)] = c(a[(q, q)].re, 0.0);
}

/// Regularized `-x log2 x`: the real part of its continuation to small
/// negative arguments, `-x log2 |x|`, and `0` at `x = 0`.
#[inline]
pub fn hreg(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.abs().log2()
    }
}

/// A probability vector whose entries may dip slightly below zero (noisy
/// estimates), but never below [`NEGATIVE_FLOOR`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub const SUM_TOL: f64 = 1e-9;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DataIntegrity("empty probability vector".into()));
        }
        if let Some(&bad) = values
            .iter()
            .find(|v| !v.is_finite() || **v < NEGATIVE_FLOOR)
        {
            return Err(Error::DataIntegrity(format!(
                "probability {bad} below the floor {NEGATIVE_FLOOR}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::DataIntegrity(format!("probabilities sum to {sum}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Shannon entropy in bits with the [`hreg`] regularization.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    entropy_of(p.values())
}

/// [`shannon_entropy`] on a raw slice; callers own the validation.
#[inline]
pub fn entropy_of(values: &[f64]) -> f64 {
    values.iter().map(|&x| hreg(x)).sum()
}

pub(crate) fn h2(x: f64) -> f64 {
    hreg(x) + hreg(1.0 - x)
}

/// Binary entropy `H2(x)` in bits, defined on `[-0.05, 1.05]`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(NEGATIVE_FLOOR..=1.0 - NEGATIVE_FLOOR).contains(&x) {
        return Err(Error::Domain(format!(
            "binary entropy argument {x} outside [-0.05, 1.05]"
        )));
    }
    Ok(h2(x))
}

/// Von Neumann entropy in bits of a unit-trace Hermitian matrix.
pub fn von_neumann_entropy(m: &CMatrix) -> Result<f64> {
    let trace = m.trace();
    if (trace.re - 1.0).abs() > 1e-6 || trace.im.abs() > 1e-6 {
        return Err(Error::InvalidTrace { trace: trace.re });
    }
    Ok(entropy_of(&hermitian_eigenvalues(m)?))
}
