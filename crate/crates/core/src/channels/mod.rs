//! Pauli-string channel models.
//!
//! The central family is the correlated bit-flip channel on two qubits,
//! `E(ρ) = Σ A_{i1,i2} (σ_{i1}⊗σ_{i2}) ρ (σ_{i1}⊗σ_{i2})` with
//! `i1, i2 ∈ {I, X}`, parametrized by the per-qubit flip probability `p` and
//! the correlation strength `μ`:
//!
//! ```text
//! A_IX = A_XI = p(1-p)(1-μ),  A_XX = p - A_IX,  A_II = 1 - p - A_IX
//! ```
//!
//! Choi operators use the pair-interleaved ordering `(R1, S1, R2, S2)`:
//! reference qubit then system qubit for each channel use.

pub mod fit;
pub mod schedule;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{c, pauli_string_matrix, CMatrix, Pauli, C64};

pub use fit::{fit_channel, CorrelatorMatrix, FitResult};
pub use schedule::{
    channel_to_schedules, schedule_to_channel, Level, OverlapCoefficients, Schedule, Segment,
};

const PROB_TOL: f64 = 1e-12;
const KRAUS_TOL: f64 = 1e-10;

/// Sequence of single-qubit Paulis, qubit 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(Pauli::from_char)
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }

    /// All `4^n` strings in lexicographic `I < X < Y < Z` order.
    pub fn all(n: usize) -> Vec<PauliString> {
        (0..4usize.pow(n as u32))
            .map(|idx| Self::from_index(idx, n))
            .collect()
    }

    pub fn from_index(mut idx: usize, n: usize) -> Self {
        let mut out = vec![Pauli::I; n];
        for slot in out.iter_mut().rev() {
            *slot = Pauli::ALL[idx % 4];
            idx /= 4;
        }
        PauliString(out)
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, p| acc * 4 + *p as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matrix(&self) -> CMatrix {
        pauli_string_matrix(&self.0)
    }

    /// `+1` if the two strings commute, `-1` otherwise.
    pub fn commutation_sign(&self, other: &PauliString) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.commutation_sign(*b))
            .product()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Flip probability `p` and correlation strength `μ` of the correlated
/// bit-flip channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p: f64,
    pub mu: f64,
}

impl ChannelParams {
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&mu) {
            return Err(Error::Domain(format!(
                "p = {p}, mu = {mu} must both lie in [0, 1]"
            )));
        }
        Ok(Self { p, mu })
    }

    /// Single-flip weight `A_IX = A_XI = p(1-p)(1-μ)`.
    pub fn single_flip(&self) -> f64 {
        self.p * (1.0 - self.p) * (1.0 - self.mu)
    }

    /// `(A_II, A_IX, A_XI, A_XX)`.
    pub fn coefficients(&self) -> [f64; 4] {
        let a = self.single_flip();
        [1.0 - self.p - a, a, a, self.p - a]
    }

    /// Inverts the coefficient map. `μ` is `None` when `p(1-p)` vanishes.
    pub fn from_coefficients(a_ii: f64, a_ix: f64, a_xi: f64) -> (f64, Option<f64>) {
        let p = 1.0 - a_ii - a_xi;
        let spread = p * (1.0 - p);
        let mu = (spread >= 1e-9).then(|| 1.0 - a_ix / spread);
        (p, mu)
    }
}

/// Probability distribution over n-qubit Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliChannel {
    n_qubits: usize,
    probs: Vec<f64>,
}

impl PauliChannel {
    pub fn new(n_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::Domain(format!(
                "{n_qubits}-qubit Pauli channels are not supported"
            )));
        }
        if probs.len() != 4usize.pow(n_qubits as u32) {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {n_qubits} qubits",
                probs.len()
            )));
        }
        if let Some(bad) = probs
            .iter()
            .find(|&&x| x.is_nan() || x < -PROB_TOL || !x.is_finite())
        {
            return Err(Error::Domain(format!("negative Pauli probability {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::Domain(format!("Pauli probabilities sum to {sum}")));
        }
        let probs = probs.into_iter().map(|x| x.max(0.0)).collect();
        Ok(Self { n_qubits, probs })
    }

    pub fn from_map(n_qubits: usize, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut probs = vec![0.0; 4usize.pow(n_qubits as u32)];
        for (label, &value) in map {
            let s = PauliString::parse(label)?;
            if s.len() != n_qubits {
                return Err(Error::Parse(format!(
                    "Pauli string '{label}' is not {n_qubits} long"
                )));
            }
            probs[s.index()] += value;
        }
        Self::new(n_qubits, probs)
    }

    pub fn identity(n_qubits: usize) -> Self {
        let mut probs = vec![0.0; 4usize.pow(n_qubits as u32)];
        probs[0] = 1.0;
        Self { n_qubits, probs }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, label: &str) -> Result<f64> {
        let s = PauliString::parse(label)?;
        if s.len() != self.n_qubits {
            return Err(Error::Parse(format!(
                "'{label}' is not a {}-qubit string",
                self.n_qubits
            )));
        }
        Ok(self.probs[s.index()])
    }

    /// Nonzero terms as `(string, probability)`.
    pub fn terms(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (PauliString::from_index(i, self.n_qubits), p))
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.terms().map(|(s, p)| (s.to_string(), p)).collect()
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} state for a {}-qubit channel",
                rho.dim(),
                rho.dim(),
                self.n_qubits
            )));
        }
        let mut out = CMatrix::zeros(self.dim());
        for (s, p) in self.terms() {
            let pm = s.matrix();
            out = &out + &(&(&pm * rho) * &pm).scale(p);
        }
        Ok(out)
    }

    pub fn to_kraus(&self) -> KrausChannel {
        let ops = self
            .terms()
            .map(|(s, p)| s.matrix().scale(p.sqrt()))
            .collect();
        KrausChannel {
            input_dim: self.dim(),
            output_dim: self.dim(),
            ops,
        }
    }

    /// Choi operator `(I_R ⊗ E)(|φ+⟩⟨φ+|^{⊗n})` in `(R1, S1, R2, S2)` order.
    pub fn choi(&self) -> CMatrix {
        let n = self.n_qubits;
        let pairs = bell_pair_product(n);
        let input = CMatrix::outer(&pairs);
        let mut out = CMatrix::zeros(input.dim());
        for k in self.to_kraus().ops {
            let lifted = embed_on_systems(&k, n);
            out = &out + &(&(&lifted * &input) * &lifted.adjoint());
        }
        out
    }

    /// Single-qubit channel seen by qubit `which` (1 or 2).
    pub fn marginal(&self, which: usize) -> Result<PauliChannel> {
        if self.n_qubits != 2 {
            return Err(Error::Domain(
                "marginal requires a two-qubit channel".into(),
            ));
        }
        if !(1..=2).contains(&which) {
            return Err(Error::Domain(format!("qubit index {which} must be 1 or 2")));
        }
        let mut probs = vec![0.0; 4];
        for (s, p) in self.terms() {
            probs[s.0[which - 1] as usize] += p;
        }
        PauliChannel::new(1, probs)
    }

    /// `(1/d) Tr[P E(P)] = Σ_s A_s χ(s, P)`: the Pauli eigenvalue of `P`.
    pub fn pauli_eigenvalue(&self, string: &PauliString) -> f64 {
        self.terms()
            .map(|(s, p)| p * s.commutation_sign(string))
            .sum()
    }

    /// `(−1)^{#Y} · (1/4) Tr[(σ_i⊗σ_j) E(σ_i⊗σ_j)]` for `i, j ∈ {X, Y, Z}`,
    /// computed by applying the channel. This is the convention of the
    /// published correlator tables.
    pub fn pair_correlator_matrix(&self) -> Result<[[f64; 3]; 3]> {
        if self.n_qubits != 2 {
            return Err(Error::Domain(
                "pair correlators need a two-qubit channel".into(),
            ));
        }
        let axes = [Pauli::X, Pauli::Y, Pauli::Z];
        let mut out = [[0.0; 3]; 3];
        for (i, &a) in axes.iter().enumerate() {
            for (j, &b) in axes.iter().enumerate() {
                let op = pauli_string_matrix(&[a, b]);
                let value = op.trace_product(&self.apply(&op)?).re / 4.0;
                out[i][j] = a.transpose_sign() * b.transpose_sign() * value;
            }
        }
        Ok(out)
    }
}

/// The correlated bit-flip channel for `(p, μ)`.
pub fn correlated_channel(params: &ChannelParams) -> PauliChannel {
    let [a_ii, a_ix, a_xi, a_xx] = params.coefficients();
    let mut probs = vec![0.0; 16];
    probs[PauliString(vec![Pauli::I, Pauli::I]).index()] = a_ii;
    probs[PauliString(vec![Pauli::I, Pauli::X]).index()] = a_ix;
    probs[PauliString(vec![Pauli::X, Pauli::I]).index()] = a_xi;
    probs[PauliString(vec![Pauli::X, Pauli::X]).index()] = a_xx;
    PauliChannel {
        n_qubits: 2,
        probs: probs.into_iter().map(|x: f64| x.max(0.0)).collect(),
    }
}

/// Closed-form pair correlators of the ideal correlated channel, in the
/// published (no reference transposition) convention.
pub fn theory_correlators(params: &ChannelParams) -> [[f64; 3]; 3] {
    let p = params.p;
    let s = 4.0 * params.single_flip();
    [
        [1.0, -1.0 + 2.0 * p, 1.0 - 2.0 * p],
        [-1.0 + 2.0 * p, 1.0 - s, -1.0 + s],
        [1.0 - 2.0 * p, -1.0 + s, 1.0 - s],
    ]
}

/// Channel given by explicit Kraus operators.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    input_dim: usize,
    output_dim: usize,
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    /// Square Kraus operators only; `Σ K†K = I` is checked to 1e-10.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let dim = ops
            .first()
            .map(CMatrix::dim)
            .ok_or_else(|| Error::Domain("a channel needs at least one Kraus operator".into()))?;
        if ops.iter().any(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "Kraus operators of different sizes".into(),
            ));
        }
        let mut sum = CMatrix::zeros(dim);
        for k in &ops {
            sum = &sum + &(&k.adjoint() * k);
        }
        let dev = (&sum - &CMatrix::identity(dim))
            .data()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > KRAUS_TOL {
            return Err(Error::Domain(format!(
                "Kraus completeness violated by {dev:.3e}"
            )));
        }
        Ok(Self {
            input_dim: dim,
            output_dim: dim,
            ops,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.dim() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "{}-dim state for a {}-dim channel",
                rho.dim(),
                self.input_dim
            )));
        }
        let mut out = CMatrix::zeros(self.output_dim);
        for k in &self.ops {
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        Ok(out)
    }

    /// `(I_R ⊗ E)(joint)` where `joint` lives on `R ⊗ S` with `R` of size
    /// `ref_dim` as the most significant factor.
    pub fn apply_to_system(&self, joint: &CMatrix, ref_dim: usize) -> Result<CMatrix> {
        if joint.dim() != ref_dim * self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "joint state of dim {} does not split as {ref_dim} x {}",
                joint.dim(),
                self.input_dim
            )));
        }
        let id = CMatrix::identity(ref_dim);
        let mut out = CMatrix::zeros(joint.dim());
        for k in &self.ops {
            let lifted = id.kron(k);
            out = &out + &(&(&lifted * joint) * &lifted.adjoint());
        }
        Ok(out)
    }
}

/// `|φ+⟩^{⊗n}` in `(R1, S1, ..., Rn, Sn)` order.
pub fn bell_pair_product(n: usize) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
    (0..n).fold(vec![c(1.0, 0.0)], |acc, _| {
        acc.iter()
            .flat_map(|a| phi.iter().map(move |b| a * b))
            .collect()
    })
}

/// Lifts an operator on `(S1, ..., Sn)` to `(R1, S1, ..., Rn, Sn)`, acting as
/// the identity on every reference qubit.
pub fn embed_on_systems(op: &CMatrix, n: usize) -> CMatrix {
    let dim = 1 << (2 * n);
    // bit layout of a full index: R1 S1 R2 S2 ..., most significant first
    let split = |idx: usize| -> (usize, usize) {
        let (mut r, mut s) = (0, 0);
        for k in 0..n {
            let shift = 2 * (n - 1 - k);
            r = (r << 1) | ((idx >> (shift + 1)) & 1);
            s = (s << 1) | ((idx >> shift) & 1);
        }
        (r, s)
    };
    CMatrix::from_fn(dim, |i, j| {
        let (ri, si) = split(i);
        let (rj, sj) = split(j);
        if ri == rj {
            op[(si, sj)]
        } else {
            C64::default()
        }
    })
}

/// JSON description of a channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelSpec {
    CorrelatedFlip {
        p: f64,
        mu: f64,
    },
    Pauli {
        n: usize,
        probs: BTreeMap<String, f64>,
    },
}

impl ChannelSpec {
    pub fn to_channel(&self) -> Result<PauliChannel> {
        match self {
            ChannelSpec::CorrelatedFlip { p, mu } => {
                Ok(correlated_channel(&ChannelParams::new(*p, *mu)?))
            }
            ChannelSpec::Pauli { n, probs } => PauliChannel::from_map(*n, probs),
        }
    }
}
