//! The part of a Choi operator reachable with same-axis prepare/measure
//! settings.
//!
//! Per channel use (a reference/system pair) the reachable Pauli patterns
//! are `II`, `σ_a I` (reference moment), `I σ_a` (output marginal) and
//! `σ_a σ_a` (correlator), ten in all. A two-pair accessible Choi is indexed
//! by products of these, `10^n` slots.
//!
//! Coefficients are stored in the *transpose* convention: the expectation of
//! `⊗_k (σ_{r_k}^T ⊗ σ_{s_k})` on the Choi state. For a correlator this is
//! `(1/d) Tr[X E(X)]`, the quantity obtained from separable preparations.
//! Plain Choi correlators (no transposition) differ by `(−1)^{#Y on the
//! reference side}`.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::basis::{BasisSpec, ProductBasis};
use crate::channels::{correlated_channel, ChannelParams, CorrelatorMatrix, PauliChannel};
use crate::error::{Error, Result};
use crate::qmath::{pauli_string_matrix, von_neumann_entropy, Axis, CMatrix, Pauli, ProbVector};

pub const PATTERNS_PER_PAIR: usize = 10;
const VALUE_BOUND: f64 = 1.05;

/// Reachable Pauli pattern on one (reference, system) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairPattern {
    Identity,
    Reference(Axis),
    Output(Axis),
    Correlator(Axis),
}

impl PairPattern {
    pub fn index(self) -> usize {
        match self {
            PairPattern::Identity => 0,
            PairPattern::Reference(a) => 1 + a.index(),
            PairPattern::Output(a) => 4 + a.index(),
            PairPattern::Correlator(a) => 7 + a.index(),
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => PairPattern::Identity,
            1..=3 => PairPattern::Reference(Axis::ALL[i - 1]),
            4..=6 => PairPattern::Output(Axis::ALL[i - 4]),
            7..=9 => PairPattern::Correlator(Axis::ALL[i - 7]),
            _ => panic!("pair pattern index {i} out of range"),
        }
    }

    /// `(reference, system)` Paulis.
    pub fn paulis(self) -> (Pauli, Pauli) {
        match self {
            PairPattern::Identity => (Pauli::I, Pauli::I),
            PairPattern::Reference(a) => (a.pauli(), Pauli::I),
            PairPattern::Output(a) => (Pauli::I, a.pauli()),
            PairPattern::Correlator(a) => (a.pauli(), a.pauli()),
        }
    }

    pub fn from_paulis(r: Pauli, s: Pauli) -> Option<Self> {
        match (Axis::from_pauli(r), Axis::from_pauli(s)) {
            (None, None) => Some(PairPattern::Identity),
            (Some(a), None) => Some(PairPattern::Reference(a)),
            (None, Some(b)) => Some(PairPattern::Output(b)),
            (Some(a), Some(b)) if a == b => Some(PairPattern::Correlator(a)),
            _ => None,
        }
    }

    /// The axis a setting must use on this pair, if any.
    pub fn axis(self) -> Option<Axis> {
        match self {
            PairPattern::Identity => None,
            PairPattern::Reference(a) | PairPattern::Output(a) | PairPattern::Correlator(a) => {
                Some(a)
            }
        }
    }

    /// `σ_r^T ⊗ σ_s` on the pair.
    pub fn operator(self) -> &'static CMatrix {
        static OPS: OnceLock<Vec<CMatrix>> = OnceLock::new();
        &OPS.get_or_init(|| {
            (0..PATTERNS_PER_PAIR)
                .map(|i| {
                    let (r, s) = PairPattern::from_index(i).paulis();
                    r.matrix().transpose().kron(&s.matrix())
                })
                .collect()
        })[self.index()]
    }
}

/// Product of per-pair patterns, pair 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternProduct(pub Vec<PairPattern>);

impl PatternProduct {
    pub fn identity(n_pairs: usize) -> Self {
        Self(vec![PairPattern::Identity; n_pairs])
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, p| acc * PATTERNS_PER_PAIR + p.index())
    }

    pub fn from_index(mut idx: usize, n_pairs: usize) -> Self {
        let mut out = vec![PairPattern::Identity; n_pairs];
        for slot in out.iter_mut().rev() {
            *slot = PairPattern::from_index(idx % PATTERNS_PER_PAIR);
            idx /= PATTERNS_PER_PAIR;
        }
        Self(out)
    }

    /// Parses a `R1 S1 R2 S2 ...` Pauli string such as `"XXIY"`.
    pub fn parse(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        if chars.is_empty() || !chars.len().is_multiple_of(2) {
            return Err(Error::Parse(format!(
                "pattern '{s}' needs two letters per pair"
            )));
        }
        chars
            .chunks(2)
            .map(|pair| {
                let (r, sys) = (Pauli::from_char(pair[0])?, Pauli::from_char(pair[1])?);
                PairPattern::from_paulis(r, sys)
                    .ok_or_else(|| Error::Parse(format!("pattern '{s}' mixes axes within a pair")))
            })
            .collect::<Result<Vec<_>>>()
            .map(PatternProduct)
    }

    pub fn n_pairs(&self) -> usize {
        self.0.len()
    }

    /// `(−1)^{#Y on the reference side}`: factor between the transpose and
    /// the plain convention.
    pub fn transpose_sign(&self) -> f64 {
        self.0
            .iter()
            .map(|p| p.paulis().0.transpose_sign())
            .product()
    }

    pub fn reference_paulis(&self) -> Vec<Pauli> {
        self.0.iter().map(|p| p.paulis().0).collect()
    }

    pub fn system_paulis(&self) -> Vec<Pauli> {
        self.0.iter().map(|p| p.paulis().1).collect()
    }

    pub fn is_output_only(&self) -> bool {
        self.0
            .iter()
            .all(|p| matches!(p, PairPattern::Identity | PairPattern::Output(_)))
    }

    pub fn all(n_pairs: usize) -> impl Iterator<Item = PatternProduct> {
        (0..PATTERNS_PER_PAIR.pow(n_pairs as u32)).map(move |i| Self::from_index(i, n_pairs))
    }
}

impl fmt::Display for PatternProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            let (r, s) = p.paulis();
            write!(f, "{r}{s}")?;
        }
        Ok(())
    }
}

/// Whether reference-side operators are transposed in stored correlators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Transpose,
    NoTranspose,
}

impl Convention {
    /// Converts a value stored in `self` convention to the transpose
    /// convention.
    pub fn to_transpose(self, pattern: &PatternProduct, value: f64) -> f64 {
        match self {
            Convention::Transpose => value,
            Convention::NoTranspose => pattern.transpose_sign() * value,
        }
    }

    pub fn from_transpose(self, pattern: &PatternProduct, value: f64) -> f64 {
        // the sign is an involution
        self.to_transpose(pattern, value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Computed from a known channel.
    Exact,
    /// Estimated from counts or transcribed data.
    Measured,
    /// Supplied by a fitted channel model.
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub sigma: Option<f64>,
    pub origin: Origin,
}

impl Coefficient {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            sigma: Some(0.0),
            origin: Origin::Exact,
        }
    }

    pub fn measured(value: f64, sigma: f64) -> Self {
        Self {
            value,
            sigma: Some(sigma),
            origin: Origin::Measured,
        }
    }

    pub fn model(value: f64) -> Self {
        Self {
            value,
            sigma: None,
            origin: Origin::Model,
        }
    }
}

/// Assumptions made while assembling an accessible Choi from incomplete data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assumption {
    /// No output-marginal data: the output state is taken to be `I/d`.
    UnitalOutput,
    /// Single-pair correlators supplied by a fitted correlated channel.
    ModelSinglePair { p: f64, mu: f64 },
}

impl Assumption {
    pub fn label(&self) -> &'static str {
        match self {
            Assumption::UnitalOutput => "unital_output",
            Assumption::ModelSinglePair { .. } => "model_single_pair",
        }
    }
}

/// Accessible Choi coefficients for one or two channel uses.
#[derive(Clone, Debug, PartialEq)]
pub struct AccessibleChoi {
    n_pairs: usize,
    coeffs: Vec<Option<Coefficient>>,
    dense: Vec<f64>,
    assumptions: Vec<Assumption>,
}

impl AccessibleChoi {
    /// Builds from transpose-convention coefficients. The all-identity
    /// coefficient is always 1; supplying anything else is an error.
    pub fn new(
        n_pairs: usize,
        entries: impl IntoIterator<Item = (PatternProduct, Coefficient)>,
        assumptions: Vec<Assumption>,
    ) -> Result<Self> {
        if !(1..=2).contains(&n_pairs) {
            return Err(Error::Domain(format!("{n_pairs} pairs are not supported")));
        }
        let mut coeffs = vec![None; PATTERNS_PER_PAIR.pow(n_pairs as u32)];
        coeffs[0] = Some(Coefficient::exact(1.0));
        for (pattern, coef) in entries {
            if pattern.n_pairs() != n_pairs {
                return Err(Error::DimensionMismatch(format!(
                    "pattern {pattern} for a {n_pairs}-pair Choi"
                )));
            }
            if !coef.value.is_finite() || coef.value.abs() > VALUE_BOUND {
                return Err(Error::DataIntegrity(format!(
                    "coefficient {pattern} = {} outside [-1.05, 1.05]",
                    coef.value
                )));
            }
            let idx = pattern.index();
            if idx == 0 {
                if (coef.value - 1.0).abs() > 1e-12 {
                    return Err(Error::DataIntegrity(format!(
                        "identity coefficient must be 1, got {}",
                        coef.value
                    )));
                }
                continue;
            }
            coeffs[idx] = Some(coef);
        }
        let dense = coeffs.iter().map(|c| c.map_or(0.0, |c| c.value)).collect();
        Ok(Self {
            n_pairs,
            coeffs,
            dense,
            assumptions,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn get(&self, pattern: &PatternProduct) -> Option<&Coefficient> {
        self.coeffs.get(pattern.index()).and_then(Option::as_ref)
    }

    /// Value of a slot, absent slots reading as zero.
    pub fn value(&self, pattern: &PatternProduct) -> f64 {
        self.dense[pattern.index()]
    }

    pub fn entries(&self) -> impl Iterator<Item = (PatternProduct, &Coefficient)> + '_ {
        self.coeffs.iter().enumerate().filter_map(|(i, c)| {
            c.as_ref()
                .map(|c| (PatternProduct::from_index(i, self.n_pairs), c))
        })
    }

    /// Dense table of values indexed by [`PatternProduct::index`].
    pub fn table(&self) -> &[f64] {
        &self.dense
    }

    pub fn assumptions(&self) -> &[Assumption] {
        &self.assumptions
    }

    /// Copy with every value replaced by `f(pattern, coefficient)`.
    pub fn map_values(
        &self,
        mut f: impl FnMut(&PatternProduct, &Coefficient) -> f64,
    ) -> Result<Self> {
        let entries: Vec<(PatternProduct, Coefficient)> = self
            .entries()
            .map(|(p, c)| {
                let value = f(&p, c);
                (p, Coefficient { value, ..*c })
            })
            .collect();
        Self::new(self.n_pairs, entries, self.assumptions.clone())
    }

    /// Copy where every stored coefficient is marked measured with sigma
    /// `f(pattern)`.
    pub fn with_sigmas(&self, mut f: impl FnMut(&PatternProduct) -> f64) -> Result<Self> {
        let entries: Vec<(PatternProduct, Coefficient)> = self
            .entries()
            .skip(1)
            .map(|(p, c)| {
                let sigma = f(&p);
                (p, Coefficient::measured(c.value, sigma))
            })
            .collect();
        Self::new(self.n_pairs, entries, self.assumptions.clone())
    }

    pub fn has_single_pair_correlators(&self) -> bool {
        if self.n_pairs == 1 {
            return true;
        }
        (0..self.n_pairs).all(|k| {
            Axis::ALL.iter().all(|&a| {
                let mut pattern = PatternProduct::identity(self.n_pairs);
                pattern.0[k] = PairPattern::Correlator(a);
                self.get(&pattern).is_some()
            })
        })
    }

    pub fn has_output_marginals(&self) -> bool {
        PatternProduct::all(self.n_pairs)
            .filter(|p| p.is_output_only() && p.index() != 0)
            .all(|p| self.get(&p).is_some())
    }

    /// The assembled operator `(1/4^n) Σ c_P ⊗_k (σ_{r_k}^T ⊗ σ_{s_k})` on
    /// `(R1, S1, R2, S2)`.
    pub fn operator(&self) -> CMatrix {
        let dim = 1 << (2 * self.n_pairs);
        let mut out = CMatrix::zeros(dim);
        for (pattern, coef) in self.entries() {
            let op = pattern
                .0
                .iter()
                .fold(CMatrix::identity(1), |acc, p| acc.kron(p.operator()));
            out = &out + &op.scale(coef.value);
        }
        out.scale(1.0 / dim as f64)
    }

    /// Output state `E(I/d)` assembled from the output-only coefficients.
    pub fn output_state(&self) -> CMatrix {
        let dim = 1 << self.n_pairs;
        let mut out = CMatrix::zeros(dim);
        for (pattern, coef) in self.entries().filter(|(p, _)| p.is_output_only()) {
            out = &out + &pauli_string_matrix(&pattern.system_paulis()).scale(coef.value);
        }
        out.scale(1.0 / dim as f64)
    }

    /// `S[E(I/d)]` in bits.
    pub fn output_entropy(&self) -> Result<f64> {
        von_neumann_entropy(&self.output_state())
    }

    /// One-pair view of pair `pair` (1-based), keeping the patterns where
    /// every other pair is the identity.
    pub fn marginal(&self, pair: usize) -> Result<AccessibleChoi> {
        if !(1..=self.n_pairs).contains(&pair) {
            return Err(Error::Domain(format!("pair {pair} of {}", self.n_pairs)));
        }
        if self.n_pairs == 1 {
            return Ok(self.clone());
        }
        if !self.has_single_pair_correlators() {
            return Err(Error::DataIntegrity(
                "single-pair correlators are not available for a marginal".into(),
            ));
        }
        let entries = self.entries().filter_map(|(p, c)| {
            let others_trivial =
                p.0.iter()
                    .enumerate()
                    .all(|(k, q)| k == pair - 1 || *q == PairPattern::Identity);
            others_trivial.then(|| (PatternProduct(vec![p.0[pair - 1]]), *c))
        });
        let entries: Vec<_> = entries.collect();
        AccessibleChoi::new(1, entries, self.assumptions.clone())
    }
}

/// Accessible coefficients of a Pauli channel, from
/// `(1/d) Tr[B E(A)]` with `A` the reference-side and `B` the system-side
/// Pauli string.
pub fn accessible_choi_from_channel(channel: &PauliChannel) -> AccessibleChoi {
    let n = channel.n_qubits();
    let d = channel.dim() as f64;
    let entries: Vec<(PatternProduct, Coefficient)> = PatternProduct::all(n)
        .skip(1)
        .map(|pattern| {
            let a = pauli_string_matrix(&pattern.reference_paulis());
            let b = pauli_string_matrix(&pattern.system_paulis());
            let evolved = channel
                .apply(&a)
                .expect("dimension matches by construction");
            let value = b.trace_product(&evolved).re / d;
            (pattern, Coefficient::exact(value))
        })
        .collect();
    AccessibleChoi::new(n, entries, Vec::new()).expect("exact coefficients are bounded")
}

/// Two-pair accessible Choi from a 3×3 pair-correlator table that lacks
/// single-pair correlators and output marginals.
///
/// The single-pair correlators are taken from the correlated channel with
/// parameters `model`; the output is assumed unital.
pub fn accessible_choi_from_pair_correlators(
    table: &CorrelatorMatrix,
    convention: Convention,
    model: &ChannelParams,
) -> Result<AccessibleChoi> {
    let mut entries = Vec::new();
    for (i, &a) in Axis::ALL.iter().enumerate() {
        for (j, &b) in Axis::ALL.iter().enumerate() {
            let pattern =
                PatternProduct(vec![PairPattern::Correlator(a), PairPattern::Correlator(b)]);
            let value = convention.to_transpose(&pattern, table.values[i][j]);
            entries.push((pattern, Coefficient::measured(value, table.sigmas[i][j])));
        }
    }
    let reference = accessible_choi_from_channel(&correlated_channel(model));
    for k in 0..2 {
        for &a in &Axis::ALL {
            let mut pattern = PatternProduct::identity(2);
            pattern.0[k] = PairPattern::Correlator(a);
            entries.push((
                pattern.clone(),
                Coefficient::model(reference.value(&pattern)),
            ));
        }
    }
    AccessibleChoi::new(
        2,
        entries,
        vec![
            Assumption::ModelSinglePair {
                p: model.p,
                mu: model.mu,
            },
            Assumption::UnitalOutput,
        ],
    )
}

/// Pattern weights `⟨v| σ_r^T ⊗ σ_s |v⟩` of each basis vector, rows indexed
/// by basis vector and columns by [`PairPattern::index`].
pub fn pattern_weights(spec: &BasisSpec) -> [[f64; PATTERNS_PER_PAIR]; 4] {
    let vectors = spec.vectors();
    let mut w = [[0.0; PATTERNS_PER_PAIR]; 4];
    for (row, v) in w.iter_mut().zip(vectors.iter()) {
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = PairPattern::from_index(k).operator().expectation(v).re;
        }
    }
    w
}

/// Probabilities from pattern weights, without range checks. Indexing is
/// `4·i1 + i2` for two pairs.
pub(crate) fn probabilities_from_weights(
    table: &[f64],
    weights: &[[[f64; PATTERNS_PER_PAIR]; 4]],
    out: &mut [f64],
) {
    match weights {
        [w] => {
            for (i, row) in w.iter().enumerate() {
                out[i] = 0.25 * row.iter().zip(table).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        [w1, w2] => {
            for (i1, row1) in w1.iter().enumerate() {
                let mut m = [0.0; PATTERNS_PER_PAIR];
                for (p1, &x) in row1.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let t = &table[p1 * PATTERNS_PER_PAIR..(p1 + 1) * PATTERNS_PER_PAIR];
                    for (mk, tk) in m.iter_mut().zip(t) {
                        *mk += x * tk;
                    }
                }
                for (i2, row2) in w2.iter().enumerate() {
                    out[4 * i1 + i2] = m.iter().zip(row2).map(|(a, b)| a * b).sum::<f64>() / 16.0;
                }
            }
        }
        _ => unreachable!("one or two pairs"),
    }
}

/// `p_i = ⟨Φ_i| ρ_acc |Φ_i⟩` for the product basis.
pub fn probability_vector(choi: &AccessibleChoi, basis: &ProductBasis) -> Result<ProbVector> {
    if basis.n_pairs() != choi.n_pairs() {
        return Err(Error::DimensionMismatch(format!(
            "{}-pair basis for a {}-pair Choi",
            basis.n_pairs(),
            choi.n_pairs()
        )));
    }
    let weights: Vec<_> = basis.pairs.iter().map(pattern_weights).collect();
    let mut out = vec![0.0; 1 << (2 * choi.n_pairs())];
    probabilities_from_weights(choi.table(), &weights, &mut out);
    ProbVector::new(out)
}

/// `⟨Φ_i| op |Φ_i⟩` for every product basis vector, by direct contraction
/// with an assembled operator.
pub fn probabilities_from_operator(op: &CMatrix, basis: &ProductBasis) -> Vec<f64> {
    basis
        .vectors()
        .iter()
        .map(|v| op.expectation(v).re)
        .collect()
}

/// Bell-basis probabilities `(Φ+, Φ−, Ψ+, Ψ−)` of one pair from its three
/// transpose-convention correlators.
pub fn bell_probabilities(choi: &AccessibleChoi, pair: usize) -> Result<ProbVector> {
    let view = choi.marginal(pair)?;
    let c = Axis::ALL.map(|a| view.value(&PatternProduct(vec![PairPattern::Correlator(a)])));
    // eigenvalues of σ_a^T ⊗ σ_a on each Bell state
    const SIGNATURES: [[f64; 3]; 4] = [
        [1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
    ];
    let probs = SIGNATURES
        .iter()
        .map(|sig| (1.0 + sig.iter().zip(&c).map(|(s, v)| s * v).sum::<f64>()) / 4.0)
        .collect();
    ProbVector::new(probs)
}
