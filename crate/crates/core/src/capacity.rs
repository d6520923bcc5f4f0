//! Exact capacities and coherent information.

use serde::Serialize;

use crate::channels::{ChannelParams, KrausChannel, PauliChannel};
use crate::error::{Error, Result};
use crate::qmath::{entropy_of, h2, hermitian_eigen, von_neumann_entropy, CMatrix, C64};

const PURIFICATION_CUTOFF: f64 = 1e-14;

/// Joint and per-channel capacities, in qubits per channel use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub q_exact: f64,
    pub q1: f64,
    pub q2: f64,
    pub q_lim: f64,
}

impl CapacityReport {
    /// Closed-form report for the correlated bit-flip channel.
    pub fn for_params(params: &ChannelParams) -> Self {
        let q1 = dephasing_capacity_unchecked(params.p);
        Self {
            q_exact: exact_capacity(params),
            q1,
            q2: q1,
            q_lim: 2.0 * q1,
        }
    }

    /// Gain from exploiting correlations, `Q − Q_lim`.
    pub fn correlation_gain(&self) -> f64 {
        self.q_exact - self.q_lim
    }
}

/// `Q = 2 − p·H2[(1−p)(1−μ)] − (1−p)·H2[p(1−μ)] − H2(p)`.
pub fn exact_capacity(params: &ChannelParams) -> f64 {
    let (p, mu) = (params.p, params.mu);
    2.0 - p * h2((1.0 - p) * (1.0 - mu)) - (1.0 - p) * h2(p * (1.0 - mu)) - h2(p)
}

/// Capacity `1 − H2(p)` of a single-qubit dephasing channel.
pub fn dephasing_capacity(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "flip probability {p} outside [0, 1]"
        )));
    }
    Ok(dephasing_capacity_unchecked(p))
}

fn dephasing_capacity_unchecked(p: f64) -> f64 {
    1.0 - h2(p)
}

/// `I_c(ρ, E) = S[E(ρ)] − S[(I ⊗ E)(|Ψ_ρ⟩⟨Ψ_ρ|)]` with `|Ψ_ρ⟩` built from
/// the eigen-decomposition of `ρ`.
pub fn coherent_information(channel: &KrausChannel, rho: &CMatrix) -> Result<f64> {
    if rho.dim() != channel.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dim state for a {}-dim channel",
            rho.dim(),
            channel.input_dim()
        )));
    }
    let eig = hermitian_eigen(rho)?;
    if let Some(&neg) = eig.values.iter().find(|&&v| v < -1e-10) {
        return Err(Error::Domain(format!(
            "state has negative eigenvalue {neg}"
        )));
    }
    let output = channel.apply(rho)?;
    let s_out = von_neumann_entropy(&output)?;

    let kept: Vec<(f64, &Vec<C64>)> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(&v, _)| v > PURIFICATION_CUTOFF)
        .map(|(&v, vec)| (v, vec))
        .collect();
    let rank = kept.len();
    let d = rho.dim();
    // |Ψ⟩ = Σ_k √λ_k |k⟩_R ⊗ |e_k⟩_S
    let mut psi = vec![C64::default(); rank * d];
    for (k, (lambda, vec)) in kept.iter().enumerate() {
        for (s, amp) in vec.iter().enumerate() {
            psi[k * d + s] = amp * lambda.sqrt();
        }
    }
    let joint = channel.apply_to_system(&CMatrix::outer(&psi), rank)?;
    let s_exchange = von_neumann_entropy(&joint)?;
    Ok(s_out - s_exchange)
}

/// Coherent information at the maximally mixed input, `n − H(probs)`.
pub fn pauli_coherent_information(channel: &PauliChannel) -> f64 {
    channel.n_qubits() as f64 - entropy_of(channel.probs())
}
