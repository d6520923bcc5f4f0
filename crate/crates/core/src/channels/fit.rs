//! Least-squares fit of the correlated bit-flip model to a 3×3 pair
//! correlator table.
//!
//! The model is `η · T(p, A)` where `T` is the ideal table and `η` is a
//! common visibility that absorbs uniform loss of contrast in the
//! measurement. Its entries are `η` on (X,X), `±η u` with `u = 1 − 2p` in the
//! X row/column and `±η v` with `v = 1 − 4A`, `A = A_IX`, in the Y/Z block.
//! In the variables `(η, ηu, ηv)` the weighted problem is linear and
//! decouples. The resulting `(p, A)` is projected onto the feasible
//! triangle `0 ≤ A ≤ min(p, 1 − p)` under the induced weighted norm.

use serde::{Deserialize, Serialize};

use super::ChannelParams;
use crate::error::{Error, Result};

/// Pair correlators `(σ_i⊗σ_j)` for `i, j ∈ {X, Y, Z}` in the published
/// convention, with one-sigma uncertainties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorMatrix {
    pub values: [[f64; 3]; 3],
    pub sigmas: [[f64; 3]; 3],
}

impl CorrelatorMatrix {
    pub fn exact(values: [[f64; 3]; 3]) -> Self {
        Self {
            values,
            sigmas: [[0.0; 3]; 3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub p: f64,
    /// Absent when `p(1 − p) < 1e-9`.
    pub mu: Option<f64>,
    pub single_flip: f64,
    /// Common contrast factor, 1 for ideal data.
    pub visibility: f64,
    /// Weighted residual `Σ (theory − measured)² / σ²` (unit weights when
    /// any sigma is zero).
    pub chi2: f64,
}

impl FitResult {
    pub fn params(&self) -> Option<ChannelParams> {
        self.mu
            .and_then(|mu| ChannelParams::new(self.p, mu.clamp(0.0, 1.0)).ok())
    }
}

// sign of u = 1 - 2p in each X-row / X-column entry
const U_ENTRIES: [((usize, usize), f64); 4] =
    [((0, 1), -1.0), ((0, 2), 1.0), ((1, 0), -1.0), ((2, 0), 1.0)];
// sign of v = 1 - 4A in the Y/Z block
const V_ENTRIES: [((usize, usize), f64); 4] =
    [((1, 1), 1.0), ((1, 2), -1.0), ((2, 1), -1.0), ((2, 2), 1.0)];

const MIN_VISIBILITY: f64 = 0.1;

pub fn fit_channel(data: &CorrelatorMatrix) -> Result<FitResult> {
    if let Some(v) = data
        .values
        .iter()
        .flatten()
        .find(|v| !(-1.05..=1.05).contains(*v))
    {
        return Err(Error::DataIntegrity(format!(
            "correlator {v} outside [-1.05, 1.05]"
        )));
    }
    let weighted = data.sigmas.iter().flatten().all(|&s| s > 0.0);
    let weight = |(i, j): (usize, usize)| {
        if weighted {
            1.0 / (data.sigmas[i][j] * data.sigmas[i][j])
        } else {
            1.0
        }
    };
    let solve = |entries: &[((usize, usize), f64)]| {
        let (num, den) = entries.iter().fold((0.0, 0.0), |(n, d), &(ij, s)| {
            (n + weight(ij) * s * data.values[ij.0][ij.1], d + weight(ij))
        });
        (num / den, den)
    };
    let visibility = data.values[0][0];
    if visibility < MIN_VISIBILITY {
        return Err(Error::DataIntegrity(format!(
            "(X,X) correlator {visibility} too small to fix the visibility"
        )));
    }
    let (eta_u, w_u) = solve(&U_ENTRIES);
    let (eta_v, w_v) = solve(&V_ENTRIES);
    let (u_hat, v_hat) = (eta_u / visibility, eta_v / visibility);
    // objective in (p, A): 4 η² w_u (p - p̂)² + 16 η² w_v (A - Â)²
    let target = ((1.0 - u_hat) / 2.0, (1.0 - v_hat) / 4.0);
    let metric = (4.0 * w_u, 16.0 * w_v);
    let (p, single_flip) = project_onto_triangle(target, metric);

    let model =
        super::theory_correlators(&ChannelParams { p, mu: 0.0 }.with_single_flip(single_flip));
    let mut chi2 = 0.0;
    for (i, (model_row, data_row)) in model.iter().zip(&data.values).enumerate() {
        for (j, (m, v)) in model_row.iter().zip(data_row).enumerate() {
            let d = visibility * m - v;
            chi2 += weight((i, j)) * d * d;
        }
    }
    let spread = p * (1.0 - p);
    let mu = (spread >= 1e-9).then(|| 1.0 - single_flip / spread);
    Ok(FitResult {
        p,
        mu,
        single_flip,
        visibility,
        chi2,
    })
}

impl ChannelParams {
    // μ that reproduces a given A_IX at this p; only used to evaluate the
    // theory table at fitted (p, A) without a degenerate μ.
    fn with_single_flip(self, a: f64) -> ChannelParams {
        let spread = self.p * (1.0 - self.p);
        let mu = if spread > 0.0 { 1.0 - a / spread } else { 1.0 };
        ChannelParams { p: self.p, mu }
    }
}

fn inside(p: f64, a: f64) -> bool {
    (0.0..=1.0).contains(&p) && a >= 0.0 && a <= p.min(1.0 - p)
}

fn project_onto_triangle(target: (f64, f64), metric: (f64, f64)) -> (f64, f64) {
    if inside(target.0, target.1) {
        return target;
    }
    let dist =
        |(p, a): (f64, f64)| metric.0 * (p - target.0).powi(2) + metric.1 * (a - target.1).powi(2);
    let vertices = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.25)];
    let mut best = vertices[0];
    for k in 0..3 {
        let (p0, a0) = vertices[k];
        let (p1, a1) = vertices[(k + 1) % 3];
        let (dp, da) = (p1 - p0, a1 - a0);
        let denom = metric.0 * dp * dp + metric.1 * da * da;
        let t = (metric.0 * dp * (target.0 - p0) + metric.1 * da * (target.1 - a0)) / denom;
        let t = t.clamp(0.0, 1.0);
        let cand = (p0 + t * dp, a0 + t * da);
        if dist(cand) < dist(best) {
            best = cand;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::theory_correlators;

    #[test]
    fn recovers_ideal_parameters() {
        let params = ChannelParams::new(0.25, 2.0 / 3.0).unwrap();
        let fit = fit_channel(&CorrelatorMatrix::exact(theory_correlators(&params))).unwrap();
        assert!((fit.p - 0.25).abs() < 1e-12);
        assert!((fit.mu.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(fit.chi2 < 1e-20);
        assert_eq!(fit.visibility, 1.0);
    }

    #[test]
    fn uniform_contrast_loss_is_absorbed() {
        let params = ChannelParams::new(0.125, 0.9).unwrap();
        let mut values = theory_correlators(&params);
        values.iter_mut().flatten().for_each(|v| *v *= 0.97);
        let fit = fit_channel(&CorrelatorMatrix::exact(values)).unwrap();
        assert!((fit.visibility - 0.97).abs() < 1e-15);
        assert!((fit.p - 0.125).abs() < 1e-12);
        assert!((fit.mu.unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn vanishing_xx_is_rejected() {
        let values = [[0.0, 0.5, 0.5], [0.5, 0.2, 0.0], [0.5, 0.0, 0.2]];
        assert!(fit_channel(&CorrelatorMatrix::exact(values)).is_err());
    }

    #[test]
    fn xx_only_matrix_is_uncorrelated_half_flip() {
        // 1 - 2p = 0 and 1 - 4p(1-p)(1-μ) = 0  =>  p = 1/2, μ = 0
        let mut values = [[0.0; 3]; 3];
        values[0][0] = 1.0;
        let fit = fit_channel(&CorrelatorMatrix::exact(values)).unwrap();
        assert!((fit.p - 0.5).abs() < 1e-15);
        assert!(fit.mu.unwrap().abs() < 1e-15);
    }

    #[test]
    fn degenerate_flip_probability_has_no_mu() {
        let params = ChannelParams::new(0.0, 0.5).unwrap();
        let fit = fit_channel(&CorrelatorMatrix::exact(theory_correlators(&params))).unwrap();
        assert!(fit.p.abs() < 1e-15);
        assert_eq!(fit.mu, None);
        assert!(fit.params().is_none());
    }

    #[test]
    fn infeasible_estimate_is_projected() {
        // Y/Z block stronger than any channel allows at p = 1/4 (v̂ > 1)
        let mut values = theory_correlators(&ChannelParams::new(0.25, 1.0).unwrap());
        for (ij, s) in V_ENTRIES {
            values[ij.0][ij.1] = 1.02 * s;
        }
        let fit = fit_channel(&CorrelatorMatrix::exact(values)).unwrap();
        assert!(inside(fit.p, fit.single_flip));
        assert!(fit.single_flip.abs() < 1e-15);
        assert!((fit.mu.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_entries_rejected() {
        let mut values = [[0.0; 3]; 3];
        values[1][1] = 1.2;
        assert!(fit_channel(&CorrelatorMatrix::exact(values)).is_err());
    }
}
