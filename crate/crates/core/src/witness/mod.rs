//! The detectable capacity witness.

pub mod accessible;
pub mod basis;
pub mod bootstrap;
pub mod search;

pub use accessible::{
    accessible_choi_from_channel, accessible_choi_from_pair_correlators, bell_probabilities,
    probabilities_from_operator, probability_vector, AccessibleChoi, Assumption, Coefficient,
    Convention, Origin, PairPattern, PatternProduct,
};
pub use basis::{basis_vectors, BasisFamily, BasisSpec, ProductBasis};
pub use bootstrap::{bootstrap_by, bootstrap_error, truncated_normal, BootstrapReport};
pub use search::{q_det, q_det_warm, Candidate, SearchConfig, WitnessResult};

use serde::Serialize;

use crate::channels::{correlated_channel, ChannelParams};
use crate::error::{Error, Result};

/// Sum of single-use witnesses, the benchmark that ignores correlations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimReport {
    pub q1: f64,
    pub q2: f64,
    pub q_lim: f64,
    /// The per-pair views came from a fitted model rather than data.
    pub model_assisted: bool,
}

/// Where the single-use views come from.
#[derive(Clone, Copy, Debug)]
pub enum LimSource<'a> {
    /// Per-pair marginals of a two-pair accessible Choi.
    Marginals(&'a AccessibleChoi),
    /// Marginals of the correlated channel with fitted parameters.
    Fitted(ChannelParams),
}

pub fn q_lim(source: LimSource<'_>, cfg: &SearchConfig) -> Result<LimReport> {
    let (views, model_assisted) = match source {
        LimSource::Marginals(choi) => {
            if choi.n_pairs() != 2 {
                return Err(Error::DimensionMismatch(
                    "q_lim needs a two-pair Choi".into(),
                ));
            }
            let from_model = choi
                .entries()
                .any(|(p, c)| c.origin == Origin::Model && p.0.contains(&PairPattern::Identity));
            ([choi.marginal(1)?, choi.marginal(2)?], from_model)
        }
        LimSource::Fitted(params) => {
            let ch = correlated_channel(&params);
            let view = |k| ch.marginal(k).map(|m| accessible_choi_from_channel(&m));
            ([view(1)?, view(2)?], true)
        }
    };
    let q1 = q_det(&views[0], cfg)?.q_det;
    let q2 = q_det(&views[1], cfg)?.q_det;
    Ok(LimReport {
        q1,
        q2,
        q_lim: q1 + q2,
        model_assisted,
    })
}
