//! Parametric bootstrap of the witness.
//!
//! Every measured coefficient with a positive sigma is redrawn from a normal
//! distribution truncated to `[-1, 1]`; the witness is recomputed with a
//! warm-started refinement from the nominal best bases. Resample `i` uses a
//! ChaCha8 generator seeded with `seed` on stream `i`, so results do not
//! depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::accessible::{AccessibleChoi, Coefficient, Origin};
use super::search::{q_det_warm, SearchConfig, WitnessResult};
use crate::error::{Error, Result};

pub const MIN_RESAMPLES: usize = 10;
const MAX_REJECTIONS: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapReport {
    pub sigma_q: f64,
    pub mean_q: f64,
    /// Raw (unclamped) witness of each resample, in resample order.
    pub samples: Vec<f64>,
    pub seed: u64,
}

/// Normal draw conditioned on `[-1, 1]`.
pub fn truncated_normal(rng: &mut impl Rng, mean: f64, sigma: f64) -> f64 {
    let normal = Normal::new(mean, sigma).expect("sigma is positive and finite");
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if (-1.0..=1.0).contains(&x) {
            return x;
        }
    }
    // a mean far outside the interval: fall back to clipping
    normal.sample(rng).clamp(-1.0, 1.0)
}

fn resamplable(c: &Coefficient) -> Option<f64> {
    match (c.origin, c.sigma) {
        (Origin::Measured, Some(s)) if s > 0.0 && s.is_finite() => Some(s),
        _ => None,
    }
}

/// One resampled copy of `choi`.
pub fn resample(choi: &AccessibleChoi, rng: &mut impl Rng) -> Result<AccessibleChoi> {
    choi.map_values(|_, c| match resamplable(c) {
        Some(sigma) => truncated_normal(rng, c.value, sigma),
        None => c.value,
    })
}

/// Sample standard deviation of the witness over `resamples` redraws.
pub fn bootstrap_error(
    choi: &AccessibleChoi,
    nominal: &WitnessResult,
    resamples: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<BootstrapReport> {
    bootstrap_by(resamples, seed, |rng| {
        let drawn = resample(choi, rng)?;
        q_det_warm(&drawn, &nominal.candidates, cfg).map(|r| r.q_det_raw)
    })
}

/// Sample standard deviation of `draw` over `resamples` independent
/// generators. `draw` receives the generator for one resample and returns
/// the raw witness computed from it.
pub fn bootstrap_by<F>(resamples: usize, seed: u64, draw: F) -> Result<BootstrapReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if resamples < MIN_RESAMPLES {
        return Err(Error::Config(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    let samples = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            draw(&mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = samples.len() as f64;
    let mean_q = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|q| (q - mean_q).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BootstrapReport {
        sigma_q: var.sqrt(),
        mean_q,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{correlated_channel, ChannelParams};
    use crate::witness::accessible::accessible_choi_from_channel;
    use crate::witness::search::q_det;

    fn noisy(sigma: f64) -> AccessibleChoi {
        let ch = correlated_channel(&ChannelParams::new(0.25, 0.5).unwrap());
        accessible_choi_from_channel(&ch)
            .map_values(|_, c| c.value)
            .unwrap()
            .with_sigmas(|_| sigma)
            .unwrap()
    }

    fn cfg() -> SearchConfig {
        SearchConfig {
            grid: 11,
            ..Default::default()
        }
    }

    #[test]
    fn zero_sigmas_give_zero_spread() {
        let choi = noisy(0.0);
        let nominal = q_det(&choi, &cfg()).unwrap();
        let rep = bootstrap_error(&choi, &nominal, 20, 7, &cfg()).unwrap();
        assert_eq!(rep.sigma_q, 0.0);
    }

    #[test]
    fn deterministic_and_monotone_in_sigma() {
        let small = noisy(0.002);
        let nominal = q_det(&small, &cfg()).unwrap();
        let a = bootstrap_error(&small, &nominal, 60, 11, &cfg()).unwrap();
        let b = bootstrap_error(&small, &nominal, 60, 11, &cfg()).unwrap();
        assert_eq!(a.samples, b.samples);
        let large = noisy(0.004);
        let c = bootstrap_error(&large, &nominal, 60, 11, &cfg()).unwrap();
        assert!(c.sigma_q > a.sigma_q, "{} vs {}", c.sigma_q, a.sigma_q);
    }

    #[test]
    fn too_few_resamples() {
        let choi = noisy(0.01);
        let nominal = q_det(&choi, &cfg()).unwrap();
        assert!(matches!(
            bootstrap_error(&choi, &nominal, 9, 0, &cfg()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn truncation_keeps_values_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = truncated_normal(&mut rng, 0.999, 0.01);
            assert!((-1.0..=1.0).contains(&x));
        }
        assert!((-1.0..=1.0).contains(&truncated_normal(&mut rng, 1.04, 1e-4)));
    }
}
