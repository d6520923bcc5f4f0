//! Simulation of the separable prepare-and-measure scheme.
//!
//! For a setting `(a_1, ..., a_n)` each system qubit `k` is prepared in an
//! eigenstate of `σ_{a_k}` with eigenvalue `s_k = ±1` (uniformly), sent
//! through the channel and measured along the same axis, giving `o_k = ±1`.
//! The joint distribution of `(s_1..s_n, o_1..o_n)` is stored with index
//! bits `(prep_1, ..., prep_n, out_1, ..., out_n)`, most significant first,
//! bit value 0 meaning `+1`.
//!
//! Accessible coefficients are products of `s_k` (reference factor),
//! `o_k` (output factor) or both (correlator factor), averaged over every
//! setting compatible with the pattern. The resulting values are the
//! transpose-convention coefficients `(1/d) Tr[B E(A)]`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelSpec, PauliChannel};
use crate::error::{Error, Result};
use crate::qmath::{Axis, CMatrix, Pauli};
use crate::witness::{
    AccessibleChoi, Coefficient, Convention, Origin, PairPattern, PatternProduct,
};

/// Name of the generator recorded in record metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), stream = setting index";

/// One measurement axis per pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Setting(pub Vec<Axis>);

impl Setting {
    pub fn all(n_pairs: usize) -> Vec<Setting> {
        (0..3usize.pow(n_pairs as u32))
            .map(|mut i| {
                let mut axes = vec![Axis::X; n_pairs];
                for slot in axes.iter_mut().rev() {
                    *slot = Axis::ALL[i % 3];
                    i /= 3;
                }
                Setting(axes)
            })
            .collect()
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Parse("empty setting".into()));
        }
        s.chars()
            .map(Axis::from_char)
            .collect::<Result<Vec<_>>>()
            .map(Setting)
    }

    pub fn n_pairs(&self) -> usize {
        self.0.len()
    }

    /// Whether `pattern` can be estimated from this setting.
    pub fn supports(&self, pattern: &PatternProduct) -> bool {
        pattern
            .0
            .iter()
            .zip(&self.0)
            .all(|(p, &a)| p.axis().is_none_or(|b| a == b))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl Serialize for Setting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Setting::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingData {
    pub setting: Setting,
    pub shots: u64,
    /// Exact joint distribution (exact mode) or empirical frequencies.
    pub probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub mode: RecordMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_setting: Option<u64>,
    #[serde(default)]
    pub poisson: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRecord {
    pub n_pairs: usize,
    pub convention: Convention,
    pub settings: Vec<SettingData>,
    /// Keyed by pattern string over `R1 S1 R2 S2`.
    pub coefficients: BTreeMap<String, CoefficientEstimate>,
    pub metadata: RecordMetadata,
}

impl CorrelatorRecord {
    pub fn validate(&self) -> Result<()> {
        let outcomes = 1usize << (2 * self.n_pairs);
        for sd in &self.settings {
            if sd.setting.n_pairs() != self.n_pairs || sd.probabilities.len() != outcomes {
                return Err(Error::DataIntegrity(format!(
                    "setting {} has the wrong shape",
                    sd.setting
                )));
            }
            if let Some(counts) = &sd.counts {
                if counts.len() != outcomes || counts.iter().sum::<u64>() != sd.shots {
                    return Err(Error::DataIntegrity(format!(
                        "counts of setting {} do not sum to its {} shots",
                        sd.setting, sd.shots
                    )));
                }
            }
        }
        for (key, est) in &self.coefficients {
            let pattern = PatternProduct::parse(key)?;
            if pattern.n_pairs() != self.n_pairs {
                return Err(Error::DataIntegrity(format!(
                    "pattern {key} has the wrong length"
                )));
            }
            if est.value.is_nan()
                || est.value.abs() > 1.0 + 1e-12
                || est.sigma.is_nan()
                || est.sigma < 0.0
            {
                return Err(Error::DataIntegrity(format!(
                    "coefficient {key} = {est:?} is invalid"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: Self = serde_json::from_str(s)?;
        rec.validate()?;
        Ok(rec)
    }
}

fn eigenprojector(axis: Axis, sign: f64) -> CMatrix {
    (&Pauli::I.matrix() + &axis.pauli().matrix().scale(sign)).scale(0.5)
}

fn sign_of(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn product_projector(setting: &Setting, bits: usize) -> CMatrix {
    let n = setting.n_pairs();
    setting
        .0
        .iter()
        .enumerate()
        .fold(CMatrix::identity(1), |acc, (k, &a)| {
            acc.kron(&eigenprojector(a, sign_of((bits >> (n - 1 - k)) & 1)))
        })
}

/// Exact joint distribution of one setting.
pub fn setting_distribution(ch: &PauliChannel, setting: &Setting) -> Result<Vec<f64>> {
    let n = ch.n_qubits();
    if setting.n_pairs() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}-axis setting for a {n}-qubit channel",
            setting.n_pairs()
        )));
    }
    let states = 1usize << n;
    let prep_weight = 1.0 / states as f64;
    let mut probs = vec![0.0; states * states];
    for prep in 0..states {
        let evolved = ch.apply(&product_projector(setting, prep))?;
        for out in 0..states {
            let p = product_projector(setting, out).trace_product(&evolved).re * prep_weight;
            probs[prep * states + out] = p.max(0.0);
        }
    }
    Ok(probs)
}

/// Value of the `±1` product for `pattern` at joint outcome `idx`.
fn pattern_sign(pattern: &PatternProduct, idx: usize) -> f64 {
    let n = pattern.n_pairs();
    pattern.0.iter().enumerate().fold(1.0, |acc, (k, p)| {
        let s = sign_of((idx >> (2 * n - 1 - k)) & 1);
        let o = sign_of((idx >> (n - 1 - k)) & 1);
        acc * match p {
            PairPattern::Identity => 1.0,
            PairPattern::Reference(_) => s,
            PairPattern::Output(_) => o,
            PairPattern::Correlator(_) => s * o,
        }
    })
}

/// Pools every compatible setting. Exact records carry zero sigma; sampled
/// ones the standard error of a `±1` mean, `sqrt((1 − v²)/N)`.
fn derive_coefficients(
    n_pairs: usize,
    settings: &[SettingData],
    mode: RecordMode,
) -> BTreeMap<String, CoefficientEstimate> {
    let mut out = BTreeMap::new();
    for pattern in PatternProduct::all(n_pairs).skip(1) {
        let (mut sum, mut weight) = (0.0, 0.0);
        for sd in settings.iter().filter(|sd| sd.setting.supports(&pattern)) {
            let mean: f64 = sd
                .probabilities
                .iter()
                .enumerate()
                .map(|(i, p)| p * pattern_sign(&pattern, i))
                .sum();
            let w = match mode {
                RecordMode::Exact => 1.0,
                RecordMode::Sampled => sd.shots as f64,
            };
            sum += w * mean;
            weight += w;
        }
        if weight == 0.0 {
            continue;
        }
        let value = (sum / weight).clamp(-1.0, 1.0);
        let sigma = match mode {
            RecordMode::Exact => 0.0,
            RecordMode::Sampled => ((1.0 - value * value).max(0.0) / weight).sqrt(),
        };
        out.insert(pattern.to_string(), CoefficientEstimate { value, sigma });
    }
    out
}

fn check_channel(ch: &PauliChannel) -> Result<()> {
    if !(1..=2).contains(&ch.n_qubits()) {
        return Err(Error::Domain(format!(
            "{}-qubit channels are not supported",
            ch.n_qubits()
        )));
    }
    Ok(())
}

pub fn exact_record(ch: &PauliChannel) -> Result<CorrelatorRecord> {
    exact_record_with_spec(ch, None)
}

pub fn exact_record_with_spec(
    ch: &PauliChannel,
    spec: Option<ChannelSpec>,
) -> Result<CorrelatorRecord> {
    check_channel(ch)?;
    let n = ch.n_qubits();
    let settings = Setting::all(n)
        .into_iter()
        .map(|setting| {
            let probabilities = setting_distribution(ch, &setting)?;
            Ok(SettingData {
                setting,
                shots: 0,
                probabilities,
                counts: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let coefficients = derive_coefficients(n, &settings, RecordMode::Exact);
    Ok(CorrelatorRecord {
        n_pairs: n,
        convention: Convention::Transpose,
        settings,
        coefficients,
        metadata: RecordMetadata {
            mode: RecordMode::Exact,
            seed: None,
            shots_per_setting: None,
            poisson: false,
            rng: None,
            channel: spec,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    pub shots_per_setting: u64,
    pub seed: u64,
    /// Draw each setting's total from a Poisson law with the given mean.
    pub poisson: bool,
}

/// Multinomial counts by sequential binomial draws.
fn multinomial(rng: &mut impl Rng, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= p {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .expect("q in [0, 1]")
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

pub fn sampled_record(ch: &PauliChannel, cfg: &SamplingConfig) -> Result<CorrelatorRecord> {
    sampled_record_with_spec(ch, cfg, None)
}

pub fn sampled_record_with_spec(
    ch: &PauliChannel,
    cfg: &SamplingConfig,
    spec: Option<ChannelSpec>,
) -> Result<CorrelatorRecord> {
    check_channel(ch)?;
    if cfg.shots_per_setting == 0 {
        return Err(Error::Config(
            "at least one shot per setting is required".into(),
        ));
    }
    let n = ch.n_qubits();
    let settings = Setting::all(n)
        .into_iter()
        .enumerate()
        .map(|(idx, setting)| {
            let exact = setting_distribution(ch, &setting)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx as u64);
            let shots = if cfg.poisson {
                let draw: f64 = Poisson::new(cfg.shots_per_setting as f64)
                    .expect("positive mean")
                    .sample(&mut rng);
                (draw as u64).max(1)
            } else {
                cfg.shots_per_setting
            };
            let counts = multinomial(&mut rng, shots, &exact);
            let probabilities = counts.iter().map(|&c| c as f64 / shots as f64).collect();
            Ok(SettingData {
                setting,
                shots,
                probabilities,
                counts: Some(counts),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let coefficients = derive_coefficients(n, &settings, RecordMode::Sampled);
    Ok(CorrelatorRecord {
        n_pairs: n,
        convention: Convention::Transpose,
        settings,
        coefficients,
        metadata: RecordMetadata {
            mode: RecordMode::Sampled,
            seed: Some(cfg.seed),
            shots_per_setting: Some(cfg.shots_per_setting),
            poisson: cfg.poisson,
            rng: Some(RNG_NAME.to_string()),
            channel: spec,
        },
    })
}

pub fn record_to_accessible_choi(rec: &CorrelatorRecord) -> Result<AccessibleChoi> {
    rec.validate()?;
    let origin = match rec.metadata.mode {
        RecordMode::Exact => Origin::Exact,
        RecordMode::Sampled => Origin::Measured,
    };
    let entries = rec
        .coefficients
        .iter()
        .map(|(key, est)| {
            let pattern = PatternProduct::parse(key)?;
            let value = rec.convention.to_transpose(&pattern, est.value);
            Ok((
                pattern,
                Coefficient {
                    value,
                    sigma: Some(est.sigma),
                    origin,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    AccessibleChoi::new(rec.n_pairs, entries, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{correlated_channel, theory_correlators, ChannelParams};
    use crate::witness::{accessible_choi_from_channel, q_det, SearchConfig};

    fn params(p: f64, mu: f64) -> ChannelParams {
        ChannelParams::new(p, mu).unwrap()
    }

    #[test]
    fn identity_z_setting_is_perfectly_correlated() {
        let rec = exact_record(&PauliChannel::identity(1)).unwrap();
        let z = rec
            .settings
            .iter()
            .find(|s| s.setting.0 == [Axis::Z])
            .unwrap();
        // bits (prep, out): only 00 and 11
        assert_eq!(z.probabilities, vec![0.5, 0.0, 0.0, 0.5]);
        let choi = record_to_accessible_choi(&rec).unwrap();
        for a in Axis::ALL {
            assert_eq!(
                choi.value(&PatternProduct(vec![PairPattern::Correlator(a)])),
                1.0
            );
        }
    }

    #[test]
    fn pair_table_matches_theory() {
        let prm = params(0.25, 1.0);
        let rec = exact_record(&correlated_channel(&prm)).unwrap();
        let theory = theory_correlators(&prm);
        for (i, &a) in Axis::ALL.iter().enumerate() {
            for (j, &b) in Axis::ALL.iter().enumerate() {
                let pattern =
                    PatternProduct(vec![PairPattern::Correlator(a), PairPattern::Correlator(b)]);
                let v = rec.coefficients[&pattern.to_string()].value;
                let published = Convention::NoTranspose.from_transpose(&pattern, v);
                assert!((published - theory[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_moments_vanish() {
        let ch = PauliChannel::new(1, vec![0.5, 0.2, 0.2, 0.1]).unwrap();
        let rec = exact_record(&ch).unwrap();
        for a in Axis::ALL {
            let key = PatternProduct(vec![PairPattern::Reference(a)]).to_string();
            assert!(rec.coefficients[&key].value.abs() < 1e-15);
        }
    }

    #[test]
    fn ensemble_equals_choi_trace() {
        let raw: Vec<f64> = (0..16).map(|i| ((i * 7) % 11 + 1) as f64).collect();
        let total: f64 = raw.iter().sum();
        let ch = PauliChannel::new(2, raw.iter().map(|x| x / total).collect()).unwrap();
        let from_record = record_to_accessible_choi(&exact_record(&ch).unwrap()).unwrap();
        let direct = accessible_choi_from_channel(&ch);
        for (p, c) in direct.entries() {
            assert!((from_record.value(&p) - c.value).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn shots_one_gives_extreme_correlators() {
        let ch = correlated_channel(&params(0.3, 0.4));
        let cfg = SamplingConfig {
            shots_per_setting: 1,
            seed: 5,
            poisson: false,
        };
        let rec = sampled_record(&ch, &cfg).unwrap();
        for (key, est) in &rec.coefficients {
            let pattern = PatternProduct::parse(key).unwrap();
            // patterns fixing every axis come from a single setting
            if pattern.0.iter().all(|p| p.axis().is_some()) {
                assert!(
                    est.value == 1.0 || est.value == -1.0,
                    "{key}: {}",
                    est.value
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let ch = correlated_channel(&params(0.25, 0.5));
        let cfg = SamplingConfig {
            shots_per_setting: 1000,
            seed: 42,
            poisson: false,
        };
        let a = sampled_record(&ch, &cfg).unwrap();
        let b = sampled_record(&ch, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let other = sampled_record(&ch, &SamplingConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.coefficients, other.coefficients);
    }

    #[test]
    fn large_samples_converge() {
        let ch = correlated_channel(&params(0.375, 0.2));
        let exact = exact_record(&ch).unwrap();
        let cfg = SamplingConfig {
            shots_per_setting: 1_000_000,
            seed: 1,
            poisson: false,
        };
        let rec = sampled_record(&ch, &cfg).unwrap();
        for (key, est) in &rec.coefficients {
            let want = exact.coefficients[key].value;
            let band = 4.0 * est.sigma.max(1e-6);
            assert!(
                (est.value - want).abs() <= band,
                "{key}: {} vs {want}",
                est.value
            );
        }
    }

    #[test]
    fn poisson_mode_varies_totals() {
        let ch = correlated_channel(&params(0.25, 0.5));
        let cfg = SamplingConfig {
            shots_per_setting: 500,
            seed: 9,
            poisson: true,
        };
        let rec = sampled_record(&ch, &cfg).unwrap();
        rec.validate().unwrap();
        assert!(rec.settings.iter().any(|s| s.shots != 500));
    }

    #[test]
    fn no_transpose_records_are_converted() {
        let mut rec = exact_record(&correlated_channel(&params(0.25, 1.0))).unwrap();
        rec.convention = Convention::NoTranspose;
        rec.coefficients.insert(
            "XXYY".into(),
            CoefficientEstimate {
                value: -0.5,
                sigma: 0.0,
            },
        );
        let choi = record_to_accessible_choi(&rec).unwrap();
        assert_eq!(choi.value(&PatternProduct::parse("XXYY").unwrap()), 0.5);
    }

    #[test]
    fn unknown_convention_is_rejected() {
        let rec = exact_record(&PauliChannel::identity(1)).unwrap();
        let json = rec
            .to_json()
            .unwrap()
            .replace("\"transpose\"", "\"sideways\"");
        assert!(CorrelatorRecord::from_json(&json).is_err());
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let ch = correlated_channel(&params(0.25, 0.5));
        let cfg = SamplingConfig {
            shots_per_setting: 100,
            seed: 3,
            poisson: false,
        };
        let rec = sampled_record(&ch, &cfg).unwrap();
        let back = CorrelatorRecord::from_json(&rec.to_json().unwrap()).unwrap();
        assert_eq!(back, rec);
        let mut bad = rec.clone();
        bad.settings[0].counts.as_mut().unwrap()[0] += 1;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn witness_roundtrip_through_record() {
        let ch = correlated_channel(&params(0.25, 1.0 / 3.0));
        let cfg = SearchConfig::default();
        let via_record = q_det(
            &record_to_accessible_choi(&exact_record(&ch).unwrap()).unwrap(),
            &cfg,
        )
        .unwrap();
        let direct = q_det(&accessible_choi_from_channel(&ch), &cfg).unwrap();
        assert!((via_record.q_det_raw - direct.q_det_raw).abs() < 1e-10);
    }
}
