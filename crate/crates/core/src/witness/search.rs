//! Minimization of the basis entropy over the three families and their
//! angles, and the resulting detectable capacity.
//!
//! The search is a full grid over every family combination followed by
//! Nelder–Mead refinement from the best grid points. Grid evaluation is
//! split by the pair-1 grid point and runs on the rayon pool. Each task
//! keeps its own short list and the lists are merged in task order, so the
//! result does not depend on scheduling.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use super::accessible::{
    pattern_weights, probabilities_from_weights, AccessibleChoi, Assumption, PATTERNS_PER_PAIR,
};
use super::basis::{fold_angle, BasisFamily, BasisSpec, ProductBasis};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::qmath::{entropy_of, ProbVector, NEGATIVE_FLOOR};

/// Entropies closer than this are treated as equal when ranking bases.
pub const ENTROPY_TIE_TOL: f64 = 1e-9;

type Weights = [[f64; PATTERNS_PER_PAIR]; 4];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Grid points per angle over `[-π/2, π/2]`.
    pub grid: usize,
    pub refine: bool,
    /// Number of best grid points used as refinement starts.
    pub refine_starts: usize,
    pub max_iter: usize,
    /// Entropy tolerance of the simplex refinement.
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid: 21,
            refine: true,
            refine_starts: 5,
            max_iter: 2000,
            tol: 1e-13,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 points, got {}",
                self.grid
            )));
        }
        if self.refine_starts == 0 {
            return Err(Error::Config("refine_starts must be positive".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        Ok(())
    }

    fn nelder_mead(&self) -> NelderMeadConfig {
        NelderMeadConfig {
            initial_step: 0.5 * std::f64::consts::PI / (self.grid - 1) as f64,
            max_iter: self.max_iter,
            f_tol: self.tol,
            x_tol: 1e-9,
        }
    }
}

/// A basis together with its (regularized) probability entropy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub families: Vec<BasisFamily>,
    pub thetas: Vec<f64>,
    pub entropy: f64,
}

impl Candidate {
    pub fn basis(&self) -> ProductBasis {
        ProductBasis::from_thetas(&self.families, &self.thetas)
    }

    fn angle_norm(&self) -> f64 {
        self.thetas.iter().map(|t| t * t).sum()
    }
}

// B2 ranks first: at zero angles every family is a Bell basis, and B2 is
// the one whose vectors are ordered like the channel's Pauli labels.
fn family_rank(f: BasisFamily) -> u8 {
    match f {
        BasisFamily::B2 => 0,
        BasisFamily::B1 => 1,
        BasisFamily::B3 => 2,
    }
}

/// Ranking of candidates: lower entropy, then (within
/// [`ENTROPY_TIE_TOL`]) smaller angles, preferred family, smaller thetas.
pub fn compare_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    if (a.entropy - b.entropy).abs() > ENTROPY_TIE_TOL {
        return a.entropy.total_cmp(&b.entropy);
    }
    a.angle_norm()
        .total_cmp(&b.angle_norm())
        .then_with(|| {
            let ra = a.families.iter().map(|&f| family_rank(f));
            let rb = b.families.iter().map(|&f| family_rank(f));
            ra.cmp(rb)
        })
        .then_with(|| {
            a.thetas
                .iter()
                .zip(&b.thetas)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Short list of the best candidates; insertion is order-dependent only
/// through the (deterministic) input order.
#[derive(Clone, Debug)]
struct TopK {
    k: usize,
    items: Vec<Candidate>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn push(&mut self, cand: Candidate) {
        if self.items.len() == self.k
            && compare_candidates(&cand, self.items.last().expect("k > 0")) != Ordering::Less
        {
            return;
        }
        let pos = self
            .items
            .iter()
            .position(|c| compare_candidates(&cand, c) == Ordering::Less)
            .unwrap_or(self.items.len());
        self.items.insert(pos, cand);
        self.items.truncate(self.k);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessResult {
    /// `max(0, q_det_raw)`.
    pub q_det: f64,
    pub q_det_raw: f64,
    pub clamped: bool,
    pub best_basis: ProductBasis,
    pub prob_vector: Vec<f64>,
    /// `S[E(I/d)]`.
    pub output_entropy: f64,
    /// Minimal probability entropy found.
    pub min_entropy: f64,
    pub sigma_q: Option<f64>,
    pub assumptions: Vec<Assumption>,
    /// Refined candidates, best first.
    pub candidates: Vec<Candidate>,
}

impl WitnessResult {
    pub fn prob_vector(&self) -> Result<ProbVector> {
        ProbVector::new(self.prob_vector.clone())
    }
}

/// Regularized entropy of the probabilities in `basis`, `+∞` when some
/// probability falls below the floor.
pub(crate) fn entropy_for(table: &[f64], weights: &[Weights], scratch: &mut [f64]) -> f64 {
    probabilities_from_weights(table, weights, scratch);
    if scratch.iter().any(|&p| p < NEGATIVE_FLOOR) {
        return f64::INFINITY;
    }
    entropy_of(scratch)
}

pub(crate) fn entropy_at(choi: &AccessibleChoi, families: &[BasisFamily], thetas: &[f64]) -> f64 {
    let weights: Vec<Weights> = families
        .iter()
        .zip(thetas.chunks(2))
        .map(|(&f, t)| pattern_weights(&BasisSpec::new(f, t[0], t[1])))
        .collect();
    let mut scratch = vec![0.0; 1 << (2 * families.len())];
    entropy_for(choi.table(), &weights, &mut scratch)
}

fn grid_angles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -FRAC_PI_2 + std::f64::consts::PI * i as f64 / (n - 1) as f64)
        .collect()
}

struct GridPoint {
    family: BasisFamily,
    thetas: [f64; 2],
    weights: Weights,
}

fn grid_points(grid: usize) -> Vec<GridPoint> {
    let angles = grid_angles(grid);
    let mut out = Vec::with_capacity(3 * grid * grid);
    for family in BasisFamily::ALL {
        for &tb in &angles {
            for &td in &angles {
                let weights = pattern_weights(&BasisSpec::new(family, tb, td));
                out.push(GridPoint {
                    family,
                    thetas: [tb, td],
                    weights,
                });
            }
        }
    }
    out
}

fn grid_search(choi: &AccessibleChoi, cfg: &SearchConfig) -> Vec<Candidate> {
    let points = grid_points(cfg.grid);
    let table = choi.table();
    let k = cfg.refine_starts;
    let lists: Vec<TopK> = match choi.n_pairs() {
        1 => {
            let mut top = TopK::new(k);
            let mut scratch = [0.0; 4];
            for pt in &points {
                let entropy = entropy_for(table, &[pt.weights], &mut scratch);
                if entropy.is_finite() {
                    top.push(Candidate {
                        families: vec![pt.family],
                        thetas: pt.thetas.to_vec(),
                        entropy,
                    });
                }
            }
            vec![top]
        }
        _ => points
            .par_iter()
            .map(|p1| {
                let mut top = TopK::new(k);
                // m[i1][P2] = Σ_{P1} W1[i1][P1] T[P1, P2]
                let mut m = [[0.0; PATTERNS_PER_PAIR]; 4];
                for (row, w1) in m.iter_mut().zip(&p1.weights) {
                    for (a, &x) in w1.iter().enumerate() {
                        if x != 0.0 {
                            let t = &table[a * PATTERNS_PER_PAIR..(a + 1) * PATTERNS_PER_PAIR];
                            for (r, tv) in row.iter_mut().zip(t) {
                                *r += x * tv;
                            }
                        }
                    }
                }
                let mut probs = [0.0; 16];
                for p2 in &points {
                    let mut feasible = true;
                    for (i1, row) in m.iter().enumerate() {
                        for (i2, w2) in p2.weights.iter().enumerate() {
                            let v = row.iter().zip(w2).map(|(a, b)| a * b).sum::<f64>() / 16.0;
                            feasible &= v >= NEGATIVE_FLOOR;
                            probs[4 * i1 + i2] = v;
                        }
                    }
                    if !feasible {
                        continue;
                    }
                    let entropy = entropy_of(&probs);
                    if top.items.len() == k && entropy > top.items[k - 1].entropy + ENTROPY_TIE_TOL
                    {
                        continue;
                    }
                    top.push(Candidate {
                        families: vec![p1.family, p2.family],
                        thetas: vec![p1.thetas[0], p1.thetas[1], p2.thetas[0], p2.thetas[1]],
                        entropy,
                    });
                }
                top
            })
            .collect(),
    };
    let mut merged = TopK::new(k);
    for list in lists {
        for cand in list.items {
            merged.push(cand);
        }
    }
    merged.items
}

/// Refines `start` with the families held fixed.
pub(crate) fn refine(choi: &AccessibleChoi, start: &Candidate, cfg: &SearchConfig) -> Candidate {
    let families = &start.families;
    let weights_of = |thetas: &[f64]| -> Vec<Weights> {
        families
            .iter()
            .zip(thetas.chunks(2))
            .map(|(&f, t)| pattern_weights(&BasisSpec::new(f, t[0], t[1])))
            .collect()
    };
    let mut scratch = vec![0.0; 1 << (2 * families.len())];
    let table = choi.table();
    let objective = |x: &[f64]| {
        let mut local = scratch.clone();
        entropy_for(table, &weights_of(x), &mut local)
    };
    let min = nelder_mead(objective, &start.thetas, &cfg.nelder_mead());
    let thetas: Vec<f64> = min.x.iter().map(|&t| fold_angle(t)).collect();
    let entropy = entropy_for(table, &weights_of(&thetas), &mut scratch);
    let refined = Candidate {
        families: families.clone(),
        thetas,
        entropy,
    };
    if compare_candidates(&refined, start) == Ordering::Less {
        refined
    } else {
        start.clone()
    }
}

fn finish(choi: &AccessibleChoi, mut candidates: Vec<Candidate>) -> Result<WitnessResult> {
    let mut ranked = TopK::new(candidates.len().max(1));
    for c in candidates.drain(..) {
        ranked.push(c);
    }
    let candidates = ranked.items;
    let best = candidates.first().ok_or_else(|| {
        Error::DataIntegrity("no basis keeps every probability above the floor".into())
    })?;
    let best_basis = best.basis();
    let prob_vector = super::accessible::probability_vector(choi, &best_basis)?;
    let output_entropy = choi.output_entropy()?;
    let q_det_raw = output_entropy - best.entropy;
    let clamped = q_det_raw < 0.0;
    Ok(WitnessResult {
        q_det: q_det_raw.max(0.0),
        q_det_raw,
        clamped,
        best_basis,
        prob_vector: prob_vector.values().to_vec(),
        output_entropy,
        min_entropy: best.entropy,
        sigma_q: None,
        assumptions: choi.assumptions().to_vec(),
        candidates,
    })
}

/// `Q_DET = S[E(I/d)] − min_basis H(p)`, clamped at zero with the raw value
/// kept.
pub fn q_det(choi: &AccessibleChoi, cfg: &SearchConfig) -> Result<WitnessResult> {
    cfg.validate()?;
    let starts = grid_search(choi, cfg);
    let mut candidates = starts.clone();
    if cfg.refine {
        let refined: Vec<Candidate> = starts.par_iter().map(|s| refine(choi, s, cfg)).collect();
        candidates.extend(refined);
    }
    finish(choi, candidates)
}

/// Re-optimizes from previously found candidates without a grid; used for
/// resampled data close to the nominal one.
pub fn q_det_warm(
    choi: &AccessibleChoi,
    starts: &[Candidate],
    cfg: &SearchConfig,
) -> Result<WitnessResult> {
    cfg.validate()?;
    let candidates: Vec<Candidate> = starts
        .iter()
        .map(|s| {
            let start = Candidate {
                entropy: entropy_at(choi, &s.families, &s.thetas),
                ..s.clone()
            };
            if cfg.refine {
                refine(choi, &start, cfg)
            } else {
                start
            }
        })
        .filter(|c| c.entropy.is_finite())
        .collect();
    finish(choi, candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::exact_capacity;
    use crate::channels::{correlated_channel, ChannelParams, PauliChannel};
    use crate::qmath::Axis;
    use crate::witness::accessible::{
        accessible_choi_from_channel, Coefficient, PairPattern, PatternProduct,
    };

    fn ideal(p: f64, mu: f64) -> AccessibleChoi {
        accessible_choi_from_channel(&correlated_channel(&ChannelParams::new(p, mu).unwrap()))
    }

    #[test]
    fn perfectly_correlated_half_flip() {
        let res = q_det(&ideal(0.5, 1.0), &SearchConfig::default()).unwrap();
        assert!((res.q_det - 1.0).abs() < 1e-6, "{}", res.q_det);
        assert_eq!(
            res.best_basis.families(),
            vec![BasisFamily::B2, BasisFamily::B2]
        );
        assert!(res.best_basis.thetas().iter().all(|t| t.abs() < 0.05));
        assert_eq!(res.prob_vector.len(), 16);
    }

    #[test]
    fn tight_for_a_generic_point() {
        let prm = ChannelParams::new(0.375, 0.2).unwrap();
        let res = q_det(&ideal(0.375, 0.2), &SearchConfig::default()).unwrap();
        let q = exact_capacity(&prm);
        assert!(
            res.q_det <= q + 1e-9 && res.q_det >= q - 1e-3,
            "{} vs {q}",
            res.q_det
        );
    }

    #[test]
    fn uncorrelated_half_flip_is_clamped() {
        // an ideal (1/2, 0) channel sits exactly at zero; nudge it negative
        let choi = ideal(0.5, 0.0)
            .map_values(|p, c| {
                if p.0.iter().all(|x| matches!(x, PairPattern::Correlator(_))) {
                    c.value * 0.98
                } else {
                    c.value
                }
            })
            .unwrap();
        let res = q_det(&choi, &SearchConfig::default()).unwrap();
        assert!(res.q_det_raw < 0.0);
        assert!(res.clamped);
        assert_eq!(res.q_det, 0.0);
    }

    #[test]
    fn single_pair_search() {
        let ch = PauliChannel::new(1, vec![0.75, 0.25, 0.0, 0.0]).unwrap();
        let res = q_det(&accessible_choi_from_channel(&ch), &SearchConfig::default()).unwrap();
        let want = 1.0 - crate::qmath::binary_entropy(0.25).unwrap();
        assert!((res.q_det - want).abs() < 1e-9);
        assert_eq!(res.prob_vector.len(), 4);
    }

    #[test]
    fn identity_choi_gives_one_qubit() {
        let choi = AccessibleChoi::new(
            1,
            Axis::ALL.map(|a| {
                (
                    PatternProduct(vec![PairPattern::Correlator(a)]),
                    Coefficient::exact(1.0),
                )
            }),
            vec![],
        )
        .unwrap();
        let res = q_det(&choi, &SearchConfig::default()).unwrap();
        assert!((res.q_det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_break_prefers_small_angles_then_b2() {
        let mk = |f: BasisFamily, t: f64, h: f64| Candidate {
            families: vec![f],
            thetas: vec![t, 0.0],
            entropy: h,
        };
        let a = mk(BasisFamily::B1, 0.0, 1.0);
        let b = mk(BasisFamily::B2, 0.0, 1.0 + 1e-12);
        let c = mk(BasisFamily::B2, 0.3, 1.0 - 1e-12);
        assert_eq!(compare_candidates(&b, &a), Ordering::Less);
        assert_eq!(compare_candidates(&a, &c), Ordering::Less);
        let d = mk(BasisFamily::B3, 1.0, 0.5);
        assert_eq!(compare_candidates(&d, &a), Ordering::Less);
    }

    #[test]
    fn warm_start_reproduces_nominal() {
        let choi = ideal(0.25, 1.0 / 3.0);
        let cfg = SearchConfig::default();
        let res = q_det(&choi, &cfg).unwrap();
        let warm = q_det_warm(&choi, &res.candidates, &cfg).unwrap();
        assert!((warm.q_det_raw - res.q_det_raw).abs() < 1e-12);
    }

    #[test]
    fn deterministic_across_runs() {
        let choi = ideal(0.125, 0.5);
        let cfg = SearchConfig {
            grid: 11,
            ..Default::default()
        };
        let a = q_det(&choi, &cfg).unwrap();
        let b = q_det(&choi, &cfg).unwrap();
        assert_eq!(a.q_det_raw.to_bits(), b.q_det_raw.to_bits());
        assert_eq!(a.best_basis, b.best_basis);
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = SearchConfig {
            grid: 1,
            ..Default::default()
        };
        assert!(matches!(
            q_det(&ideal(0.5, 1.0), &cfg),
            Err(Error::Config(_))
        ));
    }
}
