//! The three inequivalent one-pair bases reachable from same-axis
//! correlators, each a two-angle family of Bell-state superpositions.
//!
//! With `a = cos θ_b`, `b = sin θ_b`, `c = cos θ_d`, `d = sin θ_d`:
//!
//! ```text
//! B1: aΦ+ + bΦ-,  -bΦ+ + aΦ-,  cΨ+ + dΨ-,  -dΨ+ + cΨ-
//! B2: aΦ+ + bΨ+,  -bΦ+ + aΨ+,  cΦ- + dΨ-,  -dΦ- + cΨ-
//! B3: aΦ+ + ibΨ-,  ibΦ+ + aΨ-,  cΦ- + idΨ+,  idΦ- + cΨ+
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::qmath::{c, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisFamily {
    B1,
    B2,
    B3,
}

impl BasisFamily {
    pub const ALL: [BasisFamily; 3] = [BasisFamily::B1, BasisFamily::B2, BasisFamily::B3];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Bell states on a (reference, system) pair, index `2r + s`.
pub mod bell {
    use super::*;

    pub fn phi_plus() -> [C64; 4] {
        [
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
        ]
    }
    pub fn phi_minus() -> [C64; 4] {
        [
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
        ]
    }
    pub fn psi_plus() -> [C64; 4] {
        [
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
        ]
    }
    pub fn psi_minus() -> [C64; 4] {
        [
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
        ]
    }
}

/// One pair's basis: a family and its two angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub theta_b: f64,
    pub theta_d: f64,
}

impl BasisSpec {
    pub fn new(family: BasisFamily, theta_b: f64, theta_d: f64) -> Self {
        Self {
            family,
            theta_b,
            theta_d,
        }
    }

    /// The Bell basis member of a family.
    pub fn bell(family: BasisFamily) -> Self {
        Self::new(family, 0.0, 0.0)
    }

    /// Same basis with both angles folded into `[-π/2, π/2]`. Shifting an
    /// angle by π only flips the sign of two basis vectors.
    pub fn canonical(self) -> Self {
        Self::new(
            self.family,
            fold_angle(self.theta_b),
            fold_angle(self.theta_d),
        )
    }

    pub fn vectors(&self) -> [[C64; 4]; 4] {
        basis_vectors(self)
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(θb={:.4}, θd={:.4})",
            self.family, self.theta_b, self.theta_d
        )
    }
}

pub(crate) fn fold_angle(theta: f64) -> f64 {
    let folded = theta - PI * (theta / PI).round();
    folded.clamp(-FRAC_PI_2, FRAC_PI_2)
}

fn combine(x: C64, u: &[C64; 4], y: C64, v: &[C64; 4]) -> [C64; 4] {
    [0, 1, 2, 3].map(|k| x * u[k] + y * v[k])
}

/// The four orthonormal pair vectors of `spec`.
pub fn basis_vectors(spec: &BasisSpec) -> [[C64; 4]; 4] {
    use bell::*;
    let (b, a) = spec.theta_b.sin_cos();
    let (d, cc) = spec.theta_d.sin_cos();
    let (a, b, cc, d) = (c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0));
    let i = c(0.0, 1.0);
    let (pp, pm, sp, sm) = (phi_plus(), phi_minus(), psi_plus(), psi_minus());
    match spec.family {
        BasisFamily::B1 => [
            combine(a, &pp, b, &pm),
            combine(-b, &pp, a, &pm),
            combine(cc, &sp, d, &sm),
            combine(-d, &sp, cc, &sm),
        ],
        BasisFamily::B2 => [
            combine(a, &pp, b, &sp),
            combine(-b, &pp, a, &sp),
            combine(cc, &pm, d, &sm),
            combine(-d, &pm, cc, &sm),
        ],
        BasisFamily::B3 => [
            combine(a, &pp, i * b, &sm),
            combine(i * b, &pp, a, &sm),
            combine(cc, &pm, i * d, &sp),
            combine(i * d, &pm, cc, &sp),
        ],
    }
}

/// Tensor product of per-pair bases; vector index `4·i1 + i2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductBasis {
    pub pairs: Vec<BasisSpec>,
}

impl ProductBasis {
    pub fn new(pairs: Vec<BasisSpec>) -> Self {
        Self { pairs }
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn families(&self) -> Vec<BasisFamily> {
        self.pairs.iter().map(|b| b.family).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .flat_map(|b| [b.theta_b, b.theta_d])
            .collect()
    }

    pub fn from_thetas(families: &[BasisFamily], thetas: &[f64]) -> Self {
        Self::new(
            families
                .iter()
                .zip(thetas.chunks(2))
                .map(|(&f, t)| BasisSpec::new(f, t[0], t[1]))
                .collect(),
        )
    }

    pub fn canonical(&self) -> Self {
        Self::new(self.pairs.iter().map(|b| b.canonical()).collect())
    }

    /// All product vectors over `(R1, S1, R2, S2, ...)`.
    pub fn vectors(&self) -> Vec<Vec<C64>> {
        self.pairs
            .iter()
            .fold(vec![vec![c(1.0, 0.0)]], |acc, spec| {
                let vs = spec.vectors();
                acc.iter()
                    .flat_map(|prefix| {
                        vs.iter().map(move |v| {
                            prefix
                                .iter()
                                .flat_map(|x| v.iter().map(move |y| x * y))
                                .collect()
                        })
                    })
                    .collect()
            })
    }
}

impl fmt::Display for ProductBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}
