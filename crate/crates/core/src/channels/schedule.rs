//! Two-level voltage schedules for the two channel arms.
//!
//! Each arm alternates between the identity level `V0` and the flip level
//! `VX`. The weight of a Pauli pair `(i1, i2)` is the fraction of the
//! counting time during which arm 1 sits at `i1` and arm 2 at `i2`.
//! Durations are exact rationals so Table-style parameter points compile
//! without round-off.

use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{ChannelParams, PauliChannel, PauliString};
use crate::error::{Error, Result};
use crate::qmath::Pauli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    V0,
    VX,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub duration: Rational64,
    pub level: Level,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Domain(
                "a schedule needs at least one segment".into(),
            ));
        }
        if let Some(s) = segments
            .iter()
            .find(|s| s.duration <= Rational64::from_integer(0))
        {
            return Err(Error::Domain(format!(
                "segment duration {} is not positive",
                s.duration
            )));
        }
        Ok(Self { segments })
    }

    /// Builds a schedule from `(duration, level)` pairs, dropping zero-length
    /// pieces and merging neighbours at the same level.
    pub fn from_pieces(pieces: &[(Rational64, Level)]) -> Result<Self> {
        let mut segments: Vec<Segment> = Vec::new();
        for &(duration, level) in pieces {
            if duration < Rational64::from_integer(0) {
                return Err(Error::Domain(format!("negative duration {duration}")));
            }
            if duration == Rational64::from_integer(0) {
                continue;
            }
            match segments.last_mut() {
                Some(last) if last.level == level => last.duration += duration,
                _ => segments.push(Segment { duration, level }),
            }
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total(&self) -> Rational64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn time_at(&self, level: Level) -> Rational64 {
        self.segments
            .iter()
            .filter(|s| s.level == level)
            .map(|s| s.duration)
            .sum()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .segments
            .iter()
            .map(|s| format!("{}s@{:?}", s.duration, s.level))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Exact Pauli weights `(A_II, A_IX, A_XI, A_XX)` of a schedule pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OverlapCoefficients(pub [Rational64; 4]);

impl OverlapCoefficients {
    pub fn to_f64(&self) -> [f64; 4] {
        self.0.map(|r| *r.numer() as f64 / *r.denom() as f64)
    }

    pub fn to_channel(&self) -> Result<PauliChannel> {
        let mut probs = vec![0.0; 16];
        let labels = [
            (Pauli::I, Pauli::I),
            (Pauli::I, Pauli::X),
            (Pauli::X, Pauli::I),
            (Pauli::X, Pauli::X),
        ];
        for ((a, b), w) in labels.into_iter().zip(self.to_f64()) {
            probs[PauliString(vec![a, b]).index()] = w;
        }
        PauliChannel::new(2, probs)
    }
}

// index into (II, IX, XI, XX)
fn slot(l1: Level, l2: Level) -> usize {
    usize::from(l1 == Level::VX) * 2 + usize::from(l2 == Level::VX)
}

/// Overlap weights of two arm schedules with equal total duration.
pub fn schedule_to_channel(arm1: &Schedule, arm2: &Schedule) -> Result<OverlapCoefficients> {
    let total = arm1.total();
    if total != arm2.total() {
        return Err(Error::Domain(format!(
            "arm schedules last {} s and {} s",
            arm1.total(),
            arm2.total()
        )));
    }
    let zero = Rational64::from_integer(0);
    let mut weights = [zero; 4];
    let (mut i, mut j) = (0, 0);
    let mut left1 = arm1.segments[0].duration;
    let mut left2 = arm2.segments[0].duration;
    while i < arm1.segments.len() && j < arm2.segments.len() {
        let step = left1.min(left2);
        weights[slot(arm1.segments[i].level, arm2.segments[j].level)] += step;
        left1 -= step;
        left2 -= step;
        if left1 == zero {
            i += 1;
            if let Some(s) = arm1.segments.get(i) {
                left1 = s.duration;
            }
        }
        if left2 == zero {
            j += 1;
            if let Some(s) = arm2.segments.get(j) {
                left2 = s.duration;
            }
        }
    }
    Ok(OverlapCoefficients(weights.map(|w| w / total)))
}

/// Arm schedules realising the correlated channel `(p, μ)` over `tc`
/// seconds.
///
/// Arm 1 switches once, from `V0` to `VX`. Arm 2 switches to `VX` early by
/// `A_IX·tc` and switches back for the last `A_XI·tc`, so both arms spend
/// `p·tc` at `VX`.
pub fn channel_to_schedules(
    p: Rational64,
    mu: Rational64,
    tc: Rational64,
) -> Result<(Schedule, Schedule)> {
    let zero = Rational64::from_integer(0);
    let one = Rational64::from_integer(1);
    if p < zero || p > one || mu < zero || mu > one {
        return Err(Error::Domain(format!(
            "p = {p}, mu = {mu} must both lie in [0, 1]"
        )));
    }
    if tc <= zero {
        return Err(Error::Domain(format!(
            "counting time {tc} must be positive"
        )));
    }
    let single = p * (one - p) * (one - mu);
    let a_ii = one - p - single;
    let a_xx = p - single;
    let arm1 = Schedule::from_pieces(&[((one - p) * tc, Level::V0), (p * tc, Level::VX)])?;
    let arm2 = Schedule::from_pieces(&[
        (a_ii * tc, Level::V0),
        (single * tc, Level::VX),
        (a_xx * tc, Level::VX),
        (single * tc, Level::V0),
    ])?;
    Ok((arm1, arm2))
}

impl ChannelParams {
    /// Floating-point front end to [`channel_to_schedules`]; `p`, `μ` and
    /// `tc` are first converted to nearby rationals.
    pub fn schedules(&self, tc: f64) -> Result<(Schedule, Schedule)> {
        let rat = |x: f64| {
            Rational64::approximate_float(x)
                .ok_or_else(|| Error::Domain(format!("{x} has no 64-bit rational approximation")))
        };
        channel_to_schedules(rat(self.p)?, rat(self.mu)?, rat(tc)?)
    }
}
