//! Data files: the appendix correlator tables, the channel parameter table
//! and the CSV report.
//!
//! Appendix entries are stored exactly as printed, e.g. `"0.9687(5)"`,
//! meaning value 0.9687 with one-sigma uncertainty 0.0005 in the last
//! printed digit.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{
    channel_to_schedules, theory_correlators, ChannelParams, CorrelatorMatrix, Schedule,
};
use crate::error::{Error, Result};
use crate::qmath::Axis;
use crate::witness::{
    accessible_choi_from_pair_correlators, truncated_normal, AccessibleChoi, Convention,
};

/// A printed measurement `value(sigma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
    /// Digits after the decimal point, needed to print it back.
    pub decimals: u32,
    sigma_digits: u32,
}

impl Measured {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed entry '{s}', expected e.g. 0.9687(5)"));
        let s = s.trim();
        let (number, rest) = s.split_once('(').ok_or_else(bad)?;
        let digits = rest.strip_suffix(')').ok_or_else(bad)?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let unsigned = number.strip_prefix('-').unwrap_or(number);
        let (int_part, frac_part) = unsigned.split_once('.').ok_or_else(bad)?;
        let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) {
            return Err(bad());
        }
        let value: f64 = number.parse().map_err(|_| bad())?;
        let decimals = frac_part.len() as u32;
        let sigma_digits: u32 = digits.parse().map_err(|_| bad())?;
        let sigma = sigma_digits as f64 / 10f64.powi(decimals as i32);
        Ok(Self {
            value,
            sigma,
            decimals,
            sigma_digits,
        })
    }
}

impl fmt::Display for Measured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.*}({})",
            self.decimals as usize, self.value, self.sigma_digits
        )
    }
}

impl Serialize for Measured {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Measured {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Measured::parse(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Exact label such as `1/2` or `7/15`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub Rational64);

impl Label {
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Rational64::from_str(s.trim())
            .map(Label)
            .map_err(|_| Error::Parse(format!("'{s}' is not a fraction")))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// One appendix table of pair correlators `(σ_i ⊗ σ_j)`, rows and columns
/// in X, Y, Z order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixDataset {
    pub p: Label,
    pub mu: Label,
    pub convention: Convention,
    pub entries: [[Measured; 3]; 3],
}

impl AppendixDataset {
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.entries.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                if m.value.abs() > 1.0 {
                    return Err(Error::DataIntegrity(format!(
                        "entry ({}, {}) = {m} exceeds 1 in magnitude",
                        Axis::ALL[i],
                        Axis::ALL[j]
                    )));
                }
                if m.sigma.is_nan() || m.sigma <= 0.0 {
                    return Err(Error::DataIntegrity(format!(
                        "entry {m} has no uncertainty"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ds: Self = serde_json::from_str(s)?;
        ds.validate()?;
        Ok(ds)
    }

    /// Canonical pretty JSON, newline-terminated.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Labelled parameters.
    pub fn params(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.p.to_f64(), self.mu.to_f64())
    }

    pub fn correlators(&self) -> CorrelatorMatrix {
        CorrelatorMatrix {
            values: self.entries.map(|r| r.map(|m| m.value)),
            sigmas: self.entries.map(|r| r.map(|m| m.sigma)),
        }
    }

    /// Copy with every entry redrawn from its truncated normal, row-major.
    pub fn resample(&self, rng: &mut impl rand::Rng) -> Self {
        let mut out = self.clone();
        for m in out.entries.iter_mut().flatten() {
            m.value = truncated_normal(rng, m.value, m.sigma);
        }
        out
    }

    /// Two-pair accessible Choi, single-pair data taken from `model`.
    pub fn to_accessible_choi(&self, model: &ChannelParams) -> Result<AccessibleChoi> {
        accessible_choi_from_pair_correlators(&self.correlators(), self.convention, model)
    }

    /// Entries further than `n_sigma` measured sigmas (plus 1e-9) from the
    /// ideal matrix at the labelled parameters, as `"XY"`-style labels.
    pub fn theory_deviations(&self, n_sigma: f64) -> Result<Vec<String>> {
        let theory = theory_correlators(&self.params()?);
        let mut out = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                if (m.value - theory[i][j]).abs() > n_sigma * m.sigma + 1e-9 {
                    out.push(format!("{}{}", Axis::ALL[i], Axis::ALL[j]));
                }
            }
        }
        Ok(out)
    }

    /// File name used for the shipped fixtures, e.g. `p1-2_mu3-4.json`.
    pub fn file_name(&self) -> String {
        let dash = |l: Label| l.to_string().replace('/', "-");
        format!("p{}_mu{}.json", dash(self.p), dash(self.mu))
    }
}

pub fn load_appendix(path: impl AsRef<Path>) -> Result<AppendixDataset> {
    AppendixDataset::from_json(&fs::read_to_string(path)?)
}

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../fixtures/appendix/", $name)))
    };
}

/// Shipped appendix transcriptions in table order.
pub const APPENDIX_FIXTURES: [(&str, &str); 14] = [
    fixture!("p1-2_mu0.json"),
    fixture!("p1-2_mu1-4.json"),
    fixture!("p1-2_mu1-2.json"),
    fixture!("p1-2_mu3-4.json"),
    fixture!("p1-2_mu1.json"),
    fixture!("p3-8_mu1-5.json"),
    fixture!("p3-8_mu7-15.json"),
    fixture!("p3-8_mu11-15.json"),
    fixture!("p3-8_mu1.json"),
    fixture!("p1-4_mu1-3.json"),
    fixture!("p1-4_mu2-3.json"),
    fixture!("p1-4_mu1.json"),
    fixture!("p1-8_mu3-7.json"),
    fixture!("p1-8_mu1.json"),
];

pub const APPENDIX_MANIFEST: &str = include_str!("../fixtures/appendix/MANIFEST.sha256");
pub const APPENDIX_EXCEPTIONS: &str = include_str!("../fixtures/appendix/EXCEPTIONS.json");

pub fn builtin_appendix() -> Result<Vec<AppendixDataset>> {
    APPENDIX_FIXTURES
        .iter()
        .map(|(_, s)| AppendixDataset::from_json(s))
        .collect()
}

/// Looks up a shipped dataset by its labels.
pub fn builtin_dataset(p: &str, mu: &str) -> Result<AppendixDataset> {
    let (p, mu): (Label, Label) = (p.parse()?, mu.parse()?);
    builtin_appendix()?
        .into_iter()
        .find(|d| d.p == p && d.mu == mu)
        .ok_or_else(|| Error::DataIntegrity(format!("no appendix dataset for p = {p}, mu = {mu}")))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses `<hex>  <file>` lines.
pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (hash, name) = l
                .split_once("  ")
                .ok_or_else(|| Error::Parse(format!("bad manifest line '{l}'")))?;
            Ok((name.trim().to_string(), hash.trim().to_string()))
        })
        .collect()
}

/// Checks the shipped fixtures against the embedded manifest.
pub fn verify_builtin_manifest() -> Result<()> {
    let manifest = parse_manifest(APPENDIX_MANIFEST)?;
    for (name, text) in APPENDIX_FIXTURES {
        check_digest(&manifest, name, text.as_bytes())?;
    }
    Ok(())
}

fn check_digest(manifest: &BTreeMap<String, String>, name: &str, bytes: &[u8]) -> Result<()> {
    let want = manifest
        .get(name)
        .ok_or_else(|| Error::DataIntegrity(format!("{name} is not in the manifest")))?;
    let got = sha256_hex(bytes);
    if &got != want {
        return Err(Error::DataIntegrity(format!(
            "checksum mismatch for {name}: {got}"
        )));
    }
    Ok(())
}

/// Loads every `*.json` dataset of a directory, sorted by file name. When a
/// `MANIFEST.sha256` is present every file must match it.
pub fn load_appendix_dir(dir: impl AsRef<Path>) -> Result<Vec<AppendixDataset>> {
    let dir = dir.as_ref();
    let manifest = match fs::read_to_string(dir.join("MANIFEST.sha256")) {
        Ok(text) => Some(parse_manifest(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        if !name.ends_with(".json") || name == "EXCEPTIONS.json" {
            continue;
        }
        let bytes = fs::read(&path)?;
        if let Some(m) = &manifest {
            check_digest(m, &name, &bytes)?;
        }
        let text =
            String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{name} is not UTF-8")))?;
        out.push(AppendixDataset::from_json(&text)?);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
pub struct ExceptionsNote {
    pub note: String,
    pub threshold_sigmas: f64,
    /// File name to deviating entry labels.
    pub exceptions: BTreeMap<String, Vec<String>>,
}

pub fn documented_exceptions() -> Result<ExceptionsNote> {
    Ok(serde_json::from_str(APPENDIX_EXCEPTIONS)?)
}

/// A row of the channel parameter table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table1Row {
    pub p: Rational64,
    pub mu: Rational64,
    /// Weights in printed column order `(A_00, A_0X, A_X0, A_XX)`.
    pub printed: [Rational64; 4],
    /// Weights with `p = A_IX + A_XX`, order `(II, IX, XI, XX)`.
    pub a: [Rational64; 4],
    /// Arm schedules over an 8 s counting time.
    pub schedules: (Schedule, Schedule),
}

impl Table1Row {
    pub fn params(&self) -> Result<ChannelParams> {
        ChannelParams::new(Label(self.p).to_f64(), Label(self.mu).to_f64())
    }
}

pub const COUNTING_TIME_S: i64 = 8;

// p, μ, then the four printed weights
const TABLE1: [(&str, &str, [&str; 4]); 14] = [
    ("1/2", "0", ["1/4", "1/4", "1/4", "1/4"]),
    ("1/2", "1/4", ["5/16", "3/16", "3/16", "5/16"]),
    ("1/2", "1/2", ["3/8", "1/8", "1/8", "3/8"]),
    ("1/2", "3/4", ["7/16", "1/16", "1/16", "7/16"]),
    ("1/2", "1", ["1/2", "0", "0", "1/2"]),
    ("3/8", "1/5", ["3/16", "3/16", "3/16", "7/16"]),
    ("3/8", "7/15", ["1/4", "1/8", "1/8", "1/2"]),
    ("3/8", "11/15", ["5/16", "1/16", "1/16", "9/16"]),
    ("3/8", "1", ["3/8", "0", "0", "5/8"]),
    ("1/4", "1/3", ["1/8", "1/8", "1/8", "5/8"]),
    ("1/4", "2/3", ["3/16", "1/16", "1/16", "11/16"]),
    ("1/4", "1", ["1/4", "0", "0", "3/4"]),
    ("1/8", "3/7", ["1/16", "1/16", "1/16", "13/16"]),
    ("1/8", "1", ["1/8", "0", "0", "7/8"]),
];

fn rat(s: &str) -> Rational64 {
    Rational64::from_str(s).expect("table entries are fractions")
}

/// The fourteen channel settings. The printed table lists `A_00` and `A_XX`
/// in the opposite order for `p ≠ 1/2`; rows are normalized so that
/// `p = A_IX + A_XX`.
pub fn table1_registry() -> Vec<Table1Row> {
    let half = Rational64::new(1, 2);
    TABLE1
        .iter()
        .map(|(p, mu, printed)| {
            let (p, mu) = (rat(p), rat(mu));
            let printed = printed.map(rat);
            let a = if p == half {
                printed
            } else {
                [printed[3], printed[1], printed[2], printed[0]]
            };
            let schedules = channel_to_schedules(p, mu, Rational64::from_integer(COUNTING_TIME_S))
                .expect("table parameters are valid");
            Table1Row {
                p,
                mu,
                printed,
                a,
                schedules,
            }
        })
        .collect()
}

/// One line of the reproduction report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub p: f64,
    pub mu: f64,
    pub q_theory: f64,
    pub q_det_tot_raw: f64,
    pub q_det_tot: f64,
    pub sigma_q: Option<f64>,
    pub q1: f64,
    pub q2: f64,
    pub q_lim: f64,
    pub clamped: bool,
    pub assumptions: Vec<String>,
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "p",
    "mu",
    "Q_theory",
    "Q_det_tot_raw",
    "Q_det_tot",
    "sigma_Q",
    "Q1",
    "Q2",
    "Q_lim",
    "clamped",
    "assumptions",
];

/// Sorts by `p` descending, then `μ` ascending.
pub fn sort_report_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| b.p.total_cmp(&a.p).then(a.mu.total_cmp(&b.mu)));
}

fn fixed(x: f64) -> String {
    // avoid printing "-0.000000"
    let s = format!("{x:.6}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn write_report<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.write_record([
            fixed(r.p),
            fixed(r.mu),
            fixed(r.q_theory),
            fixed(r.q_det_tot_raw),
            fixed(r.q_det_tot),
            r.sigma_q.map(fixed).unwrap_or_default(),
            fixed(r.q1),
            fixed(r.q2),
            fixed(r.q_lim),
            r.clamped.to_string(),
            r.assumptions.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_to_string(rows: &[ReportRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_report(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}
