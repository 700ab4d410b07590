//! Vector inequalities for `Φ_p(ω) = |ω|^{p−2} ω` and their calibrated constants.
//!
//! Four families are provided:
//!
//! | name | range     | statement                                                     |
//! |------|-----------|---------------------------------------------------------------|
//! | 5.1  | 1 < p ≤ 2 | `|Φ(ω₁) − Φ(ω₂)| ≤ C |ω₁ − ω₂|^{p−1}`                          |
//! | 5.2  | p ≥ 2     | `|Φ(ω₁) − Φ(ω₂)| ≤ C |ω₁ − ω₂| (|ω₁| + |ω₂|)^{p−2}`            |
//! | 5.3  | 1 < p ≤ 2 | `(Φ(ω₁) − Φ(ω₂))·(ω₁ − ω₂) ≥ C |ω₁ − ω₂|² / (|ω₁| + |ω₂|)^{2−p}` |
//! | 5.4  | p ≥ 2     | `(Φ(ω₁) − Φ(ω₂))·(ω₁ − ω₂) ≥ C |ω₁ − ω₂|^p`                     |
//!
//! The constants are not known in closed form for every `p`, so they are
//! calibrated: the extreme ratio `lhs / base` is searched over random pairs
//! and collinear/antipodal configurations, then widened by 1% (upper bounds
//! ×1.01, lower bounds ×0.99). A table for common exponents ships in
//! [`super::constants`]; other exponents are calibrated on first use.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;

pub const UPPER_MARGIN: f64 = 1.01;
pub const LOWER_MARGIN: f64 = 0.99;
pub const DEFAULT_CALIBRATION_SAMPLES: usize = 1_000_000;
pub const DEFAULT_CALIBRATION_SEED: u64 = 0x5EED_C0DE;
const SHARDS: usize = 16;
/// Relative slack allowed when comparing the two sides in floating point.
pub const CONTRACT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Inequality {
    I51,
    I52,
    I53,
    I54,
}

impl Inequality {
    pub const ALL: [Inequality; 4] = [Self::I51, Self::I52, Self::I53, Self::I54];

    pub fn applies(self, p: f64) -> bool {
        match self {
            Self::I51 | Self::I53 => p > 1.0 && p <= 2.0,
            Self::I52 | Self::I54 => p >= 2.0,
        }
    }

    /// Upper-bound inequalities have `lhs ≤ rhs`.
    pub fn is_upper(self) -> bool {
        matches!(self, Self::I51 | Self::I52)
    }

    /// `(lhs, base)` with `rhs = C · base`.
    pub fn sides(self, w1: &[f64], w2: &[f64], p: f64) -> (f64, f64) {
        let n1 = norm(w1);
        let n2 = norm(w2);
        let s1 = phi_scale(n1, p);
        let s2 = phi_scale(n2, p);
        let mut diff_phi = 0.0;
        let mut diff_sq = 0.0;
        let mut inner = 0.0;
        for (a, b) in w1.iter().zip(w2) {
            let dp = s1 * a - s2 * b;
            let d = a - b;
            diff_phi += dp * dp;
            diff_sq += d * d;
            inner += dp * d;
        }
        let diff = diff_sq.sqrt();
        match self {
            Self::I51 => (diff_phi.sqrt(), diff.powf(p - 1.0)),
            Self::I52 => (diff_phi.sqrt(), diff * (n1 + n2).powf(p - 2.0)),
            Self::I53 => {
                let sum = n1 + n2;
                if sum == 0.0 {
                    (0.0, 0.0)
                } else {
                    (inner, diff_sq / sum.powf(2.0 - p))
                }
            }
            Self::I54 => (inner, diff.powf(p)),
        }
    }

    fn column(self) -> &'static str {
        match self {
            Self::I51 => "C_51",
            Self::I52 => "C_52",
            Self::I53 => "C_53",
            Self::I54 => "C_54",
        }
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::I51 => "5.1",
            Self::I52 => "5.2",
            Self::I53 => "5.3",
            Self::I54 => "5.4",
        };
        f.write_str(s)
    }
}

fn norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|ω|^{p−2}`, with `Φ(0) = 0` enforced by returning 0 at the origin.
#[inline]
pub fn phi_scale(n: f64, p: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n.powf(p - 2.0)
    }
}

/// Both sides of one inequality for a concrete pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub lhs: f64,
    pub rhs: f64,
    pub upper: bool,
}

impl Bound {
    /// `lhs ≤ rhs` (upper) or `lhs ≥ rhs ≥ 0` (lower), up to rounding.
    pub fn holds(&self) -> bool {
        let slack = CONTRACT_SLACK * self.lhs.abs().max(self.rhs.abs());
        if self.upper {
            self.lhs <= self.rhs + slack
        } else {
            self.rhs >= 0.0 && self.lhs + slack >= self.rhs
        }
    }
}

/// One row of the constants table; `None` where the inequality does not apply.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub p: f64,
    pub c51: Option<f64>,
    pub c52: Option<f64>,
    pub c53: Option<f64>,
    pub c54: Option<f64>,
}

impl CalibrationRow {
    pub fn get(&self, which: Inequality) -> Option<f64> {
        match which {
            Inequality::I51 => self.c51,
            Inequality::I52 => self.c52,
            Inequality::I53 => self.c53,
            Inequality::I54 => self.c54,
        }
    }

    fn set(&mut self, which: Inequality, c: Option<f64>) {
        match which {
            Inequality::I51 => self.c51 = c,
            Inequality::I52 => self.c52 = c,
            Inequality::I53 => self.c53 = c,
            Inequality::I54 => self.c54 = c,
        }
    }
}

pub fn calibration_csv_header() -> String {
    let cols: Vec<&str> = Inequality::ALL.iter().map(|i| i.column()).collect();
    format!("p,{}", cols.join(","))
}

pub fn calibration_csv_line(row: &CalibrationRow) -> String {
    let mut out = format!("{}", row.p);
    for which in Inequality::ALL {
        out.push(',');
        if let Some(c) = row.get(which) {
            out.push_str(&format!("{c:.17e}"));
        }
    }
    out
}

/// Random pair generator shared by calibration and fuzzing.
fn random_pair(rng: &mut ChaCha8Rng, w1: &mut Vec<f64>, w2: &mut Vec<f64>) {
    let k = rng.random_range(1..=4usize);
    w1.clear();
    w2.clear();
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    for _ in 0..k {
        w1.push(scale * rng.random_range(-1.0..1.0));
    }
    match rng.random_range(0..4u32) {
        0 => {
            let s2 = 10f64.powf(rng.random_range(-3.0..3.0));
            for _ in 0..k {
                w2.push(s2 * rng.random_range(-1.0..1.0));
            }
        }
        1 => {
            let eps = scale * 10f64.powf(rng.random_range(-6.0..0.0));
            for a in w1.iter() {
                w2.push(a + eps * rng.random_range(-1.0..1.0));
            }
        }
        2 => {
            let t = rng.random_range(-2.0..2.0);
            w2.extend(w1.iter().map(|a| t * a));
        }
        _ => {
            // nearly collinear and nearly equal: where the lower bounds are tight
            let t = 1.0 - 10f64.powf(rng.random_range(-6.0..-1.0)) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            w2.extend(w1.iter().map(|a| t * a));
        }
    }
}

/// Hand-picked configurations: antipodal, one side zero, collinear sweep.
fn structured_pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut out = vec![
        (vec![1.0, 0.0], vec![-1.0, 0.0]),
        (vec![1.0], vec![0.0]),
        (vec![0.0, 2.0], vec![0.0, 0.0]),
        (vec![1.0, 0.0], vec![0.0, 1.0]),
    ];
    for j in 0..=400 {
        let t = -1.0 + 2.0 * j as f64 / 400.0;
        out.push((vec![1.0], vec![t]));
    }
    for e in 1..=8 {
        let d = 10f64.powi(-e);
        out.push((vec![1.0], vec![1.0 - d]));
        out.push((vec![1.0], vec![1.0 + d]));
        out.push((vec![1.0], vec![-1.0 + d]));
    }
    out
}

/// Extreme ratio `lhs / base` (max for upper, min for lower bounds) before margin.
pub fn extreme_ratio(which: Inequality, p: f64, samples: usize, seed: u64) -> f64 {
    let upper = which.is_upper();
    let pick = |a: f64, b: f64| if upper { a.max(b) } else { a.min(b) };
    let init = if upper { 0.0 } else { f64::INFINITY };
    let ratio = |w1: &[f64], w2: &[f64]| {
        let (lhs, base) = which.sides(w1, w2, p);
        if base > 0.0 && base.is_finite() && lhs.is_finite() {
            Some(lhs / base)
        } else {
            None
        }
    };
    let per_shard = samples.div_ceil(SHARDS);
    let shard_best = exec::map_jobs(SHARDS, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (s as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (mut w1, mut w2) = (Vec::with_capacity(4), Vec::with_capacity(4));
        let n = per_shard.min(samples.saturating_sub(s * per_shard));
        let mut best = init;
        for _ in 0..n {
            random_pair(&mut rng, &mut w1, &mut w2);
            if let Some(r) = ratio(&w1, &w2) {
                best = pick(best, r);
            }
        }
        best
    });
    let mut best = shard_best.into_iter().fold(init, pick);
    for (w1, w2) in structured_pairs() {
        if let Some(r) = ratio(&w1, &w2) {
            best = pick(best, r);
        }
    }
    best
}

/// Calibrated constant with margin applied; `None` if `p` is out of range.
pub fn calibrate(which: Inequality, p: f64, samples: usize, seed: u64) -> Option<f64> {
    if !which.applies(p) {
        return None;
    }
    let r = extreme_ratio(which, p, samples, seed);
    Some(if which.is_upper() {
        UPPER_MARGIN * r
    } else {
        LOWER_MARGIN * r
    })
}

pub fn calibrate_row(p: f64, samples: usize, seed: u64) -> CalibrationRow {
    let mut row = CalibrationRow {
        p,
        c51: None,
        c52: None,
        c53: None,
        c54: None,
    };
    for which in Inequality::ALL {
        row.set(which, calibrate(which, p, samples, seed));
    }
    row
}

fn cache() -> &'static Mutex<BTreeMap<u64, CalibrationRow>> {
    static CACHE: OnceLock<Mutex<BTreeMap<u64, CalibrationRow>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// Constants for `p`: shipped table entry if present, otherwise a fresh
/// calibration with the default sample count (cached per process).
pub fn constants_for(p: f64) -> CalibrationRow {
    if let Some(row) = super::constants::SHIPPED.iter().find(|r| r.p == p) {
        return *row;
    }
    let key = p.to_bits();
    if let Some(row) = cache().lock().unwrap().get(&key) {
        return *row;
    }
    let row = calibrate_row(p, DEFAULT_CALIBRATION_SAMPLES / 10, DEFAULT_CALIBRATION_SEED);
    cache().lock().unwrap().insert(key, row);
    row
}

pub fn constant(which: Inequality, p: f64) -> Result<f64> {
    constants_for(p)
        .get(which)
        .ok_or_else(|| Error::Precondition(format!("inequality {which} does not apply at p = {p}")))
}

fn check_pair(w1: &[f64], w2: &[f64]) -> Result<()> {
    if w1.len() != w2.len() {
        return Err(Error::DimensionMismatch {
            expected: w1.len(),
            got: w2.len(),
        });
    }
    if w1.is_empty() {
        return Err(Error::Precondition("vectors must have dimension k ≥ 1".into()));
    }
    Ok(())
}

pub fn evaluate(which: Inequality, w1: &[f64], w2: &[f64], p: f64) -> Result<Bound> {
    check_pair(w1, w2)?;
    let c = constant(which, p)?;
    Ok(evaluate_with(which, w1, w2, p, c))
}

/// Like [`evaluate`] with an explicit constant.
pub fn evaluate_with(which: Inequality, w1: &[f64], w2: &[f64], p: f64, c: f64) -> Bound {
    let (lhs, base) = which.sides(w1, w2, p);
    Bound {
        lhs,
        rhs: c * base,
        upper: which.is_upper(),
    }
}

/// `| Φ(ω₁) − Φ(ω₂) | ≤ C |ω₁ − ω₂|^{p−1}` for `1 < p ≤ 2`.
pub fn ineq_51(w1: &[f64], w2: &[f64], p: f64) -> Result<Bound> {
    evaluate(Inequality::I51, w1, w2, p)
}

/// `| Φ(ω₁) − Φ(ω₂) | ≤ C |ω₁ − ω₂| (|ω₁| + |ω₂|)^{p−2}` for `p ≥ 2`.
pub fn ineq_52(w1: &[f64], w2: &[f64], p: f64) -> Result<Bound> {
    evaluate(Inequality::I52, w1, w2, p)
}

/// `(Φ(ω₁) − Φ(ω₂))·(ω₁ − ω₂) ≥ C |ω₁ − ω₂|² / (|ω₁| + |ω₂|)^{2−p}` for `1 < p ≤ 2`,
/// extended by `0 ≥ 0` at `ω₁ = ω₂ = 0`.
pub fn ineq_53(w1: &[f64], w2: &[f64], p: f64) -> Result<Bound> {
    evaluate(Inequality::I53, w1, w2, p)
}

/// `(Φ(ω₁) − Φ(ω₂))·(ω₁ − ω₂) ≥ C |ω₁ − ω₂|^p` for `p ≥ 2`.
pub fn ineq_54(w1: &[f64], w2: &[f64], p: f64) -> Result<Bound> {
    evaluate(Inequality::I54, w1, w2, p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzSummary {
    pub inequality: Inequality,
    pub p: f64,
    pub constant: f64,
    pub samples: usize,
    pub violations: usize,
    /// Tightest observed `lhs / rhs`.
    pub worst: f64,
}

/// Check one inequality on `samples` random pairs with the calibrated constant.
pub fn fuzz(which: Inequality, p: f64, samples: usize, seed: u64) -> Result<FuzzSummary> {
    let c = constant(which, p)?;
    let upper = which.is_upper();
    let per_shard = samples.div_ceil(SHARDS);
    let shards = exec::map_jobs(SHARDS, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7919 * s as u64 + 1));
        let (mut w1, mut w2) = (Vec::with_capacity(4), Vec::with_capacity(4));
        let n = per_shard.min(samples.saturating_sub(s * per_shard));
        let mut violations = 0;
        let mut worst = if upper { 0.0 } else { f64::INFINITY };
        for _ in 0..n {
            random_pair(&mut rng, &mut w1, &mut w2);
            let b = evaluate_with(which, &w1, &w2, p, c);
            if !b.holds() {
                violations += 1;
            }
            if b.rhs > 0.0 {
                let r = b.lhs / b.rhs;
                worst = if upper { worst.max(r) } else { worst.min(r) };
            }
        }
        (violations, worst)
    });
    let violations = shards.iter().map(|s| s.0).sum();
    let worst = shards
        .iter()
        .map(|s| s.1)
        .fold(if upper { 0.0 } else { f64::INFINITY }, |a, b| if upper { a.max(b) } else { a.min(b) });
    Ok(FuzzSummary {
        inequality: which,
        p,
        constant: c,
        samples,
        violations,
        worst,
    })
}
