//! Hörmander vector-field families on box regions.
//!
//! Each family is a list of `m ≤ d` fields `X_i = Σ_k b_ik(x) ∂_k` with
//! polynomial coefficients, so their iterated brackets can be formed exactly.

mod poly;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use poly::{Poly, PolyField};

use crate::error::{Error, Result};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Brackets are generated up to this length before giving up.
pub const MAX_STEP: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldFamily {
    /// Coordinate derivatives `∂_1, …, ∂_d`.
    Euclidean { dim: usize },
    /// `∂_1, …, ∂_{d−1}, x_1^β ∂_d`.
    Grushin { dim: usize, beta: u32 },
    /// First Heisenberg frame `∂_1 − x_2/2 ∂_3`, `∂_2 + x_1/2 ∂_3`.
    Heisenberg,
}

impl FieldFamily {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::Euclidean { dim })
    }

    pub fn grushin(dim: usize, beta: u32) -> Result<Self> {
        check_dim(dim)?;
        if beta == 0 {
            return Err(Error::Config("β ∈ ℤ⁺ required for the Grushin family".into()));
        }
        Ok(Self::Grushin { dim, beta })
    }

    /// Parse a CLI selector (`euclidean`, `grushin:<beta>`, `heisenberg`) for an
    /// ambient dimension. Heisenberg forces `dim == 3`.
    pub fn parse(selector: &str, dim: usize) -> Result<Self> {
        let sel: FamilySelector = selector.parse()?;
        sel.with_dim(dim)
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::Euclidean { dim } | Self::Grushin { dim, .. } => dim,
            Self::Heisenberg => 3,
        }
    }

    /// Number of fields `m`.
    pub fn count(&self) -> usize {
        match *self {
            Self::Euclidean { dim } | Self::Grushin { dim, .. } => dim,
            Self::Heisenberg => 2,
        }
    }

    /// Coefficient matrix `b(x)`, row `i` = `X_i I(x)`. No bounds check.
    pub fn coefficients(&self, x: &[f64]) -> FieldMatrix {
        let d = self.dim();
        let m = self.count();
        let mut rows = [[0.0; 3]; 3];
        match *self {
            Self::Euclidean { .. } => {
                for (i, row) in rows.iter_mut().enumerate().take(d) {
                    row[i] = 1.0;
                }
            }
            Self::Grushin { beta, .. } => {
                for (i, row) in rows.iter_mut().enumerate().take(d - 1) {
                    row[i] = 1.0;
                }
                rows[d - 1][d - 1] = x[0].powi(beta as i32);
            }
            Self::Heisenberg => {
                rows[0] = [1.0, 0.0, -0.5 * x[1]];
                rows[1] = [0.0, 1.0, 0.5 * x[0]];
            }
        }
        FieldMatrix { m, d, rows }
    }

    /// The fields as exact polynomial vector fields.
    pub fn symbolic(&self) -> Vec<PolyField> {
        let d = self.dim();
        let unit = |k: usize| PolyField {
            comps: (0..d)
                .map(|j| if j == k { Poly::constant(1.0) } else { Poly::zero() })
                .collect(),
        };
        match *self {
            Self::Euclidean { .. } => (0..d).map(unit).collect(),
            Self::Grushin { beta, .. } => {
                let mut out: Vec<PolyField> = (0..d - 1).map(unit).collect();
                let mut last = vec![Poly::zero(); d];
                let mut e = [0; 3];
                e[0] = beta;
                last[d - 1] = Poly::monomial(1.0, e);
                out.push(PolyField { comps: last });
                out
            }
            Self::Heisenberg => vec![
                PolyField {
                    comps: vec![Poly::constant(1.0), Poly::zero(), Poly::var(1, -0.5)],
                },
                PolyField {
                    comps: vec![Poly::zero(), Poly::constant(1.0), Poly::var(0, 0.5)],
                },
            ],
        }
    }

    /// Natural default box: the unit cube for Euclidean, `[-1,1]^d` otherwise
    /// (so the Grushin degeneracy line and the Heisenberg origin are inside).
    pub fn default_region(&self) -> BoxRegion {
        let d = self.dim();
        match self {
            Self::Euclidean { .. } => BoxRegion::cube(d, 0.0, 1.0),
            _ => BoxRegion::cube(d, -1.0, 1.0),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Config(format!("ambient dimension must be 2 or 3, got {dim}")))
    }
}

impl fmt::Display for FieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean { .. } => write!(f, "euclidean"),
            Self::Grushin { beta, .. } => write!(f, "grushin:{beta}"),
            Self::Heisenberg => write!(f, "heisenberg"),
        }
    }
}

/// Dimension-free family selector as written on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilySelector {
    Euclidean,
    Grushin(u32),
    Heisenberg,
}

impl FamilySelector {
    pub fn with_dim(self, dim: usize) -> Result<FieldFamily> {
        match self {
            Self::Euclidean => FieldFamily::euclidean(dim),
            Self::Grushin(beta) => FieldFamily::grushin(dim, beta),
            Self::Heisenberg if dim == 3 => Ok(FieldFamily::Heisenberg),
            Self::Heisenberg => Err(Error::Config("heisenberg family requires d = 3".into())),
        }
    }

    /// Ambient dimension used when no box is given.
    pub fn default_dim(self) -> usize {
        match self {
            Self::Heisenberg => 3,
            _ => 2,
        }
    }
}

impl FromStr for FamilySelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "euclidean" => Ok(Self::Euclidean),
            "heisenberg" => Ok(Self::Heisenberg),
            _ => {
                let beta = s
                    .strip_prefix("grushin:")
                    .ok_or_else(|| Error::Config(format!("unknown family '{s}'")))?;
                let beta: i64 = beta
                    .parse()
                    .map_err(|_| Error::Config(format!("bad Grushin exponent '{beta}'")))?;
                if beta < 1 {
                    return Err(Error::Config("β ∈ ℤ⁺".into()));
                }
                Ok(Self::Grushin(beta as u32))
            }
        }
    }
}

/// Closed axis-aligned box `Π [lo_k, hi_k]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub dim: usize,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl BoxRegion {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        check_dim(lo.len())?;
        let mut b = Self {
            dim: lo.len(),
            lo: [0.0; 3],
            hi: [0.0; 3],
        };
        for k in 0..lo.len() {
            if !(lo[k].is_finite() && hi[k].is_finite() && hi[k] > lo[k]) {
                return Err(Error::Config(format!(
                    "box axis {} must satisfy a < b, got [{}, {}]",
                    k + 1,
                    lo[k],
                    hi[k]
                )));
            }
            b.lo[k] = lo[k];
            b.hi[k] = hi[k];
        }
        Ok(b)
    }

    pub fn cube(dim: usize, a: f64, b: f64) -> Self {
        let mut r = Self {
            dim,
            lo: [0.0; 3],
            hi: [0.0; 3],
        };
        for k in 0..dim {
            r.lo[k] = a;
            r.hi[k] = b;
        }
        r
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && (0..self.dim).all(|k| {
                let slack = 1e-12 * (self.hi[k] - self.lo[k]);
                x[k] >= self.lo[k] - slack && x[k] <= self.hi[k] + slack
            })
    }

    pub fn width(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }
}

/// Small dense `m × d` coefficient matrix (`m, d ≤ 3`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldMatrix {
    pub m: usize,
    pub d: usize,
    pub rows: [[f64; 3]; 3],
}

impl FieldMatrix {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.rows[i][k]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.d, |i, k| self.rows[i][k])
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|i| self.rows[i][..self.d].to_vec()).collect()
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.to_dmatrix())
    }
}

/// Rank with singular values cut at `RANK_TOL` × the largest one.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// `b(x)` for `x` in the closed box.
pub fn eval_fields(family: &FieldFamily, region: &BoxRegion, x: &[f64]) -> Result<FieldMatrix> {
    if x.len() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: x.len(),
        });
    }
    if !region.contains(x) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    Ok(family.coefficients(x))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub samples: Vec<Vec<f64>>,
    /// Smallest spanning step per sample (`None` if not reached by `MAX_STEP`).
    pub step_per_sample: Vec<Option<usize>>,
    /// `spanned[j][k-1]` = dim span{X_J I(x_j) : |J| ≤ k}.
    pub spanned: Vec<Vec<usize>>,
    /// Max over samples; `None` when some sample never spans.
    pub step: Option<usize>,
    pub failed: bool,
}

/// Brackets `X_J = [X_{j1}, [X_{j2}, … X_{js}]]` grouped by length `s = 1..=max_len`.
pub fn brackets_by_length(family: &FieldFamily, max_len: usize) -> Vec<Vec<PolyField>> {
    let base = family.symbolic();
    let mut levels: Vec<Vec<PolyField>> = vec![base.clone()];
    while levels.len() < max_len {
        let prev = levels.last().unwrap();
        let mut next = Vec::new();
        for x in &base {
            for y in prev {
                let b = x.bracket(y);
                if !b.is_zero() && !next.contains(&b) {
                    next.push(b);
                }
            }
        }
        levels.push(next);
    }
    levels
}

/// Smallest `s` with `{X_J I(x)}_{|J| ≤ s}` spanning `ℝ^d` at each sample.
pub fn hormander_step(
    family: &FieldFamily,
    region: &BoxRegion,
    samples: &[Vec<f64>],
) -> Result<CommutatorReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("need at least one sample point".into()));
    }
    for x in samples {
        eval_fields(family, region, x)?;
    }
    let d = family.dim();
    let levels = brackets_by_length(family, MAX_STEP);

    let mut step_per_sample = Vec::with_capacity(samples.len());
    let mut spanned = Vec::with_capacity(samples.len());
    for x in samples {
        let mut vecs: Vec<Vec<f64>> = Vec::new();
        let mut dims = Vec::new();
        let mut step = None;
        for (k, level) in levels.iter().enumerate() {
            vecs.extend(level.iter().map(|f| f.eval(x)));
            let mat = DMatrix::from_fn(vecs.len(), d, |r, c| vecs[r][c]);
            let r = numerical_rank(&mat);
            dims.push(r);
            if r == d {
                step = Some(k + 1);
                break;
            }
        }
        step_per_sample.push(step);
        spanned.push(dims);
    }
    let failed = step_per_sample.iter().any(Option::is_none);
    let step = if failed {
        None
    } else {
        step_per_sample.iter().flatten().copied().max()
    };
    Ok(CommutatorReport {
        samples: samples.to_vec(),
        step_per_sample,
        spanned,
        step,
        failed,
    })
}
