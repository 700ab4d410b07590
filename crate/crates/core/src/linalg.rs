//! Sparse symmetric assembly of the quadratic energy and two SPD solvers:
//! a banded Cholesky factorization for moderate bandwidths and Jacobi-
//! preconditioned conjugate gradients otherwise.

use crate::domain::DiscreteDomain;
use crate::error::{Error, Result};
use crate::exec;

/// Compressed sparse rows, square.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        exec::fill(y, |i| {
            let mut s = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[idx] * x[self.cols[idx]];
            }
            s
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, k)))
            .map(|(i, k)| i.abs_diff(self.cols[k]))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut a = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[(i, self.cols[k])] += self.vals[k];
            }
        }
        a
    }
}

/// `K` with `uᵀ K u = Σ_cells |Xu|² Π h` for interior node vectors `u`.
pub fn assemble_energy(dom: &DiscreteDomain) -> CsrMatrix {
    let d = dom.dim();
    let m = dom.fields();
    let w = dom.weight();
    let mut trip = Vec::with_capacity(dom.num_cells() * (d + 1) * (d + 1));
    for c in 0..dom.num_cells() {
        if dom.cell_is_inert(c) {
            continue;
        }
        let a = dom.cell_anchor(c);
        let mut nodes = [a; 4];
        for k in 0..d {
            nodes[k + 1] = a + dom.node_strides()[k];
        }
        let coef = dom.cell_coefficients(c);
        let idx: Vec<Option<usize>> = nodes[..=d].iter().map(|&n| dom.interior_index(n)).collect();
        for row in coef.iter().take(m) {
            let mut r = [0.0; 4];
            for k in 0..d {
                r[0] -= row[k];
                r[k + 1] = row[k];
            }
            for s in 0..=d {
                let Some(i) = idx[s] else { continue };
                for t in 0..=d {
                    let Some(j) = idx[t] else { continue };
                    let v = w * r[s] * r[t];
                    if v != 0.0 {
                        trip.push((i, j, v));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(dom.num_interior(), trip)
}

/// Lower-triangular band factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i-bw ..= i]` (left-padded).
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth();
        let width = bw + 1;
        let mut l = vec![0.0; n * width];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.cols[k];
                if j <= i {
                    l[i * width + (j + bw - i)] += a.vals[k];
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let start = lo.max(j.saturating_sub(bw));
                let mut s = l[i * width + (j + bw - i)];
                let ri = i * width + bw - i;
                let rj = j * width + bw - j;
                for k in start..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Solver(format!("matrix not positive definite at row {i}")));
                    }
                    l[ri + i] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, width) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let ri = i * width + bw - i;
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[ri + k] * b[k];
            }
            b[i] = s / self.l[ri + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * width + bw - k + i] * b[k];
            }
            b[i] = s / self.l[i * width + bw];
        }
    }
}

/// Jacobi-preconditioned CG on `A x = b`, starting from `x`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<usize> {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rtol * bnorm {
            return Ok(it);
        }
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solver("CG breakdown: operator not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("CG did not reach rtol {rtol:e} in {max_iter} iterations")))
}

/// Largest band storage (entries) the direct solver is allowed to allocate.
const MAX_BAND_ENTRIES: usize = 40_000_000;

/// Solver for the energy matrix `K`.
#[derive(Clone, Debug)]
pub enum SpdSolver {
    Banded(BandedCholesky),
    Iterative(CsrMatrix),
}

impl SpdSolver {
    pub fn new(a: CsrMatrix) -> Result<Self> {
        if a.n * (a.bandwidth() + 1) <= MAX_BAND_ENTRIES {
            Ok(Self::Banded(BandedCholesky::factor(&a)?))
        } else {
            Ok(Self::Iterative(a))
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Banded(ch) => {
                let mut x = b.to_vec();
                ch.solve_in_place(&mut x);
                Ok(x)
            }
            Self::Iterative(a) => {
                let mut x = vec![0.0; a.n];
                conjugate_gradient(a, b, &mut x, 1e-13, 20 * a.n + 100)?;
                Ok(x)
            }
        }
    }
}
