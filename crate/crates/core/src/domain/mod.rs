//! Tensor-product grids on boxes, grid functions with homogeneous Dirichlet
//! data, and the discrete horizontal gradient together with its transpose.
//!
//! Nodes are numbered lexicographically with `x_1` fastest. Cell `c` is
//! anchored at its lower-left node `ν(c)`; on that cell
//! `(Xu)_i = Σ_k b_ik(x_ν) (u(ν + e_k) − u(ν)) / h_k`.

pub mod export;

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{BoxRegion, FieldFamily, FieldMatrix};

const NOT_INTERIOR: usize = usize::MAX;

pub struct DiscreteDomain {
    family: FieldFamily,
    region: BoxRegion,
    dim: usize,
    cells: [usize; 3],
    h: [f64; 3],
    node_dims: [usize; 3],
    node_strides: [usize; 3],
    n_nodes: usize,
    n_cells: usize,
    weight: f64,
    interior: Vec<usize>,
    node_to_interior: Vec<usize>,
    cell_anchor: Vec<usize>,
    /// `b_ik(x_ν) / h_k` per cell, flattened `[cell][i][k]`.
    cell_coef: Vec<[[f64; 3]; 3]>,
    /// Cells whose stencil touches only boundary nodes; `Xu` vanishes there
    /// for every trace-zero `u`.
    inert: Vec<bool>,
}

impl std::fmt::Debug for DiscreteDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteDomain")
            .field("family", &self.family)
            .field("region", &self.region)
            .field("resolution", &&self.cells[..self.dim])
            .finish()
    }
}

impl PartialEq for DiscreteDomain {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.region == other.region && self.cells == other.cells
    }
}

impl DiscreteDomain {
    pub fn new(family: FieldFamily, region: BoxRegion, resolution: &[usize]) -> Result<Arc<Self>> {
        let dim = family.dim();
        if region.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: region.dim,
            });
        }
        if resolution.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: resolution.len(),
            });
        }
        if let Some(&n) = resolution.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("N_k ≥ 2 required, got {n}")));
        }
        let mut cells = [1usize; 3];
        let mut h = [1.0; 3];
        let mut node_dims = [1usize; 3];
        for k in 0..dim {
            cells[k] = resolution[k];
            h[k] = region.width(k) / resolution[k] as f64;
            node_dims[k] = resolution[k] + 1;
        }
        let node_strides = [1, node_dims[0], node_dims[0] * node_dims[1]];
        let n_nodes = node_dims[..dim].iter().product();
        let n_cells = cells[..dim].iter().product();
        let weight = h[..dim].iter().product();

        let mut node_to_interior = vec![NOT_INTERIOR; n_nodes];
        let mut interior = Vec::new();
        for (n, slot) in node_to_interior.iter_mut().enumerate() {
            let idx = unravel(n, &node_dims);
            if (0..dim).all(|k| idx[k] > 0 && idx[k] < cells[k]) {
                *slot = interior.len();
                interior.push(n);
            }
        }

        let mut dom = Self {
            family,
            region,
            dim,
            cells,
            h,
            node_dims,
            node_strides,
            n_nodes,
            n_cells,
            weight,
            interior,
            node_to_interior,
            cell_anchor: Vec::with_capacity(n_cells),
            cell_coef: Vec::with_capacity(n_cells),
            inert: Vec::with_capacity(n_cells),
        };
        for c in 0..n_cells {
            let cidx = unravel(c, &cells);
            let anchor: usize = (0..dim).map(|k| cidx[k] * node_strides[k]).sum();
            let b = family.coefficients(&dom.node_coords(anchor));
            let mut coef = [[0.0; 3]; 3];
            for (i, row) in coef.iter_mut().enumerate().take(b.m) {
                for k in 0..dim {
                    row[k] = b.get(i, k) / h[k];
                }
            }
            // inert: no interior stencil node reaches any field
            let interior = |n: usize| dom.node_to_interior[n] != NOT_INTERIOR;
            let inert = (0..b.m).all(|i| {
                let anchor_free = !interior(anchor) || coef[i][..dim].iter().sum::<f64>() == 0.0;
                anchor_free && (0..dim).all(|k| !interior(anchor + node_strides[k]) || coef[i][k] == 0.0)
            });
            dom.cell_anchor.push(anchor);
            dom.cell_coef.push(coef);
            dom.inert.push(inert);
        }
        Ok(Arc::new(dom))
    }

    /// Uniform resolution `n` on every axis of the family's default box.
    pub fn uniform(family: FieldFamily, n: usize) -> Result<Arc<Self>> {
        let region = family.default_region();
        Self::new(family, region, &vec![n; family.dim()])
    }

    pub fn family(&self) -> &FieldFamily {
        &self.family
    }
    pub fn region(&self) -> &BoxRegion {
        &self.region
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Number of fields `m`.
    pub fn fields(&self) -> usize {
        self.family.count()
    }
    pub fn resolution(&self) -> &[usize] {
        &self.cells[..self.dim]
    }
    pub fn spacing(&self) -> &[f64] {
        &self.h[..self.dim]
    }
    pub fn node_dims(&self) -> &[usize] {
        &self.node_dims[..self.dim]
    }
    pub fn node_strides(&self) -> &[usize] {
        &self.node_strides[..self.dim]
    }
    pub fn num_nodes(&self) -> usize {
        self.n_nodes
    }
    pub fn num_cells(&self) -> usize {
        self.n_cells
    }
    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }
    /// Quadrature weight `Π h_k`, shared by nodes and cells.
    pub fn weight(&self) -> f64 {
        self.weight
    }
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        match self.node_to_interior[node] {
            NOT_INTERIOR => None,
            i => Some(i),
        }
    }
    pub fn is_boundary(&self, node: usize) -> bool {
        self.node_to_interior[node] == NOT_INTERIOR
    }
    pub fn cell_anchor(&self, cell: usize) -> usize {
        self.cell_anchor[cell]
    }
    /// Whether `Xu` on this cell is identically zero for trace-zero `u`.
    pub fn cell_is_inert(&self, cell: usize) -> bool {
        self.inert[cell]
    }
    /// `b_ik / h_k` at the cell's anchor.
    pub fn cell_coefficients(&self, cell: usize) -> &[[f64; 3]; 3] {
        &self.cell_coef[cell]
    }

    pub fn node_multi_index(&self, node: usize) -> [usize; 3] {
        unravel(node, &self.node_dims)
    }

    pub fn node_from_multi_index(&self, idx: &[usize]) -> usize {
        (0..self.dim).map(|k| idx[k] * self.node_strides[k]).sum()
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        let idx = unravel(node, &self.node_dims);
        (0..self.dim)
            .map(|k| {
                if idx[k] == self.cells[k] {
                    self.region.hi[k]
                } else {
                    self.region.lo[k] + idx[k] as f64 * self.h[k]
                }
            })
            .collect()
    }

    /// Node closest to `x` (coordinates clamped into the box).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim)
            .map(|k| {
                let t = ((x[k] - self.region.lo[k]) / self.h[k]).round();
                t.clamp(0.0, self.cells[k] as f64) as usize
            })
            .collect();
        self.node_from_multi_index(&idx)
    }

    pub fn eval_fields(&self, x: &[f64]) -> Result<FieldMatrix> {
        crate::fields::eval_fields(&self.family, &self.region, x)
    }

    /// Anchor-node offsets `ν + e_k` of a cell stencil.
    #[inline]
    pub(crate) fn stencil(&self, cell: usize) -> (usize, [usize; 3]) {
        let a = self.cell_anchor[cell];
        (a, [a + 1, a + self.node_strides[1], a + self.node_strides[2]])
    }
}

fn unravel(mut n: usize, dims: &[usize; 3]) -> [usize; 3] {
    let mut idx = [0; 3];
    for k in 0..3 {
        idx[k] = n % dims[k];
        n /= dims[k];
    }
    idx
}

/// Real values on nodes; boundary nodes are held at zero.
#[derive(Clone)]
pub struct GridFunction {
    domain: Arc<DiscreteDomain>,
    values: Vec<f64>,
}

impl std::fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFunction")
            .field("domain", &self.domain)
            .field("max_abs", &self.max_abs())
            .finish_non_exhaustive()
    }
}

impl GridFunction {
    pub fn zeros(domain: &Arc<DiscreteDomain>) -> Self {
        Self {
            domain: domain.clone(),
            values: vec![0.0; domain.num_nodes()],
        }
    }

    /// Samples `f` at interior nodes.
    pub fn from_fn(domain: &Arc<DiscreteDomain>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut u = Self::zeros(domain);
        for &n in domain.interior_nodes() {
            u.values[n] = f(&domain.node_coords(n));
        }
        u
    }

    pub fn from_interior(domain: &Arc<DiscreteDomain>, interior: &[f64]) -> Result<Self> {
        if interior.len() != domain.num_interior() {
            return Err(Error::DimensionMismatch {
                expected: domain.num_interior(),
                got: interior.len(),
            });
        }
        let mut u = Self::zeros(domain);
        for (n, &v) in domain.interior_nodes().iter().zip(interior) {
            u.values[*n] = v;
        }
        Ok(u)
    }

    /// Full node vector; nonzero boundary entries are rejected.
    pub fn from_nodes(domain: &Arc<DiscreteDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: domain.num_nodes(),
                got: values.len(),
            });
        }
        if let Some(n) = (0..values.len()).find(|&n| domain.is_boundary(n) && values[n] != 0.0) {
            return Err(Error::Precondition(format!(
                "boundary node {n} carries nonzero value {}",
                values[n]
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            values,
        })
    }

    pub(crate) fn from_nodes_unchecked(domain: &Arc<DiscreteDomain>, values: Vec<f64>) -> Self {
        Self {
            domain: domain.clone(),
            values,
        }
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn interior_values(&self) -> Vec<f64> {
        self.domain.interior_nodes().iter().map(|&n| self.values[n]).collect()
    }
    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub(crate) fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// Weighted pairing `Σ u v Π h`.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        let (a, b) = (&self.values, &other.values);
        self.domain.weight() * exec::sum(a.len(), |i| a[i] * b[i])
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    /// `self + t·other`.
    pub fn axpy(&self, t: f64, other: &GridFunction) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + t * b).collect();
        Self {
            domain: self.domain.clone(),
            values,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.domain.num_interior().max(1) as f64
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<&GridFunction> for f64 {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        rhs.scaled(self)
    }
}

/// `m` values per cell; the discrete horizontal gradient.
#[derive(Clone, Debug)]
pub struct HorizontalField {
    domain: Arc<DiscreteDomain>,
    values: Vec<f64>,
}

impl HorizontalField {
    pub fn zeros(domain: &Arc<DiscreteDomain>) -> Self {
        Self {
            domain: domain.clone(),
            values: vec![0.0; domain.num_cells() * domain.fields()],
        }
    }

    pub fn from_values(domain: &Arc<DiscreteDomain>, values: Vec<f64>) -> Result<Self> {
        let expected = domain.num_cells() * domain.fields();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("horizontal field entries must be finite".into()));
        }
        Ok(Self {
            domain: domain.clone(),
            values,
        })
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn cell(&self, c: usize) -> &[f64] {
        let m = self.domain.fields();
        &self.values[c * m..(c + 1) * m]
    }
    /// `|Xu|` on a cell.
    pub fn cell_norm(&self, c: usize) -> f64 {
        self.cell(c).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Weighted pairing `Σ_cells w·z Π h`.
    pub fn dot(&self, other: &HorizontalField) -> f64 {
        let (a, b) = (&self.values, &other.values);
        self.domain.weight() * exec::sum(a.len(), |i| a[i] * b[i])
    }
}

/// Horizontal gradient of `u` on one cell, written into `out[..m]`.
#[inline]
pub(crate) fn cell_gradient(dom: &DiscreteDomain, u: &[f64], c: usize, out: &mut [f64; 3]) {
    let (a, nb) = dom.stencil(c);
    let ua = u[a];
    let mut diff = [0.0; 3];
    for k in 0..dom.dim {
        diff[k] = u[nb[k]] - ua;
    }
    let coef = &dom.cell_coef[c];
    for i in 0..dom.fields() {
        let mut s = 0.0;
        for k in 0..dom.dim {
            s += coef[i][k] * diff[k];
        }
        out[i] = s;
    }
}

/// The discrete horizontal gradient `Xu`.
pub fn apply_x(u: &GridFunction) -> HorizontalField {
    let dom = &u.domain;
    let m = dom.fields();
    let per_cell: Vec<[f64; 3]> = exec::map_collect(dom.num_cells(), |c| {
        let mut g = [0.0; 3];
        cell_gradient(dom, &u.values, c, &mut g);
        g
    });
    let mut values = Vec::with_capacity(dom.num_cells() * m);
    for g in &per_cell {
        values.extend_from_slice(&g[..m]);
    }
    HorizontalField {
        domain: dom.clone(),
        values,
    }
}

/// Transpose of [`apply_x`] under the weighted node and cell pairings,
/// restricted to trace-zero functions (boundary entries of the result are 0).
pub fn apply_x_star(w: &HorizontalField) -> GridFunction {
    let dom = &w.domain;
    let m = dom.fields();
    let values = transpose_gather(dom, |c, out: &mut [f64; 3]| {
        out[..m].copy_from_slice(&w.values[c * m..(c + 1) * m]);
    });
    GridFunction::from_nodes_unchecked(dom, values)
}

/// Gathers `Σ_c (stencil_c)^T coef_c^T w_c` onto interior nodes, where the
/// per-cell field value `w_c` is produced on the fly by `cell_value`.
pub(crate) fn transpose_gather<F>(dom: &DiscreteDomain, cell_value: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64; 3]) + Sync + Send,
{
    let m = dom.fields();
    let d = dom.dim;
    // g[c][k] = Σ_i coef[c][i][k] w_i
    let flux: Vec<[f64; 3]> = exec::map_collect(dom.num_cells(), |c| {
        let mut wc = [0.0; 3];
        cell_value(c, &mut wc);
        let coef = &dom.cell_coef[c];
        let mut g = [0.0; 3];
        for k in 0..d {
            let mut s = 0.0;
            for i in 0..m {
                s += coef[i][k] * wc[i];
            }
            g[k] = s;
        }
        g
    });
    let cells = dom.cells;
    let cell_strides = [1, cells[0], cells[0] * cells[1]];
    let interior = &dom.interior;
    let gathered: Vec<f64> = exec::map_collect(interior.len(), |j| {
        let n = interior[j];
        let idx = unravel(n, &dom.node_dims);
        // interior nodes anchor a cell and sit at ν + e_k of the cell below in k
        let own: usize = (0..d).map(|k| idx[k] * cell_strides[k]).sum();
        let mut s = 0.0;
        for k in 0..d {
            s -= flux[own][k];
            s += flux[own - cell_strides[k]][k];
        }
        s
    });
    let mut out = vec![0.0; dom.num_nodes()];
    for (j, &n) in interior.iter().enumerate() {
        out[n] = gathered[j];
    }
    out
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if (1.1..=10.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("p must lie in [1.1, 10], got {p}")))
    }
}

/// `Σ_nodes |u|^p Π h`.
pub(crate) fn lp_power(u: &GridFunction, p: f64) -> f64 {
    let v = &u.values;
    u.domain.weight() * exec::sum(v.len(), |i| v[i].abs().powf(p))
}

/// `Σ_cells |Xu|^p Π h`.
pub(crate) fn seminorm_power(u: &GridFunction, p: f64) -> f64 {
    let dom = &u.domain;
    let half = 0.5 * p;
    dom.weight()
        * exec::sum(dom.num_cells(), |c| {
            let mut g = [0.0; 3];
            cell_gradient(dom, &u.values, c, &mut g);
            let s: f64 = g.iter().map(|x| x * x).sum();
            if s == 0.0 {
                0.0
            } else {
                s.powf(half)
            }
        })
}

/// `(Σ_nodes |u|^p Π h)^{1/p}`.
pub fn lp_norm(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_power(u, p).powf(1.0 / p))
}

/// `(Σ_cells |Xu|^p Π h)^{1/p}`, the norm of the trace-zero space.
pub fn seminorm_x(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(seminorm_power(u, p).powf(1.0 / p))
}
