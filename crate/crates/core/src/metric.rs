//! Graph approximation of the control distance: every displacement to a node
//! within the stencil radius that the fields, frozen at the midpoint of the
//! displacement, can realize becomes an edge of cost `|a|`; distances are
//! shortest paths. Freezing at the midpoint makes each edge cost the same in
//! both directions.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::domain::export::{self, json_float};
use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::exec;

pub const DEFAULT_RADIUS: usize = 3;
const PINV_RTOL: f64 = 1e-10;
const RESIDUAL_RTOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleMove {
    pub source: usize,
    pub target: usize,
    pub cost: f64,
    pub coefficients: Vec<f64>,
}

/// All admissible moves of a domain, stored per source node.
#[derive(Debug)]
pub struct MoveSet {
    domain: Arc<DiscreteDomain>,
    radius: usize,
    start: Vec<usize>,
    targets: Vec<u32>,
    costs: Vec<f64>,
}

fn offsets(dim: usize, r: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let rz = if dim == 3 { r } else { 0 };
    for a in -r..=r {
        for b in -r..=r {
            for c in -rz..=rz {
                if (a, b, c) != (0, 0, 0) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Minimal-norm solution of `Σ aᵢ Xᵢ(x) = Δ` (rows of `b` are the fields) and
/// whether it passes the residual test.
fn solve_move(pinv: &DMatrix<f64>, bt: &DMatrix<f64>, delta: &[f64]) -> Option<Vec<f64>> {
    let d = nalgebra::DVector::from_column_slice(delta);
    let a = pinv * &d;
    let res = (bt * &a - &d).norm();
    if res <= RESIDUAL_RTOL * d.norm() {
        Some(a.iter().copied().collect())
    } else {
        None
    }
}

/// Field systems on the half-step lattice `lo + j h / 2`, which holds every
/// midpoint of a move between nodes.
struct HalfGrid {
    dims: [usize; 3],
    pinv: Vec<DMatrix<f64>>,
    bt: Vec<DMatrix<f64>>,
}

fn system_at(dom: &DiscreteDomain, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = dom.eval_fields(x).expect("midpoints of moves lie in the box").to_dmatrix();
    let bt = b.transpose();
    let svd = bt.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let pinv = if smax == 0.0 {
        DMatrix::zeros(bt.ncols(), bt.nrows())
    } else {
        svd.pseudo_inverse(PINV_RTOL * smax).expect("both factors were computed")
    };
    (pinv, bt)
}

impl HalfGrid {
    fn new(dom: &DiscreteDomain) -> Self {
        let d = dom.dim();
        let mut dims = [1usize; 3];
        for k in 0..d {
            dims[k] = 2 * dom.resolution()[k] + 1;
        }
        let total = dims[0] * dims[1] * dims[2];
        let lo = dom.region().lo;
        let h = dom.spacing();
        let systems = exec::map_collect(total, |j| {
            let idx = [j % dims[0], (j / dims[0]) % dims[1], j / (dims[0] * dims[1])];
            let x: Vec<f64> = (0..d).map(|k| lo[k] + 0.5 * idx[k] as f64 * h[k]).collect();
            system_at(dom, &x)
        });
        let (pinv, bt) = systems.into_iter().unzip();
        Self { dims, pinv, bt }
    }

    fn midpoint(&self, idx: &[usize; 3], o: &[i64; 3]) -> usize {
        let j: Vec<usize> = (0..3).map(|k| (2 * idx[k] as i64 + o[k]) as usize).collect();
        j[0] + self.dims[0] * (j[1] + self.dims[1] * j[2])
    }
}

fn target_of(dom: &DiscreteDomain, node: usize, o: &[i64; 3]) -> Option<usize> {
    let idx = dom.node_multi_index(node);
    let dims = dom.node_dims();
    let mut t = [0usize; 3];
    for k in 0..dom.dim() {
        let v = idx[k] as i64 + o[k];
        if v < 0 || v >= dims[k] as i64 {
            return None;
        }
        t[k] = v as usize;
    }
    Some(dom.node_from_multi_index(&t[..dom.dim()]))
}

fn displacement(dom: &DiscreteDomain, o: &[i64; 3]) -> Vec<f64> {
    (0..dom.dim()).map(|k| o[k] as f64 * dom.spacing()[k]).collect()
}

/// Moves to every node at Chebyshev index distance `1..=radius`; the move
/// `Δ` from `x` is kept when `Σ aᵢ Xᵢ(x + Δ/2) = Δ` has a solution, within a
/// relative least-squares residual of `1e-8`.
pub fn build_moves(domain: &Arc<DiscreteDomain>, radius: usize) -> Result<MoveSet> {
    if !(1..=4).contains(&radius) {
        return Err(Error::Config(format!("stencil radius must lie in 1..=4, got {radius}")));
    }
    let dom = domain.as_ref();
    let offs = offsets(dom.dim(), radius as i64);
    let half = HalfGrid::new(dom);
    let per_node: Vec<Vec<(u32, f64)>> = exec::map_collect(dom.num_nodes(), |node| {
        let idx = dom.node_multi_index(node);
        offs.iter()
            .filter_map(|o| {
                let t = target_of(dom, node, o)?;
                let m = half.midpoint(&idx, o);
                let a = solve_move(&half.pinv[m], &half.bt[m], &displacement(dom, o))?;
                let cost = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                Some((t as u32, cost))
            })
            .collect()
    });
    let mut start = Vec::with_capacity(per_node.len() + 1);
    start.push(0);
    let total: usize = per_node.iter().map(Vec::len).sum();
    let mut targets = Vec::with_capacity(total);
    let mut costs = Vec::with_capacity(total);
    for v in per_node {
        for (t, c) in v {
            targets.push(t);
            costs.push(c);
        }
        start.push(targets.len());
    }
    Ok(MoveSet { domain: domain.clone(), radius, start, targets, costs })
}

impl MoveSet {
    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }
    pub fn radius(&self) -> usize {
        self.radius
    }
    pub fn len(&self) -> usize {
        self.targets.len()
    }
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// `(target, cost)` pairs leaving `node`.
    pub fn from_node(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[node]..self.start[node + 1];
        self.targets[r.clone()].iter().map(|&t| t as usize).zip(self.costs[r].iter().copied())
    }

    /// The move `source → target`, with its coefficients, if it is admissible.
    pub fn get(&self, source: usize, target: usize) -> Option<AdmissibleMove> {
        let cost = self.from_node(source).find(|&(t, _)| t == target)?.1;
        let dom = self.domain.as_ref();
        let (a, b) = (dom.node_multi_index(source), dom.node_multi_index(target));
        let mut o = [0i64; 3];
        for k in 0..dom.dim() {
            o[k] = b[k] as i64 - a[k] as i64;
        }
        let mid: Vec<f64> = dom
            .node_coords(source)
            .iter()
            .zip(dom.node_coords(target))
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        let (pinv, bt) = system_at(dom, &mid);
        let coefficients = solve_move(&pinv, &bt, &displacement(dom, &o))?;
        Some(AdmissibleMove { source, target, cost, coefficients })
    }
}

#[derive(Clone, Debug)]
pub struct DistanceField {
    domain: Arc<DiscreteDomain>,
    source: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }
    pub fn source(&self) -> usize {
        self.source
    }
    pub fn source_point(&self) -> Vec<f64> {
        self.domain.node_coords(self.source)
    }
    /// Per node; `f64::INFINITY` where no path exists.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }
    pub fn unreachable(&self) -> usize {
        self.values.iter().filter(|v| v.is_infinite()).count()
    }
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        export::write_node_csv(&self.domain, &self.values, out)
    }
}

#[derive(PartialEq)]
struct Key(f64);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Dijkstra over the move graph from `source`.
pub fn cc_distance(moves: &MoveSet, source: usize) -> Result<DistanceField> {
    let n = moves.domain.num_nodes();
    if source >= n {
        return Err(Error::Config(format!("source node {source} out of range (0..{n})")));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(d), v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for (t, c) in moves.from_node(v) {
            let nd = d + c;
            if nd < dist[t] {
                dist[t] = nd;
                heap.push(Reverse((Key(nd), t)));
            }
        }
    }
    Ok(DistanceField { domain: moves.domain.clone(), source, values: dist })
}

/// One Dijkstra run per source, concurrently.
pub fn cc_distances(moves: &MoveSet, sources: &[usize]) -> Result<Vec<DistanceField>> {
    exec::map_jobs(sources.len(), |k| cc_distance(moves, sources[k])).into_iter().collect()
}

pub const MIN_HOLDER_SOURCES: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct HolderEntry {
    pub alpha: f64,
    #[serde(serialize_with = "json_float::serialize")]
    pub quotient: f64,
    /// Coordinates of the maximizing pair; absent when no pair differs.
    pub argmax_pair: Option<[Vec<f64>; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub sources: usize,
    pub pairs: usize,
    pub entries: Vec<HolderEntry>,
}

impl HolderReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
    pub fn quotient(&self, alpha: f64) -> Option<f64> {
        self.entries.iter().find(|e| e.alpha == alpha).map(|e| e.quotient)
    }
}

/// `max |u(s) − u(y)| / d(s, y)^α` over all sources `s` and reachable `y ≠ s`.
pub fn holder_report(u: &GridFunction, dists: &[DistanceField], alphas: &[f64]) -> Result<HolderReport> {
    if dists.len() < MIN_HOLDER_SOURCES {
        return Err(Error::Precondition(format!(
            "Hölder report needs at least {MIN_HOLDER_SOURCES} sources, got {}",
            dists.len()
        )));
    }
    let dom = u.domain();
    for d in dists {
        if !Arc::ptr_eq(d.domain(), dom) {
            return Err(Error::DomainMismatch);
        }
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::Config(format!("Hölder exponent must be finite and ≥ 0, got {a}")));
    }
    let v = u.values();
    let mut pairs = 0;
    let mut best: Vec<(f64, Option<(usize, usize)>)> = vec![(0.0, None); alphas.len()];
    for df in dists {
        let s = df.source();
        for (y, &d) in df.values().iter().enumerate() {
            if y == s || !(d.is_finite() && d > 0.0) {
                continue;
            }
            pairs += 1;
            let diff = (v[s] - v[y]).abs();
            if diff == 0.0 {
                continue;
            }
            for (b, &alpha) in best.iter_mut().zip(alphas) {
                let q = diff / d.powf(alpha);
                if q > b.0 {
                    *b = (q, Some((s, y)));
                }
            }
        }
    }
    let entries = alphas
        .iter()
        .zip(best)
        .map(|(&alpha, (quotient, arg))| HolderEntry {
            alpha,
            quotient,
            argmax_pair: arg.map(|(s, y)| [dom.node_coords(s), dom.node_coords(y)]),
        })
        .collect();
    Ok(HolderReport { sources: dists.len(), pairs, entries })
}

/// `count` distinct nodes spread over the box by a fixed low-discrepancy walk.
pub fn sample_sources(domain: &DiscreteDomain, count: usize) -> Vec<usize> {
    let n = domain.num_nodes();
    let count = count.min(n);
    let golden = 0.618_033_988_749_894_9_f64;
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count {
        let node = (((k as f64 + 0.5) * golden).fract() * n as f64) as usize;
        if !out.contains(&node) {
            out.push(node);
        }
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BoxRegion, FieldFamily};

    fn grushin(n: usize) -> Arc<DiscreteDomain> {
        let fam = FieldFamily::grushin(2, 1).unwrap();
        DiscreteDomain::new(fam, BoxRegion::new(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(), &[n, n]).unwrap()
    }

    #[test]
    fn move_examples() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 8).unwrap();
        let ms = build_moves(&dom, 1).unwrap();
        let m = ms.get(dom.node_from_multi_index(&[3, 3]), dom.node_from_multi_index(&[4, 3])).unwrap();
        assert!((m.cost - 0.125).abs() < 1e-15);
        assert!((m.coefficients[0] - 0.125).abs() < 1e-15 && m.coefficients[1].abs() < 1e-15);

        let g = grushin(8);
        let ms = build_moves(&g, 1).unwrap();
        let on_axis = g.node_from_multi_index(&[4, 4]);
        assert!(ms.get(on_axis, g.node_from_multi_index(&[4, 5])).is_none());
        assert!(ms.get(on_axis, g.node_from_multi_index(&[5, 4])).is_some());
        let half = g.node_from_multi_index(&[6, 4]);
        let m = ms.get(half, g.node_from_multi_index(&[6, 5])).unwrap();
        assert!((m.cost - 0.25 / 0.5).abs() < 1e-14, "{}", m.cost);
        assert!(build_moves(&g, 0).is_err() && build_moves(&g, 5).is_err());
    }

    #[test]
    fn distances_basic_properties() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 16).unwrap();
        let r1 = build_moves(&dom, 1).unwrap();
        let r3 = build_moves(&dom, 3).unwrap();
        let s = dom.node_from_multi_index(&[0, 0]);
        let d1 = cc_distance(&r1, s).unwrap();
        let d3 = cc_distance(&r3, s).unwrap();
        assert_eq!(d3.at(s), 0.0);
        let far = dom.node_from_multi_index(&[16, 8]);
        let exact = (1.0f64 + 0.25).sqrt();
        assert!(d3.at(far) >= exact * (1.0 - 1e-12) && d3.at(far) <= exact * 1.02);
        for (a, b) in d1.values().iter().zip(d3.values()) {
            assert!(b <= &(a + 1e-12));
        }
        assert_eq!(d3.unreachable(), 0);
    }

    #[test]
    fn grushin_vertical_distance_near_geodesic_value() {
        let dom = grushin(64);
        let ms = build_moves(&dom, 3).unwrap();
        let o = dom.nearest_node(&[0.0, 0.0]);
        let d = cc_distance(&ms, o).unwrap();
        let top = dom.nearest_node(&[0.0, 0.5]);
        let exact = (2.0 * std::f64::consts::PI * 0.5f64).sqrt();
        assert!((d.at(top) / exact - 1.0).abs() < 0.1, "{} vs {exact}", d.at(top));
    }

    #[test]
    fn heisenberg_reports_unreachable_nodes_without_failing() {
        let dom = DiscreteDomain::uniform(FieldFamily::Heisenberg, 4).unwrap();
        let ms = build_moves(&dom, 1).unwrap();
        let d = cc_distance(&ms, dom.nearest_node(&[0.0, 0.0, 0.0])).unwrap();
        assert!(d.values().iter().all(|v| *v >= 0.0));
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert!(d.unreachable() == 0 || String::from_utf8(buf).unwrap().contains("inf"));
    }

    #[test]
    fn holder_examples() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 8).unwrap();
        let ms = build_moves(&dom, 2).unwrap();
        let src = sample_sources(&dom, 8);
        let dists = cc_distances(&ms, &src).unwrap();
        let zero = GridFunction::zeros(&dom);
        let r = holder_report(&zero, &dists, &[0.0, 0.5, 1.0]).unwrap();
        assert!(r.entries.iter().all(|e| e.quotient == 0.0 && e.argmax_pair.is_none()));
        let u = GridFunction::from_fn(&dom, |x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        let r = holder_report(&u, &dists, &[0.0]).unwrap();
        let mut osc = 0f64;
        for s in &src {
            for y in 0..dom.num_nodes() {
                osc = osc.max((u.at(*s) - u.at(y)).abs());
            }
        }
        assert_eq!(r.entries[0].quotient, osc);
        assert!(holder_report(&u, &dists[..7], &[1.0]).is_err());
        assert!(r.to_json().contains("argmax_pair"));
    }
}
