//! Boundary-graded lattice graphs over a domain window and deterministic
//! Dijkstra search on them.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{QhError, Result};
use crate::geom::Point;

const MAX_NODES: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LatticeOptions {
    pub resolution: f64,
    /// Edges join nodes closer than `edge_factor * resolution`.
    pub edge_factor: f64,
    /// Add half-spacing nodes where δ < 4 × resolution.
    pub refine: bool,
    /// Node jitter as a fraction of the resolution; 0 disables it.
    pub jitter: f64,
    pub seed: u64,
}

impl LatticeOptions {
    pub fn new(resolution: f64) -> Self {
        LatticeOptions { resolution, edge_factor: 1.5, refine: true, jitter: 0.0, seed: 0 }
    }

    pub fn connect_radius(&self) -> f64 {
        self.edge_factor * self.resolution
    }
}

/// Undirected weighted graph in compressed adjacency form.
#[derive(Debug, Clone)]
pub(crate) struct Lattice {
    pub nodes: Vec<Point>,
    pub offsets: Vec<usize>,
    pub targets: Vec<u32>,
    pub weights: Vec<f64>,
    index: SpatialHash,
}

impl Lattice {
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        self.targets[s..e].iter().zip(&self.weights[s..e]).map(|(&j, &w)| (j as usize, w))
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Nodes within `radius` of `p`, sorted by index.
    pub fn nodes_near(&self, p: &Point, radius: f64) -> Vec<usize> {
        self.index.query(&self.nodes, p, radius)
    }

    pub fn component_count(&self) -> usize {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    /// Rebuilds a lattice from stored parts (used by graph caches).
    pub fn from_parts(
        nodes: Vec<Point>,
        edges: &[(u32, u32, f64)],
        cell: f64,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a as usize >= n || b as usize >= n || a == b || !(w > 0.0) {
                return Err(QhError::invalid(format!("bad cached edge ({a}, {b}, {w})")));
            }
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }
        Ok(assemble(nodes, adj, cell))
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`.
    pub fn edge_list(&self) -> Vec<(u32, u32, f64)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.nodes.len() {
            for (j, w) in self.neighbors(i) {
                if j > i {
                    out.push((i as u32, j as u32, w));
                }
            }
        }
        out
    }
}

fn assemble(nodes: Vec<Point>, mut adj: Vec<Vec<(u32, f64)>>, cell: f64) -> Lattice {
    let mut offsets = Vec::with_capacity(nodes.len() + 1);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    for list in adj.iter_mut() {
        list.sort_by_key(|e| e.0);
        for &(j, w) in list.iter() {
            targets.push(j);
            weights.push(w);
        }
        offsets.push(targets.len());
    }
    let index = SpatialHash::new(&nodes, cell);
    Lattice { nodes, offsets, targets, weights, index }
}

#[derive(Debug, Clone)]
struct SpatialHash {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl SpatialHash {
    fn key(cell: f64, p: &Point) -> [i64; 3] {
        [
            (p.get(0) / cell).floor() as i64,
            (p.get(1) / cell).floor() as i64,
            (p.get(2) / cell).floor() as i64,
        ]
    }

    fn new(nodes: &[Point], cell: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in nodes.iter().enumerate() {
            cells.entry(Self::key(cell, p)).or_default().push(i as u32);
        }
        SpatialHash { cell, cells }
    }

    fn query(&self, nodes: &[Point], p: &Point, radius: f64) -> Vec<usize> {
        let lo = Self::key(self.cell, &(*p - splat(p.dim(), radius)));
        let hi = Self::key(self.cell, &(*p + splat(p.dim(), radius)));
        let mut out = Vec::new();
        for a in lo[0]..=hi[0] {
            for b in lo[1]..=hi[1] {
                for c in lo[2]..=hi[2] {
                    if let Some(list) = self.cells.get(&[a, b, c]) {
                        out.extend(
                            list.iter()
                                .map(|&i| i as usize)
                                .filter(|&i| nodes[i].dist(p) <= radius),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn splat(dim: usize, v: f64) -> Point {
    let mut p = Point::zero(dim);
    for i in 0..dim {
        p = p.with(i, v);
    }
    p
}

fn lattice_points(domain: &Domain, spacing: f64) -> Result<(Vec<usize>, usize)> {
    let w = domain.window();
    let dim = domain.dim();
    let mut counts = vec![1usize; 3];
    let mut total = 1usize;
    for (i, c) in counts.iter_mut().enumerate().take(dim) {
        *c = (w.extent(i) / spacing + 1e-9).floor() as usize + 1;
        total = total.saturating_mul(*c);
    }
    if total > MAX_NODES * 4 {
        return Err(QhError::invalid(format!(
            "resolution {spacing} yields {total} lattice points; use a coarser resolution"
        )));
    }
    Ok((counts, total))
}

fn lattice_node(domain: &Domain, counts: &[usize], spacing: f64, flat: usize) -> ([usize; 3], Point) {
    let w = domain.window();
    let mut idx = [0usize; 3];
    let mut rest = flat;
    for i in 0..3 {
        idx[i] = rest % counts[i];
        rest /= counts[i];
    }
    let mut p = w.lo;
    for (i, &k) in idx.iter().enumerate().take(domain.dim()) {
        p = p.with(i, w.lo.get(i) + k as f64 * spacing);
    }
    (idx, p)
}

/// Builds the lattice graph, weighting each edge with `weight(a, b)` where `a`
/// is always the lower-indexed endpoint.
pub(crate) fn build<W>(domain: &Domain, opts: &LatticeOptions, weight: W) -> Result<Lattice>
where
    W: Fn(&Point, &Point) -> Result<f64> + Sync,
{
    let res = opts.resolution;
    let floor = domain.delta_floor();
    if !(res.is_finite() && res > 2.0 * floor) {
        return Err(QhError::invalid(format!(
            "resolution {res} must exceed twice the delta floor {floor}"
        )));
    }
    let mut nodes = Vec::new();
    let (counts, total) = lattice_points(domain, res)?;
    for flat in 0..total {
        let (_, p) = lattice_node(domain, &counts, res, flat);
        if domain.delta(&p) >= floor {
            nodes.push(p);
        }
    }
    if opts.refine {
        let half = res / 2.0;
        let (fcounts, ftotal) = lattice_points(domain, half)?;
        let dim = domain.dim();
        for flat in 0..ftotal {
            let (idx, p) = lattice_node(domain, &fcounts, half, flat);
            if idx.iter().take(dim).all(|k| k % 2 == 0) {
                continue;
            }
            let d = domain.delta(&p);
            if d >= floor && d < 4.0 * res {
                nodes.push(p);
            }
        }
    }
    if opts.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let amp = opts.jitter * res;
        nodes = nodes
            .into_iter()
            .filter_map(|p| {
                let mut q = p;
                for i in 0..domain.dim() {
                    q = q.with(i, p.get(i) + rng.random_range(-amp..=amp));
                }
                (domain.delta(&q) >= floor).then_some(q)
            })
            .collect();
    }
    if nodes.is_empty() {
        return Err(QhError::DegenerateDomain(format!(
            "no lattice node with δ ≥ {floor} at resolution {res}"
        )));
    }
    if nodes.len() > MAX_NODES {
        return Err(QhError::invalid(format!("{} nodes exceeds the node budget", nodes.len())));
    }
    let radius = opts.connect_radius();
    let reach = radius * (1.0 + 1e-9);
    let index = SpatialHash::new(&nodes, radius);
    let upper: Vec<Vec<(u32, f64)>> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let p = nodes[i];
            let mut out = Vec::new();
            for j in index.query(&nodes, &p, reach) {
                if j <= i || !domain.segment_inside(&p, &nodes[j]) {
                    continue;
                }
                out.push((j as u32, weight(&p, &nodes[j])?));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut adj: Vec<Vec<(u32, f64)>> = upper.clone();
    for (i, list) in upper.iter().enumerate() {
        for &(j, w) in list {
            adj[j as usize].push((i as u32, w));
        }
    }
    Ok(assemble(nodes, adj, radius))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (dist, node); the smaller index wins ties
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NO_PREV: u32 = u32::MAX;

/// Connects an off-lattice point to lattice nodes within `radius` (doubling
/// the radius up to twice when nothing is visible).
pub(crate) fn attach<W>(
    domain: &Domain,
    graph: &Lattice,
    p: &Point,
    radius: f64,
    weight: &W,
    p_first: bool,
) -> Result<Vec<(usize, f64)>>
where
    W: Fn(&Point, &Point) -> Result<f64>,
{
    let mut r = radius;
    for _ in 0..3 {
        let mut out = Vec::new();
        for j in graph.nodes_near(p, r) {
            let q = graph.nodes[j];
            if q == *p {
                out.push((j, 0.0));
                continue;
            }
            if domain.segment_inside(p, &q) {
                let w = if p_first { weight(p, &q)? } else { weight(&q, p)? };
                out.push((j, w));
            }
        }
        if !out.is_empty() {
            return Ok(out);
        }
        r *= 2.0;
    }
    Err(QhError::NotConnected(format!("no lattice node visible from {p} within {r}")))
}

/// Least-weight path from `x` to `y` through the lattice; both endpoints are
/// kept exactly.
pub(crate) fn shortest_path<W>(
    domain: &Domain,
    graph: &Lattice,
    x: &Point,
    y: &Point,
    radius: f64,
    weight: W,
) -> Result<Vec<Point>>
where
    W: Fn(&Point, &Point) -> Result<f64>,
{
    if x == y {
        return Ok(vec![*x]);
    }
    let sources = attach(domain, graph, x, radius, &weight, true)?;
    let sinks: HashMap<usize, f64> =
        attach(domain, graph, y, radius, &weight, false)?.into_iter().collect();
    let mut best = f64::INFINITY;
    let mut best_node: Option<usize> = None;
    if x.dist(y) <= radius && domain.segment_inside(x, y) {
        best = weight(x, y)?;
    }
    let n = graph.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![NO_PREV; n];
    let mut heap = BinaryHeap::new();
    for &(j, w) in &sources {
        if w < dist[j] {
            dist[j] = w;
            heap.push(Entry { dist: w, node: j as u32 });
        }
    }
    while let Some(Entry { dist: d, node }) = heap.pop() {
        let u = node as usize;
        if d > dist[u] {
            continue;
        }
        if d >= best {
            break;
        }
        if let Some(&w) = sinks.get(&u) {
            if d + w < best {
                best = d + w;
                best_node = Some(u);
            }
        }
        for (v, w) in graph.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = node;
                heap.push(Entry { dist: nd, node: v as u32 });
            }
        }
    }
    if !best.is_finite() {
        return Err(QhError::NotConnected(format!("{x} and {y} lie in different components")));
    }
    let mut path = vec![*y];
    if let Some(mut u) = best_node {
        loop {
            path.push(graph.nodes[u]);
            if prev[u] == NO_PREV {
                break;
            }
            u = prev[u] as usize;
        }
    }
    path.push(*x);
    path.reverse();
    path.dedup();
    Ok(path)
}

/// Graph distances from `x` to each of `targets` (infinite when unreachable).
pub(crate) fn distances_from<W>(
    domain: &Domain,
    graph: &Lattice,
    x: &Point,
    targets: &[Point],
    radius: f64,
    weight: W,
) -> Result<Vec<f64>>
where
    W: Fn(&Point, &Point) -> Result<f64>,
{
    let sources = attach(domain, graph, x, radius, &weight, true)?;
    let n = graph.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &(j, w) in &sources {
        if w < dist[j] {
            dist[j] = w;
            heap.push(Entry { dist: w, node: j as u32 });
        }
    }
    while let Some(Entry { dist: d, node }) = heap.pop() {
        let u = node as usize;
        if d > dist[u] {
            continue;
        }
        for (v, w) in graph.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v as u32 });
            }
        }
    }
    targets
        .iter()
        .map(|t| {
            if t == x {
                return Ok(0.0);
            }
            let mut best = f64::INFINITY;
            if t.dist(x) <= radius && domain.segment_inside(x, t) {
                best = weight(x, t)?;
            }
            for (j, w) in attach(domain, graph, t, radius, &weight, false)? {
                best = best.min(dist[j] + w);
            }
            Ok(best)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Aabb;

    #[test]
    fn half_plane_unit_square_counts() {
        let w = Aabb::new(Point::new2(0.0, 0.0), Point::new2(1.0, 1.0)).unwrap();
        let d = Domain::upper_half_plane(w).unwrap();
        let g = build(&d, &LatticeOptions::new(0.1), |a, b| Ok(a.dist(b))).unwrap();
        // 11 x 10 coarse nodes above y = 0, plus refinement near the boundary
        assert!(g.nodes.len() >= 110, "{}", g.nodes.len());
        assert_eq!(g.component_count(), 1);
    }

    #[test]
    fn weights_symmetric() {
        let d = Domain::unit_disk();
        let g = build(&d, &LatticeOptions::new(0.2), |a, b| Ok(a.dist(b) * (1.0 + a.x()))).unwrap();
        for i in 0..g.nodes.len() {
            for (j, w) in g.neighbors(i) {
                let back = g.neighbors(j).find(|e| e.0 == i).unwrap().1;
                assert_eq!(w, back);
            }
        }
    }

    #[test]
    fn rejects_tiny_resolution() {
        let d = Domain::unit_disk();
        assert!(build(&d, &LatticeOptions::new(1e-3), |a, b| Ok(a.dist(b))).is_err());
    }

    #[test]
    fn straight_path_in_disk() {
        let d = Domain::unit_disk();
        let opts = LatticeOptions::new(0.1);
        let g = build(&d, &opts, |a, b| Ok(a.dist(b))).unwrap();
        let x = Point::new2(-0.5, 0.0);
        let y = Point::new2(0.5, 0.0);
        let path = shortest_path(&d, &g, &x, &y, opts.connect_radius(), |a, b| Ok(a.dist(b)))
            .unwrap();
        let len: f64 = path.windows(2).map(|w| w[0].dist(&w[1])).sum();
        assert!((len - 1.0).abs() < 1e-9, "{len}");
        assert_eq!(path[0], x);
        assert_eq!(*path.last().unwrap(), y);
    }
}
