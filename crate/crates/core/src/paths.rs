//! Approximate quasihyperbolic shortest arcs: lattice search, local descent
//! and ε-shortness certificates.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::Domain;
use crate::error::{QhError, Result};
use crate::geom::{ArcPolyline, Point};
use crate::lattice::{self, Lattice, LatticeOptions};
use crate::qh::{certified_lower_bound, qh_polyline_length, segment_qh_length, QhDistance};

/// Quadrature tolerance for lattice edge weights.
pub const EDGE_TOL: f64 = 1e-6;
/// Quadrature tolerance inside the descent loop.
pub const DESCENT_TOL: f64 = 1e-9;
/// Quadrature tolerance for the reported upper bound.
pub const FINAL_TOL: f64 = 1e-10;

fn edge_weight(domain: &Domain) -> impl Fn(&Point, &Point) -> Result<f64> + Sync + '_ {
    move |a, b| segment_qh_length(domain, a, b, EDGE_TOL).map(|r| r.value)
}

/// Lattice graph inside a domain weighted by segment quasihyperbolic length.
#[derive(Debug, Clone)]
pub struct PathGraph {
    lattice: Lattice,
    options: LatticeOptions,
    domain_hash: String,
}

/// Stable hash of a domain's JSON specification.
pub fn domain_hash(domain: &Domain) -> String {
    let text = serde_json::to_string(&domain.to_spec()).expect("domain spec serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl PathGraph {
    /// Grid over the sampling window restricted to δ ≥ delta_floor, with
    /// half-spacing refinement where δ < 4 × resolution and edges between
    /// nodes closer than 1.5 × resolution whose segment stays inside.
    pub fn build(domain: &Domain, resolution: f64, seed: u64) -> Result<Self> {
        let mut options = LatticeOptions::new(resolution);
        options.seed = seed;
        Self::build_with(domain, options)
    }

    /// As [`PathGraph::build`] with node jitter (fraction of the resolution).
    pub fn build_jittered(domain: &Domain, resolution: f64, seed: u64, jitter: f64) -> Result<Self> {
        let mut options = LatticeOptions::new(resolution);
        options.seed = seed;
        options.jitter = jitter;
        Self::build_with(domain, options)
    }

    fn build_with(domain: &Domain, options: LatticeOptions) -> Result<Self> {
        let lattice = lattice::build(domain, &options, edge_weight(domain))?;
        Ok(PathGraph { lattice, options, domain_hash: domain_hash(domain) })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.lattice.nodes
    }

    pub fn node_count(&self) -> usize {
        self.lattice.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.lattice.edge_count()
    }

    /// Each undirected edge once as `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> Vec<(u32, u32, f64)> {
        self.lattice.edge_list()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lattice.neighbors(i)
    }

    pub fn resolution(&self) -> f64 {
        self.options.resolution
    }

    pub fn seed(&self) -> u64 {
        self.options.seed
    }

    pub fn domain_hash(&self) -> &str {
        &self.domain_hash
    }

    pub fn component_count(&self) -> usize {
        self.lattice.component_count()
    }

    fn check_domain(&self, domain: &Domain) -> Result<()> {
        if domain_hash(domain) != self.domain_hash {
            return Err(QhError::invalid("path graph was built for a different domain"));
        }
        Ok(())
    }

    pub fn to_cache(&self) -> GraphCache {
        GraphCache {
            nodes: self.lattice.nodes.clone(),
            edges: self.edges(),
            resolution: self.options.resolution,
            seed: self.options.seed,
            jitter: self.options.jitter,
            domain_hash: self.domain_hash.clone(),
        }
    }

    pub fn from_cache(cache: GraphCache, domain: &Domain) -> Result<Self> {
        if cache.domain_hash != domain_hash(domain) {
            return Err(QhError::Config("graph cache belongs to a different domain".into()));
        }
        let mut options = LatticeOptions::new(cache.resolution);
        options.seed = cache.seed;
        options.jitter = cache.jitter;
        let lattice = Lattice::from_parts(cache.nodes, &cache.edges, options.connect_radius())?;
        Ok(PathGraph { lattice, options, domain_hash: cache.domain_hash })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_cache())?;
        std::fs::write(path, text).map_err(|source| QhError::Io { path: path.into(), source })
    }

    pub fn load(path: &Path, domain: &Domain) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| QhError::Io { path: path.into(), source })?;
        Self::from_cache(serde_json::from_str(&text)?, domain)
    }
}

/// JSON graph cache: `{nodes, edges, resolution, seed, jitter, domain_hash}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphCache {
    pub nodes: Vec<Point>,
    pub edges: Vec<(u32, u32, f64)>,
    pub resolution: f64,
    pub seed: u64,
    #[serde(default)]
    pub jitter: f64,
    pub domain_hash: String,
}

/// An arc with an upper bound on its quasihyperbolic length and a certified
/// lower bound on the endpoint distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortArcResult {
    pub arc: ArcPolyline,
    /// ℓ_k(arc) plus its quadrature error estimate.
    pub upper: f64,
    /// Certified lower bound on k(x, y).
    pub lower: f64,
    /// `upper − lower`; the arc is `epsilon_hat`-short.
    pub epsilon_hat: f64,
    /// Distance from the start point to the first lattice node on the search
    /// path (zero when no lattice node was used).
    pub snap_distance: f64,
}

/// Tuning for [`qh_shortest_arc_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortArcOptions {
    /// Segments in the coarse starting polyline.
    pub initial_segments: usize,
    /// Keep doubling until at least this many segments.
    pub final_segments: usize,
    /// Descent sweeps per level.
    pub sweeps_per_level: usize,
}

impl Default for ShortArcOptions {
    fn default() -> Self {
        ShortArcOptions { initial_segments: 4, final_segments: 16, sweeps_per_level: 150 }
    }
}

/// Approximate quasihyperbolic shortest arc from `x` to `y` with the default
/// options.
pub fn qh_shortest_arc(domain: &Domain, graph: &PathGraph, x: &Point, y: &Point) -> Result<ShortArcResult> {
    qh_shortest_arc_with(domain, graph, x, y, &ShortArcOptions::default())
}

pub fn qh_shortest_arc_with(
    domain: &Domain,
    graph: &PathGraph,
    x: &Point,
    y: &Point,
    opts: &ShortArcOptions,
) -> Result<ShortArcResult> {
    graph.check_domain(domain)?;
    for p in [x, y] {
        if !(domain.boundary_distance(p)? > 0.0) {
            return Err(QhError::invalid(format!("{p} is not an interior point")));
        }
    }
    if x == y {
        return Ok(ShortArcResult {
            arc: ArcPolyline::single(*x),
            upper: 0.0,
            lower: 0.0,
            epsilon_hat: 0.0,
            snap_distance: 0.0,
        });
    }
    let weight = edge_weight(domain);
    let path = lattice::shortest_path(
        domain,
        &graph.lattice,
        x,
        y,
        graph.options.connect_radius(),
        &weight,
    )?;
    let snap_distance = if path.len() > 2 { x.dist(&path[1]) } else { 0.0 };

    let mut start = coarse_polyline(domain, &path, opts.initial_segments)?;
    if domain.segment_inside(x, y) {
        let straight = segment_qh_length(domain, x, y, DESCENT_TOL)?.value;
        let current = qh_polyline_length(domain, &start, DESCENT_TOL)?.value;
        if straight <= current {
            let pts = ArcPolyline::segment(*x, *y).resample_uniform(opts.initial_segments.max(1) + 1);
            start = ArcPolyline::from_vertices_unchecked(pts);
        }
    }

    let mut arc = start;
    loop {
        arc = shorten_arc(domain, &arc, opts.sweeps_per_level);
        if arc.len() > opts.final_segments {
            break;
        }
        arc = arc.densified();
    }

    let len = qh_polyline_length(domain, &arc, FINAL_TOL)?;
    let upper = len.value + len.est_error;
    let lower = certified_lower_bound(domain, x, y)?;
    Ok(ShortArcResult { arc, upper, lower, epsilon_hat: (upper - lower).max(0.0), snap_distance })
}

/// Picks a subsequence of `path` whose consecutive qh gaps are about
/// `total / segments`, keeping every chord inside the domain.
fn coarse_polyline(domain: &Domain, path: &[Point], segments: usize) -> Result<ArcPolyline> {
    if path.len() <= 2 {
        return Ok(ArcPolyline::from_vertices_unchecked(path.to_vec()));
    }
    let mut cum = vec![0.0];
    for w in path.windows(2) {
        let l = segment_qh_length(domain, &w[0], &w[1], 1e-6)?.value;
        cum.push(cum.last().unwrap() + l);
    }
    let total = *cum.last().unwrap();
    let gap = total / segments.max(1) as f64;
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = i + 1;
        while j + 1 < path.len()
            && cum[j + 1] - cum[i] <= gap * (1.0 + 1e-9)
            && domain.segment_inside(&path[i], &path[j + 1])
        {
            j += 1;
        }
        out.push(path[j]);
        i = j;
    }
    Ok(ArcPolyline::from_vertices_unchecked(out))
}

/// Local descent on the interior vertices of `arc`.
///
/// Each sweep proposes, per vertex, the midpoint of its neighbours and moves
/// of an adaptive step along the chord normal(s) and tangent; a move is kept
/// only if it stays inside and strictly lowers the quasihyperbolic length.
/// The output is never longer than the input.
pub fn shorten_arc(domain: &Domain, arc: &ArcPolyline, iterations: usize) -> ArcPolyline {
    let n = arc.len();
    if iterations == 0 || n < 3 {
        return arc.clone();
    }
    let seg = |a: &Point, b: &Point| {
        segment_qh_length(domain, a, b, DESCENT_TOL).map(|r| r.value).unwrap_or(f64::INFINITY)
    };
    let mut v = arc.vertices().to_vec();
    let mut lens: Vec<f64> = v.windows(2).map(|w| seg(&w[0], &w[1])).collect();
    if lens.iter().any(|l| !l.is_finite()) {
        return arc.clone();
    }
    let mut step: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                0.25 * v[i].dist(&v[i - 1]).min(v[i].dist(&v[i + 1]))
            }
        })
        .collect();
    let scale = arc.length().max(f64::MIN_POSITIVE);
    let mut total: f64 = lens.iter().sum();
    for _ in 0..iterations {
        let before = total;
        for i in 1..n - 1 {
            let (a, b) = (v[i - 1], v[i + 1]);
            let cur = lens[i - 1] + lens[i];
            let chord = b - a;
            let s = step[i];
            let mut cands = Vec::with_capacity(7);
            cands.push(a.midpoint(&b));
            if s > 0.0 {
                if let Some(t) = chord.normalized() {
                    for nrm in chord.orthonormal_complement() {
                        cands.push(v[i] + nrm * s);
                        cands.push(v[i] - nrm * s);
                    }
                    cands.push(v[i] + t * s);
                    cands.push(v[i] - t * s);
                }
            }
            let mut best = cur;
            let mut chosen: Option<(Point, f64, f64)> = None;
            for p in cands {
                if p == v[i] || !(domain.delta(&p) > 0.0) {
                    continue;
                }
                let l1 = seg(&a, &p);
                if !(l1 < best) {
                    continue;
                }
                let l2 = seg(&p, &b);
                if l1 + l2 < best {
                    best = l1 + l2;
                    chosen = Some((p, l1, l2));
                }
            }
            match chosen {
                Some((p, l1, l2)) => {
                    let moved = p.dist(&v[i]);
                    v[i] = p;
                    lens[i - 1] = l1;
                    lens[i] = l2;
                    step[i] = (1.5 * step[i]).max(0.5 * moved);
                }
                None => step[i] *= 0.5,
            }
        }
        total = lens.iter().sum();
        let max_step = step.iter().cloned().fold(0.0, f64::max);
        if before - total <= 1e-11 * total && max_step < 1e-5 * scale {
            break;
        }
    }
    ArcPolyline::from_vertices_unchecked(v)
}

/// Lattice distances as a [`QhDistance`] (upper bounds on k).
///
/// With `refine` set, each distance is instead the upper bound of a full
/// [`qh_shortest_arc`] computation.
pub struct GraphDistance<'a> {
    domain: &'a Domain,
    graph: &'a PathGraph,
    refine: bool,
}

impl<'a> GraphDistance<'a> {
    pub fn new(domain: &'a Domain, graph: &'a PathGraph) -> Self {
        GraphDistance { domain, graph, refine: false }
    }

    pub fn refined(domain: &'a Domain, graph: &'a PathGraph) -> Self {
        GraphDistance { domain, graph, refine: true }
    }
}

impl QhDistance for GraphDistance<'_> {
    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        if self.refine {
            return qh_shortest_arc(self.domain, self.graph, x, y).map(|r| r.upper);
        }
        let d = lattice::distances_from(
            self.domain,
            &self.graph.lattice,
            x,
            std::slice::from_ref(y),
            self.graph.options.connect_radius(),
            edge_weight(self.domain),
        )?;
        finite(d[0], x, y)
    }

    fn pairwise(&self, points: &[Point]) -> Result<Vec<Vec<f64>>> {
        let n = points.len();
        let mut m: Vec<Vec<f64>> = if self.refine {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if j <= i {
                                Ok(0.0)
                            } else {
                                self.distance(&points[i], &points[j])
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        } else {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    lattice::distances_from(
                        self.domain,
                        &self.graph.lattice,
                        &points[i],
                        points,
                        self.graph.options.connect_radius(),
                        edge_weight(self.domain),
                    )
                })
                .collect::<Result<_>>()?
        };
        for i in 0..n {
            m[i][i] = 0.0;
            for j in i + 1..n {
                let d = if self.refine { m[i][j] } else { m[i][j].min(m[j][i]) };
                let d = finite(d, &points[i], &points[j])?;
                m[i][j] = d;
                m[j][i] = d;
            }
        }
        Ok(m)
    }
}

fn finite(d: f64, x: &Point, y: &Point) -> Result<f64> {
    if d.is_finite() {
        Ok(d)
    } else {
        Err(QhError::NotConnected(format!("{x} and {y}")))
    }
}
