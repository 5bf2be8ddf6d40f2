//! Domain catalog: boundary distance, membership, interior sampling and
//! Euclidean shortest arcs.

mod custom;
mod spec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use custom::CustomBoundary;
pub use spec::DomainSpec;

use crate::error::{QhError, Result};
use crate::geom::{point_segment_distance, segments_intersect_2d, ArcPolyline, Point};
use crate::lattice::{self, LatticeOptions};

/// Default boundary-distance floor as a fraction of the domain scale.
pub const DEFAULT_FLOOR_FRACTION: f64 = 1e-3;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(QhError::invalid("window corners have different dimensions"));
        }
        if lo.coords().iter().zip(hi.coords()).any(|(a, b)| !(a < b)) {
            return Err(QhError::invalid(format!("empty window {lo} .. {hi}")));
        }
        Ok(Aabb { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|i| p.get(i) >= self.lo.get(i) && p.get(i) <= self.hi.get(i))
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi.get(axis) - self.lo.get(axis)
    }
}

/// The catalog of supported domains.
#[derive(Debug, Clone)]
pub enum DomainKind {
    Ball { center: Point, radius: f64 },
    /// `{ p : p[axis] > offset }`.
    HalfSpace { dim: usize, axis: usize, offset: f64 },
    /// Ball with one point removed.
    PuncturedBall { center: Point, radius: f64, puncture: Point },
    /// Planar disk with a closed segment removed.
    SlitDisk { center: Point, radius: f64, slit: (Point, Point) },
    Custom(CustomBoundary),
}

/// A proper subdomain of ℝⁿ (n ∈ {2, 3}) with a sampling window.
#[derive(Debug, Clone)]
pub struct Domain {
    kind: DomainKind,
    window: Aabb,
    delta_floor: f64,
}

impl Domain {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        center.check_finite()?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(QhError::invalid(format!("ball radius {radius} must be positive")));
        }
        let window = ball_window(&center, radius)?;
        Self::assemble(DomainKind::Ball { center, radius }, window)
    }

    /// Unit disk centred at the origin.
    pub fn unit_disk() -> Self {
        Self::ball(Point::new2(0.0, 0.0), 1.0).expect("unit disk is valid")
    }

    pub fn half_space(dim: usize, axis: usize, offset: f64, window: Aabb) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(QhError::invalid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if axis >= dim || !offset.is_finite() || window.dim() != dim {
            return Err(QhError::invalid("bad half-space axis, offset or window"));
        }
        if window.hi.get(axis) <= offset {
            return Err(QhError::DegenerateDomain("window lies outside the half-space".into()));
        }
        Self::assemble(DomainKind::HalfSpace { dim, axis, offset }, window)
    }

    /// Upper half-plane `y > 0` with the given window.
    pub fn upper_half_plane(window: Aabb) -> Result<Self> {
        Self::half_space(2, 1, 0.0, window)
    }

    pub fn punctured_ball(center: Point, radius: f64, puncture: Point) -> Result<Self> {
        center.check_finite()?;
        puncture.check_finite()?;
        if !(radius > 0.0) || center.dim() != puncture.dim() {
            return Err(QhError::invalid("bad punctured ball parameters"));
        }
        if puncture.dist(&center) >= radius {
            return Err(QhError::invalid("puncture must lie inside the ball"));
        }
        let window = ball_window(&center, radius)?;
        Self::assemble(DomainKind::PuncturedBall { center, radius, puncture }, window)
    }

    pub fn slit_disk(center: Point, radius: f64, a: Point, b: Point) -> Result<Self> {
        for p in [&center, &a, &b] {
            p.check_finite()?;
            if p.dim() != 2 {
                return Err(QhError::invalid("slit disks are planar"));
            }
        }
        if !(radius > 0.0) {
            return Err(QhError::invalid("slit disk radius must be positive"));
        }
        let window = ball_window(&center, radius)?;
        Self::assemble(DomainKind::SlitDisk { center, radius, slit: (a, b) }, window)
    }

    /// The unit disk minus the segment `[0, 1] × {0}`.
    pub fn unit_slit_disk() -> Self {
        Self::slit_disk(Point::new2(0.0, 0.0), 1.0, Point::new2(0.0, 0.0), Point::new2(1.0, 0.0))
            .expect("slit disk is valid")
    }

    pub fn custom(boundary: Vec<Point>) -> Result<Self> {
        let b = CustomBoundary::new(boundary)?;
        let (lo, hi) = b.bounding_box();
        let window = Aabb::new(lo, hi)?;
        Self::assemble(DomainKind::Custom(b), window)
    }

    fn assemble(kind: DomainKind, window: Aabb) -> Result<Self> {
        let mut d = Domain { kind, window, delta_floor: 0.0 };
        d.delta_floor = DEFAULT_FLOOR_FRACTION * d.scale();
        Ok(d)
    }

    pub fn with_window(mut self, window: Aabb) -> Result<Self> {
        if window.dim() != self.dim() {
            return Err(QhError::invalid("window dimension mismatch"));
        }
        self.window = window;
        Ok(self)
    }

    pub fn with_delta_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(QhError::invalid(format!("delta_floor {floor} must be positive")));
        }
        self.delta_floor = floor;
        Ok(self)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn window(&self) -> &Aabb {
        &self.window
    }

    pub fn delta_floor(&self) -> f64 {
        self.delta_floor
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Characteristic length: radius for ball-like domains, window height for
    /// half-spaces, largest bounding-box side for custom domains.
    pub fn scale(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius, .. }
            | DomainKind::PuncturedBall { radius, .. }
            | DomainKind::SlitDisk { radius, .. } => *radius,
            DomainKind::HalfSpace { axis, offset, .. } => self.window.hi.get(*axis) - offset,
            DomainKind::Custom(_) => {
                (0..self.dim()).map(|i| self.window.extent(i)).fold(0.0, f64::max)
            }
        }
    }

    /// Upper bound on the error of [`Domain::boundary_distance`]; zero for
    /// closed-form catalog domains.
    pub fn distance_error_bound(&self) -> f64 {
        match &self.kind {
            DomainKind::Custom(b) => b.spacing(),
            _ => 0.0,
        }
    }

    /// Distance to the boundary, δ(p). Nonpositive for exterior points.
    pub fn boundary_distance(&self, p: &Point) -> Result<f64> {
        p.check_finite()?;
        if p.dim() != self.dim() {
            return Err(QhError::invalid(format!(
                "point {p} has dimension {}, domain has {}",
                p.dim(),
                self.dim()
            )));
        }
        Ok(self.delta(p))
    }

    /// Unchecked boundary distance for hot loops.
    #[inline]
    pub(crate) fn delta(&self, p: &Point) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => radius - p.dist(center),
            DomainKind::HalfSpace { axis, offset, .. } => p.get(*axis) - offset,
            DomainKind::PuncturedBall { center, radius, puncture } => {
                let d = radius - p.dist(center);
                if d <= 0.0 {
                    d
                } else {
                    d.min(p.dist(puncture))
                }
            }
            DomainKind::SlitDisk { center, radius, slit } => {
                let d = radius - p.dist(center);
                if d <= 0.0 {
                    d
                } else {
                    d.min(point_segment_distance(p, &slit.0, &slit.1).0)
                }
            }
            DomainKind::Custom(b) => b.signed_distance(p),
        }
    }

    /// Whether `p` is an interior point.
    pub fn contains(&self, p: &Point) -> Result<bool> {
        Ok(self.boundary_distance(p)? > 0.0)
    }

    /// Whether the closed segment `[a, b]` lies in the domain.
    pub fn segment_inside(&self, a: &Point, b: &Point) -> bool {
        if !(self.delta(a) > 0.0 && self.delta(b) > 0.0) {
            return false;
        }
        match &self.kind {
            DomainKind::Ball { .. } | DomainKind::HalfSpace { .. } => true,
            DomainKind::PuncturedBall { puncture, .. } => {
                point_segment_distance(puncture, a, b).0 > 0.0
            }
            DomainKind::SlitDisk { slit, .. } => !segments_intersect_2d(a, b, &slit.0, &slit.1),
            DomainKind::Custom(bnd) => !bnd.segment_crosses(a, b),
        }
    }

    /// `n` interior points with δ ≥ `floor`, by seeded rejection sampling over
    /// the window.
    pub fn sample_interior(&self, n: usize, seed: u64, floor: f64) -> Result<Vec<Point>> {
        if !(floor >= self.delta_floor) {
            return Err(QhError::invalid(format!(
                "sampling floor {floor} below domain delta_floor {}",
                self.delta_floor
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut trials = 0usize;
        const CHECK_EVERY: usize = 100_000;
        while out.len() < n {
            let p = self.random_window_point(&mut rng);
            trials += 1;
            if self.delta(&p) >= floor {
                out.push(p);
            }
            if trials % CHECK_EVERY == 0 && (out.len() as f64) < 1e-4 * trials as f64 {
                return Err(QhError::SamplingExhausted { accepted: out.len(), trials });
            }
        }
        Ok(out)
    }

    pub(crate) fn random_window_point<R: Rng>(&self, rng: &mut R) -> Point {
        let mut p = Point::zero(self.dim());
        for i in 0..self.dim() {
            let (lo, hi) = (self.window.lo.get(i), self.window.hi.get(i));
            p = p.with(i, rng.random_range(lo..hi));
        }
        p
    }

    /// Shortest in-domain Euclidean arc from `x` to `y`, by graph search on a
    /// lattice of the given resolution followed by visibility pruning.
    ///
    /// Returns the arc and its length, an upper bound on the inner distance.
    pub fn euclidean_shortest_arc(
        &self,
        x: &Point,
        y: &Point,
        resolution: f64,
    ) -> Result<(ArcPolyline, f64)> {
        for p in [x, y] {
            if !(self.boundary_distance(p)? > 0.0) {
                return Err(QhError::invalid(format!("{p} is not an interior point")));
            }
        }
        if x == y {
            return Ok((ArcPolyline::single(*x), 0.0));
        }
        if self.segment_inside(x, y) {
            return Ok((ArcPolyline::segment(*x, *y), x.dist(y)));
        }
        let opts = LatticeOptions::new(resolution);
        let graph = lattice::build(self, &opts, |a, b| Ok(a.dist(b)))?;
        let path = lattice::shortest_path(self, &graph, x, y, opts.connect_radius(), |a, b| {
            Ok(a.dist(b))
        })?;
        let pruned = self.visibility_prune(&path);
        let arc = ArcPolyline::from_vertices_unchecked(pruned);
        let len = arc.length();
        Ok((arc, len))
    }

    /// Greedy string pulling: from each kept vertex jump to the farthest later
    /// vertex visible along a straight in-domain segment.
    pub(crate) fn visibility_prune(&self, path: &[Point]) -> Vec<Point> {
        if path.len() <= 2 {
            return path.to_vec();
        }
        let mut out = vec![path[0]];
        let mut i = 0;
        while i < path.len() - 1 {
            let mut j = path.len() - 1;
            while j > i + 1 && !self.segment_inside(&path[i], &path[j]) {
                j -= 1;
            }
            out.push(path[j]);
            i = j;
        }
        out
    }

    /// Counts lattice components at the given resolution; a connected domain
    /// yields exactly one.
    pub fn lattice_components(&self, resolution: f64) -> Result<usize> {
        let graph = lattice::build(self, &LatticeOptions::new(resolution), |a, b| Ok(a.dist(b)))?;
        Ok(graph.component_count())
    }
}

fn ball_window(center: &Point, radius: f64) -> Result<Aabb> {
    let dim = center.dim();
    let mut lo = *center;
    let mut hi = *center;
    for i in 0..dim {
        lo = lo.with(i, center.get(i) - radius);
        hi = hi.with(i, center.get(i) + radius);
    }
    Aabb::new(lo, hi)
}
