use rstar::primitives::{GeomWithData, Line};
use rstar::{PointDistance, RTree, AABB};

use crate::error::{QhError, Result};
use crate::geom::{segments_intersect_2d, Point};

/// Planar domain bounded by a closed loop through an ordered boundary cloud.
///
/// The loop is stored counter-clockwise. Boundary distance is measured to the
/// closed polyline through the cloud, so it is zero exactly on the loop and
/// never exceeds the distance to the nearest cloud point.
#[derive(Debug, Clone)]
pub struct CustomBoundary {
    points: Vec<Point>,
    edges: RTree<Edge>,
    spacing: f64,
}

type Edge = GeomWithData<Line<[f64; 2]>, usize>;

fn arr(p: &Point) -> [f64; 2] {
    [p.x(), p.y()]
}

impl CustomBoundary {
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(QhError::invalid("custom boundary needs at least 3 points"));
        }
        if points.iter().any(|p| p.dim() != 2) {
            return Err(QhError::invalid("custom boundaries are planar"));
        }
        if points.first() == points.last() {
            points.pop();
        }
        let signed_area: f64 = (0..points.len())
            .map(|i| {
                let a = points[i];
                let b = points[(i + 1) % points.len()];
                a.x() * b.y() - b.x() * a.y()
            })
            .sum();
        if signed_area == 0.0 {
            return Err(QhError::DegenerateDomain("custom boundary encloses no area".into()));
        }
        if signed_area < 0.0 {
            points.reverse();
        }
        let n = points.len();
        let mut spacing: f64 = 0.0;
        let lines: Vec<_> = (0..n)
            .map(|i| {
                let a = points[i];
                let b = points[(i + 1) % n];
                spacing = spacing.max(a.dist(&b));
                Edge::new(Line::new(arr(&a), arr(&b)), i)
            })
            .collect();
        Ok(CustomBoundary { points, edges: RTree::bulk_load(lines), spacing })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Largest gap between consecutive cloud points.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new2(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new2(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo = Point::new2(lo.x().min(p.x()), lo.y().min(p.y()));
            hi = Point::new2(hi.x().max(p.x()), hi.y().max(p.y()));
        }
        (lo, hi)
    }

    /// Signed distance: positive inside the loop, negative outside.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        let q = arr(p);
        let Some(edge) = self.edges.nearest_neighbor(&q) else {
            return f64::NEG_INFINITY;
        };
        let d = edge.geom().distance_2(&q).sqrt();
        if d == 0.0 {
            return 0.0;
        }
        let n = self.points.len();
        let (ia, ib) = (edge.data, (edge.data + 1) % n);
        let (a, b) = (self.points[ia], self.points[ib]);
        let ab = b - a;
        let t = ((*p - a).dot(&ab) / ab.norm_sq()).clamp(0.0, 1.0);
        let inside = if t > 0.0 && t < 1.0 {
            cross(&ab, &(*p - a)) > 0.0
        } else {
            // closest point is a vertex: use the averaged outward normal of the
            // two edges meeting there
            self.vertex_inside_test(if t <= 0.0 { ia } else { ib }, p)
        };
        if inside {
            d
        } else {
            -d
        }
    }

    fn vertex_inside_test(&self, i: usize, p: &Point) -> bool {
        let n = self.points.len();
        let v = &self.points[i];
        let prev = self.points[(i + n - 1) % n];
        let next = self.points[(i + 1) % n];
        let out = |a: Point, b: Point| {
            let e = (b - a).normalized().unwrap_or(Point::zero(2));
            Point::new2(e.y(), -e.x())
        };
        let normal = out(prev, *v) + out(*v, next);
        let d = *p - *v;
        let s = d.dot(&normal);
        if s != 0.0 {
            return s < 0.0;
        }
        cross(&(next - *v), &d) > 0.0
    }

    /// Whether the closed segment `[a, b]` meets the loop.
    pub fn segment_crosses(&self, a: &Point, b: &Point) -> bool {
        let env = AABB::from_corners(
            [a.x().min(b.x()), a.y().min(b.y())],
            [a.x().max(b.x()), a.y().max(b.y())],
        );
        self.edges.locate_in_envelope_intersecting(&env).any(|edge| {
            let line = edge.geom();
            let p = Point::new2(line.from[0], line.from[1]);
            let q = Point::new2(line.to[0], line.to[1]);
            segments_intersect_2d(a, b, &p, &q)
        })
    }
}

fn cross(u: &Point, v: &Point) -> f64 {
    u.x() * v.y() - u.y() * v.x()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> CustomBoundary {
        // clockwise on purpose
        CustomBoundary::new(vec![
            Point::new2(0.0, 0.0),
            Point::new2(0.0, 1.0),
            Point::new2(1.0, 1.0),
            Point::new2(1.0, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn signed_distance_square() {
        let sq = square();
        assert!((sq.signed_distance(&Point::new2(0.5, 0.5)) - 0.5).abs() < 1e-15);
        assert!((sq.signed_distance(&Point::new2(0.1, 0.7)) - 0.1).abs() < 1e-15);
        assert!((sq.signed_distance(&Point::new2(1.5, 0.5)) + 0.5).abs() < 1e-15);
        // outside near a corner
        let d = sq.signed_distance(&Point::new2(1.3, 1.4));
        assert!((d + 0.5).abs() < 1e-12, "{d}");
        // inside on the diagonal near a corner
        assert!(sq.signed_distance(&Point::new2(0.9, 0.9)) > 0.0);
        assert_eq!(sq.signed_distance(&Point::new2(1.0, 0.3)), 0.0);
    }

    #[test]
    fn crossing() {
        let sq = square();
        assert!(sq.segment_crosses(&Point::new2(0.5, 0.5), &Point::new2(1.5, 0.5)));
        assert!(!sq.segment_crosses(&Point::new2(0.2, 0.5), &Point::new2(0.8, 0.5)));
    }

    #[test]
    fn degenerate_rejected() {
        let line = vec![Point::new2(0.0, 0.0), Point::new2(1.0, 0.0), Point::new2(2.0, 0.0)];
        assert!(CustomBoundary::new(line).is_err());
    }
}
