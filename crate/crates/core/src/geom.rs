//! Points and polylines in ℝ² or ℝ³.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QhError, Result};

/// A point (or vector) of dimension 2 or 3. Unused trailing coordinates are zero.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    c: [f64; 3],
    dim: u8,
}

impl Point {
    pub const fn new2(x: f64, y: f64) -> Self {
        Point { c: [x, y, 0.0], dim: 2 }
    }

    pub const fn new3(x: f64, y: f64, z: f64) -> Self {
        Point { c: [x, y, z], dim: 3 }
    }

    pub fn zero(dim: usize) -> Self {
        debug_assert!(dim == 2 || dim == 3);
        Point { c: [0.0; 3], dim: dim as u8 }
    }

    /// Builds a point from a coordinate slice, rejecting bad dimensions and
    /// non-finite values.
    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if dim != 2 && dim != 3 {
            return Err(QhError::invalid(format!("point dimension {dim} not in {{2, 3}}")));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(QhError::invalid(format!("non-finite coordinate in {coords:?}")));
        }
        let mut c = [0.0; 3];
        c[..dim].copy_from_slice(coords);
        Ok(Point { c, dim: dim as u8 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.c[i]
    }

    #[inline]
    pub fn with(mut self, i: usize, v: f64) -> Self {
        self.c[i] = v;
        self
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.c[1]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(QhError::invalid(format!("non-finite point {self:?}")))
        }
    }

    #[inline]
    pub fn dot(&self, o: &Point) -> f64 {
        self.c[0] * o.c[0] + self.c[1] * o.c[1] + self.c[2] * o.c[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(&self, o: &Point) -> f64 {
        (*self - *o).norm()
    }

    /// `self + t (o - self)`.
    #[inline]
    pub fn lerp(&self, o: &Point, t: f64) -> Point {
        *self + (*o - *self) * t
    }

    pub fn midpoint(&self, o: &Point) -> Point {
        self.lerp(o, 0.5)
    }

    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }

    /// Unit vectors orthogonal to `self` (one in 2D, two in 3D).
    pub fn orthonormal_complement(&self) -> Vec<Point> {
        let Some(u) = self.normalized() else {
            return Vec::new();
        };
        if self.dim == 2 {
            return vec![Point::new2(-u.c[1], u.c[0])];
        }
        // pick the axis least aligned with u
        let axis = (0..3)
            .min_by(|&a, &b| u.c[a].abs().total_cmp(&u.c[b].abs()))
            .unwrap_or(0);
        let mut e = Point::zero(3);
        e.c[axis] = 1.0;
        let v = (e - u * u.dot(&e)).normalized().expect("axis not parallel to u");
        let w = Point::new3(
            u.c[1] * v.c[2] - u.c[2] * v.c[1],
            u.c[2] * v.c[0] - u.c[0] * v.c[2],
            u.c[0] * v.c[1] - u.c[1] * v.c[0],
        );
        vec![v, w]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point {
            c: [self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2]],
            dim: self.dim.max(o.dim),
        }
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point {
            c: [self.c[0] - o.c[0], self.c[1] - o.c[1], self.c[2] - o.c[2]],
            dim: self.dim.max(o.dim),
        }
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point { c: [self.c[0] * s, self.c[1] * s, self.c[2] * s], dim: self.dim }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// Euclidean distance from `p` to the closed segment `[a, b]`, and the
/// parameter of the closest point.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> (f64, f64) {
    let ab = *b - *a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return (p.dist(a), 0.0);
    }
    let t = ((*p - *a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    (p.dist(&a.lerp(b, t)), t)
}

/// Whether two closed planar segments share a point.
pub fn segments_intersect_2d(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> bool {
    fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
        (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x())
    }
    fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
        p.x() >= a.x().min(b.x())
            && p.x() <= a.x().max(b.x())
            && p.y() >= a.y().min(b.y())
            && p.y() <= a.y().max(b.y())
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// An ordered polyline with cached cumulative Euclidean lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcPolyline {
    vertices: Vec<Point>,
    cumulative: Vec<f64>,
}

impl ArcPolyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(QhError::invalid("arc needs at least one vertex"));
        };
        let dim = first.dim();
        for v in &vertices {
            v.check_finite()?;
            if v.dim() != dim {
                return Err(QhError::invalid("arc vertices have mixed dimensions"));
            }
        }
        Ok(Self::from_vertices_unchecked(vertices))
    }

    pub(crate) fn from_vertices_unchecked(vertices: Vec<Point>) -> Self {
        let mut cumulative = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in vertices.windows(2) {
            acc += w[0].dist(&w[1]);
            cumulative.push(acc);
        }
        ArcPolyline { vertices, cumulative }
    }

    pub fn single(p: Point) -> Self {
        ArcPolyline { vertices: vec![p], cumulative: vec![0.0] }
    }

    pub fn segment(a: Point, b: Point) -> Self {
        Self::from_vertices_unchecked(vec![a, b])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().expect("non-empty arc")
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// Cumulative lengths; `cumulative()[i]` is the length up to vertex `i`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Euclidean length ℓ(γ).
    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty arc")
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Point at arclength `s` (clamped to `[0, ℓ]`).
    pub fn point_at(&self, s: f64) -> Point {
        let total = self.length();
        if self.vertices.len() == 1 || s <= 0.0 {
            return self.vertices[0];
        }
        if s >= total {
            return self.end();
        }
        let i = self.cumulative.partition_point(|&c| c <= s).saturating_sub(1);
        let i = i.min(self.vertices.len() - 2);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        if seg == 0.0 {
            return self.vertices[i];
        }
        self.vertices[i].lerp(&self.vertices[i + 1], (s - self.cumulative[i]) / seg)
    }

    /// `max(vertices, min_points)` points evenly spaced in arclength, with all
    /// original vertices merged in. Returned with their arclength parameters.
    pub fn discretize(&self, min_points: usize) -> Vec<(f64, Point)> {
        if self.vertices.len() == 1 {
            return vec![(0.0, self.vertices[0])];
        }
        let total = self.length();
        let n = min_points.max(2) - 1;
        let mut out: Vec<(f64, Point)> = Vec::with_capacity(n + 1 + self.vertices.len());
        let mut vi = 0;
        for k in 0..=n {
            let s = total * k as f64 / n as f64;
            while vi < self.vertices.len() && self.cumulative[vi] < s {
                out.push((self.cumulative[vi], self.vertices[vi]));
                vi += 1;
            }
            out.push((s, self.point_at(s)));
        }
        while vi < self.vertices.len() {
            out.push((self.cumulative[vi], self.vertices[vi]));
            vi += 1;
        }
        out.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        out
    }

    /// Exactly `m` points evenly spaced in arclength (endpoints included).
    pub fn resample_uniform(&self, m: usize) -> Vec<Point> {
        let m = m.max(2);
        if self.vertices.len() == 1 {
            return vec![self.vertices[0]; m];
        }
        let total = self.length();
        (0..m).map(|k| self.point_at(total * k as f64 / (m - 1) as f64)).collect()
    }

    /// Sub-arc between arclength parameters `s0 <= s1`.
    pub fn subarc(&self, s0: f64, s1: f64) -> ArcPolyline {
        let (s0, s1) = (s0.max(0.0), s1.min(self.length()));
        if s1 <= s0 {
            return ArcPolyline::single(self.point_at(s0));
        }
        let mut v = vec![self.point_at(s0)];
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > s0 && c < s1 {
                v.push(self.vertices[i]);
            }
        }
        v.push(self.point_at(s1));
        ArcPolyline::from_vertices_unchecked(v)
    }

    pub fn reversed(&self) -> ArcPolyline {
        let mut v = self.vertices.clone();
        v.reverse();
        ArcPolyline::from_vertices_unchecked(v)
    }

    /// Concatenates `other` (whose start must equal this arc's end).
    pub fn join(&self, other: &ArcPolyline) -> ArcPolyline {
        let mut v = self.vertices.clone();
        v.extend(other.vertices.iter().skip(1).copied());
        ArcPolyline::from_vertices_unchecked(v)
    }

    /// Euclidean diameter of the vertex set (exact for polylines).
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].dist(&v[j]));
            }
        }
        d
    }

    /// Inserts the midpoint of every segment.
    pub fn densified(&self) -> ArcPolyline {
        let mut v = Vec::with_capacity(self.vertices.len() * 2);
        v.push(self.vertices[0]);
        for (a, b) in self.segments() {
            v.push(a.midpoint(&b));
            v.push(b);
        }
        ArcPolyline::from_vertices_unchecked(v)
    }
}

impl Serialize for ArcPolyline {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ArcPolyline {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<Point>::deserialize(d)?;
        ArcPolyline::new(v).map_err(serde::de::Error::custom)
    }
}
