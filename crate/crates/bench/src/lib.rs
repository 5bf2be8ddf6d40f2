//! Fixtures shared by the benchmarks in `benches/`.

use qhkit_core::{Aabb, ArcPolyline, Domain, Point};

/// Upper half-plane clipped to `[-3, 3] × [0, 3.2]`.
pub fn half_plane() -> Domain {
    Domain::upper_half_plane(Aabb::new(Point::new2(-3.0, 0.0), Point::new2(3.0, 3.2)).expect("valid window"))
        .expect("valid half-plane")
}

/// A zigzag polyline with `n` segments inside the unit disk.
pub fn zigzag(n: usize) -> ArcPolyline {
    let v = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            Point::new2(-0.8 + 1.6 * t, if i % 2 == 0 { -0.1 } else { 0.1 })
        })
        .collect();
    ArcPolyline::new(v).expect("finite vertices")
}

/// Pairs in the upper half-plane at a spread of heights.
pub fn half_plane_pairs() -> Vec<(Point, Point)> {
    vec![
        (Point::new2(-1.5, 0.3), Point::new2(1.2, 1.4)),
        (Point::new2(-2.0, 0.2), Point::new2(2.0, 0.2)),
        (Point::new2(0.0, 0.1), Point::new2(0.3, 2.5)),
    ]
}
