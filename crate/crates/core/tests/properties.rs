use proptest::prelude::*;

use qhkit_core::conditions::{cigar_constant, Mode};
use qhkit_core::experiments::round12;
use qhkit_core::maps::{chain_points, eta_envelope, weak_qs_estimate};
use qhkit_core::qh::{coarse_qh_length, growth_lower_bound, halfspace_qh_distance, qh_polyline_length, HalfSpaceOracle};
use qhkit_core::{Aabb, ArcPolyline, Domain, MapKind, MapSpec, Point};

fn half_plane() -> Domain {
    Domain::upper_half_plane(Aabb::new(Point::new2(-5.0, 0.0), Point::new2(5.0, 5.0)).unwrap()).unwrap()
}

fn upper_point() -> impl Strategy<Value = Point> {
    (-3.0..3.0f64, 0.05..3.0f64).prop_map(|(x, y)| Point::new2(x, y))
}

fn disk_point(r: f64) -> impl Strategy<Value = Point> {
    (0.0..r, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Point::new2(r * t.cos(), r * t.sin()))
}

fn polyline<S: Strategy<Value = Point>>(pt: S) -> impl Strategy<Value = ArcPolyline> {
    prop::collection::vec(pt, 2..6).prop_filter_map("degenerate arc", |v| {
        let arc = ArcPolyline::new(v).ok()?;
        (arc.start().dist(&arc.end()) > 1e-3).then_some(arc)
    })
}

/// Brute-force δ against a dense sample of the boundary.
fn brute_delta(boundary: &[Point], p: &Point) -> f64 {
    boundary.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min)
}

fn circle(center: Point, r: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            Point::new2(center.x() + r * t.cos(), center.y() + r * t.sin())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn halfspace_distance_is_symmetric(x in upper_point(), y in upper_point()) {
        prop_assert_eq!(halfspace_qh_distance(&x, &y).unwrap(), halfspace_qh_distance(&y, &x).unwrap());
    }

    #[test]
    fn halfspace_distance_triangle(x in upper_point(), y in upper_point(), z in upper_point()) {
        let k = |a: &Point, b: &Point| halfspace_qh_distance(a, b).unwrap();
        prop_assert!(k(&x, &z) <= k(&x, &y) + k(&y, &z) + 1e-9);
    }

    #[test]
    fn boundary_distance_matches_dense_sample(p in disk_point(0.99)) {
        let n = 4000;
        let spacing = std::f64::consts::TAU / n as f64;
        let mut boundary = circle(Point::new2(0.0, 0.0), 1.0, n);
        let ball = Domain::unit_disk();
        prop_assert!((ball.boundary_distance(&p).unwrap() - brute_delta(&boundary, &p)).abs() <= 2.0 * spacing);

        let puncture = Point::new2(0.3, -0.2);
        prop_assume!(p.dist(&puncture) > 1e-6);
        let pb = Domain::punctured_ball(Point::new2(0.0, 0.0), 1.0, puncture).unwrap();
        boundary.push(puncture);
        prop_assert!((pb.boundary_distance(&p).unwrap() - brute_delta(&boundary, &p)).abs() <= 2.0 * spacing);

        let slit = Domain::unit_slit_disk();
        boundary.pop();
        boundary.extend((0..=2000).map(|k| Point::new2(k as f64 / 2000.0, 0.0)));
        let want = brute_delta(&boundary, &p);
        prop_assume!(want > 1e-9);
        prop_assert!((slit.boundary_distance(&p).unwrap() - want).abs() <= 2.0 * spacing);
    }

    #[test]
    fn length_dominates_growth_bound(arc in polyline(disk_point(0.9))) {
        let d = Domain::unit_disk();
        let q = qh_polyline_length(&d, &arc, 1e-8).unwrap();
        let dmin = d.boundary_distance(&arc.start()).unwrap().min(d.boundary_distance(&arc.end()).unwrap());
        let g = growth_lower_bound(arc.length(), dmin).unwrap();
        prop_assert!(q.value + q.est_error >= g * (1.0 - 1e-12), "{} < {}", q.value, g);
    }

    #[test]
    fn coarse_length_below_length_and_monotone(arc in polyline(upper_point()), h1 in 0.0..2.0f64, dh in 0.0..2.0f64) {
        let d = half_plane();
        let oracle = HalfSpaceOracle::for_domain(&d).unwrap();
        let q = qh_polyline_length(&d, &arc, 1e-8).unwrap();
        let c1 = coarse_qh_length(&d, &arc, h1, &oracle, 40).unwrap();
        let c2 = coarse_qh_length(&d, &arc, h1 + dh, &oracle, 40).unwrap();
        prop_assert!(c1.value <= q.value + q.est_error + 1e-9 * q.value);
        prop_assert!(c2.value <= c1.value);
    }

    #[test]
    fn cigar_length_at_least_diameter(arc in polyline(upper_point())) {
        let len = cigar_constant(&arc, Mode::Length).unwrap();
        let diam = cigar_constant(&arc, Mode::Diameter).unwrap();
        prop_assert!(len >= diam);
        prop_assert!(diam >= 1.0 - 1e-12);
    }

    #[test]
    fn chain_gap_contract(arc in polyline(upper_point()), frac in 0.02..1.0f64) {
        let step = frac * arc.length();
        let pts = chain_points(&arc, step).unwrap();
        let n = pts.len() - 1;
        prop_assert!(n >= 1);
        prop_assert!(n as f64 <= (arc.length() / step).ceil() + 1.0);
        let gaps: Vec<f64> = pts.windows(2).map(|w| w[0].dist(&w[1])).collect();
        for g in &gaps[..n - 1] {
            prop_assert!((g - step).abs() <= 1e-9 * step, "gap {} vs step {}", g, step);
        }
        prop_assert!(gaps[n - 1] <= step * (1.0 + 1e-9));
        prop_assert_eq!(pts[0], arc.start());
        prop_assert_eq!(pts[n], arc.end());
    }

    #[test]
    fn weak_qs_grows_with_samples(a in 0.0..0.9f64, n in 1usize..400, extra in 0usize..400, seed in any::<u64>()) {
        let map = MapSpec::new(MapKind::MoebiusDiskAutomorphism([a, 0.0]), Domain::unit_disk(), Domain::unit_disk()).unwrap();
        let small = weak_qs_estimate(&map, &map.domain, n, seed).unwrap().estimate.value;
        let large = weak_qs_estimate(&map, &map.domain, n + extra, seed).unwrap().estimate.value;
        prop_assert!(small <= large);
    }

    #[test]
    fn similarity_envelope_below_identity(s in 0.1..10.0f64, seed in any::<u64>()) {
        let codomain = Domain::ball(Point::new2(0.0, 0.0), s).unwrap();
        let map = MapSpec::new(MapKind::Scaling(s), Domain::unit_disk(), codomain).unwrap();
        for (t, eta) in eta_envelope(&map, &map.domain, 300, 8, 1.0, seed).unwrap() {
            prop_assert!(eta <= t + 1e-9, "eta({}) = {}", t, eta);
        }
    }

    #[test]
    fn moebius_inverse_round_trips(a in disk_point(0.9), p in disk_point(0.95)) {
        let f = MapKind::MoebiusDiskAutomorphism([a.x(), a.y()]);
        let g = f.inverse().unwrap();
        let back = g.apply(&f.apply(&p).unwrap()).unwrap();
        prop_assert!(back.dist(&p) <= 1e-9);
        prop_assert!(f.apply(&p).unwrap().norm() < 1.0);
    }

    #[test]
    fn rounding_is_idempotent(v in any::<f64>()) {
        if let Some(r) = round12(v) {
            prop_assert_eq!(round12(r), Some(r));
            prop_assert!((r - v).abs() <= 1e-11 * v.abs());
        } else {
            prop_assert!(!v.is_finite());
        }
    }
}

#[test]
fn identity_is_weakly_quasisymmetric_with_one() {
    let map = MapSpec::new(MapKind::Identity, Domain::unit_disk(), Domain::unit_disk()).unwrap();
    assert_eq!(weak_qs_estimate(&map, &map.domain, 2000, 3).unwrap().estimate.value, 1.0);
}
