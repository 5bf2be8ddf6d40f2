//! Cone, cigar, uniformity and solidity estimators, plus the explicit
//! constants of the distortion bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{QhError, Result};
use crate::estimate::ConstantEstimate;
use crate::geom::{ArcPolyline, Point};
use crate::paths::{qh_shortest_arc, PathGraph};
use crate::qh::{coarse_table, validate_matrix, QhDistance};

/// Minimum number of evaluation points along an arc.
pub const CONDITION_POINTS: usize = 129;

/// Whether arc size is measured by length or by diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Length,
    Diameter,
}

/// How the arc is split around the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    /// `min(size(γ[x,z]), size(γ[z,y]))` at every z.
    Endpoints,
    /// Size of the piece between z and the nearer endpoint, where "nearer"
    /// is decided by the side of the point of largest δ.
    MaxDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeCigarEstimate {
    pub cone: f64,
    pub cigar: f64,
    pub mode: Mode,
    pub split: Split,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidityEstimate {
    pub nu_hat: f64,
    pub h: f64,
    pub pairs_checked: usize,
}

/// Outcome for one pair in [`uniformity_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityEstimate {
    pub estimate: ConstantEstimate,
    pub per_pair: Vec<PairBound>,
}

struct Samples {
    s: Vec<f64>,
    p: Vec<Point>,
    delta: Vec<f64>,
}

fn sample_arc(domain: &Domain, arc: &ArcPolyline) -> Result<Samples> {
    let pts = arc.discretize(arc.len().max(CONDITION_POINTS));
    let mut delta = Vec::with_capacity(pts.len());
    for (_, p) in &pts {
        let d = domain.boundary_distance(p)?;
        if d <= 0.0 {
            return Err(QhError::ArcExitsDomain { location: p.to_string() });
        }
        delta.push(d);
    }
    let (s, p) = pts.into_iter().unzip();
    Ok(Samples { s, p, delta })
}

/// `prefix[i]` is the diameter of `p[0..=i]`.
fn prefix_diameters(p: &[Point]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    let mut d: f64 = 0.0;
    for i in 0..p.len() {
        for j in 0..i {
            d = d.max(p[i].dist(&p[j]));
        }
        out.push(d);
    }
    out
}

/// Empirical cone constant of `arc`: the sup over evaluation points `z` of
/// the size of the shorter piece of the arc, divided by `δ(z)`.
///
/// The sup is taken over `max(vertices, 129)` points (vertices included), so
/// the result is a lower estimate.
pub fn cone_constant(domain: &Domain, arc: &ArcPolyline, mode: Mode, split: Split) -> Result<f64> {
    let smp = sample_arc(domain, arc)?;
    let n = smp.p.len();
    if n < 2 {
        return Ok(0.0);
    }
    let total = arc.length();
    let (head, tail): (Vec<f64>, Vec<f64>) = match mode {
        Mode::Length => (smp.s.clone(), smp.s.iter().map(|s| (total - s).max(0.0)).collect()),
        Mode::Diameter => {
            let head = prefix_diameters(&smp.p);
            let rev: Vec<Point> = smp.p.iter().rev().copied().collect();
            let mut tail = prefix_diameters(&rev);
            tail.reverse();
            (head, tail)
        }
    };
    let pivot = match split {
        Split::Endpoints => None,
        Split::MaxDelta => {
            let mut best = 0;
            for i in 1..n {
                if smp.delta[i] > smp.delta[best] {
                    best = i;
                }
            }
            Some(best)
        }
    };
    let mut sup: f64 = 0.0;
    for i in 0..n {
        let piece = match pivot {
            None => head[i].min(tail[i]),
            Some(k) if i <= k => head[i],
            Some(_) => tail[i],
        };
        sup = sup.max(piece / smp.delta[i]);
    }
    Ok(sup)
}

/// Arc size over endpoint distance.
pub fn cigar_constant(arc: &ArcPolyline, mode: Mode) -> Result<f64> {
    let d = arc.start().dist(&arc.end());
    if d == 0.0 {
        return Err(QhError::UndefinedRatio(format!(
            "arc endpoints coincide at {}",
            arc.start()
        )));
    }
    let size = match mode {
        Mode::Length => arc.length(),
        Mode::Diameter => arc.diameter(),
    };
    Ok(size / d)
}

pub fn cone_cigar(domain: &Domain, arc: &ArcPolyline, mode: Mode, split: Split) -> Result<ConeCigarEstimate> {
    Ok(ConeCigarEstimate {
        cone: cone_constant(domain, arc, mode, split)?,
        cigar: cigar_constant(arc, mode)?,
        mode,
        split,
        samples: arc.len().max(CONDITION_POINTS),
    })
}

/// Quadratic Bézier from `x` to `y` whose control point is pushed off the
/// chord midpoint by `bulge · |x − y|` along `normal`.
fn bezier(x: &Point, y: &Point, normal: &Point, bulge: f64, segments: usize) -> ArcPolyline {
    let c = x.midpoint(y) + *normal * (bulge * x.dist(y));
    let v = (0..=segments)
        .map(|i| {
            let t = i as f64 / segments as f64;
            *x * ((1.0 - t) * (1.0 - t)) + c * (2.0 * t * (1.0 - t)) + *y * (t * t)
        })
        .collect();
    ArcPolyline::from_vertices_unchecked(v)
}

fn arc_inside(domain: &Domain, arc: &ArcPolyline) -> bool {
    arc.segments().all(|(a, b)| domain.segment_inside(&a, &b))
}

fn pair_uniformity(domain: &Domain, graph: &PathGraph, x: &Point, y: &Point) -> Result<f64> {
    if x == y {
        return Err(QhError::UndefinedRatio(format!("pair endpoints coincide at {x}")));
    }
    let score = |arc: &ArcPolyline| -> Result<f64> {
        let cone = cone_constant(domain, arc, Mode::Length, Split::Endpoints)?;
        Ok(cone.max(cigar_constant(arc, Mode::Length)?))
    };
    let mut candidates = vec![qh_shortest_arc(domain, graph, x, y)?.arc];
    let chord = *y - *x;
    for normal in chord.orthonormal_complement() {
        for bulge in [0.0, 0.125, -0.125, 0.25, -0.25, 0.5, -0.5] {
            let arc = bezier(x, y, &normal, bulge, 32);
            if arc_inside(domain, &arc) {
                candidates.push(arc);
            }
        }
    }
    let mut best = f64::INFINITY;
    for arc in &candidates {
        best = best.min(score(arc)?);
    }
    Ok(best)
}

/// Empirical uniformity constant over `pairs`.
///
/// Each pair is scored by the best of several candidate arcs (the
/// approximate quasihyperbolic shortest arc, the chord and a few quadratic
/// bulges), measuring `max(cone, cigar)` in length mode. The per-pair value
/// is an upper estimate for that pair; the max over pairs is a lower
/// estimate of the domain's constant. Pairs that fail are recorded and
/// excluded.
pub fn uniformity_estimate(
    domain: &Domain,
    pairs: &[(Point, Point)],
    resolution: f64,
    seed: u64,
) -> Result<UniformityEstimate> {
    let graph = PathGraph::build(domain, resolution, seed)?;
    uniformity_estimate_on(domain, &graph, pairs)
}

/// [`uniformity_estimate`] against a prebuilt graph.
pub fn uniformity_estimate_on(
    domain: &Domain,
    graph: &PathGraph,
    pairs: &[(Point, Point)],
) -> Result<UniformityEstimate> {
    let per_pair: Vec<PairBound> = pairs
        .par_iter()
        .map(|(x, y)| match pair_uniformity(domain, graph, x, y) {
            Ok(v) => PairBound { value: Some(v), error: None },
            Err(e) => PairBound { value: None, error: Some(e.to_string()) },
        })
        .collect();
    let ok: Vec<f64> = per_pair.iter().filter_map(|p| p.value).collect();
    let value = ok.iter().copied().fold(0.0, f64::max);
    Ok(UniformityEstimate { estimate: ConstantEstimate::sup(value, ok.len(), graph.seed()), per_pair })
}

/// Empirical solidity constant: the largest ratio of h-coarse length of a
/// sub-arc to the distance between its endpoints, over pairs of `points`
/// evenly spaced evaluation points.
pub fn solidity_estimate<K: QhDistance + ?Sized>(
    domain: &Domain,
    arc: &ArcPolyline,
    h: f64,
    k_eval: &K,
    points: usize,
) -> Result<SolidityEstimate> {
    if !(h >= 0.0) {
        return Err(QhError::invalid(format!("coarseness {h} must be nonnegative")));
    }
    if arc.len() == 1 || arc.length() == 0.0 {
        return Ok(SolidityEstimate { nu_hat: 0.0, h, pairs_checked: 0 });
    }
    let pts = arc.resample_uniform(points.max(2));
    for p in &pts {
        if domain.boundary_distance(p)? <= 0.0 {
            return Err(QhError::ArcExitsDomain { location: p.to_string() });
        }
    }
    let k = k_eval.pairwise(&pts)?;
    validate_matrix(&k)?;
    let table = coarse_table(&k, h);
    let m = pts.len();
    let mut nu: f64 = 0.0;
    let mut checked = 0;
    for a in 0..m {
        for b in a + 1..m {
            let num = table[a][b];
            if num <= 0.0 {
                continue;
            }
            checked += 1;
            if k[a][b] <= 0.0 {
                return Err(QhError::Internal(format!("zero distance between distinct samples {a}, {b}")));
            }
            nu = nu.max(num / k[a][b]);
        }
    }
    Ok(SolidityEstimate { nu_hat: nu, h, pairs_checked: checked })
}

/// Diameter bound for solid arcs between nearby points:
/// `max(6c(e^{2ν} − 1)·dist, 2r(e^h − 1))`.
pub fn mu1_bound(c: f64, nu: f64, h: f64, r: f64, dist: f64) -> f64 {
    (6.0 * c * (2.0 * nu).exp_m1() * dist).max(2.0 * r * h.exp_m1())
}

/// Upper bound `4b² log(1 + dist/δ_min)` on k in a b-uniform domain.
pub fn uniform_k_bound(b: f64, dist: f64, delta_min: f64) -> Result<f64> {
    if !(delta_min > 0.0) {
        return Err(QhError::invalid(format!("delta_min {delta_min} must be positive")));
    }
    Ok(4.0 * b * b * (dist / delta_min).ln_1p())
}

fn check_at_least(name: &str, v: f64, lo: f64) -> Result<()> {
    if !(v >= lo) || !v.is_finite() {
        return Err(QhError::invalid(format!("{name} = {v} must be a finite value ≥ {lo}")));
    }
    Ok(())
}

/// Natural log of `¾[1 + 2(1 + 6c)(e^{h + 4b²ν log(1 + 4μ₂)} − 1)]`.
pub fn mu3_ln(c: f64, b: f64, nu: f64, h: f64, mu2: f64) -> Result<f64> {
    check_at_least("c", c, 1.0)?;
    check_at_least("b", b, 1.0)?;
    check_at_least("nu", nu, 1.0)?;
    check_at_least("h", h, 0.0)?;
    check_at_least("mu2", mu2, 0.0)?;
    let exponent = h + 4.0 * b * b * nu * (4.0 * mu2).ln_1p();
    let coef = 2.0 * (1.0 + 6.0 * c);
    if exponent < 700.0 {
        return Ok((0.75 * (1.0 + coef * exponent.exp_m1())).ln());
    }
    // 1 + coef(e^E − 1) = coef·e^E·(1 + (1 − coef)e^{−E}/coef)
    Ok(0.75f64.ln() + coef.ln() + exponent + ((1.0 - coef) * (-exponent).exp() / coef).ln_1p())
}

/// The constant `μ₃` of the short-arc diameter estimate. Fails with
/// [`QhError::Overflow`] when the value is not representable.
pub fn mu3_constant(c: f64, b: f64, nu: f64, h: f64, mu2: f64) -> Result<f64> {
    let ln = mu3_ln(c, b, nu, h, mu2)?;
    exp_checked(ln)
}

pub(crate) fn exp_checked(ln_value: f64) -> Result<f64> {
    if ln_value >= f64::MAX.ln() {
        return Err(QhError::Overflow { ln_value });
    }
    Ok(ln_value.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Aabb;
    use crate::qh::HalfSpaceOracle;
    use std::f64::consts::{E, SQRT_2};

    fn half_plane() -> Domain {
        Domain::upper_half_plane(Aabb::new(Point::new2(-5.0, 0.0), Point::new2(5.0, 10.0)).unwrap())
            .unwrap()
    }

    fn seg(a: (f64, f64), b: (f64, f64)) -> ArcPolyline {
        ArcPolyline::segment(Point::new2(a.0, a.1), Point::new2(b.0, b.1))
    }

    #[test]
    fn cone_of_ball_chord() {
        let d = Domain::unit_disk();
        let c = cone_constant(&d, &seg((-0.5, 0.0), (0.5, 0.0)), Mode::Length, Split::Endpoints).unwrap();
        // grid oracle: max over s of (0.5 − |s|)/(1 − |s|)
        let oracle = (0..=10_000)
            .map(|i| {
                let s = -0.5 + i as f64 / 10_000.0;
                (0.5 - s.abs()) / (1.0 - s.abs())
            })
            .fold(0.0, f64::max);
        assert!((c - oracle).abs() < 1e-12, "{c} vs {oracle}");
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cone_of_half_plane_segment() {
        let c = cone_constant(&half_plane(), &seg((0.0, 1.0), (1.0, 1.0)), Mode::Length, Split::Endpoints)
            .unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cone_of_point_is_zero() {
        let arc = ArcPolyline::single(Point::new2(0.1, 0.2));
        assert_eq!(cone_constant(&Domain::unit_disk(), &arc, Mode::Diameter, Split::MaxDelta).unwrap(), 0.0);
    }

    #[test]
    fn cone_rejects_exits() {
        let r = cone_constant(&half_plane(), &seg((0.0, 1.0), (0.0, -1.0)), Mode::Length, Split::Endpoints);
        assert!(matches!(r, Err(QhError::ArcExitsDomain { .. })));
    }

    #[test]
    fn max_delta_split_on_ball_chord() {
        // δ peaks at the center, so both halves are measured from their own
        // endpoint: the same as the endpoint split for a symmetric chord
        let d = Domain::unit_disk();
        let arc = seg((-0.5, 0.0), (0.5, 0.0));
        let a = cone_constant(&d, &arc, Mode::Diameter, Split::MaxDelta).unwrap();
        let b = cone_constant(&d, &arc, Mode::Diameter, Split::Endpoints).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cigar_examples() {
        assert_eq!(cigar_constant(&seg((0.0, 0.0), (2.0, 1.0)), Mode::Length).unwrap(), 1.0);
        let bend = ArcPolyline::new(vec![Point::new2(0.0, 0.0), Point::new2(1.0, 0.0), Point::new2(1.0, 1.0)])
            .unwrap();
        assert!((cigar_constant(&bend, Mode::Length).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((cigar_constant(&bend, Mode::Diameter).unwrap() - 1.0).abs() < 1e-15);
        let closed = ArcPolyline::new(vec![Point::new2(0.0, 0.0), Point::new2(1.0, 0.0), Point::new2(0.0, 0.0)])
            .unwrap();
        assert!(matches!(cigar_constant(&closed, Mode::Length), Err(QhError::UndefinedRatio(_))));
    }

    #[test]
    fn uniformity_on_ball() {
        let d = Domain::unit_disk();
        let pts = d.sample_interior(20, 3, 0.05).unwrap();
        let pairs: Vec<_> = pts.chunks(2).map(|c| (c[0], c[1])).collect();
        let u = uniformity_estimate(&d, &pairs, 0.05, 0).unwrap();
        assert!(u.per_pair.iter().all(|p| p.value.is_some()));
        assert!(u.estimate.value >= 1.0 && u.estimate.value <= 3.0, "{}", u.estimate.value);
    }

    #[test]
    fn uniformity_records_degenerate_pair() {
        let d = Domain::unit_disk();
        let p = Point::new2(0.1, 0.1);
        let u = uniformity_estimate(&d, &[(p, p), (p, Point::new2(0.3, 0.0))], 0.1, 0).unwrap();
        assert!(u.per_pair[0].error.is_some());
        assert!(u.per_pair[1].value.is_some());
        assert_eq!(u.estimate.samples, 1);
    }

    #[test]
    fn solidity_of_vertical_geodesic() {
        let d = half_plane();
        let oracle = HalfSpaceOracle::for_domain(&d).unwrap();
        let arc = seg((0.0, 1.0), (0.0, E * E));
        for h in [0.0, 0.3, 1.0] {
            let s = solidity_estimate(&d, &arc, h, &oracle, 64).unwrap();
            assert!(s.nu_hat <= 1.0 + 1e-3, "h={h}: {}", s.nu_hat);
        }
    }

    #[test]
    fn solidity_of_short_arc_is_zero() {
        let d = half_plane();
        let oracle = HalfSpaceOracle::for_domain(&d).unwrap();
        let s = solidity_estimate(&d, &seg((0.0, 1.0), (0.0, 1.5)), 1.0, &oracle, 32).unwrap();
        assert_eq!(s.nu_hat, 0.0);
        assert_eq!(s.pairs_checked, 0);
    }

    #[test]
    fn mu1_examples() {
        assert!((mu1_bound(1.0, 1.0, 0.0, 3.0, 1.0) - 6.0 * (E * E - 1.0)).abs() < 1e-12);
        assert!((mu1_bound(1.0, 1.0, 0.0, 3.0, 1.0) - 38.33434).abs() < 1e-5);
        assert_eq!(mu1_bound(1.0, 1.0, 0.0, 3.0, 0.0), 0.0);
        assert!((mu1_bound(1.0, 2.0, 1.0, 1.0, 0.0) - 2.0 * (E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_k_examples() {
        assert_eq!(uniform_k_bound(1.0, 0.0, 0.3).unwrap(), 0.0);
        assert!((uniform_k_bound(1.0, 0.3, 0.3).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-14);
        assert!((uniform_k_bound(2.0, 0.9, 0.3).unwrap() - 16.0 * 4f64.ln()).abs() < 1e-12);
        assert!(uniform_k_bound(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mu3_examples() {
        assert!((mu3_constant(1.0, 1.0, 1.0, 0.0, 1.0).unwrap() - 6552.75).abs() < 1e-9);
        assert_eq!(mu3_constant(1.0, 1.0, 1.0, 0.0, 0.0).unwrap(), 0.75);
        // e·5^16 is exact in f64 up to one rounding of e
        let want = 0.75 * (1.0 + 14.0 * (E * 5f64.powi(16) - 1.0));
        let got = mu3_constant(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!(((got - want) / want).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn mu3_overflow_is_signalled() {
        match mu3_constant(1.0, 10.0, 10.0, 0.0, 100.0) {
            Err(QhError::Overflow { ln_value }) => {
                let expected = 0.75f64.ln() + 14f64.ln() + 4000.0 * 401f64.ln();
                assert!((ln_value - expected).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        // the log form stays finite
        assert!(mu3_ln(1.0, 10.0, 10.0, 0.0, 100.0).unwrap().is_finite());
    }

    #[test]
    fn mu3_rejects_out_of_range() {
        assert!(mu3_constant(0.5, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(mu3_constant(1.0, 1.0, 1.0, -1.0, 0.0).is_err());
    }
}
