//! Map catalog and estimators of quasisymmetry and quasihyperbolic
//! distortion constants.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::conditions::exp_checked;
use crate::domain::{Domain, DomainSpec};
use crate::error::{QhError, Result};
use crate::estimate::ConstantEstimate;
use crate::geom::{point_segment_distance, ArcPolyline, Point};
use crate::paths::{qh_shortest_arc, PathGraph};

/// Resampling attempts for `b` before a triple is reordered instead.
const RESAMPLE_ATTEMPTS: usize = 32;
const DRAW_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Identity,
    /// Row-major square matrix.
    Linear(Vec<Vec<f64>>),
    /// `z ↦ (z − a)/(1 − ā z)` on the unit disk.
    MoebiusDiskAutomorphism([f64; 2]),
    Translation(Point),
    /// Dilation about the origin.
    Scaling(f64),
    /// `x ↦ |x|^{α−1} x`.
    PowerRadial(f64),
    /// Applied first to last.
    Composition(Vec<MapKind>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KindJson {
    kind: String,
    #[serde(default)]
    params: Value,
}

fn param<T: for<'de> Deserialize<'de>>(params: &Value, key: &str, kind: &str) -> Result<T> {
    let v = params
        .get(key)
        .ok_or_else(|| QhError::Config(format!("{kind}: missing parameter `{key}`")))?;
    serde_json::from_value(v.clone())
        .map_err(|e| QhError::Config(format!("{kind}: bad parameter `{key}`: {e}")))
}

impl MapKind {
    fn from_json(k: &KindJson) -> Result<Self> {
        let p = &k.params;
        let kind = match k.kind.as_str() {
            "identity" => MapKind::Identity,
            "linear" => MapKind::Linear(param(p, "matrix", &k.kind)?),
            "moebius_disk_automorphism" => MapKind::MoebiusDiskAutomorphism(param(p, "a", &k.kind)?),
            "translation" => MapKind::Translation(param(p, "vector", &k.kind)?),
            "scaling" => MapKind::Scaling(param(p, "factor", &k.kind)?),
            "power_radial" => MapKind::PowerRadial(param(p, "exponent", &k.kind)?),
            "composition" => {
                let parts: Vec<KindJson> = param(p, "maps", &k.kind)?;
                MapKind::Composition(parts.iter().map(MapKind::from_json).collect::<Result<_>>()?)
            }
            other => return Err(QhError::Config(format!("unknown map kind `{other}`"))),
        };
        kind.validate().map_err(|e| QhError::Config(e.to_string()))?;
        Ok(kind)
    }

    fn to_json(&self) -> KindJson {
        let (kind, params) = match self {
            MapKind::Identity => ("identity", json!({})),
            MapKind::Linear(m) => ("linear", json!({ "matrix": m })),
            MapKind::MoebiusDiskAutomorphism(a) => ("moebius_disk_automorphism", json!({ "a": a })),
            MapKind::Translation(v) => ("translation", json!({ "vector": v })),
            MapKind::Scaling(f) => ("scaling", json!({ "factor": f })),
            MapKind::PowerRadial(a) => ("power_radial", json!({ "exponent": a })),
            MapKind::Composition(parts) => {
                ("composition", json!({ "maps": parts.iter().map(MapKind::to_json).collect::<Vec<_>>() }))
            }
        };
        KindJson { kind: kind.to_string(), params }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MapKind::Identity => Ok(()),
            MapKind::Linear(m) => {
                let n = m.len();
                if !(n == 2 || n == 3) || m.iter().any(|r| r.len() != n) {
                    return Err(QhError::invalid("linear map needs a 2×2 or 3×3 matrix"));
                }
                if m.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(QhError::invalid("linear map has non-finite entries"));
                }
                Ok(())
            }
            MapKind::MoebiusDiskAutomorphism(a) => {
                if !(a[0].hypot(a[1]) < 1.0) {
                    return Err(QhError::invalid(format!("Moebius parameter {a:?} must satisfy |a| < 1")));
                }
                Ok(())
            }
            MapKind::Translation(v) => v.check_finite(),
            MapKind::Scaling(f) => {
                if !(f.is_finite() && *f != 0.0) {
                    return Err(QhError::invalid(format!("scaling factor {f} must be finite and nonzero")));
                }
                Ok(())
            }
            MapKind::PowerRadial(a) => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(QhError::invalid(format!("radial exponent {a} must be positive")));
                }
                Ok(())
            }
            MapKind::Composition(parts) => parts.iter().try_for_each(MapKind::validate),
        }
    }

    /// Image of `p`. Does not check domain membership.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        match self {
            MapKind::Identity => Ok(*p),
            MapKind::Linear(m) => {
                if m.len() != p.dim() {
                    return Err(QhError::invalid(format!("{}×{} matrix applied to {p}", m.len(), m.len())));
                }
                let mut out = Point::zero(p.dim());
                for (i, row) in m.iter().enumerate() {
                    out = out.with(i, row.iter().zip(p.coords()).map(|(a, b)| a * b).sum());
                }
                Ok(out)
            }
            MapKind::MoebiusDiskAutomorphism(a) => {
                if p.dim() != 2 {
                    return Err(QhError::invalid("Moebius maps act on the plane"));
                }
                let z = Complex64::new(p.x(), p.y());
                let a = Complex64::new(a[0], a[1]);
                let w = (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z);
                Ok(Point::new2(w.re, w.im))
            }
            MapKind::Translation(v) => {
                if v.dim() != p.dim() {
                    return Err(QhError::invalid(format!("translation by {v} applied to {p}")));
                }
                Ok(*p + *v)
            }
            MapKind::Scaling(f) => Ok(*p * *f),
            MapKind::PowerRadial(alpha) => {
                let r = p.norm();
                if r == 0.0 {
                    return Ok(*p);
                }
                Ok(*p * r.powf(alpha - 1.0))
            }
            MapKind::Composition(parts) => parts.iter().try_fold(*p, |q, m| m.apply(&q)),
        }
    }

    /// The inverse map, when it exists in the catalog.
    pub fn inverse(&self) -> Option<MapKind> {
        Some(match self {
            MapKind::Identity => MapKind::Identity,
            MapKind::Linear(m) => MapKind::Linear(invert(m)?),
            MapKind::MoebiusDiskAutomorphism(a) => MapKind::MoebiusDiskAutomorphism([-a[0], -a[1]]),
            MapKind::Translation(v) => MapKind::Translation(*v * -1.0),
            MapKind::Scaling(f) => MapKind::Scaling(1.0 / f),
            MapKind::PowerRadial(a) => MapKind::PowerRadial(1.0 / a),
            MapKind::Composition(parts) => {
                MapKind::Composition(parts.iter().rev().map(MapKind::inverse).collect::<Option<_>>()?)
            }
        })
    }
}

fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let det = match n {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => return None,
    };
    if !(det.abs() > 1e-14 * scale.powi(n as i32)) {
        return None;
    }
    Some(match n {
        2 => vec![vec![m[1][1] / det, -m[0][1] / det], vec![-m[1][0] / det, m[0][0] / det]],
        _ => {
            let mut inv = vec![vec![0.0; 3]; 3];
            for (i, row) in inv.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    // cofactor of (j, i)
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
                }
            }
            inv
        }
    })
}

/// A homeomorphism between two catalog domains.
#[derive(Debug, Clone)]
pub struct MapSpec {
    pub kind: MapKind,
    pub domain: Domain,
    pub codomain: Domain,
}

#[derive(Serialize, Deserialize)]
struct MapSpecJson {
    kind: String,
    #[serde(default)]
    params: Value,
    domain: DomainSpec,
    codomain: DomainSpec,
}

impl Serialize for MapSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let k = self.kind.to_json();
        MapSpecJson { kind: k.kind, params: k.params, domain: self.domain.to_spec(), codomain: self.codomain.to_spec() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MapSpecJson::deserialize(d)?;
        MapSpec::from_json_parts(&j).map_err(serde::de::Error::custom)
    }
}

impl MapSpec {
    pub fn new(kind: MapKind, domain: Domain, codomain: Domain) -> Result<Self> {
        kind.validate()?;
        Ok(MapSpec { kind, domain, codomain })
    }

    fn from_json_parts(j: &MapSpecJson) -> Result<Self> {
        let kind = MapKind::from_json(&KindJson { kind: j.kind.clone(), params: j.params.clone() })?;
        Ok(MapSpec { kind, domain: j.domain.build()?, codomain: j.codomain.build()? })
    }

    /// Image of an interior point of the declared domain.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        if self.domain.boundary_distance(p)? <= 0.0 {
            return Err(QhError::invalid(format!("{p} is outside the map's domain")));
        }
        self.kind.apply(p)
    }

    /// The inverse map from the codomain back to the domain.
    pub fn inverse(&self) -> Option<MapSpec> {
        Some(MapSpec { kind: self.kind.inverse()?, domain: self.codomain.clone(), codomain: self.domain.clone() })
    }
}

/// Pointwise image of `arc`, optionally after inserting segment midpoints.
pub fn map_arc(map: &MapSpec, arc: &ArcPolyline, densify: bool) -> Result<ArcPolyline> {
    let src = if densify { arc.densified() } else { arc.clone() };
    let v = src.vertices().iter().map(|p| map.apply(p)).collect::<Result<Vec<_>>>()?;
    ArcPolyline::new(v)
}

fn draw_interior<R: Rng>(domain: &Domain, rng: &mut R) -> Result<Point> {
    for _ in 0..DRAW_BUDGET {
        let p = domain.random_window_point(rng);
        if domain.boundary_distance(&p)? >= domain.delta_floor() {
            return Ok(p);
        }
    }
    Err(QhError::SamplingExhausted { accepted: 0, trials: DRAW_BUDGET })
}

/// Sup of the image distance ratio over sampled triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakQsEstimate {
    pub estimate: ConstantEstimate,
    /// Triples whose image denominator vanished.
    pub skipped: usize,
}

/// Triple `(x, a, b)` with `|x − a| ≤ |x − b|`. `b` is redrawn a bounded
/// number of times; if none is far enough, `a` and the last `b` swap roles.
fn ordered_triple<R: Rng>(domain: &Domain, rng: &mut R) -> Result<(Point, Point, Point)> {
    let x = draw_interior(domain, rng)?;
    let mut a = draw_interior(domain, rng)?;
    let mut b = draw_interior(domain, rng)?;
    let mut tries = 1;
    while x.dist(&a) > x.dist(&b) {
        if tries == RESAMPLE_ATTEMPTS {
            std::mem::swap(&mut a, &mut b);
            break;
        }
        b = draw_interior(domain, rng)?;
        tries += 1;
    }
    Ok((x, a, b))
}

/// Weak quasisymmetry constant: sup of `|f(x) − f(a)| / |f(x) − f(b)|` over
/// sampled triples with `|x − a| ≤ |x − b|`. Never below 1.
///
/// Triples come from one seeded stream, so the estimate over `n` triples is
/// the running max of the estimate over any prefix.
pub fn weak_qs_estimate(map: &MapSpec, domain: &Domain, n_triples: usize, seed: u64) -> Result<WeakQsEstimate> {
    if n_triples == 0 {
        return Err(QhError::invalid("need at least one triple"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // the admissible triple (x, b, b) has ratio 1 for any injective map
    let mut sup: f64 = 1.0;
    let mut skipped = 0;
    for _ in 0..n_triples {
        let (x, a, b) = ordered_triple(domain, &mut rng)?;
        let (fx, fa, fb) = (map.apply(&x)?, map.apply(&a)?, map.apply(&b)?);
        let den = fx.dist(&fb);
        if den == 0.0 {
            skipped += 1;
            continue;
        }
        sup = sup.max(fx.dist(&fa) / den);
    }
    if skipped == n_triples {
        sup = 0.0;
    }
    Ok(WeakQsEstimate { estimate: ConstantEstimate::sup(sup, n_triples - skipped, seed), skipped })
}

/// Nondecreasing envelope of the image ratio against `t = |x − a|/|x − b|`.
///
/// Returns `(t_k, η̂(t_k))` at the right edges of `bins` equal bins over
/// `(0, t_max]`; `η̂(t_k)` is the largest image ratio seen with `t ≤ t_k`.
pub fn eta_envelope(
    map: &MapSpec,
    domain: &Domain,
    n_triples: usize,
    bins: usize,
    t_max: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if bins == 0 || !(t_max > 0.0) {
        return Err(QhError::invalid("need bins ≥ 1 and t_max > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = vec![0.0f64; bins];
    for _ in 0..n_triples {
        let x = draw_interior(domain, &mut rng)?;
        let a = draw_interior(domain, &mut rng)?;
        let b = draw_interior(domain, &mut rng)?;
        let db = x.dist(&b);
        if db == 0.0 {
            continue;
        }
        let t = x.dist(&a) / db;
        if t == 0.0 || t > t_max {
            continue;
        }
        let (fx, fa, fb) = (map.apply(&x)?, map.apply(&a)?, map.apply(&b)?);
        let den = fx.dist(&fb);
        if den == 0.0 {
            continue;
        }
        let k = ((t / t_max * bins as f64).ceil() as usize).clamp(1, bins) - 1;
        sup[k] = sup[k].max(fx.dist(&fa) / den);
    }
    let mut running: f64 = 0.0;
    Ok(sup
        .iter()
        .enumerate()
        .map(|(k, s)| {
            running = running.max(*s);
            (t_max * (k + 1) as f64 / bins as f64, running)
        })
        .collect())
}

/// Two-sided distance brackets for one pair and its image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqhPair {
    pub source_upper: f64,
    pub source_lower: f64,
    pub image_upper: f64,
    pub image_lower: f64,
}

impl CqhPair {
    pub fn exact(source: f64, image: f64) -> Self {
        CqhPair { source_upper: source, source_lower: source, image_upper: image, image_lower: image }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqhFit {
    pub m: f64,
    pub c: f64,
}

/// Smallest `M ≥ 1` with `k′ ≤ M k + C` and `k ≤ M k′ + C` on all pairs,
/// where each inequality pairs the larger side's upper bound with the other
/// side's lower bound. Infinite if some pair cannot be fitted.
fn fit_m(pairs: &[CqhPair], c: f64) -> f64 {
    let need = |num: f64, den: f64| -> f64 {
        let num = num - c;
        if num <= 0.0 {
            1.0
        } else if den > 0.0 {
            num / den
        } else {
            f64::INFINITY
        }
    };
    pairs.iter().fold(1.0f64, |m, p| {
        m.max(need(p.image_upper, p.source_lower)).max(need(p.source_upper, p.image_lower))
    })
}

/// Fits `(M, C)` over the grid `C ∈ {0, 0.25, …, 4}`, minimizing
/// `M + C/4`; ties keep the smaller `C`.
pub fn cqh_estimate(pairs: &[CqhPair]) -> Result<CqhFit> {
    if pairs.is_empty() {
        return Err(QhError::invalid("no distance pairs to fit"));
    }
    let mut best = CqhFit { m: f64::INFINITY, c: 0.0 };
    let mut best_score = f64::INFINITY;
    for i in 0..=16 {
        let c = 0.25 * i as f64;
        let m = fit_m(pairs, c);
        let score = m + c / 4.0;
        if score < best_score {
            best = CqhFit { m, c };
            best_score = score;
        }
    }
    if !best.m.is_finite() {
        return Err(QhError::UndefinedRatio("no finite (M, C) fits the pairs".into()));
    }
    Ok(best)
}

/// Distance brackets on `pairs` and their images, from short arcs on graphs
/// over the map's domain and codomain. Pairs that fail are dropped and
/// counted.
pub fn sample_cqh_pairs(
    map: &MapSpec,
    source_graph: &PathGraph,
    image_graph: &PathGraph,
    pairs: &[(Point, Point)],
) -> (Vec<CqhPair>, usize) {
    let res: Vec<Option<CqhPair>> = pairs
        .par_iter()
        .map(|(x, y)| {
            let s = qh_shortest_arc(&map.domain, source_graph, x, y).ok()?;
            let (fx, fy) = (map.apply(x).ok()?, map.apply(y).ok()?);
            let t = qh_shortest_arc(&map.codomain, image_graph, &fx, &fy).ok()?;
            Some(CqhPair { source_upper: s.upper, source_lower: s.lower, image_upper: t.upper, image_lower: t.lower })
        })
        .collect();
    let failed = res.iter().filter(|r| r.is_none()).count();
    (res.into_iter().flatten().collect(), failed)
}

/// Solidity parameters `(ν, h)` guaranteed for images of short arcs under an
/// `(M, C)` map.
pub fn solid_params_from_cqh(m: f64, c: f64) -> (f64, f64) {
    let h = (2.0 * m + 1.0) * c + 2.0 * m;
    let nu = 4.0 * (c + 1.0) * m * (m + 1.0) / (2.0 * c + 1.0);
    (nu, h)
}

/// Successive points of `beta`, each the last point of the arc in the closed
/// ball of radius `step` around the previous one, ending at the arc's end.
pub fn chain_points(beta: &ArcPolyline, step: f64) -> Result<Vec<Point>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(QhError::invalid(format!("chain step {step} must be positive")));
    }
    if beta.start() == beta.end() {
        return Err(QhError::invalid("chain needs an arc with distinct endpoints"));
    }
    let v = beta.vertices();
    let end = beta.end();
    let mut out = vec![beta.start()];
    // every link advances at least `step` along the arc
    let max_links = (beta.length() / step).ceil() as usize + 2;
    loop {
        let c = *out.last().unwrap();
        if c.dist(&end) <= step {
            out.push(end);
            return Ok(out);
        }
        if out.len() > max_links {
            return Err(QhError::Internal("chain did not terminate".into()));
        }
        let next = (0..v.len() - 1)
            .rev()
            .find(|&j| point_segment_distance(&c, &v[j], &v[j + 1]).0 <= step)
            .and_then(|j| last_sphere_crossing(&v[j], &v[j + 1], &c, step))
            .ok_or_else(|| QhError::Internal("chain lost the arc".into()))?;
        out.push(next);
    }
}

/// Point of segment `ab` at the largest parameter `t ∈ [0, 1]` with
/// `|a + t(b − a) − c| = r`.
fn last_sphere_crossing(a: &Point, b: &Point, c: &Point, r: f64) -> Option<Point> {
    let d = *b - *a;
    let f = *a - *c;
    let qa = d.norm_sq();
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * f.dot(&d);
    let qc = f.norm_sq() - r * r;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    let t = ((-qb + disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0);
    let p = a.lerp(b, t);
    // put the point exactly on the sphere to absorb the root's rounding
    let u = (p - *c).normalized()?;
    Some(*c + u * r)
}

/// Natural log of `2(8c² + 1) H^{8c²+1}`.
pub fn chain_image_bound_ln(c: f64, h: f64) -> Result<f64> {
    if !(c >= 1.0 && h >= 1.0) || !c.is_finite() || !h.is_finite() {
        return Err(QhError::invalid(format!("chain bound needs c ≥ 1 and H ≥ 1, got c={c}, H={h}")));
    }
    let n = 8.0 * c * c + 1.0;
    Ok(2f64.ln() + n.ln() + n * h.ln())
}

/// Diameter bound `2(8c² + 1) H^{8c²+1}` for images of chained arcs.
pub fn chain_image_bound(c: f64, h: f64) -> Result<f64> {
    let ln = chain_image_bound_ln(c, h)?;
    exp_checked(ln)?;
    let n = 8.0 * c * c + 1.0;
    Ok(2.0 * n * h.powf(n))
}

/// `max(μ₃/λ, 2(8c² + 1) H^{8c²+1})`.
pub fn lambda2(mu3: f64, lambda: f64, c: f64, h: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(QhError::invalid(format!("lambda {lambda} must be positive")));
    }
    Ok((mu3 / lambda).max(chain_image_bound(c, h)?))
}

fn unit_directions(dim: usize, n: usize) -> Vec<Point> {
    if dim == 2 {
        return (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                Point::new2(th.cos(), th.sin())
            })
            .collect();
    }
    // Fibonacci sphere
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * k as f64;
            Point::new3(r * th.cos(), r * th.sin(), z)
        })
        .collect()
}

/// Metric dilatation: sup over sampled points of the ratio of the largest
/// to the smallest image displacement at radius `r`.
pub fn metric_dilatation(map: &MapSpec, domain: &Domain, n_points: usize, r: f64, seed: u64) -> Result<ConstantEstimate> {
    if !(r > 0.0) {
        return Err(QhError::invalid(format!("radius {r} must be positive")));
    }
    let dirs = unit_directions(domain.dim(), if domain.dim() == 2 { 64 } else { 128 });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup: f64 = 0.0;
    let mut used = 0;
    for _ in 0..n_points {
        let x = draw_interior(domain, &mut rng)?;
        if domain.boundary_distance(&x)? <= 2.0 * r {
            continue;
        }
        let fx = map.apply(&x)?;
        let (mut big, mut small) = (0.0f64, f64::INFINITY);
        for u in &dirs {
            let d = map.apply(&(x + *u * r))?.dist(&fx);
            big = big.max(d);
            small = small.min(d);
        }
        if small > 0.0 {
            sup = sup.max(big / small);
            used += 1;
        }
    }
    Ok(ConstantEstimate::sup(sup, used, seed))
}

/// Summary of a map's sampled distortion constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapConstants {
    pub h_hat: ConstantEstimate,
    pub eta_envelope: Vec<(f64, f64)>,
    pub m_hat: f64,
    pub c_hat: f64,
    pub k_hat: ConstantEstimate,
}

/// Options for [`map_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConstantsOptions {
    pub n_triples: usize,
    pub bins: usize,
    pub t_max: f64,
    pub dilatation_points: usize,
    pub dilatation_radius: f64,
    pub seed: u64,
}

impl Default for MapConstantsOptions {
    fn default() -> Self {
        MapConstantsOptions {
            n_triples: 10_000,
            bins: 20,
            t_max: 2.0,
            dilatation_points: 200,
            dilatation_radius: 1e-4,
            seed: 0,
        }
    }
}

/// All sampled constants of `map` on its domain; `pairs` feed the CQH fit.
pub fn map_constants(map: &MapSpec, pairs: &[CqhPair], opts: &MapConstantsOptions) -> Result<MapConstants> {
    let h_hat = weak_qs_estimate(map, &map.domain, opts.n_triples, opts.seed)?.estimate;
    let eta = eta_envelope(map, &map.domain, opts.n_triples, opts.bins, opts.t_max, opts.seed.wrapping_add(1))?;
    let fit = cqh_estimate(pairs)?;
    let k_hat = metric_dilatation(
        map,
        &map.domain,
        opts.dilatation_points,
        opts.dilatation_radius * map.domain.scale(),
        opts.seed.wrapping_add(2),
    )?;
    Ok(MapConstants { h_hat, eta_envelope: eta, m_hat: fit.m, c_hat: fit.c, k_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Aabb;
    use crate::qh::halfspace_qh_distance;

    fn disk_map(kind: MapKind) -> MapSpec {
        MapSpec::new(kind, Domain::unit_disk(), Domain::unit_disk()).unwrap()
    }

    fn half_plane() -> Domain {
        Domain::upper_half_plane(Aabb::new(Point::new2(-5.0, 0.0), Point::new2(5.0, 10.0)).unwrap()).unwrap()
    }

    fn diag21() -> MapKind {
        MapKind::Linear(vec![vec![2.0, 0.0], vec![0.0, 1.0]])
    }

    #[test]
    fn identity_arc_is_unchanged() {
        let m = disk_map(MapKind::Identity);
        let arc = ArcPolyline::segment(Point::new2(-0.3, 0.1), Point::new2(0.4, 0.2));
        assert_eq!(map_arc(&m, &arc, false).unwrap(), arc);
        assert_eq!(map_arc(&m, &arc, true).unwrap().len(), 3);
    }

    #[test]
    fn scaling_doubles_segment() {
        let m = MapSpec::new(MapKind::Scaling(2.0), half_plane(), half_plane()).unwrap();
        let arc = ArcPolyline::segment(Point::new2(0.0, 1.0), Point::new2(0.0, 2.0));
        let img = map_arc(&m, &arc, false).unwrap();
        assert_eq!(img.vertices(), &[Point::new2(0.0, 2.0), Point::new2(0.0, 4.0)]);
        assert_eq!(img.length(), 2.0 * arc.length());
    }

    #[test]
    fn moebius_keeps_disk() {
        let m = disk_map(MapKind::MoebiusDiskAutomorphism([0.5, 0.0]));
        let arc = ArcPolyline::segment(Point::new2(-0.9, -0.3), Point::new2(0.9, 0.3));
        let img = map_arc(&m, &arc, true).unwrap();
        for p in img.vertices() {
            assert!(p.norm() < 1.0);
        }
        assert!((m.kind.apply(&Point::new2(0.5, 0.0)).unwrap().norm()) < 1e-15);
        assert!((m.kind.apply(&Point::new2(-0.5, 0.0)).unwrap().x() + 0.8).abs() < 1e-15);
    }

    #[test]
    fn map_rejects_outside_points() {
        let m = disk_map(MapKind::Identity);
        let arc = ArcPolyline::segment(Point::new2(0.0, 0.0), Point::new2(2.0, 0.0));
        assert!(matches!(map_arc(&m, &arc, false), Err(QhError::InvalidInput(_))));
    }

    #[test]
    fn inverses_round_trip() {
        let kinds = vec![
            MapKind::Identity,
            diag21(),
            MapKind::Linear(vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0]]),
            MapKind::MoebiusDiskAutomorphism([0.3, -0.4]),
            MapKind::Translation(Point::new2(0.5, -1.0)),
            MapKind::Scaling(3.0),
            MapKind::PowerRadial(0.7),
            MapKind::Composition(vec![MapKind::Scaling(0.5), MapKind::MoebiusDiskAutomorphism([0.2, 0.1])]),
        ];
        let pts = Domain::unit_disk().sample_interior(50, 1, 0.01).unwrap();
        for k in kinds {
            let inv = k.inverse().unwrap();
            for p in &pts {
                let p = if matches!(k, MapKind::Linear(ref m) if m.len() == 3) {
                    Point::new3(p.x(), p.y(), 0.3)
                } else {
                    *p
                };
                let q = inv.apply(&k.apply(&p).unwrap()).unwrap();
                assert!(q.dist(&p) < 1e-9, "{k:?}: {p} -> {q}");
            }
        }
        assert!(MapKind::Linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).inverse().is_none());
    }

    #[test]
    fn map_spec_json_round_trip() {
        let m = disk_map(MapKind::Composition(vec![diag21(), MapKind::PowerRadial(2.0)]));
        let s = serde_json::to_string(&m).unwrap();
        let back: MapSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.kind, m.kind);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
        let bad = r#"{"kind":"moebius_disk_automorphism","params":{"a":[1.0,0.0]},
            "domain":{"kind":"ball","params":{"center":[0,0],"radius":1}},
            "codomain":{"kind":"ball","params":{"center":[0,0],"radius":1}}}"#;
        assert!(serde_json::from_str::<MapSpec>(bad).is_err());
    }

    #[test]
    fn weak_qs_of_isometries() {
        let d = Domain::unit_disk();
        for k in [MapKind::Identity, MapKind::Translation(Point::new2(3.0, 1.0))] {
            let m = MapSpec::new(k, d.clone(), d.clone()).unwrap();
            let e = weak_qs_estimate(&m, &d, 2000, 4).unwrap();
            assert_eq!(e.estimate.value, 1.0);
        }
    }

    #[test]
    fn weak_qs_of_diag() {
        let d = Domain::unit_disk();
        let m = disk_map(diag21());
        let e = weak_qs_estimate(&m, &d, 100_000, 11).unwrap();
        assert!((1.9..=2.0).contains(&e.estimate.value), "{}", e.estimate.value);
    }

    #[test]
    fn weak_qs_is_prefix_monotone() {
        let d = Domain::unit_disk();
        let m = disk_map(MapKind::MoebiusDiskAutomorphism([0.5, 0.0]));
        let mut last = 0.0;
        for n in [10, 100, 1000] {
            let v = weak_qs_estimate(&m, &d, n, 9).unwrap().estimate.value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn eta_of_similarities() {
        let d = Domain::unit_disk();
        for k in [MapKind::Identity, MapKind::Scaling(3.0)] {
            let m = MapSpec::new(k, d.clone(), d.clone()).unwrap();
            let env = eta_envelope(&m, &d, 20_000, 10, 2.0, 5).unwrap();
            for (t, eta) in &env {
                assert!(*eta <= t + 1e-12, "{t}: {eta}");
                assert!(*eta >= t - 0.2 - 1e-12, "{t}: {eta}");
            }
        }
    }

    #[test]
    fn eta_at_one_matches_weak_qs() {
        let d = Domain::unit_disk();
        let m = disk_map(diag21());
        let env = eta_envelope(&m, &d, 100_000, 20, 2.0, 6).unwrap();
        let at_one = env[9];
        assert!((at_one.0 - 1.0).abs() < 1e-15);
        assert!((1.9..=2.0).contains(&at_one.1), "{}", at_one.1);
    }

    #[test]
    fn cqh_fits() {
        let pairs: Vec<_> = (1..20).map(|i| CqhPair::exact(i as f64 * 0.3, i as f64 * 0.3)).collect();
        let fit = cqh_estimate(&pairs).unwrap();
        assert!((fit.m - 1.0).abs() < 1e-6 && fit.c == 0.0);
        // scale invariance on the half-plane
        let d = half_plane();
        let pts = d.sample_interior(40, 2, 0.1).unwrap();
        let pairs: Vec<_> = pts
            .chunks(2)
            .map(|c| {
                let k = halfspace_qh_distance(&c[0], &c[1]).unwrap();
                let k2 = halfspace_qh_distance(&(c[0] * 2.0), &(c[1] * 2.0)).unwrap();
                CqhPair::exact(k, k2)
            })
            .collect();
        let fit = cqh_estimate(&pairs).unwrap();
        assert!((fit.m - 1.0).abs() < 1e-6 && fit.c == 0.0, "{fit:?}");
        assert!(cqh_estimate(&[]).is_err());
    }

    #[test]
    fn cqh_prefers_additive_slack_when_cheaper() {
        // k′ = k + 1 exactly: M = 1 with C = 1 scores 1.25
        let pairs: Vec<_> = (1..10).map(|i| CqhPair::exact(0.1 * i as f64, 0.1 * i as f64 + 1.0)).collect();
        let fit = cqh_estimate(&pairs).unwrap();
        assert_eq!(fit.c, 1.0);
        assert!((fit.m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solid_params_examples() {
        assert_eq!(solid_params_from_cqh(1.0, 0.0), (8.0, 2.0));
        assert_eq!(solid_params_from_cqh(2.0, 1.0), (16.0, 9.0));
        let (nu, h) = solid_params_from_cqh(1.0, 1.0);
        assert_eq!(h, 5.0);
        assert!((nu - 16.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn chain_on_line() {
        let beta = ArcPolyline::segment(Point::new2(0.0, 0.0), Point::new2(1.0, 0.0));
        let c = chain_points(&beta, 0.3).unwrap();
        let xs: Vec<f64> = c.iter().map(|p| p.x()).collect();
        assert_eq!(xs.len(), 5);
        for (got, want) in xs.iter().zip([0.0, 0.3, 0.6, 0.9, 1.0]) {
            assert!((got - want).abs() < 1e-12, "{xs:?}");
        }
        assert_eq!(chain_points(&beta, 2.0).unwrap().len(), 2);
        assert!(chain_points(&beta, 0.0).is_err());
    }

    #[test]
    fn chain_on_quarter_circle() {
        let v = (0..=400)
            .map(|i| {
                let th = std::f64::consts::FRAC_PI_2 * i as f64 / 400.0;
                Point::new2(th.cos(), th.sin())
            })
            .collect();
        let beta = ArcPolyline::new(v).unwrap();
        let c = chain_points(&beta, 0.5).unwrap();
        let n = c.len() - 1;
        for w in c[..n].windows(2) {
            assert!((w[0].dist(&w[1]) - 0.5).abs() < 1e-12);
        }
        assert!(c[n - 1].dist(&c[n]) <= 0.5);
        assert!(n <= (beta.length() / 0.5).ceil() as usize + 1);
    }

    #[test]
    fn chain_bound_examples() {
        assert_eq!(chain_image_bound(1.0, 1.0).unwrap(), 18.0);
        assert_eq!(chain_image_bound(1.0, 2.0).unwrap(), 9216.0);
        assert_eq!(chain_image_bound(2.0, 1.0).unwrap(), 66.0);
        assert!(matches!(chain_image_bound(10.0, 1e10), Err(QhError::Overflow { .. })));
        assert_eq!(lambda2(100.0, 0.5, 1.0, 1.0).unwrap(), 200.0);
        assert_eq!(lambda2(1.0, 0.5, 1.0, 2.0).unwrap(), 9216.0);
    }

    #[test]
    fn dilatation_of_conformal_and_linear() {
        let d = Domain::unit_disk();
        let m = disk_map(MapKind::MoebiusDiskAutomorphism([0.5, 0.0]));
        let k = metric_dilatation(&m, &d, 100, 1e-5, 1).unwrap();
        assert!(k.value < 1.001, "{}", k.value);
        let m = disk_map(diag21());
        let k = metric_dilatation(&m, &d, 20, 1e-3, 1).unwrap();
        assert!((k.value - 2.0).abs() < 1e-9, "{}", k.value);
    }
}
