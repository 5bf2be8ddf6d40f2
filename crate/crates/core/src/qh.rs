//! Quasihyperbolic length of polylines, closed-form lower bounds, the
//! half-space oracle and h-coarse length.

use crate::domain::{Domain, DomainKind};
use crate::error::{QhError, Result};
use crate::geom::{ArcPolyline, Point};
use crate::quadrature::adaptive_simpson;

/// Default relative tolerance for polyline quadrature.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default number of discretization points for coarse lengths.
pub const DEFAULT_COARSE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QhLengthResult {
    pub value: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseLengthResult {
    pub value: f64,
    pub h: f64,
    /// Number of candidate points on the arc.
    pub discretization: usize,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= 1e-2 {
        Ok(())
    } else {
        Err(QhError::invalid(format!("quadrature tolerance {tol} not in (0, 1e-2]")))
    }
}

/// ∫ |dz| / δ(z) along the straight segment `[a, b]`.
pub fn segment_qh_length(domain: &Domain, a: &Point, b: &Point, tol: f64) -> Result<QhLengthResult> {
    if a == b {
        if domain.delta(a) > 0.0 {
            return Ok(QhLengthResult { value: 0.0, est_error: 0.0 });
        }
        return Err(QhError::ArcExitsDomain { location: a.to_string() });
    }
    if !domain.segment_inside(a, b) {
        return Err(QhError::ArcExitsDomain { location: format!("segment {a} -> {b}") });
    }
    let len = a.dist(b);
    let q = adaptive_simpson(
        |t| {
            let p = a.lerp(b, t);
            let d = domain.delta(&p);
            if d > 0.0 {
                Ok(len / d)
            } else {
                Err(QhError::ArcExitsDomain { location: p.to_string() })
            }
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(QhLengthResult { value: q.value, est_error: q.error })
}

/// Quasihyperbolic length ℓ_k(γ) of a polyline by per-segment adaptive
/// quadrature.
pub fn qh_polyline_length(domain: &Domain, arc: &ArcPolyline, tol: f64) -> Result<QhLengthResult> {
    check_tol(tol)?;
    if arc.dim() != domain.dim() {
        return Err(QhError::invalid("arc and domain dimensions differ"));
    }
    if arc.len() == 1 {
        let p = arc.start();
        if domain.delta(&p) <= 0.0 {
            return Err(QhError::ArcExitsDomain { location: p.to_string() });
        }
        return Ok(QhLengthResult { value: 0.0, est_error: 0.0 });
    }
    let mut out = QhLengthResult { value: 0.0, est_error: 0.0 };
    for (a, b) in arc.segments() {
        let s = segment_qh_length(domain, &a, &b, tol)?;
        out.value += s.value;
        out.est_error += s.est_error;
    }
    Ok(out)
}

/// `log(1 + dist / delta_min)`: the lower bound for k(x, y) with
/// `dist = |x − y|`, and for ℓ_k(γ) with `dist = ℓ(γ)`.
pub fn growth_lower_bound(dist: f64, delta_min: f64) -> Result<f64> {
    if !(delta_min > 0.0) || !(dist >= 0.0) {
        return Err(QhError::invalid(format!(
            "growth bound needs dist >= 0 and delta_min > 0 (got {dist}, {delta_min})"
        )));
    }
    Ok((dist / delta_min).ln_1p())
}

/// `arcosh(1 + u)` without cancellation for small `u`.
fn arcosh_1p(u: f64) -> f64 {
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}

/// Quasihyperbolic distance of the half-space `{x_n > 0}` (last coordinate).
pub fn halfspace_qh_distance(x: &Point, y: &Point) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(QhError::invalid("points have different dimensions"));
    }
    halfspace_distance_on_axis(x, y, x.dim() - 1, 0.0)
}

pub(crate) fn halfspace_distance_on_axis(x: &Point, y: &Point, axis: usize, offset: f64) -> Result<f64> {
    x.check_finite()?;
    y.check_finite()?;
    let (hx, hy) = (x.get(axis) - offset, y.get(axis) - offset);
    if !(hx > 0.0 && hy > 0.0) {
        return Err(QhError::invalid(format!("{x} or {y} is not in the half-space")));
    }
    let d2 = (*x - *y).norm_sq();
    Ok(arcosh_1p(d2 / (2.0 * hx * hy)))
}

/// Hyperbolic distance of the ball (density `2R / (R² − |z − c|²)`).
pub(crate) fn ball_hyperbolic_distance(x: &Point, y: &Point, center: &Point, radius: f64) -> f64 {
    let xs = (*x - *center) * (1.0 / radius);
    let ys = (*y - *center) * (1.0 / radius);
    let num = 2.0 * (xs - ys).norm_sq();
    let den = (1.0 - xs.norm_sq()) * (1.0 - ys.norm_sq());
    arcosh_1p(num / den)
}

/// Exact quasihyperbolic distance where a closed form is available (the
/// half-space only).
pub fn exact_qh_distance(domain: &Domain, x: &Point, y: &Point) -> Result<Option<f64>> {
    match domain.kind() {
        DomainKind::HalfSpace { axis, offset, .. } => {
            halfspace_distance_on_axis(x, y, *axis, *offset).map(Some)
        }
        _ => Ok(None),
    }
}

/// Certified lower bound for k(x, y): the growth bound, the exact value on
/// half-spaces, and half the hyperbolic distance on balls (where
/// `1/δ ≥ ½ · 2R/(R² − |z|²)` pointwise).
pub fn certified_lower_bound(domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    let dx = domain.boundary_distance(x)?;
    let dy = domain.boundary_distance(y)?;
    if !(dx > 0.0 && dy > 0.0) {
        return Err(QhError::invalid(format!("{x} or {y} is not interior")));
    }
    let growth = growth_lower_bound(x.dist(y), dx.min(dy))?;
    Ok(match domain.kind() {
        DomainKind::HalfSpace { axis, offset, .. } => {
            halfspace_distance_on_axis(x, y, *axis, *offset)?.max(growth)
        }
        DomainKind::Ball { center, radius } => {
            (0.5 * ball_hyperbolic_distance(x, y, center, *radius)).max(growth)
        }
        _ => growth,
    })
}

/// Evaluator of (upper bounds on) pairwise quasihyperbolic distances.
pub trait QhDistance: Sync {
    fn distance(&self, x: &Point, y: &Point) -> Result<f64>;

    /// Symmetric matrix of pairwise distances.
    fn pairwise(&self, points: &[Point]) -> Result<Vec<Vec<f64>>> {
        let n = points.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(&points[i], &points[j])?;
                m[i][j] = d;
                m[j][i] = d;
            }
        }
        Ok(m)
    }
}

impl<F> QhDistance for F
where
    F: Fn(&Point, &Point) -> Result<f64> + Sync,
{
    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self(x, y)
    }
}

/// The exact half-space metric as a [`QhDistance`].
#[derive(Debug, Clone, Copy)]
pub struct HalfSpaceOracle {
    axis: usize,
    offset: f64,
}

impl HalfSpaceOracle {
    pub fn for_domain(domain: &Domain) -> Option<Self> {
        match domain.kind() {
            DomainKind::HalfSpace { axis, offset, .. } => {
                Some(HalfSpaceOracle { axis: *axis, offset: *offset })
            }
            _ => None,
        }
    }
}

impl QhDistance for HalfSpaceOracle {
    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        halfspace_distance_on_axis(x, y, self.axis, self.offset)
    }
}

/// `table[a][b]` (for `a <= b`) is the largest sum of consecutive distances
/// over successive index sequences inside `a..=b` whose every gap is ≥ `h`;
/// zero when no admissible pair exists.
pub(crate) fn coarse_table(k: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    let m = k.len();
    let mut table = vec![vec![0.0; m]; m];
    let mut best = vec![f64::NEG_INFINITY; m];
    for a in 0..m {
        best[a..].fill(f64::NEG_INFINITY);
        let mut running: f64 = 0.0;
        for j in a + 1..m {
            let mut bj = f64::NEG_INFINITY;
            for i in a..j {
                let kij = k[i][j];
                if kij >= h {
                    bj = bj.max(best[i].max(0.0) + kij);
                }
            }
            best[j] = bj;
            running = running.max(bj);
            table[a][j] = running;
        }
    }
    table
}

/// h-coarse quasihyperbolic length of `arc` over `points` successive
/// candidates, maximized by dynamic programming.
pub fn coarse_qh_length<K: QhDistance + ?Sized>(
    domain: &Domain,
    arc: &ArcPolyline,
    h: f64,
    k_eval: &K,
    points: usize,
) -> Result<CoarseLengthResult> {
    if !(h >= 0.0) {
        return Err(QhError::invalid(format!("coarseness {h} must be nonnegative")));
    }
    if arc.len() == 1 || arc.length() == 0.0 {
        return Ok(CoarseLengthResult { value: 0.0, h, discretization: 1 });
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
    Ok(CoarseLengthResult { value: table[0][pts.len() - 1], h, discretization: pts.len() })
}

pub(crate) fn validate_matrix(k: &[Vec<f64>]) -> Result<()> {
    for (i, row) in k.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(QhError::Internal(format!("distance ({i}, {j}) = {v} is invalid")));
            }
        }
    }
    Ok(())
}
