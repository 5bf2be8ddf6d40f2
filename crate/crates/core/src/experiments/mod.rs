//! Seeded batch experiments that check the metric inequalities and distortion
//! estimates on samples, with machine-readable reports.

mod config;
mod report;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{ExperimentConfig, ExperimentName, Tolerances};
pub use report::{
    report_to_json, round12, write_csv, write_report, ExperimentReport, NamedEstimate, ReportFormat, Row,
    Summary,
};

use crate::conditions::{
    cigar_constant, cone_constant, mu3_ln, uniform_k_bound, uniformity_estimate_on, Mode, Split,
};
use crate::domain::{Aabb, Domain, DomainKind};
use crate::error::{QhError, Result};
use crate::estimate::{ConstantEstimate, Sidedness};
use crate::geom::{ArcPolyline, Point};
use crate::maps::{
    chain_image_bound, chain_image_bound_ln, chain_points, cqh_estimate, map_arc, sample_cqh_pairs,
    solid_params_from_cqh, weak_qs_estimate, MapKind, MapSpec,
};
use crate::paths::{qh_shortest_arc, PathGraph};
use crate::qh::{growth_lower_bound, halfspace_distance_on_axis};

/// Rows evaluated between budget checks.
const CHUNK: usize = 64;

/// Names and one-line descriptions of the available experiments.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentName::ALL.iter().map(|n| (n.as_str(), n.description())).collect()
}

/// Validates a configuration without running it.
pub fn validate(config: &ExperimentConfig) -> Result<()> {
    config.validate()
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    start: Instant,
    notes: Vec<String>,
    constants: Vec<NamedEstimate>,
}

impl Ctx<'_> {
    /// Evaluates rows `0..n` in parallel chunks, stopping early (with a note)
    /// once the wall-time budget is spent.
    fn rows<F>(&mut self, n: usize, f: F) -> Vec<Row>
    where
        F: Fn(usize) -> Row + Sync,
    {
        let budget = Duration::from_secs_f64(self.cfg.budget_secs);
        let mut out = Vec::with_capacity(n);
        let mut next = 0;
        while next < n {
            if self.start.elapsed() > budget {
                self.notes.push(format!("wall-time budget exceeded: evaluated {next} of {n} samples"));
                break;
            }
            let end = (next + CHUNK).min(n);
            out.extend((next..end).into_par_iter().map(&f).collect::<Vec<_>>());
            next = end;
        }
        out
    }

    fn constant(&mut self, name: &str, estimate: ConstantEstimate) {
        self.constants.push(NamedEstimate::new(name, estimate));
    }
}

/// Per-row random stream derived from the experiment seed.
fn row_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Point {
    loop {
        let mut p = Point::zero(dim);
        for i in 0..dim {
            p = p.with(i, rng.random_range(-1.0..1.0));
        }
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            return p * (1.0 / n);
        }
    }
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn fmt12(v: f64) -> String {
    match round12(v) {
        Some(r) => r.to_string(),
        None => v.to_string(),
    }
}

/// Runs the configured pipeline.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut ctx = Ctx { cfg: config, start: Instant::now(), notes: Vec::new(), constants: Vec::new() };
    let (columns, rows) = match config.name {
        ExperimentName::BoundsSuite => bounds_suite(&mut ctx)?,
        ExperimentName::HalfspaceValidation => halfspace_validation(&mut ctx)?,
        ExperimentName::Subinvariance => subinvariance(&mut ctx)?,
        ExperimentName::SlitCounterexample => slit_counterexample(&mut ctx)?,
        ExperimentName::ShortArcImage => short_arc_image(&mut ctx)?,
        ExperimentName::ChainSuite => chain_suite(&mut ctx)?,
    };
    let summary = Summary {
        violations: rows.iter().filter(|r| !r.pass).count(),
        soft_failures: rows.iter().filter(|r| r.soft_failure).count(),
        constants: ctx.constants,
        notes: ctx.notes,
    };
    Ok(ExperimentReport {
        config: config.clone(),
        columns,
        rows,
        summary,
        wall_time_secs: ctx.start.elapsed().as_secs_f64(),
    })
}

fn pair_label(x: &Point, y: &Point) -> String {
    let f = |p: &Point| p.coords().iter().map(|c| fmt12(*c)).collect::<Vec<_>>().join(" ");
    format!("{} -> {}", f(x), f(y))
}

const BOUNDS_COLUMNS: [&str; 12] = [
    "dist",
    "delta_min",
    "arc_length",
    "upper",
    "lower",
    "epsilon_hat",
    "growth_arc",
    "growth_pair",
    "near_low",
    "near_high",
    "short_arc_length_bound",
    "uniform_bound",
];

/// Growth bounds on every pair; near-pair brackets, the short-arc length
/// bound and the uniform-domain bound where their hypotheses hold.
///
/// Odd rows are near pairs, `|x − y| ≤ δ(x)/4`, so that the near-pair
/// hypotheses hold at both endpoints.
fn bounds_suite(ctx: &mut Ctx<'_>) -> Result<(Vec<String>, Vec<Row>)> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances;
    let domain = cfg.built_domain()?.expect("validated");
    let floor = cfg.param("floor", 0.05 * domain.scale())?.max(2.0 * domain.delta_floor());
    let uniform_pairs: usize = cfg.param("uniformity_pairs", 100usize)?;
    let check_uniform: bool = cfg.param("uniform_check", true)?;
    let graph = PathGraph::build(&domain, cfg.resolution, cfg.seed)?;
    let n = cfg.samples;
    let pts = domain.sample_interior(2 * n, cfg.seed, floor)?;
    let pairs: Vec<(Point, Point)> = (0..n)
        .map(|i| {
            let x = pts[2 * i];
            if i % 2 == 1 {
                let mut rng = row_rng(cfg.seed, i);
                let mut r = rng.random_range(0.05..1.0) * domain.delta(&x) / 4.0;
                let u = random_unit(domain.dim(), &mut rng);
                // unbounded domains: stay inside the sampling window
                while !domain.window().contains(&(x + u * r)) {
                    r *= 0.5;
                }
                (x, x + u * r)
            } else {
                (x, pts[2 * i + 1])
            }
        })
        .collect();

    let b_hat = if check_uniform {
        let take = uniform_pairs.min(n).max(1);
        let u = uniformity_estimate_on(&domain, &graph, &pairs[..take])?;
        let b = u.estimate.value.max(1.0);
        ctx.constant("uniformity_b", u.estimate);
        Some(b)
    } else {
        None
    };
    let short_bound = 4.5 * 1.5f64.exp();

    let rows = ctx.rows(n, |i| {
        let (x, y) = pairs[i];
        let label = pair_label(&x, &y);
        let r = match qh_shortest_arc(&domain, &graph, &x, &y) {
            Ok(r) => r,
            Err(e) => return Row::soft(i, label, BOUNDS_COLUMNS.len(), e.to_string()),
        };
        let (dx, dy) = (domain.delta(&x), domain.delta(&y));
        let dmin = dx.min(dy);
        let d = x.dist(&y);
        let len = r.arc.length();
        let mut fails = Vec::new();
        let growth_arc = growth_lower_bound(len, dmin).unwrap_or(f64::NAN);
        let growth_pair = growth_lower_bound(d, dmin).unwrap_or(f64::NAN);
        if !tol.le(growth_arc, r.upper) {
            fails.push("arc growth bound");
        }
        if !tol.le(growth_pair, r.upper) || !tol.le(growth_pair, r.lower) {
            fails.push("pair growth bound");
        }
        let near = d <= dx / 3.0;
        let (near_low, near_high) = if near {
            let (lo, hi) = (0.5 * d / dx, 3.0 * d / dx);
            if !tol.le(lo, r.upper) {
                fails.push("near-pair lower bracket");
            }
            if !tol.le(r.upper, hi) {
                fails.push("near-pair upper bracket");
            }
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };
        // ε ≤ k/2 is certified by ε̂ ≤ lower/2
        let short_hyp = d <= dmin / 3.0 && r.epsilon_hat <= r.lower / 2.0;
        let short = if short_hyp {
            if !tol.le(len, short_bound * d) {
                fails.push("short-arc length bound");
            }
            Some(short_bound * d)
        } else {
            None
        };
        let uniform = b_hat.map(|b| {
            let bound = uniform_k_bound(tol.slack_mult * b, d, dmin).unwrap_or(f64::NAN);
            if !(r.upper <= bound + tol.slack_add) {
                fails.push("uniform-domain bound");
            }
            bound
        });
        let row = Row::new(
            i,
            label,
            vec![
                Some(d),
                Some(dmin),
                Some(len),
                Some(r.upper),
                Some(r.lower),
                Some(r.epsilon_hat),
                Some(growth_arc),
                Some(growth_pair),
                near_low,
                near_high,
                short,
                uniform,
            ],
            fails.is_empty(),
        );
        if fails.is_empty() {
            row
        } else {
            row.with_note(fails.join("; "))
        }
    });
    Ok((cols(&BOUNDS_COLUMNS), rows))
}

fn default_half_plane() -> Domain {
    Domain::upper_half_plane(Aabb::new(Point::new2(-3.0, 0.0), Point::new2(3.0, 3.2)).expect("valid window"))
        .expect("valid half-plane")
}

/// Short-arc upper bounds against the exact half-space distance.
fn halfspace_validation(ctx: &mut Ctx<'_>) -> Result<(Vec<String>, Vec<Row>)> {
    const COLUMNS: [&str; 5] = ["oracle", "upper", "lower", "ratio", "epsilon_hat"];
    let cfg = ctx.cfg;
    let domain = cfg.built_domain()?.unwrap_or_else(default_half_plane);
    let (axis, offset) = match domain.kind() {
        DomainKind::HalfSpace { axis, offset, .. } => (*axis, *offset),
        _ => return Err(QhError::Config("halfspace-validation needs a half-space".into())),
    };
    let window: [Vec<f64>; 2] = cfg.param("sample_window", [vec![-2.0, 0.1], vec![2.0, 2.0]])?;
    let lo = Point::from_slice(&window[0]).map_err(|e| QhError::Config(format!("sample_window: {e}")))?;
    let hi = Point::from_slice(&window[1]).map_err(|e| QhError::Config(format!("sample_window: {e}")))?;
    let sw = Aabb::new(lo, hi).map_err(|e| QhError::Config(format!("sample_window: {e}")))?;
    if sw.dim() != domain.dim() {
        return Err(QhError::Config("sample_window dimension differs from the domain".into()));
    }
    let max_ratio: f64 = cfg.param("max_ratio", 1.02)?;
    let graph = PathGraph::build(&domain, cfg.resolution, cfg.seed)?;
    let draw = |rng: &mut ChaCha8Rng| {
        let mut p = Point::zero(sw.dim());
        for i in 0..sw.dim() {
            p = p.with(i, rng.random_range(sw.lo.get(i)..sw.hi.get(i)));
        }
        p
    };
    let rows = ctx.rows(cfg.samples, |i| {
        let mut rng = row_rng(cfg.seed, i);
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let label = pair_label(&x, &y);
        let oracle = halfspace_distance_on_axis(&x, &y, axis, offset);
        let r = oracle.and_then(|o| qh_shortest_arc(&domain, &graph, &x, &y).map(|r| (o, r)));
        match r {
            Err(e) => Row::soft(i, label, COLUMNS.len(), e.to_string()),
            Ok((oracle, r)) => {
                let ratio = if oracle > 0.0 { r.upper / oracle } else { 1.0 };
                let pass = r.upper >= oracle * (1.0 - 1e-9) && r.upper <= max_ratio * oracle + 1e-12;
                Row::new(
                    i,
                    label,
                    vec![Some(oracle), Some(r.upper), Some(r.lower), Some(ratio), Some(r.epsilon_hat)],
                    pass,
                )
            }
        }
    });
    let worst = rows.iter().filter_map(|r| r.values[3]).fold(0.0, f64::max);
    let ok = rows.iter().filter(|r| !r.soft_failure).count();
    ctx.constant("max_upper_over_oracle", ConstantEstimate::sup(worst, ok, cfg.seed));
    Ok((cols(&COLUMNS), rows))
}

fn default_disk_moebius() -> MapSpec {
    MapSpec::new(MapKind::MoebiusDiskAutomorphism([0.5, 0.0]), Domain::unit_disk(), Domain::unit_disk())
        .expect("valid map")
}

/// Image of a planar ball or custom domain under `map` as a custom domain.
fn image_domain(map: &MapSpec, domain: &Domain, boundary_points: usize) -> Result<Domain> {
    let boundary: Vec<Point> = match domain.kind() {
        DomainKind::Ball { center, radius } if domain.dim() == 2 => (0..boundary_points)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / boundary_points as f64;
                Point::new2(center.x() + radius * th.cos(), center.y() + radius * th.sin())
            })
            .collect(),
        DomainKind::Custom(b) => b.points().to_vec(),
        _ => return Err(QhError::Config("subdomain must be a planar ball or a custom domain".into())),
    };
    if let DomainKind::Ball { center, radius } = domain.kind() {
        if domain.dim() == 2 && preserves_circles(&map.kind) {
            // Möbius-type maps send the disk to the disk through three boundary images.
            let on = |th: f64| Point::new2(center.x() + radius * th.cos(), center.y() + radius * th.sin());
            let a = map.kind.apply(&on(0.0))?;
            let b = map.kind.apply(&on(std::f64::consts::TAU / 3.0))?;
            let c = map.kind.apply(&on(2.0 * std::f64::consts::TAU / 3.0))?;
            if let Some((cen, r)) = circumcircle(&a, &b, &c) {
                let inside = map.kind.apply(center)?;
                if (inside.x() - cen.x()).hypot(inside.y() - cen.y()) < r {
                    return Domain::ball(cen, r);
                }
            }
        }
    }
    let image = boundary.iter().map(|p| map.kind.apply(p)).collect::<Result<Vec<_>>>()?;
    Domain::custom(image)
}

fn preserves_circles(kind: &MapKind) -> bool {
    match kind {
        MapKind::Identity | MapKind::Translation(_) | MapKind::Scaling(_) | MapKind::MoebiusDiskAutomorphism(_) => true,
        MapKind::Composition(maps) => maps.iter().all(preserves_circles),
        _ => false,
    }
}

fn circumcircle(a: &Point, b: &Point, c: &Point) -> Option<(Point, f64)> {
    let (ax, ay, bx, by, cx, cy) = (a.x(), a.y(), b.x(), b.y(), c.x(), c.y());
    let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d.abs() < 1e-14 {
        return None;
    }
    let (a2, b2, c2) = (ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy);
    let ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
    let uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
    Some((Point::new2(ux, uy), (ax - ux).hypot(ay - uy)))
}

/// Uniformity of `f(D)` at two resolutions; the last row checks the drift.
fn subinvariance(ctx: &mut Ctx<'_>) -> Result<(Vec<String>, Vec<Row>)> {
    const COLUMNS: [&str; 3] = ["b_coarse", "b_fine", "drift"];
    let cfg = ctx.cfg;
    let map = cfg.map.clone().unwrap_or_else(default_disk_moebius);
    let sub = match cfg.built_domain()? {
        Some(d) => d,
        None => Domain::ball(Point::new2(0.0, 0.0), 0.5)?,
    };
    let fine: f64 = cfg.param("fine_resolution", cfg.resolution / 2.0)?;
    let max_drift: f64 = cfg.param("max_drift", 0.15)?;
    let boundary_points: usize = cfg.param("boundary_points", 720usize)?;
    let floor = cfg.param("floor", 0.05 * sub.scale())?.max(2.0 * sub.delta_floor());
    let image = image_domain(&map, &sub, boundary_points)?;

    let pts = sub.sample_interior(2 * cfg.samples, cfg.seed, floor)?;
    let mut pairs = Vec::with_capacity(cfg.samples);
    for c in pts.chunks(2) {
        pairs.push((map.apply(&c[0])?, map.apply(&c[1])?));
    }
    let coarse_graph = PathGraph::build(&image, cfg.resolution, cfg.seed)?;
    let fine_graph = PathGraph::build(&image, fine, cfg.seed)?;
    let coarse = uniformity_estimate_on(&image, &coarse_graph, &pairs)?;
    let fine_est = uniformity_estimate_on(&image, &fine_graph, &pairs)?;

    let mut rows: Vec<Row> = pairs
        .iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let (a, b) = (&coarse.per_pair[i], &fine_est.per_pair[i]);
            match (a.value, b.value) {
                (Some(u), Some(v)) => Row::new(i, pair_label(x, y), vec![Some(u), Some(v), None], true),
                _ => {
                    let why = a.error.clone().or_else(|| b.error.clone()).unwrap_or_default();
                    Row::soft(i, pair_label(x, y), COLUMNS.len(), why)
                }
            }
        })
        .collect();
    let (bc, bf) = (coarse.estimate.value, fine_est.estimate.value);
    let drift = if bc > 0.0 { (bf - bc).abs() / bc } else { f64::INFINITY };
    let pass = bc.is_finite() && bf.is_finite() && bc > 0.0 && drift <= max_drift;
    rows.push(
        Row::new(rows.len(), "drift", vec![Some(bc), Some(bf), Some(drift)], pass)
            .with_note(format!("resolutions {} and {}", fmt12(cfg.resolution), fmt12(fine))),
    );
    ctx.constant("image_uniformity_coarse", coarse.estimate);
    ctx.constant("image_uniformity_fine", fine_est.estimate);
    ctx.notes.push(match image.kind() {
        DomainKind::Ball { center, radius } => format!(
            "image domain: exact disk at ({}, {}) of radius {}",
            fmt12(center.x()),
            fmt12(center.y()),
            fmt12(*radius)
        ),
        _ => format!(
            "image domain: {} boundary points, distance error ≤ {}",
            boundary_points,
            fmt12(image.distance_error_bound())
        ),
    });
    Ok((cols(&COLUMNS), rows))
}

/// Quasiconvexity and John constants of the slit disk on pairs straddling
/// the slit; the last row checks the growth trend.
fn slit_counterexample(ctx: &mut Ctx<'_>) -> Result<(Vec<String>, Vec<Row>)> {
    const COLUMNS: [&str; 7] =
        ["t", "euclidean_length", "quasiconvexity", "detour_bound", "uniformity_b", "john_cone", "john_max"];
    let cfg = ctx.cfg;
    let domain = cfg.built_domain()?.unwrap_or_else(Domain::unit_slit_disk);
    if !matches!(domain.kind(), DomainKind::SlitDisk { .. }) {
        return Err(QhError::Config("slit-counterexample needs a slit disk".into()));
    }
    let ts: Vec<f64> = cfg.param("t_values", vec![0.05, 0.02, 0.01])?;
    let x0: f64 = cfg.param("x", 0.5)?;
    let center: [f64; 2] = cfg.param("center", [-0.5, 0.0])?;
    let john_max: f64 = cfg.param("john_max", 10.0)?;
    let min_final: f64 = cfg.param("min_final", 25.0)?;
    let center = Point::new2(center[0], center[1]);
    let graph = PathGraph::build(&domain, cfg.resolution, cfg.seed)?;

    let mut rows = ctx.rows(ts.len(), |i| {
        let t = ts[i];
        let (x, y) = (Point::new2(x0, t), Point::new2(x0, -t));
        let label = format!("t = {}", fmt12(t));
        let eval = || -> Result<Row> {
            let (_, len) = domain.euclidean_shortest_arc(&x, &y, cfg.resolution)?;
            let qc = len / x.dist(&y);
            // around the slit tip: the detour is at least 2·x0 long
            let detour = 0.9 * 2.0 * x0 / (2.0 * t);
            let u = uniformity_estimate_on(&domain, &graph, &[(x, y)])?;
            let b = u.per_pair[0]
                .value
                .ok_or_else(|| QhError::NotConnected(u.per_pair[0].error.clone().unwrap_or_default()))?;
            let there = qh_shortest_arc(&domain, &graph, &x, &center)?.arc;
            let back = qh_shortest_arc(&domain, &graph, &center, &y)?.arc;
            let john = cone_constant(&domain, &there.join(&back), Mode::Length, Split::Endpoints)?;
            let pass = qc >= detour && b >= detour && john <= john_max;
            Ok(Row::new(
                i,
                label.clone(),
                vec![Some(t), Some(len), Some(qc), Some(detour), Some(b), Some(john), Some(john_max)],
                pass,
            ))
        };
        eval().unwrap_or_else(|e| Row::soft(i, label.clone(), COLUMNS.len(), e.to_string()))
    });
    let qcs: Vec<Option<f64>> = rows.iter().map(|r| r.values[2]).collect();
    let increasing = qcs.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b > a));
    let last = qcs.last().copied().flatten();
    let pass = !qcs.is_empty() && increasing && last.is_some_and(|v| v >= min_final);
    rows.push(
        Row::new(rows.len(), "trend", vec![None, None, last, None, None, None, None], pass)
            .with_note(format!("strictly increasing: {increasing}; final ≥ {}", fmt12(min_final))),
    );
    let ok = qcs.iter().flatten().count();
    if let Some(v) = last {
        ctx.constant("quasiconvexity_final", ConstantEstimate::sup(v, ok, cfg.seed));
    }
    let john = rows.iter().filter_map(|r| r.values[5]).fold(0.0, f64::max);
    ctx.constant("john_cone", ConstantEstimate::sup(john, ok, cfg.seed));
    Ok((cols(&COLUMNS), rows))
}

/// Diameter of images of certified short arcs against the chain bound.
fn short_arc_image(ctx: &mut Ctx<'_>) -> Result<(Vec<String>, Vec<Row>)> {
    let cfg = ctx.cfg;
    let map = cfg.map.clone().unwrap_or_else(default_disk_moebius);
    let lambdas: Vec<f64> = cfg.param("lambdas", vec![0.5, 0.1, 0.02])?;
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(QhError::Config("lambdas must be positive".into()));
    }
    let triples: usize = cfg.param("triples", 20_000usize)?;
    let reach: f64 = cfg.param("reach", 0.5)?;
    let max_attempts: usize = cfg.param("max_attempts", 20 * cfg.samples)?;
    let floor = cfg.param("floor", 0.05 * map.domain.scale())?.max(2.0 * map.domain.delta_floor());
    let mut columns = cols(&["image_dist", "image_delta", "epsilon_hat", "lower", "image_cigar_diameter", "bound"]);
    columns.extend(lambdas.iter().map(|l| format!("near_at_lambda_{}", fmt12(*l))));

    let h_hat = weak_qs_estimate(&map, &map.domain, triples, cfg.seed)?;
    let h = h_hat.estimate.value.max(1.0);
    let bound = chain_image_bound(1.0, h);
    ctx.constant("weak_qs_h", h_hat.estimate.clone());
    let src_graph = PathGraph::build(&map.domain, cfg.resolution, cfg.seed)?;
    let img_graph = PathGraph::build(&map.codomain, cfg.resolution, cfg.seed)?;

    // candidate near pairs; keep the first `samples` with a certified short arc
    let candidates: Vec<(Point, Point)> = {
        let pts = map.domain.sample_interior(max_attempts, cfg.seed, floor)?;
        pts.iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rng = row_rng(cfg.seed, i);
                let r = rng.random_range(0.05..1.0) * reach * map.domain.delta(x);
                (*x, *x + random_unit(map.domain.dim(), &mut rng) * r)
            })
            .collect()
    };
    let mut accepted = Vec::new();
    let mut rejected = 0;
    for chunk in candidates.chunks(CHUNK) {
        if accepted.len() >= cfg.samples {
            break;
        }
        let res: Vec<_> = chunk
            .par_iter()
            .map(|(x, y)| {
                qh_shortest_arc(&map.domain, &src_graph, x, y)
                    .ok()
                    .filter(|r| r.epsilon_hat < r.lower.min(6.0) / 6.0 && r.lower > 0.0)
                    .map(|r| (*x, *y, r))
            })
            .collect();
        for r in res {
            match r {
                Some(a) if accepted.len() < cfg.samples => accepted.push(a),
                Some(_) => {}
                None => rejected += 1,
            }
        }
    }
    ctx.notes.push(format!(
        "{} short arcs accepted, {} candidates rejected (ε̂ < min(1, lower/6) not certified or search failed)",
        accepted.len(),
        rejected
    ));
    if accepted.len() < cfg.samples {
        ctx.notes.push(format!("only {} of {} requested short arcs found", accepted.len(), cfg.samples));
    }

    let bound_v = bound.as_ref().ok().copied();
    let tol = cfg.tolerances;
    let ncols = columns.len();
    let rows = ctx.rows(accepted.len(), |i| {
        let (x, y, r) = &accepted[i];
        let label = pair_label(x, y);
        let eval = || -> Result<Row> {
            let img = map_arc(&map, &r.arc, true)?;
            let (fx, fy) = (img.start(), img.end());
            let d = fx.dist(&fy);
            let dfx = map.codomain.boundary_distance(&fx)?;
            let cigar = cigar_constant(&img, Mode::Diameter)?;
            let mut vals = vec![Some(d), Some(dfx), Some(r.epsilon_hat), Some(r.lower), Some(cigar), bound_v];
            let mut pass = true;
            for l in &lambdas {
                let near = d < l * dfx;
                vals.push(Some(if near { 1.0 } else { 0.0 }));
                if near {
                    pass &= bound_v.is_none_or(|b| tol.le(cigar, b));
                }
            }
            Ok(Row::new(i, label.clone(), vals, pass))
        };
        eval().unwrap_or_else(|e| Row::soft(i, label.clone(), ncols, e.to_string()))
    });

    // ingredients of λ₂ = max(μ₃/λ, chain bound) for the report
    let pairs: Vec<(Point, Point)> = accepted.iter().map(|(x, y, _)| (*x, *y)).collect();
    let (cqh, failed) = sample_cqh_pairs(&map, &src_graph, &img_graph, &pairs);
    if failed > 0 {
        ctx.notes.push(format!("{failed} pairs dropped from the CQH fit"));
    }
    let image_pairs: Vec<(Point, Point)> =
        pairs.iter().filter_map(|(x, y)| Some((map.apply(x).ok()?, map.apply(y).ok()?))).collect();
    let mu2 = accepted
        .iter()
        .filter_map(|(_, _, r)| {
            let img = map_arc(&map, &r.arc, true).ok()?;
            cone_constant(&map.codomain, &img, Mode::Diameter, Split::MaxDelta).ok()
        })
        .fold(0.0, f64::max);
    ctx.constant("mu2", ConstantEstimate::sup(mu2, accepted.len(), cfg.seed));
    if !cqh.is_empty() && !image_pairs.is_empty() {
        let fit = cqh_estimate(&cqh)?;
        let (nu, hh) = solid_params_from_cqh(fit.m, fit.c);
        let b = uniformity_estimate_on(&map.codomain, &img_graph, &image_pairs)?;
        ctx.constant("cqh_m", ConstantEstimate::inf(fit.m, cqh.len(), cfg.seed));
        ctx.constant("cqh_c", ConstantEstimate { value: fit.c, samples: cqh.len(), seed: cfg.seed, sidedness: Sidedness::Exact });
        ctx.constant("codomain_uniformity_b", b.estimate.clone());
        let mu3 = mu3_ln(1.0, b.estimate.value.max(1.0), nu, hh, mu2);
        let chain_ln = chain_image_bound_ln(1.0, h)?;
        for l in &lambdas {
            let msg = match &mu3 {
                Ok(m3) => format!(
                    "lambda = {}: ln(lambda2) = {}",
                    fmt12(*l),
                    fmt12((m3 - l.ln()).max(chain_ln))
                ),
                Err(e) => format!("lambda = {}: mu3 unavailable: {e}", fmt12(*l)),
            };
            ctx.notes.push(msg);
        }
    }
    if let Err(e) = bound {
        ctx.notes.push(format!("chain bound not representable: {e}"));
    }
    Ok((columns, rows))
}

/// Chain counts on arcs whose length is at most `c` times their chord.
fn chain_suite(ctx: &mut Ctx<'_>) -> Result<(Vec<String>, Vec<Row>)> {
    const COLUMNS: [&str; 6] = ["step", "chord", "arc_length", "links", "link_bound", "max_gap_error"];
    let cfg = ctx.cfg;
    let c: f64 = cfg.param("c", 1.0)?;
    if !(c >= 1.0) {
        return Err(QhError::Config("params.c must be ≥ 1".into()));
    }
    let link_bound = (8.0 * c * c + 1.0).floor();
    let mut rows = ctx.rows(cfg.samples, |i| {
        let mut rng = row_rng(cfg.seed, i);
        let (beta, step) = chain_instance(&mut rng, c);
        let chord = beta.start().dist(&beta.end());
        let label = format!("instance {i}");
        match chain_points(&beta, step) {
            Err(e) => Row::soft(i, label, COLUMNS.len(), e.to_string()),
            Ok(pts) => {
                let n = pts.len() - 1;
                let gaps: Vec<f64> = pts.windows(2).map(|w| w[0].dist(&w[1])).collect();
                let interior_err = gaps[..n - 1].iter().map(|g| (g - step).abs()).fold(0.0, f64::max);
                let last_ok = gaps[n - 1] <= step * (1.0 + 1e-9);
                let count_ok = n as f64 <= (beta.length() / step).ceil() + 1.0;
                let pass = n as f64 <= link_bound && interior_err <= 1e-9 * step && last_ok && count_ok;
                Row::new(
                    i,
                    label,
                    vec![
                        Some(step),
                        Some(chord),
                        Some(beta.length()),
                        Some(n as f64),
                        Some(link_bound),
                        Some(interior_err),
                    ],
                    pass,
                )
            }
        }
    });
    let exact = chain_image_bound(1.0, 2.0)?;
    rows.push(
        Row::new(rows.len(), "chain bound at c = 1, H = 2", vec![None, None, None, None, Some(exact), None], exact == 9216.0)
            .with_note("expects 9216"),
    );
    let worst = rows.iter().filter_map(|r| r.values[3]).fold(0.0, f64::max);
    ctx.constant("max_links", ConstantEstimate::sup(worst, cfg.samples, cfg.seed));
    Ok((cols(&COLUMNS), rows))
}

/// A random arc `β` from `x` to `z` with `ℓ(β) ≤ c|x − z|` and a step
/// `s` with `|x − z| ≤ 8c·s`.
pub(crate) fn chain_instance<R: Rng>(rng: &mut R, c: f64) -> (ArcPolyline, f64) {
    let step = rng.random_range(0.05..0.5);
    let chord = rng.random_range(0.1 * step..=8.0 * c * step);
    let x = Point::new2(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let u = random_unit(2, rng);
    let z = x + u * chord;
    let normal = Point::new2(-u.y(), u.x());
    let k: usize = rng.random_range(1..8);
    let mut ts: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    ts.sort_by(f64::total_cmp);
    let offsets: Vec<f64> = ts.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let build = |amp: f64| {
        let mut v = vec![x];
        v.extend(ts.iter().zip(&offsets).map(|(t, o)| x.lerp(&z, *t) + normal * (amp * o * chord)));
        v.push(z);
        ArcPolyline::new(v).expect("finite vertices")
    };
    if c == 1.0 {
        return (build(0.0), step);
    }
    // largest perturbation amplitude keeping ℓ(β) ≤ c·chord
    let target = c * chord;
    let (mut lo, mut hi) = (0.0, 1.0);
    while build(hi).length() <= target && hi < 1e6 {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if build(mid).length() <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (build(lo * rng.random_range(0.0..=1.0)), step)
}
