//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use qhkit_core::conditions::solidity_estimate;
use qhkit_core::experiments::{run_experiment, ExperimentConfig, ExperimentReport};
use qhkit_core::maps::{chain_image_bound, solid_params_from_cqh};
use qhkit_core::paths::qh_shortest_arc;
use qhkit_core::qh::{segment_qh_length, HalfSpaceOracle};
use qhkit_core::{Aabb, Domain, PathGraph, Point};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(json: &str) -> Result<ExperimentReport, String> {
    let cfg = ExperimentConfig::from_json(json).map_err(|e| e.to_string())?;
    run_experiment(&cfg).map_err(|e| e.to_string())
}

fn column(report: &ExperimentReport, name: &str) -> usize {
    report.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn constant(report: &ExperimentReport, name: &str) -> Option<f64> {
    report.summary.constants.iter().find(|c| c.name == name).map(|c| c.estimate.value)
}

fn evaluated(report: &ExperimentReport) -> usize {
    report.rows.iter().filter(|r| !r.soft_failure).count()
}

fn halfspace_oracle() -> Result<Outcome, String> {
    let t = Instant::now();
    let r = run(r#"{"name":"halfspace-validation","samples":50,"resolution":0.02,"seed":1,"budget_secs":10000}"#)?;
    let secs = t.elapsed().as_secs_f64();
    let worst = constant(&r, "max_upper_over_oracle").unwrap_or(f64::NAN);
    let pass = r.passed() && evaluated(&r) == 50 && secs <= 60.0;
    Ok(outcome(
        pass,
        format!("{} pairs, worst upper/oracle {worst:.5}, {secs:.1}s", evaluated(&r)),
    ))
}

fn quadrature_exactness() -> Result<Outcome, String> {
    let e = |x: qhkit_core::QhError| x.to_string();
    let window = Aabb::new(Point::new2(-10.0, 0.0), Point::new2(10.0, 10.0)).map_err(e)?;
    let hp = Domain::upper_half_plane(window).map_err(e)?;
    let disk = Domain::unit_disk();
    let mut worst: f64 = 0.0;
    for (a, b) in [(0.01, 5.0), (0.3, 0.31), (1.0, 9.0), (2.0, 0.05)] {
        let got = segment_qh_length(&hp, &Point::new2(0.7, a), &Point::new2(0.7, b), 1e-12).map_err(e)?.value;
        let want = (b / a).ln().abs();
        worst = worst.max((got - want).abs() / want);
    }
    for (r1, r2, th) in [(0.0, 0.9, 0.0), (0.2, 0.99, 1.0), (0.5, 0.6, 2.5), (0.1, 0.999, -1.3)] {
        let p = |r: f64| Point::new2(r * f64::cos(th), r * f64::sin(th));
        let got = segment_qh_length(&disk, &p(r1), &p(r2), 1e-12).map_err(e)?.value;
        let want = ((1.0 - r1) / (1.0 - r2)).ln();
        worst = worst.max((got - want).abs() / want);
    }
    Ok(outcome(worst <= 1e-9, format!("worst relative error {worst:.2e}")))
}

fn bounds_config(domain: &str, extra: &str) -> String {
    format!(
        r#"{{"name":"bounds-suite","samples":1000,"resolution":0.05,"seed":2,"budget_secs":10000,"domain":{domain}{extra}}}"#
    )
}

fn inequality_suite(ball: &ExperimentReport) -> Result<Outcome, String> {
    let hs = run(&bounds_config(
        r#"{"kind":"half_space","params":{},"window":[[-3,0],[3,3.2]]}"#,
        r#","params":{"floor":0.1}"#,
    ))?;
    let pb = run(&bounds_config(
        r#"{"kind":"punctured_ball","params":{"center":[0,0],"radius":1,"puncture":[0.2,0.1]}}"#,
        "",
    ))?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in [("half-space", &hs), ("ball", ball), ("punctured ball", &pb)] {
        let near = r.rows.iter().filter(|row| row.values[column(r, "near_low")].is_some()).count();
        let short = r.rows.iter().filter(|row| row.values[column(r, "short_arc_length_bound")].is_some()).count();
        pass &= r.summary.violations == 0 && evaluated(r) >= 1000 && near > 0 && short > 0;
        parts.push(format!(
            "{name}: {} violations over {} pairs ({near} near, {short} short-arc)",
            r.summary.violations,
            evaluated(r)
        ));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn uniform_bound_on_ball(ball: &ExperimentReport) -> Result<Outcome, String> {
    let b = constant(ball, "uniformity_b").ok_or("no uniformity estimate")?.max(1.0);
    let (d, dmin, upper) = (column(ball, "dist"), column(ball, "delta_min"), column(ball, "upper"));
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    let mut checked = 0;
    for row in ball.rows.iter().filter(|r| !r.soft_failure) {
        let (Some(d), Some(m), Some(k)) = (row.values[d], row.values[dmin], row.values[upper]) else {
            continue;
        };
        let bound = 4.0 * (1.05 * b).powi(2) * (1.0 + d / m).ln();
        checked += 1;
        worst = worst.max(k / bound);
        if k > bound + 1e-6 {
            violations += 1;
        }
    }
    Ok(outcome(
        violations == 0 && checked >= 1000,
        format!("b = {b:.4}, {violations} violations over {checked} pairs, worst k/bound {worst:.4}"),
    ))
}

fn solidity() -> Result<Outcome, String> {
    let e = |x: qhkit_core::QhError| x.to_string();
    let exact = solid_params_from_cqh(1.0, 0.0) == (8.0, 2.0);
    let window = Aabb::new(Point::new2(-3.0, 0.0), Point::new2(3.0, 3.2)).map_err(e)?;
    let hp = Domain::upper_half_plane(window).map_err(e)?;
    let graph = PathGraph::build(&hp, 0.05, 5).map_err(e)?;
    let oracle = HalfSpaceOracle::for_domain(&hp).ok_or("not a half-space")?;
    let pts = hp.sample_interior(60, 5, 0.1).map_err(e)?;
    let (mut arcs, mut worst, mut ok) = (0, 0.0f64, true);
    for pair in pts.chunks(2) {
        let r = qh_shortest_arc(&hp, &graph, &pair[0], &pair[1]).map_err(e)?;
        if r.epsilon_hat > 1.0 {
            continue;
        }
        let s = solidity_estimate(&hp, &r.arc, 2.0, &oracle, 33).map_err(e)?;
        arcs += 1;
        worst = worst.max(s.nu_hat);
        ok &= s.nu_hat <= 8.0;
    }
    Ok(outcome(
        exact && ok && arcs >= 20,
        format!("solid params (8, 2): {exact}; {arcs} arcs, worst nu {worst:.4}"),
    ))
}

fn chain_suite() -> Result<Outcome, String> {
    let r = run(r#"{"name":"chain-suite","samples":100,"seed":6,"budget_secs":10000,"params":{"c":1}}"#)?;
    let links = column(&r, "links");
    let worst = r.rows.iter().filter_map(|row| row.values[links]).fold(0.0, f64::max);
    let exact = chain_image_bound(1.0, 2.0).map_err(|e| e.to_string())?;
    let pass = r.passed() && evaluated(&r) == 101 && worst <= 9.0 && exact == 9216.0;
    Ok(outcome(pass, format!("max links {worst}, chain bound {exact}")))
}

fn slit() -> Result<Outcome, String> {
    let r = run(r#"{"name":"slit-counterexample","samples":1,"resolution":0.01,"seed":0,"budget_secs":10000}"#)?;
    let (q, j) = (column(&r, "quasiconvexity"), column(&r, "john_cone"));
    let pts: Vec<_> = r.rows.iter().filter(|row| row.label != "trend").collect();
    let qs: Vec<f64> = pts.iter().map(|row| row.values[q].unwrap_or(f64::NAN)).collect();
    let john = pts.iter().map(|row| row.values[j].unwrap_or(f64::NAN)).fold(0.0, f64::max);
    let increasing = qs.len() == 3 && qs.windows(2).all(|w| w[0] < w[1]);
    let last = qs.last().copied().unwrap_or(f64::NAN);
    let pass = r.passed() && increasing && last >= 25.0 && john <= 10.0;
    Ok(outcome(pass, format!("quasiconvexity {qs:.3?}, max john cone {john:.3}")))
}

fn subinvariance() -> Result<Outcome, String> {
    let r = run(r#"{"name":"subinvariance","samples":100,"resolution":0.02,"seed":3,"budget_secs":10000,"params":{"fine_resolution":0.01}}"#)?;
    let last = r.rows.last().ok_or("no rows")?;
    let v = |i: usize| last.values[i].unwrap_or(f64::NAN);
    let (bc, bf, drift) = (v(0), v(1), v(2));
    let pass = r.passed() && last.label == "drift" && bc.is_finite() && bf.is_finite() && drift <= 0.15;
    Ok(outcome(pass, format!("b {bc:.4} at 0.02, {bf:.4} at 0.01, drift {drift:.4}")))
}

fn short_arc_image() -> Result<Outcome, String> {
    let r = run(r#"{"name":"short-arc-image","samples":50,"resolution":0.05,"seed":4,"budget_secs":10000}"#)?;
    let near = r
        .rows
        .iter()
        .filter(|row| row.values.iter().skip(6).any(|v| *v == Some(1.0)))
        .count();
    let pass = r.passed() && evaluated(&r) == 50;
    Ok(outcome(
        pass,
        format!("{} violations over {} arcs ({near} near enough for the bound)", r.summary.violations, evaluated(&r)),
    ))
}

fn main() -> ExitCode {
    let ball = run(&bounds_config(r#"{"kind":"ball","params":{"center":[0,0],"radius":1}}"#, ""));
    let with_ball = |f: fn(&ExperimentReport) -> Result<Outcome, String>| match &ball {
        Ok(b) => f(b),
        Err(e) => Err(e.clone()),
    };
    let results = [
        ("1 half-space oracle equivalence", halfspace_oracle()),
        ("2 quadrature exactness", quadrature_exactness()),
        ("3 inequality suite", with_ball(inequality_suite)),
        ("4 uniform-domain bound on the ball", with_ball(uniform_bound_on_ball)),
        ("5 solidity of short arcs", solidity()),
        ("6 chain suite", chain_suite()),
        ("7 slit disk counterexample", slit()),
        ("8 subinvariance", subinvariance()),
        ("9 short-arc images", short_arc_image()),
    ];
    let mut failed = 0;
    for (name, res) in results {
        let o = res.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failed += usize::from(!o.pass);
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
