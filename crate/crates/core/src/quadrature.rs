//! Adaptive quadrature on an interval.

use crate::error::Result;

const MIN_DEPTH: u32 = 3;
const MAX_DEPTH: u32 = 48;

/// Integral estimate with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// Each panel is bisected until the two-half estimate agrees with the
/// one-panel estimate to within its share of `rel_tol × |integral|`. The
/// Richardson-corrected value is returned together with the accumulated
/// difference bound. `f` may fail, which aborts the integration.
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut evals = 0usize;
    let mut eval = |t: f64, evals: &mut usize| {
        *evals += 1;
        f(t)
    };
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let fa = eval(a, &mut evals)?;
    let fm = eval(0.5 * (a + b), &mut evals)?;
    let fb = eval(b, &mut evals)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // crude magnitude from a 9-point pass so the absolute target is sensible
    let mut scale = whole.abs();
    {
        let h = (b - a) / 8.0;
        let mut s = 0.0;
        for k in 0..=8 {
            let w = if k == 0 || k == 8 { 0.5 } else { 1.0 };
            s += w * eval(a + k as f64 * h, &mut evals)?;
        }
        scale = scale.max((s * h).abs());
    }
    let eps = (rel_tol * scale).max(f64::MIN_POSITIVE);
    let mut err = 0.0;
    let value = recurse(&mut |t| eval(t, &mut evals), a, b, fa, fm, fb, whole, eps, 0, &mut err)?;
    Ok(Quadrature { value, error: err, evaluations: evals })
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    err: &mut f64,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    let converged = depth >= MIN_DEPTH && diff.abs() <= 15.0 * eps;
    if converged || depth >= MAX_DEPTH || m <= a || m >= b {
        *err += diff.abs() / 15.0;
        return Ok(left + right + diff / 15.0);
    }
    let l = recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth + 1, err)?;
    let r = recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth + 1, err)?;
    Ok(l + r)
}
