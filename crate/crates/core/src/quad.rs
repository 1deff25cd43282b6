//! Adaptive composite Simpson quadrature.
//!
//! Integrands with removable singularities are expected to substitute their
//! limit values before reaching the rule (the callers in [`crate::constants`]
//! do exactly that); the rule itself never divides by vanishing quantities.

use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            max_subdivisions: 100_000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("tolerance {tol:.3e} not reached within {max} subdivisions; achieved estimate {estimate:.12e} (error ~ {error_estimate:.3e})")]
    ToleranceNotReached {
        tol: f64,
        max: usize,
        estimate: f64,
        error_estimate: f64,
    },
    #[error("integrand produced a non-finite value at x = {0}")]
    NonFinite(f64),
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson on `[a, b]` with Richardson correction of accepted
/// panels. The per-panel acceptance test is the classical `15 tol_panel`
/// criterion with the tolerance split proportionally to panel width.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult, QuadError> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 0,
        });
    }
    let eval = |x: f64| -> Result<f64, QuadError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite(x))
        }
    };

    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
    }

    let fa = eval(a)?;
    let fb = eval(b)?;
    let fm = eval(0.5 * (a + b))?;
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(fa, fm, fb, b - a),
        tol: spec.abs_tol,
    }];
    let mut value = 0.0;
    let mut error_estimate = 0.0;
    let mut subdivisions = 0usize;

    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = eval(0.5 * (p.a + m))?;
        let rm = eval(0.5 * (m + p.b))?;
        let left = simpson(p.fa, lm, p.fm, m - p.a);
        let right = simpson(p.fm, rm, p.fb, p.b - m);
        let delta = left + right - p.whole;
        // Minimum panel width guards against stalling on kinks.
        let tiny = (p.b - p.a).abs() < 1e-13 * (b - a).abs();
        if delta.abs() <= 15.0 * p.tol || tiny {
            value += left + right + delta / 15.0;
            error_estimate += delta.abs() / 15.0;
            continue;
        }
        subdivisions += 1;
        if subdivisions > spec.max_subdivisions {
            // Flush whatever we have for the achieved estimate.
            let mut est = value + left + right;
            for q in &stack {
                est += q.whole;
            }
            return Err(QuadError::ToleranceNotReached {
                tol: spec.abs_tol,
                max: spec.max_subdivisions,
                estimate: est,
                error_estimate: error_estimate + delta.abs(),
            });
        }
        let half_tol = 0.5 * p.tol;
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: lm,
            fb: p.fm,
            whole: left,
            tol: half_tol,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: rm,
            fb: p.fb,
            whole: right,
            tol: half_tol,
        });
    }

    Ok(QuadResult {
        value,
        error_estimate,
        subdivisions,
    })
}

/// Integrate over `[a, b]` split at interior breakpoints (known kinks or
/// jumps of the integrand), summing panel results.
pub fn integrate_piecewise<F: Fn(f64) -> f64 + Copy>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult, QuadError> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts.insert(0, a);
    pts.push(b);
    let mut total = QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        subdivisions: 0,
    };
    for w in pts.windows(2) {
        let r = integrate(f, w[0], w[1], spec)?;
        total.value += r.value;
        total.error_estimate += r.error_estimate;
        total.subdivisions += r.subdivisions;
    }
    Ok(total)
}
