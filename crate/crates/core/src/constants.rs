//! Deterministic quadrature of the computable constants.
//!
//! Everything in this module is a closed-form integral or finite sum in the
//! scheme symbols `(f, g, h)` or a mollifier profile. Integrands are always
//! coded in their subtracted/symmetrized forms: the naive forms of the vertex
//! integral and the cancellation integral diverge, and the manipulations that
//! tame them (subtracting the zero-mode value, symmetrizing the double sum)
//! are part of the computed object.

use thiserror::Error;

use crate::grid::GridSpec;
use crate::noise::Mollifier;
use crate::quad::{integrate, integrate_piecewise, QuadError, QuadratureSpec};
use crate::scheme::Scheme;

#[derive(Debug, Error)]
pub enum ConstError {
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("scheme '{0}' fails hypothesis validation:\n{1}")]
    InvalidScheme(String, String),
    #[error("{0}")]
    BadInput(String),
    #[error("truncation tail bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    TailTooLarge { bound: f64, tol: f64 },
}

/// Truncation parameters for kernel integrals.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    /// Wavenumber truncation of mode sums (`>= 64`).
    pub k_trunc: i64,
    /// Time truncation of the `sigma` integrals.
    pub t_trunc: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            k_trunc: 256,
            t_trunc: 40.0,
        }
    }
}

/// Radius below which removable singularities are replaced by their limit
/// values inside integrands.
const LIMIT_RADIUS: f64 = 1e-6;

/// Transport correction constant of a scheme:
///
/// ```text
///   c = -(4 pi)^{-1} int_0^pi  [Im(g(x) h_bar(x)) / x]
///                            * [h(x,-x) |g(x)|^2 / f(x)^2]  dx
/// ```
///
/// with `h_bar(x) = h(x, 0)` and the `x -> 0` limit of the first factor
/// substituted from the measure moments (the integrand is continuous there).
pub fn correction_constant(scheme: &Scheme, quad: &QuadratureSpec) -> Result<f64, ConstError> {
    let report = scheme.validate();
    if !report.all_pass() {
        return Err(ConstError::InvalidScheme(
            scheme.name.clone(),
            report.summary(),
        ));
    }
    let symbols = scheme.symbols();
    let limit0 = symbols.im_g_hbar_over_x_limit();
    let integrand = |x: f64| -> f64 {
        if x < LIMIT_RADIUS {
            return limit0;
        }
        let g = symbols.g(x);
        let first = (g * symbols.h_bar(x)).im / x;
        let second = symbols.h(x, -x).re * g.norm_sqr() / symbols.f(x).powi(2);
        first * second
    };
    let r = integrate(integrand, 0.0, std::f64::consts::PI, quad)?;
    Ok(-r.value / (4.0 * std::f64::consts::PI))
}

/// Continuum and lattice forms of the renormalization constant of the
/// mollified equation.
#[derive(Debug, Clone, Copy)]
pub struct RenormalizationConstant {
    /// `(4 pi eps_reg)^{-1} int phi^2`.
    pub continuum: f64,
    /// `(4 pi)^{-1} sum_{|k| < N/2} phi(eps_reg k)^2` on the grid tied to
    /// `eps_reg` (odd `N` closest to `2 pi / eps_reg`).
    pub lattice_sum: f64,
    /// The tied grid size.
    pub lattice_n: usize,
}

/// The mode sum `(4 pi)^{-1} sum_{|k| < N/2} phi(eps_reg k)^2` on an
/// arbitrary grid. This is the constant subtracted from the mollified
/// square-gradient dynamics.
pub fn lattice_renorm_sum(m: &Mollifier, eps_reg: f64, grid: &GridSpec) -> f64 {
    grid.modes()
        .map(|k| m.phi(eps_reg * k as f64).powi(2))
        .sum::<f64>()
        / (4.0 * std::f64::consts::PI)
}

pub fn renormalization_constant(
    m: &Mollifier,
    eps_reg: f64,
    quad: &QuadratureSpec,
) -> Result<RenormalizationConstant, ConstError> {
    if eps_reg <= 0.0 {
        return Err(ConstError::BadInput(format!(
            "eps_reg must be positive, got {eps_reg}"
        )));
    }
    let r = m.support_radius();
    let phi_sq = integrate_piecewise(|x| m.phi(x).powi(2), -r, r, &[0.0], quad)?;
    let continuum = phi_sq.value / (4.0 * std::f64::consts::PI * eps_reg);

    let mut n = (2.0 * std::f64::consts::PI / eps_reg).round().max(1.0) as usize;
    if n % 2 == 0 {
        n += 1;
    }
    let grid = GridSpec::new(n).expect("odd by construction");
    let lattice_sum = lattice_renorm_sum(m, eps_reg, &grid);
    Ok(RenormalizationConstant {
        continuum,
        lattice_sum,
        lattice_n: n,
    })
}

/// `L^1`-in-time norm of the subtracted vertex function together with the
/// truncation tail bound.
#[derive(Debug, Clone, Copy)]
pub struct VertexL1 {
    pub value: f64,
    /// Upper bound on mass lost to the time truncation.
    pub tail_bound: f64,
}

/// Heat-flow derivative kernel `H_sigma(m) = i m e^{-m^2 sigma}` (purely
/// imaginary); this returns the imaginary part.
fn h_kernel_im(m: f64, sigma: f64) -> f64 {
    m * (-m * m * sigma).exp()
}

/// Subtracted vertex function, imaginary part:
///
/// ```text
///   V(sigma, k) = sum_{k2 in E, |k2| <= K} [H_sigma(k + k2) - H_sigma(k2)]
///                 * e^{-sigma k2^2}
/// ```
///
/// The subtraction of the `k = 0` term is what makes the `k2` sum absolutely
/// convergent; the unsubtracted sum diverges logarithmically.
fn vertex_integrand(sigma: f64, k: i64, k_trunc: i64) -> f64 {
    let kf = k as f64;
    let mut acc = 0.0;
    for k2 in 1..=k_trunc {
        let k2f = k2 as f64;
        let damp = (-sigma * k2f * k2f).exp();
        acc += (h_kernel_im(kf + k2f, sigma) - h_kernel_im(k2f, sigma)) * damp;
        acc += (h_kernel_im(kf - k2f, sigma) - h_kernel_im(-k2f, sigma)) * damp;
    }
    acc
}

/// `int_0^{T} |V(sigma, k)| d sigma` with the `k2` sum truncated at
/// `params.k_trunc`.
pub fn vertex_v5_l1(
    k: i64,
    params: &KernelParams,
    quad: &QuadratureSpec,
) -> Result<VertexL1, ConstError> {
    if params.k_trunc < 64 {
        return Err(ConstError::BadInput(format!(
            "k_trunc must be >= 64, got {}",
            params.k_trunc
        )));
    }
    if k == 0 {
        // The subtracted integrand vanishes identically (odd in k2).
        return Ok(VertexL1 {
            value: 0.0,
            tail_bound: 0.0,
        });
    }
    // Tail of the time integral: term by term,
    //   int_T^inf |m| e^{-(m^2 + k2^2) sigma} d sigma
    //     = |m| e^{-(m^2 + k2^2) T} / (m^2 + k2^2).
    let t = params.t_trunc;
    let mut tail = 0.0;
    for k2 in 1..=params.k_trunc {
        for s in [1.0f64, -1.0] {
            let k2f = s * k2 as f64;
            let m1 = (k as f64 + k2f).abs();
            let d1 = m1 * m1 + k2f * k2f;
            let d2 = 2.0 * k2f * k2f;
            if d1 > 0.0 {
                tail += m1 * (-d1 * t).exp() / d1;
            }
            tail += k2f.abs() * (-d2 * t).exp() / d2;
        }
    }
    if tail > quad.abs_tol.max(1e-14) {
        return Err(ConstError::TailTooLarge {
            bound: tail,
            tol: quad.abs_tol,
        });
    }

    let r = integrate(
        |sigma| vertex_integrand(sigma, k, params.k_trunc).abs(),
        0.0,
        t,
        quad,
    )?;
    Ok(VertexL1 {
        value: r.value,
        tail_bound: tail,
    })
}

/// Zero-chaos component of the discrete resonant product at time `t`:
/// the exact finite sum
///
/// ```text
///   -(2 pi)^{-1} eps sum_{0 < k < N/2}  [Im(g h_bar)(eps k) / (eps k)]
///       * [h(eps k, -eps k) |g(eps k)|^2 / (2 f(eps k)^2)]
///       * (1 - e^{-2 k^2 f(eps k) t}),
/// ```
///
/// which converges to the correction constant as `N -> inf`, `t -> inf`.
pub fn discrete_zero_chaos(scheme: &Scheme, n: usize, t: f64) -> Result<f64, ConstError> {
    if t <= 0.0 {
        return Err(ConstError::BadInput(format!("t must be positive, got {t}")));
    }
    let report = scheme.validate();
    if !report.all_pass() {
        return Err(ConstError::InvalidScheme(
            scheme.name.clone(),
            report.summary(),
        ));
    }
    let grid = GridSpec::new(n).map_err(|e| ConstError::BadInput(e.to_string()))?;
    let symbols = scheme.symbols();
    let eps = grid.eps();
    let limit0 = symbols.im_g_hbar_over_x_limit();
    let mut sum = 0.0;
    for k in 1..=grid.max_mode() {
        let x = eps * k as f64;
        let g = symbols.g(x);
        let first = if x < LIMIT_RADIUS {
            limit0
        } else {
            (g * symbols.h_bar(x)).im / x
        };
        let f = symbols.f(x);
        let second = symbols.h(x, -x).re * g.norm_sqr() / (2.0 * f * f);
        let relax = 1.0 - (-2.0 * (k as f64).powi(2) * f * t).exp();
        sum += first * second * relax;
    }
    Ok(-eps * sum / (2.0 * std::f64::consts::PI))
}

/// The two faces of the quartic cancellation: the fully symmetrized mode sum
/// (which vanishes term by term) and the regularized limit integral (finite),
/// both per unit time.
#[derive(Debug, Clone, Copy)]
pub struct Cancellation {
    /// Symmetrized truncated double sum; zero up to rounding.
    pub symmetric_zero: f64,
    /// Sum of the magnitudes of the individual family contributions; the
    /// natural scale for `symmetric_zero`.
    pub scale: f64,
    /// `lim I_eps / t`: the finite two-dimensional integral left after the
    /// symmetrization, with the mollifier profile inserted.
    pub regularized_limit: f64,
}

/// Symmetrized integrand of the regularized limit.
fn cancellation_integrand(m: &Mollifier, k1: f64, k2: f64) -> f64 {
    let s = k1 + k2;
    let p1 = m.phi(k1).powi(2);
    let p2 = m.phi(k2).powi(2);
    let ps = m.phi(s).powi(2);
    let denom = k1 * k1 + k2 * k2 + s * s;
    if denom < 1e-12 {
        return 0.0;
    }
    let ratio = if s.abs() < LIMIT_RADIUS {
        // lim_{s -> 0} phi^2(s) (k2 - k1)(phi^2(k1) - phi^2(k2)) / s
        //   = -2 k1 d(phi^2)(k1), using phi^2(s) -> 1.
        -2.0 * k1 * m.phi_sq_derivative(k1)
    } else {
        ps * (k2 - k1) * (p1 - p2) / s
    };
    let bracket = 0.5 * (p1 + p2) * ps - p1 * p2 + 0.5 * ratio;
    -2.0 * bracket / denom
}

pub fn kpz_cancellation(
    m: &Mollifier,
    k_trunc: i64,
    quad: &QuadratureSpec,
) -> Result<Cancellation, ConstError> {
    // Symmetrized mode sum. After symmetrizing the ladder family over
    // (sigma', sigma'') and (k1, k2), both families carry the same positive
    // stationary time factor and opposite coefficients +-2 k^2, so each
    // (k1, k2) term cancels exactly.
    let mut symmetric_zero = 0.0;
    let mut scale = 0.0;
    for k1 in -k_trunc..=k_trunc {
        if k1 == 0 {
            continue;
        }
        for k2 in -k_trunc..=k_trunc {
            if k2 == 0 {
                continue;
            }
            let (k1f, k2f) = (k1 as f64, k2 as f64);
            let s = k1f + k2f;
            // k^2 * (stationary time factor) stays finite as k -> 0.
            let weighted = 1.0 / (k1f * k1f + k2f * k2f + s * s);
            let loop_term = 2.0 * weighted;
            let ladder_term = -2.0 * weighted;
            symmetric_zero += loop_term + ladder_term;
            scale += loop_term.abs() + ladder_term.abs();
        }
    }

    // Regularized limit: iterated adaptive quadrature over the support of
    // the symmetrized integrand, split at the profile's jump/kink lines.
    let r = m.support_radius();
    let span = 2.0 * r;
    let inner_quad = QuadratureSpec {
        abs_tol: quad.abs_tol / (8.0 * span),
        max_subdivisions: quad.max_subdivisions,
    };
    let outer = integrate_piecewise(
        |k1| {
            let breaks = [-r, r, -k1, -r - k1, r - k1];
            integrate_piecewise(
                |k2| cancellation_integrand(m, k1, k2),
                -span,
                span,
                &breaks,
                &inner_quad,
            )
            .map(|res| res.value)
            .unwrap_or(f64::NAN)
        },
        -span,
        span,
        &[-r, 0.0, r],
        quad,
    )?;

    Ok(Cancellation {
        symmetric_zero,
        scale,
        regularized_limit: outer.value,
    })
}
