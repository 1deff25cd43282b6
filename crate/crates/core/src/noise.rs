//! Reproducible space-time white noise in Fourier representation.
//!
//! Noise values are a pure function of `(seed, stream_id, counter)`, so
//! replica ensembles parallelize without shared state and rerunning a
//! configuration reproduces every draw bit for bit. One counter tick yields
//! one standard normal through the inverse distribution function.
//!
//! The per-mode variance convention is fixed here once: a white-noise
//! increment over `dt` carries `E|dW(k)|^2 = 2 pi dt` per Fourier mode, with
//! Hermitian symmetry and a real mode zero. Every downstream formula (the
//! stationary variance `pi |g|^2 / f`, the renormalization sums) is stated in
//! this convention.

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::grid::{GridSpec, SpectralField};
use crate::scheme::Scheme;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("scheme fails (H_f); the stationary variance 1/f is not defined:\n{0}")]
    SchemeNotDissipative(String),
    #[error("unknown mollifier preset '{0}' (available: indicator, bump)")]
    UnknownMollifier(String),
}

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based noise source; one `(seed, stream_id)` pair names an
/// independent stream, the counter indexes draws within it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
    stream_id: u64,
    counter: u64,
    key: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix64(mix64(seed) ^ stream_id.wrapping_mul(0xA24BAED4963EE407));
        NoiseStream {
            seed,
            stream_id,
            counter: 0,
            key,
        }
    }

    /// Derive the stream for replica `offset` of the same experiment.
    pub fn replica(&self, offset: u64) -> NoiseStream {
        NoiseStream::new(self.seed, self.stream_id.wrapping_add(offset))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter += 1;
        v
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via the inverse distribution function (one counter
    /// tick per draw; no rejection, no cached spare).
    pub fn standard_normal(&mut self) -> f64 {
        let u = self.uniform();
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(u)
    }

    /// Complex Gaussian with independent real and imaginary parts of the
    /// given variance each.
    pub fn complex_normal(&mut self, var_per_component: f64) -> Complex64 {
        let s = var_per_component.sqrt();
        let re = s * self.standard_normal();
        let im = s * self.standard_normal();
        Complex64::new(re, im)
    }
}

/// Even, bounded, compactly supported profile with `phi(0) = 1`, applied as a
/// Fourier multiplier `phi(eps_reg k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mollifier {
    /// Indicator of `[-1, 1]`.
    Indicator,
    /// `exp(1 - 1/(1 - x^2))` on `(-1, 1)`, zero outside; smooth and equal
    /// to 1 at the origin.
    Bump,
}

impl Mollifier {
    pub fn from_name(name: &str) -> Result<Mollifier, NoiseError> {
        match name {
            "indicator" => Ok(Mollifier::Indicator),
            "bump" => Ok(Mollifier::Bump),
            other => Err(NoiseError::UnknownMollifier(other.into())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mollifier::Indicator => "indicator",
            Mollifier::Bump => "bump",
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        match self {
            Mollifier::Indicator => {
                if x.abs() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Mollifier::Bump => {
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        1.0
    }

    /// Derivative of `phi^2`, used to fill removable singularities in the
    /// cancellation integrand. Zero almost everywhere for the indicator.
    pub fn phi_sq_derivative(&self, x: f64) -> f64 {
        match self {
            Mollifier::Indicator => 0.0,
            Mollifier::Bump => {
                if x.abs() < 1.0 {
                    let p2 = self.phi(x).powi(2);
                    let d = 1.0 - x * x;
                    -4.0 * x / (d * d) * p2
                } else {
                    0.0
                }
            }
        }
    }
}

/// One white-noise increment over `dt` on the mode set of `grid`:
/// independent across calls, Hermitian-symmetric, `E|dW(k)|^2 = 2 pi dt`
/// for every mode, with a real mode zero.
pub fn white_increment(
    grid: &GridSpec,
    dt: f64,
    stream: &mut NoiseStream,
) -> Result<SpectralField, NoiseError> {
    if dt <= 0.0 {
        return Err(NoiseError::NonPositiveDt(dt));
    }
    let mut out = SpectralField::zeros(*grid, true);
    let mode0 = (2.0 * std::f64::consts::PI * dt).sqrt() * stream.standard_normal();
    out.set_coeff(0, Complex64::new(mode0, 0.0));
    let var = std::f64::consts::PI * dt;
    for k in 1..=grid.max_mode() {
        let z = stream.complex_normal(var);
        out.set_coeff(k, z);
        out.set_coeff(-k, z.conj());
    }
    Ok(out)
}

/// Spectral mollification `out(k) = phi(eps_reg k) u(k)`.
pub fn apply_mollifier(m: &Mollifier, u: &SpectralField, eps_reg: f64) -> SpectralField {
    u.map_modes(|k, c| m.phi(eps_reg * k as f64) * c)
}

/// Stationary Ornstein-Uhlenbeck initial data for the linear part of the
/// lattice dynamics: independent modes with `E|X(k)|^2 = pi |g(eps k)|^2 /
/// f(eps k)` for `k != 0`, Hermitian-symmetric, mode zero pinned to 0.
pub fn stationary_ou_init(
    grid: &GridSpec,
    scheme: &Scheme,
    stream: &mut NoiseStream,
) -> Result<SpectralField, NoiseError> {
    let report = scheme.validate();
    if !report.hf.pass {
        return Err(NoiseError::SchemeNotDissipative(report.summary()));
    }
    Ok(stationary_ou_from_symbols(grid, &scheme.symbols(), stream))
}

/// Symbol-level form of [`stationary_ou_init`]; the caller vouches that `f`
/// stays positive on `[-pi, pi]`.
pub fn stationary_ou_from_symbols(
    grid: &GridSpec,
    symbols: &crate::scheme::SymbolTable,
    stream: &mut NoiseStream,
) -> SpectralField {
    let eps = grid.eps();
    let mut out = SpectralField::zeros(*grid, true);
    for k in 1..=grid.max_mode() {
        let x = eps * k as f64;
        let var_total = std::f64::consts::PI * symbols.g(x).norm_sqr() / symbols.f(x);
        let z = stream.complex_normal(0.5 * var_total);
        out.set_coeff(k, z);
        out.set_coeff(-k, z.conj());
    }
    out
}
