//! Discretization families `(Delta_N, D_N, B_N)` described by finite measures.
//!
//! A scheme is a triple of measures: a finite signed measure `pi` on `Z` for
//! the Laplacian, a finite signed measure `nu` on `Z` for the derivative, and
//! a probability measure `mu` on `Z^2` for the bilinear form:
//!
//! ```text
//!   Delta_N u(x) = eps^{-2} sum_y pi_y  u(x + eps y)
//!   D_N u(x)     = eps^{-1} sum_y nu_y  u(x + eps y)
//!   B_N(u,v)(x)  =          sum_{y,z} mu_{y,z} u(x + eps y) v(x + eps z)
//! ```
//!
//! In Fourier variables the operators are multipliers built from the symbols
//!
//! ```text
//!   f(x) = sum_y pi_y e^{ixy} / (-x^2),   g(x) = sum_y nu_y e^{ixy} / (ix),
//!   h(x1,x2) = sum_{y,z} mu_{y,z} e^{i(x1 y + x2 z)},
//! ```
//!
//! evaluated from the measure sums with the `x -> 0` singularities removed
//! analytically (the quadratures downstream sample them arbitrarily close to
//! zero).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{dft_forward, dft_inverse, fold_mode, LatticeField, SpectralField};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("kappa and lambda must be nonnegative with kappa + lambda > 0")]
    BadSasamotoSpohnWeights,
    #[error("scheme JSON rejected: {0}")]
    BadJson(String),
    #[error("scheme '{0}' fails hypothesis validation:\n{1}")]
    InvalidScheme(String, String),
}

/// Finite signed measure on `Z`, stored as sorted `(offset, weight)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    weights: Vec<(i64, f64)>,
}

impl SignedMeasure {
    pub fn new(mut weights: Vec<(i64, f64)>) -> Self {
        weights.sort_by_key(|&(y, _)| y);
        weights.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
        weights.retain(|&(_, w)| w != 0.0);
        SignedMeasure { weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights.iter().copied()
    }

    pub fn weight_at(&self, y: i64) -> f64 {
        self.weights
            .binary_search_by_key(&y, |&(o, _)| o)
            .map(|i| self.weights[i].1)
            .unwrap_or(0.0)
    }

    /// `sum_y y^p w_y`.
    pub fn moment(&self, p: u32) -> f64 {
        self.weights
            .iter()
            .map(|&(y, w)| (y as f64).powi(p as i32) * w)
            .sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.weights
            .iter()
            .all(|&(y, w)| (self.weight_at(-y) - w).abs() <= tol)
    }
}

/// Probability measure on `Z^2`, stored as `(y, z, weight)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMeasure {
    weights: Vec<(i64, i64, f64)>,
}

impl PairMeasure {
    pub fn new(mut weights: Vec<(i64, i64, f64)>) -> Self {
        weights.sort_by_key(|&(y, z, _)| (y, z));
        weights.dedup_by(|a, b| {
            if a.0 == b.0 && a.1 == b.1 {
                b.2 += a.2;
                true
            } else {
                false
            }
        });
        weights.retain(|&(_, _, w)| w != 0.0);
        PairMeasure { weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        self.weights.iter().copied()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().map(|&(_, _, w)| w).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(|&(_, _, w)| w >= 0.0)
    }

    pub fn weight_at(&self, y: i64, z: i64) -> f64 {
        self.weights
            .binary_search_by_key(&(y, z), |&(a, b, _)| (a, b))
            .map(|i| self.weights[i].2)
            .unwrap_or(0.0)
    }

    pub fn is_exchange_symmetric(&self, tol: f64) -> bool {
        self.weights
            .iter()
            .all(|&(y, z, w)| (self.weight_at(z, y) - w).abs() <= tol)
    }

    /// `sum_{y,z} w_{y,z} y` (equals the `z` moment by exchange symmetry).
    pub fn first_moment_left(&self) -> f64 {
        self.weights.iter().map(|&(y, _, w)| y as f64 * w).sum()
    }
}

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

/// Machine-checkable validation of the scheme hypotheses. Failures are
/// reported, not thrown, so diagnostics can be printed.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub hf: Check,
    pub hg: Check,
    pub hh: Check,
    /// Numerical lower bound for `f` on `[-pi, pi]` (grid search).
    pub c_f: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.hf.pass && self.hg.pass && self.hh.pass
    }

    pub fn summary(&self) -> String {
        format!(
            "(H_f): {} [{}]\n(H_g): {} [{}]\n(H_h): {} [{}]\nc_f >= {:.6}",
            if self.hf.pass { "pass" } else { "FAIL" },
            self.hf.detail,
            if self.hg.pass { "pass" } else { "FAIL" },
            self.hg.detail,
            if self.hh.pass { "pass" } else { "FAIL" },
            self.hh.detail,
            self.c_f,
        )
    }
}

/// JSON wire format: `{"pi": [[offset, weight],...], "nu": [...],
/// "mu": [[y, z, weight],...], "name": "..."}`.
#[derive(Serialize, Deserialize)]
struct SchemeJson {
    pi: Vec<(i64, f64)>,
    nu: Vec<(i64, f64)>,
    mu: Vec<(i64, i64, f64)>,
    name: String,
}

/// A named discretization triple `(pi, nu, mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub name: String,
    pub pi: SignedMeasure,
    pub nu: SignedMeasure,
    pub mu: PairMeasure,
}

impl Scheme {
    /// Naive preset: discrete Laplacian, backward difference, pointwise
    /// product. Symbols `f(x) = 2(1-cos x)/x^2`, `g(x) = (1 - e^{-ix})/(ix)`,
    /// `h = 1`.
    pub fn preset_standard() -> Scheme {
        Scheme {
            name: "standard".into(),
            pi: SignedMeasure::new(vec![(-1, 1.0), (0, -2.0), (1, 1.0)]),
            nu: SignedMeasure::new(vec![(0, 1.0), (-1, -1.0)]),
            mu: PairMeasure::new(vec![(0, 0, 1.0)]),
        }
    }

    /// Sasamoto-Spohn family: same `pi`, `nu` as the naive preset, bilinear
    /// form averaging products over `{0,1}^2` with weights `kappa` on the
    /// diagonal and `lambda` off it. `kappa = 1, lambda = 1/2` is the
    /// classical Sasamoto-Spohn discretization.
    pub fn preset_sasamoto_spohn(kappa: f64, lambda: f64) -> Result<Scheme, SchemeError> {
        if !(kappa >= 0.0 && lambda >= 0.0 && kappa + lambda > 0.0) {
            return Err(SchemeError::BadSasamotoSpohnWeights);
        }
        let z = 2.0 * (kappa + lambda);
        Ok(Scheme {
            name: format!("sasamoto_spohn(kappa={kappa},lambda={lambda})"),
            pi: SignedMeasure::new(vec![(-1, 1.0), (0, -2.0), (1, 1.0)]),
            nu: SignedMeasure::new(vec![(0, 1.0), (-1, -1.0)]),
            mu: PairMeasure::new(vec![
                (0, 0, kappa / z),
                (1, 1, kappa / z),
                (0, 1, lambda / z),
                (1, 0, lambda / z),
            ]),
        })
    }

    /// Check the hypotheses on the measures. Grid-search resolution for the
    /// positivity of `f` is `10^4` points on `[-pi, pi]`.
    pub fn validate(&self) -> ValidationReport {
        let tol = 1e-12;
        let mass = self.pi.moment(0);
        let second = self.pi.moment(2);
        let sym = self.pi.is_symmetric(tol);
        let symbols = self.symbols();
        let mut c_f = f64::INFINITY;
        let m = 10_000;
        for i in 0..=m {
            let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            c_f = c_f.min(symbols.f(x));
        }
        let hf_pass = sym && mass.abs() <= tol && (second - 2.0).abs() <= tol && c_f > 0.0;
        let hf = Check {
            pass: hf_pass,
            detail: format!(
                "symmetric={sym}, mass={mass:.3e}, second_moment={second:.12}, min f={c_f:.6}"
            ),
        };

        let g_mass = self.nu.moment(0);
        let g_first = self.nu.moment(1);
        let hg = Check {
            pass: g_mass.abs() <= tol && (g_first - 1.0).abs() <= tol,
            detail: format!("mass={g_mass:.3e}, first_moment={g_first:.12}"),
        };

        let nonneg = self.mu.is_nonnegative();
        let mu_mass = self.mu.total_mass();
        let mu_sym = self.mu.is_exchange_symmetric(tol);
        let hh = Check {
            pass: nonneg && (mu_mass - 1.0).abs() <= tol && mu_sym,
            detail: format!("nonnegative={nonneg}, mass={mu_mass:.12}, exchange_symmetric={mu_sym}"),
        };

        ValidationReport { hf, hg, hh, c_f }
    }

    /// Closed-form symbols of this scheme.
    pub fn symbols(&self) -> SymbolTable {
        SymbolTable::Measures {
            pi: self.pi.clone(),
            nu: self.nu.clone(),
            mu: self.mu.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let wire = SchemeJson {
            pi: self.pi.iter().collect(),
            nu: self.nu.iter().collect(),
            mu: self.mu.iter().collect(),
            name: self.name.clone(),
        };
        serde_json::to_string_pretty(&wire).expect("scheme serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Scheme, SchemeError> {
        let wire: SchemeJson =
            serde_json::from_str(text).map_err(|e| SchemeError::BadJson(e.to_string()))?;
        Ok(Scheme {
            name: wire.name,
            pi: SignedMeasure::new(wire.pi),
            nu: SignedMeasure::new(wire.nu),
            mu: PairMeasure::new(wire.mu),
        })
    }

    /// Physical-space stencils, the defining formulas. These are the oracles
    /// the spectral implementations are tested against.
    pub fn laplacian_stencil(&self, u: &LatticeField) -> LatticeField {
        let grid = *u.grid();
        let n = grid.size() as i64;
        let inv_eps2 = 1.0 / (grid.eps() * grid.eps());
        let mut out = LatticeField::zeros(grid);
        for l in 0..grid.size() {
            let mut acc = Complex64::default();
            for (y, w) in self.pi.iter() {
                let j = (l as i64 + y).rem_euclid(n) as usize;
                acc += w * u.values()[j];
            }
            out.values_mut()[l] = inv_eps2 * acc;
        }
        out
    }

    pub fn derivative_stencil(&self, u: &LatticeField) -> LatticeField {
        let grid = *u.grid();
        let n = grid.size() as i64;
        let inv_eps = 1.0 / grid.eps();
        let mut out = LatticeField::zeros(grid);
        for l in 0..grid.size() {
            let mut acc = Complex64::default();
            for (y, w) in self.nu.iter() {
                let j = (l as i64 + y).rem_euclid(n) as usize;
                acc += w * u.values()[j];
            }
            out.values_mut()[l] = inv_eps * acc;
        }
        out
    }

    pub fn bilinear_stencil(&self, u: &LatticeField, v: &LatticeField) -> LatticeField {
        let grid = *u.grid();
        let n = grid.size() as i64;
        let mut out = LatticeField::zeros(grid);
        for l in 0..grid.size() {
            let mut acc = Complex64::default();
            for (y, z, w) in self.mu.iter() {
                let a = (l as i64 + y).rem_euclid(n) as usize;
                let b = (l as i64 + z).rem_euclid(n) as usize;
                acc += w * u.values()[a] * v.values()[b];
            }
            out.values_mut()[l] = acc;
        }
        out
    }
}

/// Closed-form Fourier symbols. `Continuum` stands for the exact operators
/// of the torus (`f = g = 1`, `h = 1`), used where the mollified continuum
/// equations are integrated rather than a lattice scheme.
#[derive(Debug, Clone)]
pub enum SymbolTable {
    Measures {
        pi: SignedMeasure,
        nu: SignedMeasure,
        mu: PairMeasure,
    },
    Continuum,
}

/// `(1 - cos u)/u^2` with the removable singularity filled.
fn one_minus_cos_over_sq(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        0.5 - u * u / 24.0
    } else {
        let s = (0.5 * u).sin();
        2.0 * s * s / (u * u)
    }
}

/// `sin v / v` with the removable singularity filled.
fn sinc(v: f64) -> f64 {
    if v.abs() < 1e-8 {
        1.0 - v * v / 6.0
    } else {
        v.sin() / v
    }
}

/// `(e^{iu} - 1)/(iu) = e^{iu/2} sinc(u/2)` with the singularity filled.
fn expm1i_over_iu(u: f64) -> Complex64 {
    Complex64::from_polar(sinc(0.5 * u), 0.5 * u)
}

impl SymbolTable {
    /// Laplacian symbol; real, even, `f(0) = 1` under (H_f).
    pub fn f(&self, x: f64) -> f64 {
        match self {
            SymbolTable::Continuum => 1.0,
            SymbolTable::Measures { pi, .. } => pi
                .iter()
                .map(|(y, w)| {
                    let y = y as f64;
                    w * y * y * one_minus_cos_over_sq(x * y)
                })
                .sum(),
        }
    }

    /// Derivative symbol; `g(0) = 1`, `g(-x) = conj(g(x))` under (H_g).
    pub fn g(&self, x: f64) -> Complex64 {
        match self {
            SymbolTable::Continuum => Complex64::new(1.0, 0.0),
            SymbolTable::Measures { nu, .. } => nu
                .iter()
                .map(|(y, w)| {
                    let y = y as f64;
                    w * y * expm1i_over_iu(x * y)
                })
                .sum(),
        }
    }

    /// Two-point symbol of the bilinear form; `h(0,0) = 1` under (H_h).
    pub fn h(&self, x1: f64, x2: f64) -> Complex64 {
        match self {
            SymbolTable::Continuum => Complex64::new(1.0, 0.0),
            SymbolTable::Measures { mu, .. } => mu
                .iter()
                .map(|(y, z, w)| w * Complex64::from_polar(1.0, x1 * y as f64 + x2 * z as f64))
                .sum(),
        }
    }

    /// `h_bar(x) = h(x, 0)`.
    pub fn h_bar(&self, x: f64) -> Complex64 {
        self.h(x, 0.0)
    }

    /// The limit of `Im(g(x) h_bar(x)) / x` as `x -> 0`, from the first-order
    /// expansions of the symbols in the measure moments.
    pub fn im_g_hbar_over_x_limit(&self) -> f64 {
        match self {
            SymbolTable::Continuum => 0.0,
            SymbolTable::Measures { nu, mu, .. } => {
                0.5 * nu.moment(2) + mu.first_moment_left()
            }
        }
    }

    /// The bilinear form as a physical stencil; the continuum symbols reduce
    /// to the pointwise product.
    fn stencil_weights(&self) -> Vec<(i64, i64, f64)> {
        match self {
            SymbolTable::Continuum => vec![(0, 0, 1.0)],
            SymbolTable::Measures { mu, .. } => mu.iter().collect(),
        }
    }
}

/// Fourier multiplier of `Delta_N`: `out(k) = -k^2 f(eps k) u(k)`.
pub fn apply_laplacian(symbols: &SymbolTable, u: &SpectralField) -> SpectralField {
    let eps = u.grid().eps();
    u.map_modes(|k, c| {
        let kf = k as f64;
        -kf * kf * symbols.f(eps * kf) * c
    })
}

/// Fourier multiplier of `D_N`: `out(k) = i k g(eps k) u(k)`.
pub fn apply_derivative(symbols: &SymbolTable, u: &SpectralField) -> SpectralField {
    let eps = u.grid().eps();
    u.map_modes(|k, c| {
        let kf = k as f64;
        Complex64::new(0.0, kf) * symbols.g(eps * kf) * c
    })
}

/// Reference bilinear form in Fourier variables, carrying the lattice folding:
///
/// ```text
///   out(k) = (2 pi)^{-1} sum_{l in K_N} u(l) v(m) h(eps l, eps m),
///   m = fold(k - l).
/// ```
///
/// This is `O(N^2)`; [`apply_bilinear_fast`] is the transform-based path that
/// must agree with it to 1e-10.
pub fn apply_bilinear(symbols: &SymbolTable, u: &SpectralField, v: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    assert_eq!(grid, *v.grid(), "operands must share a grid");
    let eps = grid.eps();
    let half = grid.max_mode();
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    let mut out = SpectralField::zeros(grid, u.real_flag() && v.real_flag());
    for k in -half..=half {
        let mut acc = Complex64::default();
        for l in -half..=half {
            let m = fold_mode(k - l, &grid);
            acc += u.coeff(l) * v.coeff(m) * symbols.h(eps * l as f64, eps * m as f64);
        }
        out.set_coeff(k, scale * acc);
    }
    out
}

/// Transform-based bilinear form: synthesize both fields on the lattice,
/// combine with the defining stencil, transform back. Exactly the lattice
/// operator, hence equal to the folded spectral sum up to rounding.
pub fn apply_bilinear_fast(
    symbols: &SymbolTable,
    u: &SpectralField,
    v: &SpectralField,
) -> SpectralField {
    let grid = *u.grid();
    assert_eq!(grid, *v.grid(), "operands must share a grid");
    let n = grid.size() as i64;
    let up = dft_inverse(u);
    let vp = dft_inverse(v);
    let mut prod = LatticeField::zeros(grid);
    for (y, z, w) in symbols.stencil_weights() {
        for l in 0..grid.size() {
            let a = (l as i64 + y).rem_euclid(n) as usize;
            let b = (l as i64 + z).rem_euclid(n) as usize;
            prod.values_mut()[l] += w * up.values()[a] * vp.values()[b];
        }
    }
    let mut out = dft_forward(&prod);
    out.set_real_flag(u.real_flag() && v.real_flag());
    out
}
