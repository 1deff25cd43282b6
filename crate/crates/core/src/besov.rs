//! Numerical Littlewood-Paley calculus.
//!
//! The dyadic partition of unity is pinned to one explicit construction so
//! block norms are reproducible: a smooth transition glued from `e^{-1/x}`,
//! `chi = 1` on `|x| <= 1`, `chi = 0` on `|x| >= 3/2`, and `rho(x) =
//! chi(x/2) - chi(x)`. Dyadic rescaling by powers of two is exact in binary
//! floating point, so the telescoping sum `chi + sum_j rho_j = 1` and the
//! two-apart support disjointness hold exactly on integer modes.
//!
//! Paraproducts operate on coefficient maps over all of `Z` (never folded
//! onto a lattice) so the decomposition `f*g = less + greater + resonant` is
//! exact; bridging from lattice fields goes through the spectral extension.

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{dft_inverse, CoeffMap, GridSpec, SpectralField};

#[derive(Debug, Error)]
pub enum BesovError {
    #[error("fit range [{lo}, {hi}] is outside the available blocks [{min}, {max}]")]
    FitRangeOutOfBlocks { lo: i32, hi: i32, min: i32, max: i32 },
    #[error("fit range needs at least two blocks")]
    FitRangeTooShort,
    #[error("coefficient map with band {band} does not fit on a grid with max mode {max}")]
    InsufficientBandwidth { band: i64, max: i64 },
    #[error("empty ensemble")]
    EmptyEnsemble,
}

/// `e^{-1/x}` glue for the smooth transition.
fn glue(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Dyadic partition of unity `(chi, rho)` with blocks `-1..=j_max`.
#[derive(Debug, Clone, Copy)]
pub struct DyadicPartition {
    j_max: i32,
}

impl DyadicPartition {
    pub fn build(j_max: i32) -> Self {
        assert!(j_max >= 0, "need at least block 0");
        DyadicPartition { j_max }
    }

    /// Largest partition resolvable on a grid: `2^{j_max} <= max mode`.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let mut j = 0;
        while 2i64 << j <= grid.max_mode() {
            j += 1;
        }
        DyadicPartition::build(j)
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_max
    }

    /// Low-frequency bump: 1 on `|x| <= 1`, 0 on `|x| >= 3/2`, smooth glue
    /// in between.
    pub fn chi(x: f64) -> f64 {
        let u = x.abs();
        if u <= 1.0 {
            1.0
        } else if u >= 1.5 {
            0.0
        } else {
            let up = glue(1.5 - u);
            let down = glue(u - 1.0);
            up / (up + down)
        }
    }

    /// Annular bump `rho(x) = chi(x/2) - chi(x)`, supported on `1 < |x| < 3`.
    pub fn rho(x: f64) -> f64 {
        Self::chi(0.5 * x) - Self::chi(x)
    }

    /// Window of block `j` at frequency `x`: `chi` for `j = -1`, `rho(2^{-j}
    /// x)` for `j >= 0`.
    pub fn window(&self, j: i32, x: f64) -> f64 {
        if j < 0 {
            Self::chi(x)
        } else {
            Self::rho(x / f64::powi(2.0, j))
        }
    }

    /// Partition sum at frequency `x`; equals 1 for `|x| <= 2^{j_max + 1}`.
    pub fn sum(&self, x: f64) -> f64 {
        self.blocks().map(|j| self.window(j, x)).sum()
    }

    /// Coverage bound: the partition resolves `|k| <= 2^{j_max + 1}`.
    pub fn max_covered(&self) -> i64 {
        2i64 << self.j_max
    }
}

/// Littlewood-Paley block of a spectral field: multiply coefficients by the
/// block window.
pub fn lp_block(part: &DyadicPartition, u: &SpectralField, j: i32) -> SpectralField {
    u.map_modes(|k, c| part.window(j, k as f64) * c)
}

/// Littlewood-Paley block of a coefficient map over `Z`.
pub fn lp_block_map(part: &DyadicPartition, u: &CoeffMap, j: i32) -> CoeffMap {
    u.iter()
        .filter_map(|(&k, &c)| {
            let w = part.window(j, k as f64);
            (w != 0.0).then_some((k, w * c))
        })
        .collect()
}

/// Per-block `L^p(T_N)` norms of a field. `p = f64::INFINITY` gives the sup
/// over lattice sites; finite `p` the lattice quadrature `(eps sum |.|^p)^{1/p}`.
#[derive(Debug, Clone)]
pub struct BesovProfile {
    pub p: f64,
    /// `(j, ||Delta_j u||_{L^p})` for `j = -1..=j_max`.
    pub block_norms: Vec<(i32, f64)>,
}

impl BesovProfile {
    /// CSV with columns `j,block_norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,block_norm\n");
        for &(j, b) in &self.block_norms {
            let _ = writeln!(out, "{j},{b:.17e}");
        }
        out
    }
}

fn lattice_lp(field: &crate::grid::LatticeField, p: f64) -> f64 {
    if p.is_infinite() {
        field.linf_norm()
    } else {
        (field.grid().eps()
            * field
                .values()
                .iter()
                .map(|v| v.norm().powf(p))
                .sum::<f64>())
        .powf(1.0 / p)
    }
}

/// Compute the block-norm profile of a spectral field.
pub fn besov_profile(part: &DyadicPartition, u: &SpectralField, p: f64) -> BesovProfile {
    let block_norms = part
        .blocks()
        .map(|j| (j, lattice_lp(&dft_inverse(&lp_block(part, u, j)), p)))
        .collect();
    BesovProfile { p, block_norms }
}

/// Besov norm `||u||_{B^alpha_{p,q}}`: block `L^p` norms weighted by
/// `2^{j alpha}` and aggregated in `l^q` (`q = inf` gives the sup).
pub fn besov_norm(part: &DyadicPartition, u: &SpectralField, alpha: f64, p: f64, q: f64) -> f64 {
    let profile = besov_profile(part, u, p);
    aggregate(&profile, alpha, q)
}

fn aggregate(profile: &BesovProfile, alpha: f64, q: f64) -> f64 {
    let weighted = profile
        .block_norms
        .iter()
        .map(|&(j, b)| f64::powi(2.0, j).powf(alpha) * b);
    if q.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        weighted.map(|w| w.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Synthesize a coefficient map on a grid. Rejects maps whose band exceeds
/// the grid's mode set (the output would alias).
pub fn synthesize(map: &CoeffMap, grid: &GridSpec) -> Result<SpectralField, BesovError> {
    let band = map.keys().map(|k| k.abs()).max().unwrap_or(0);
    if band > grid.max_mode() {
        return Err(BesovError::InsufficientBandwidth {
            band,
            max: grid.max_mode(),
        });
    }
    let mut out = SpectralField::zeros(*grid, false);
    for (&k, &c) in map {
        out.set_coeff(k, c);
    }
    Ok(out)
}

/// Smallest odd grid resolving a band.
fn grid_for_band(band: i64) -> GridSpec {
    let n = (2 * band + 1).max(3) as usize;
    let n = if n % 2 == 0 { n + 1 } else { n };
    GridSpec::new(n).expect("odd by construction")
}

fn band_of(map: &CoeffMap) -> i64 {
    map.keys().map(|k| k.abs()).max().unwrap_or(0)
}

/// `L^inf` of a coefficient map, evaluated by lattice quadrature on the
/// smallest alias-free grid.
pub fn map_linf(map: &CoeffMap) -> f64 {
    let grid = grid_for_band(band_of(map));
    let field = synthesize(map, &grid).expect("grid sized to band");
    dft_inverse(&field).linf_norm()
}

/// Exact product of two coefficient maps:
/// `(fg)(k) = (2 pi)^{-1} sum_l f(l) g(k - l)` (alias-free, over `Z`).
pub fn convolve(f: &CoeffMap, g: &CoeffMap) -> CoeffMap {
    let mut out = CoeffMap::new();
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    for (&l, &a) in f {
        for (&m, &b) in g {
            *out.entry(l + m).or_insert(Complex64::default()) += scale * a * b;
        }
    }
    out.retain(|_, c| c.norm_sqr() != 0.0);
    out
}

fn map_add(mut a: CoeffMap, b: &CoeffMap) -> CoeffMap {
    for (&k, &c) in b {
        *a.entry(k).or_insert(Complex64::default()) += c;
    }
    a
}

fn map_scale(map: &CoeffMap, s: Complex64) -> CoeffMap {
    map.iter().map(|(&k, &c)| (k, s * c)).collect()
}

fn map_sub(a: &CoeffMap, b: &CoeffMap) -> CoeffMap {
    map_add(a.clone(), &map_scale(b, Complex64::new(-1.0, 0.0)))
}

/// Bony decomposition of the product of two band-limited coefficient maps:
/// `less + greater + resonant = f * g` exactly.
#[derive(Debug, Clone)]
pub struct Paraproducts {
    /// `f "below" g`: `sum_j S_{j-1} f  Delta_j g`.
    pub less: CoeffMap,
    /// `sum_j Delta_j f  S_{j-1} g`.
    pub greater: CoeffMap,
    /// Diagonal part `sum_{|i-j| <= 1} Delta_i f Delta_j g`.
    pub resonant: CoeffMap,
}

fn partition_covering(maps: &[&CoeffMap]) -> DyadicPartition {
    let band = maps.iter().map(|m| band_of(m)).max().unwrap_or(0);
    let mut j_max = 0;
    while DyadicPartition::build(j_max).max_covered() < band {
        j_max += 1;
    }
    DyadicPartition::build(j_max)
}

fn block_decomposition(part: &DyadicPartition, u: &CoeffMap) -> Vec<CoeffMap> {
    part.blocks().map(|j| lp_block_map(part, u, j)).collect()
}

pub fn paraproducts(f: &CoeffMap, g: &CoeffMap) -> Paraproducts {
    let part = partition_covering(&[f, g]);
    let fb = block_decomposition(&part, f);
    let gb = block_decomposition(&part, g);
    // Index i, j run over -1..=j_max stored at offset +1.
    let nb = fb.len() as i32;
    let mut less = CoeffMap::new();
    let mut greater = CoeffMap::new();
    let mut resonant = CoeffMap::new();
    for i in 0..nb {
        for j in 0..nb {
            if fb[i as usize].is_empty() || gb[j as usize].is_empty() {
                continue;
            }
            let prod = convolve(&fb[i as usize], &gb[j as usize]);
            if i < j - 1 {
                less = map_add(less, &prod);
            } else if i > j + 1 {
                greater = map_add(greater, &prod);
            } else {
                resonant = map_add(resonant, &prod);
            }
        }
    }
    Paraproducts {
        less,
        greater,
        resonant,
    }
}

/// Resonant product alone (the diagonal part of the Bony decomposition).
pub fn resonant_product(f: &CoeffMap, g: &CoeffMap) -> CoeffMap {
    paraproducts(f, g).resonant
}

/// The paracontrolled commutator `C(f, g, h) = (f < g) o h - f (g o h)`,
/// computed exactly on band-limited inputs.
pub fn commutator(f: &CoeffMap, g: &CoeffMap, h: &CoeffMap) -> CoeffMap {
    let less_fg = paraproducts(f, g).less;
    let first = resonant_product(&less_fg, h);
    let second = convolve(f, &resonant_product(g, h));
    map_sub(&first, &second)
}

/// Result of the regularity regression.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RegularityFit {
    pub alpha_hat: f64,
    pub r_squared: f64,
    pub fit_range: (i32, i32),
}

/// Least-squares slope of `log2(ensemble-mean block norm)` against `j` over
/// `fit_range`; the regularity exponent estimate is minus the slope.
pub fn estimate_regularity(
    profiles: &[BesovProfile],
    fit_range: (i32, i32),
) -> Result<RegularityFit, BesovError> {
    if profiles.is_empty() {
        return Err(BesovError::EmptyEnsemble);
    }
    let (lo, hi) = fit_range;
    let min = profiles[0].block_norms.first().map(|&(j, _)| j).unwrap_or(0);
    let max = profiles[0].block_norms.last().map(|&(j, _)| j).unwrap_or(0);
    if lo < min || hi > max {
        return Err(BesovError::FitRangeOutOfBlocks { lo, hi, min, max });
    }
    if hi - lo < 1 {
        return Err(BesovError::FitRangeTooShort);
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in lo..=hi {
        let mut mean = 0.0;
        for p in profiles {
            let &(jj, b) = &p.block_norms[(j - min) as usize];
            debug_assert_eq!(jj, j);
            mean += b;
        }
        mean /= profiles.len() as f64;
        xs.push(j as f64);
        ys.push(mean.log2());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RegularityFit {
        alpha_hat: -slope,
        r_squared,
        fit_range,
    })
}

/// Default fit range `[3, j_max - 2]`: the lowest blocks are contaminated by
/// the constant mode, the highest by the grid cutoff.
pub fn default_fit_range(part: &DyadicPartition) -> (i32, i32) {
    (3, part.j_max() - 2)
}
