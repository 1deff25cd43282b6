//! Periodic lattice geometry and discrete Fourier analysis.
//!
//! The lattice is `T_N = {eps*l : l = 0..N-1}` with `eps = 2*pi/N` and `N`
//! odd. Wavenumbers live in the symmetric set `K_N = {-(N-1)/2, ...,
//! (N-1)/2}`, and the transform pair is
//!
//! ```text
//!   F u(k)   = eps * sum_l u(x_l) e^{-i eps l k}
//!   u(x_l)   = (2 pi)^{-1} * sum_{k in K_N} F u(k) e^{i eps l k}
//! ```
//!
//! Fast transforms are used internally; the contract is the exact sum above
//! and the test suite carries a direct `O(N^2)` oracle.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Errors from lattice construction and field deserialization.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("lattice size must be odd and positive, got {0}")]
    EvenSize(usize),
    #[error("field length {got} does not match lattice size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("malformed record at line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Geometry of the periodic lattice: odd size `N`, spacing `eps = 2*pi/N`,
/// and the symmetric wavenumber set `K_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    eps: f64,
}

impl GridSpec {
    /// Construct a grid of odd size `n`. Even sizes are rejected: the
    /// symmetric mode set only exists for odd `N`.
    pub fn new(n: usize) -> Result<Self, GridError> {
        if n == 0 || n % 2 == 0 {
            return Err(GridError::EvenSize(n));
        }
        Ok(GridSpec {
            n,
            eps: 2.0 * std::f64::consts::PI / n as f64,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Largest wavenumber magnitude, `(N-1)/2`.
    pub fn max_mode(&self) -> i64 {
        (self.n as i64 - 1) / 2
    }

    /// The mode set `K_N` in increasing order.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let half = self.max_mode();
        -half..=half
    }

    /// Lattice site `x_l = eps * l`.
    pub fn site(&self, l: usize) -> f64 {
        self.eps * l as f64
    }
}

/// Reduce an integer wavenumber to its minimal representative in `K_N`:
/// the unique `l` in `K_N` with `l = k (mod N)`.
pub fn fold_mode(k: i64, grid: &GridSpec) -> i64 {
    let n = grid.n as i64;
    let mut r = k % n;
    let half = (n - 1) / 2;
    if r > half {
        r -= n;
    } else if r < -half {
        r += n;
    }
    r
}

/// A sparse coefficient map over all of `Z`, used where fields must not be
/// folded onto a lattice (paraproducts, cutoffs of over-band data).
pub type CoeffMap = BTreeMap<i64, Complex64>;

/// Samples of a (possibly complex) field at the lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.size() {
            return Err(GridError::LengthMismatch {
                got: values.len(),
                expected: grid.size(),
            });
        }
        Ok(LatticeField { grid, values })
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self, GridError> {
        let v = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(grid, v)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        LatticeField {
            grid,
            values: vec![Complex64::default(); grid.size()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Real parts, for fields known to be real up to rounding.
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// `L^2(T_N)` norm: `sqrt(eps * sum |u|^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.eps() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `L^inf(T_N)` norm.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// CSV rows `site_index,value_re,value_im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("site_index,value_re,value_im\n");
        for (l, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{l},{:.17e},{:.17e}", v.re, v.im);
        }
        out
    }

    pub fn from_csv(grid: GridSpec, text: &str) -> Result<Self, GridError> {
        let mut values = vec![Complex64::default(); grid.size()];
        for (i, line) in text.lines().enumerate().skip(1) {
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64, GridError> {
                s.ok_or(GridError::Malformed {
                    line: i + 1,
                    msg: "missing column".into(),
                })?
                .trim()
                .parse()
                .map_err(|e| GridError::Malformed {
                    line: i + 1,
                    msg: format!("{e}"),
                })
            };
            let l = parse(parts.next())? as usize;
            if l >= grid.size() {
                return Err(GridError::Malformed {
                    line: i + 1,
                    msg: format!("site index {l} out of range"),
                });
            }
            values[l] = Complex64::new(parse(parts.next())?, parse(parts.next())?);
        }
        Self::new(grid, values)
    }
}

/// Fourier coefficients on the mode set `K_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    /// Coefficient for mode `k` at index `k + (N-1)/2`.
    coeff: Vec<Complex64>,
    real_flag: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, real_flag: bool) -> Self {
        SpectralField {
            grid,
            coeff: vec![Complex64::default(); grid.size()],
            real_flag,
        }
    }

    pub fn from_coeffs(
        grid: GridSpec,
        coeff: Vec<Complex64>,
        real_flag: bool,
    ) -> Result<Self, GridError> {
        if coeff.len() != grid.size() {
            return Err(GridError::LengthMismatch {
                got: coeff.len(),
                expected: grid.size(),
            });
        }
        Ok(SpectralField {
            grid,
            coeff,
            real_flag,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn real_flag(&self) -> bool {
        self.real_flag
    }

    pub fn set_real_flag(&mut self, flag: bool) {
        self.real_flag = flag;
    }

    fn idx(&self, k: i64) -> usize {
        debug_assert!(k.abs() <= self.grid.max_mode());
        (k + self.grid.max_mode()) as usize
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeff[self.idx(k)]
    }

    pub fn set_coeff(&mut self, k: i64, v: Complex64) {
        let i = self.idx(k);
        self.coeff[i] = v;
    }

    /// Iterate `(k, coeff(k))` in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let half = self.grid.max_mode();
        self.coeff.iter().enumerate().map(move |(i, &c)| (i as i64 - half, c))
    }

    /// Apply a per-mode multiplier `m(k)`, keeping the Hermitian flag only if
    /// the caller promises the multiplier respects it.
    pub fn map_modes<F: FnMut(i64, Complex64) -> Complex64>(&self, mut m: F) -> SpectralField {
        let half = self.grid.max_mode();
        let coeff = self
            .coeff
            .iter()
            .enumerate()
            .map(|(i, &c)| m(i as i64 - half, c))
            .collect();
        SpectralField {
            grid: self.grid,
            coeff,
            real_flag: self.real_flag,
        }
    }

    /// Worst deviation from Hermitian symmetry `u(-k) = conj(u(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = self.coeff(0).im.abs();
        for k in 1..=self.grid.max_mode() {
            let d = (self.coeff(k).conj() - self.coeff(-k)).norm();
            worst = worst.max(d);
        }
        worst
    }

    /// Parseval right-hand side `(2 pi)^{-1} sum_k |coeff(k)|^2`.
    pub fn energy(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm_sqr()).sum::<f64>() / (2.0 * std::f64::consts::PI)
    }

    pub fn to_coeff_map(&self) -> CoeffMap {
        self.iter().filter(|(_, c)| c.norm_sqr() != 0.0).collect()
    }

    /// CSV rows `k,coeff_re,coeff_im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,coeff_re,coeff_im\n");
        for (k, c) in self.iter() {
            let _ = writeln!(out, "{k},{:.17e},{:.17e}", c.re, c.im);
        }
        out
    }

    pub fn from_csv(grid: GridSpec, text: &str) -> Result<Self, GridError> {
        let mut field = SpectralField::zeros(grid, false);
        for (i, line) in text.lines().enumerate().skip(1) {
            let mut parts = line.split(',');
            let mut next = |what: &str| {
                parts.next().map(str::trim).ok_or(GridError::Malformed {
                    line: i + 1,
                    msg: format!("missing {what}"),
                })
            };
            let k: i64 = next("k")?.parse().map_err(|e| GridError::Malformed {
                line: i + 1,
                msg: format!("{e}"),
            })?;
            if k.abs() > grid.max_mode() {
                return Err(GridError::Malformed {
                    line: i + 1,
                    msg: format!("mode {k} out of range"),
                });
            }
            let re: f64 = next("re")?.parse().map_err(|e| GridError::Malformed {
                line: i + 1,
                msg: format!("{e}"),
            })?;
            let im: f64 = next("im")?.parse().map_err(|e| GridError::Malformed {
                line: i + 1,
                msg: format!("{e}"),
            })?;
            field.set_coeff(k, Complex64::new(re, im));
        }
        field.real_flag = field.hermitian_defect() == 0.0;
        Ok(field)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Forward transform `F u(k) = eps * sum_l u(x_l) e^{-i eps l k}` for
/// `k in K_N`.
pub fn dft_forward(u: &LatticeField) -> SpectralField {
    let grid = *u.grid();
    let n = grid.size();
    let mut buf = u.values().to_vec();
    plan(n, false).process(&mut buf);
    let half = grid.max_mode();
    let mut coeff = vec![Complex64::default(); n];
    for k in -half..=half {
        let j = k.rem_euclid(n as i64) as usize;
        coeff[(k + half) as usize] = grid.eps() * buf[j];
    }
    let real_input = u.values().iter().all(|v| v.im == 0.0);
    SpectralField {
        grid,
        coeff,
        real_flag: real_input,
    }
}

/// Inverse transform `u(x_l) = (2 pi)^{-1} sum_{k in K_N} F u(k) e^{i eps l k}`.
pub fn dft_inverse(f: &SpectralField) -> LatticeField {
    let grid = *f.grid();
    let n = grid.size();
    let half = grid.max_mode();
    let mut buf = vec![Complex64::default(); n];
    for k in -half..=half {
        let j = k.rem_euclid(n as i64) as usize;
        buf[j] = f.coeff(k);
    }
    plan(n, true).process(&mut buf);
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    for v in &mut buf {
        *v *= scale;
    }
    LatticeField { grid, values: buf }
}

/// Evaluate the trigonometric extension `(2 pi)^{-1} sum_k F u(k) e^{i k x}`
/// at an arbitrary point `x`.
pub fn extend(f: &SpectralField, x: f64) -> Complex64 {
    let mut acc = Complex64::default();
    for (k, c) in f.iter() {
        acc += c * Complex64::from_polar(1.0, k as f64 * x);
    }
    acc / (2.0 * std::f64::consts::PI)
}

/// Fold a coefficient map over `Z` onto the lattice mode set:
/// `out(l) = sum_{k : fold(k) = l} c(k)`.
pub fn periodize(coeff_on_z: &CoeffMap, grid: &GridSpec) -> SpectralField {
    let mut out = SpectralField::zeros(*grid, false);
    for (&k, &c) in coeff_on_z {
        let l = fold_mode(k, grid);
        let v = out.coeff(l) + c;
        out.set_coeff(l, v);
    }
    out.real_flag = out.hermitian_defect() == 0.0;
    out
}

/// Fourier cutoff: zero all coefficients with `|k| >= N/2`, i.e. keep `K_N`.
pub fn cutoff(coeff_on_z: &CoeffMap, grid: &GridSpec) -> CoeffMap {
    let half = grid.max_mode();
    coeff_on_z
        .iter()
        .filter(|(k, _)| k.abs() <= half)
        .map(|(&k, &c)| (k, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(N^2) evaluation of the defining sum; the oracle for the fast
    /// transform.
    fn dft_forward_oracle(u: &LatticeField) -> SpectralField {
        let grid = *u.grid();
        let mut out = SpectralField::zeros(grid, false);
        for k in grid.modes() {
            let mut acc = Complex64::default();
            for (l, &v) in u.values().iter().enumerate() {
                let phase = -grid.eps() * l as f64 * k as f64;
                acc += v * Complex64::from_polar(1.0, phase);
            }
            out.set_coeff(k, grid.eps() * acc);
        }
        out
    }

    fn pseudo_random_field(grid: GridSpec, seed: u64) -> LatticeField {
        // Cheap deterministic filler; statistical quality is irrelevant here.
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let values: Vec<f64> = (0..grid.size()).map(|_| next()).collect();
        LatticeField::from_real(grid, &values).unwrap()
    }

    #[test]
    fn even_size_rejected() {
        assert!(GridSpec::new(4).is_err());
        assert!(GridSpec::new(0).is_err());
        assert!(GridSpec::new(5).is_ok());
    }

    #[test]
    fn fold_examples() {
        let g5 = GridSpec::new(5).unwrap();
        let g7 = GridSpec::new(7).unwrap();
        assert_eq!(fold_mode(3, &g5), -2);
        assert_eq!(fold_mode(0, &g7), 0);
        assert_eq!(fold_mode(7, &g5), 2);
    }

    #[test]
    fn fold_periodicity() {
        let g = GridSpec::new(9).unwrap();
        for k in -30..=30 {
            for j in -3..=3i64 {
                assert_eq!(fold_mode(k + j * 9, &g), fold_mode(k, &g));
            }
        }
    }

    #[test]
    fn constant_field_transform() {
        let grid = GridSpec::new(5).unwrap();
        let u = LatticeField::from_real(grid, &[1.0; 5]).unwrap();
        let f = dft_forward(&u);
        assert!((f.coeff(0).re - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        for k in [-2i64, -1, 1, 2] {
            assert!(f.coeff(k).norm() < 1e-12, "mode {k} should vanish");
        }
    }

    #[test]
    fn cosine_single_mode() {
        let grid = GridSpec::new(5).unwrap();
        let vals: Vec<f64> = (0..5).map(|l| grid.site(l).cos()).collect();
        let f = dft_forward(&LatticeField::from_real(grid, &vals).unwrap());
        assert!((f.coeff(1) - Complex64::new(std::f64::consts::PI, 0.0)).norm() < 1e-12);
        assert!((f.coeff(-1) - Complex64::new(std::f64::consts::PI, 0.0)).norm() < 1e-12);
        for k in [-2i64, 0, 2] {
            assert!(f.coeff(k).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_transform_matches_oracle() {
        for n in [5usize, 15, 63, 101] {
            let grid = GridSpec::new(n).unwrap();
            let u = pseudo_random_field(grid, n as u64);
            let fast = dft_forward(&u);
            let slow = dft_forward_oracle(&u);
            for k in grid.modes() {
                assert!(
                    (fast.coeff(k) - slow.coeff(k)).norm() < 1e-10,
                    "N={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn roundtrip_over_odd_sizes() {
        for n in [1usize, 3, 5, 15, 31, 63, 255, 511, 1023, 1025] {
            let grid = GridSpec::new(n).unwrap();
            let u = pseudo_random_field(grid, 7 + n as u64);
            let back = dft_inverse(&dft_forward(&u));
            let scale = u.linf_norm().max(1e-30);
            for (a, b) in u.values().iter().zip(back.values()) {
                assert!((a - b).norm() / scale < 1e-12, "roundtrip failed at N={n}");
            }
        }
    }

    #[test]
    fn hermitian_real_consistency() {
        let grid = GridSpec::new(31).unwrap();
        let u = pseudo_random_field(grid, 11);
        let f = dft_forward(&u);
        assert!(f.real_flag());
        assert!(f.hermitian_defect() < 1e-12 * u.linf_norm());
        let back = dft_inverse(&f);
        assert!(back.max_imag() < 1e-12 * u.linf_norm());
    }

    #[test]
    fn parseval() {
        for n in [5usize, 63, 255] {
            let grid = GridSpec::new(n).unwrap();
            let u = pseudo_random_field(grid, 13 + n as u64);
            let f = dft_forward(&u);
            let phys: f64 = grid.eps() * u.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
            assert!(
                (phys - f.energy()).abs() / phys < 1e-12,
                "Parseval violated at N={n}"
            );
        }
    }

    #[test]
    fn extension_interpolates_lattice() {
        let grid = GridSpec::new(15).unwrap();
        let u = pseudo_random_field(grid, 3);
        let f = dft_forward(&u);
        let scale = u.linf_norm();
        for l in 0..grid.size() {
            let v = extend(&f, grid.site(l));
            assert!((v - u.values()[l]).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn extension_of_constant_and_single_mode() {
        let grid = GridSpec::new(15).unwrap();
        let ones = LatticeField::from_real(grid, &vec![1.0; 15]).unwrap();
        let f = dft_forward(&ones);
        assert!((extend(&f, 1.2345) - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        // e^{i x} sampled, evaluated off-lattice.
        let vals: Vec<Complex64> = (0..15)
            .map(|l| Complex64::from_polar(1.0, grid.site(l)))
            .collect();
        let g = dft_forward(&LatticeField::new(grid, vals).unwrap());
        let x = std::f64::consts::PI / std::f64::consts::SQRT_2;
        let expected = Complex64::from_polar(1.0, x);
        assert!((extend(&g, x) - expected).norm() < 1e-12);
    }

    #[test]
    fn periodize_examples() {
        let grid = GridSpec::new(5).unwrap();
        // Support inside K_N: identity.
        let mut m = CoeffMap::new();
        m.insert(1, Complex64::new(2.0, 1.0));
        let f = periodize(&m, &grid);
        assert_eq!(f.coeff(1), Complex64::new(2.0, 1.0));

        // k = 7 folds onto 2.
        let mut m = CoeffMap::new();
        m.insert(7, Complex64::new(3.0, 0.0));
        let f = periodize(&m, &grid);
        assert_eq!(f.coeff(2), Complex64::new(3.0, 0.0));

        // k = 3 and k = -2 accumulate at -2.
        let mut m = CoeffMap::new();
        m.insert(3, Complex64::new(1.0, 0.0));
        m.insert(-2, Complex64::new(0.5, 0.0));
        let f = periodize(&m, &grid);
        assert_eq!(f.coeff(-2), Complex64::new(1.5, 0.0));
    }

    #[test]
    fn cutoff_examples() {
        let grid = GridSpec::new(5).unwrap();
        let mut m = CoeffMap::new();
        m.insert(-2, Complex64::new(1.0, 0.0));
        m.insert(2, Complex64::new(1.0, 0.0));
        assert_eq!(cutoff(&m, &grid), m);

        let mut m = CoeffMap::new();
        m.insert(5, Complex64::new(1.0, 0.0));
        assert!(cutoff(&m, &grid).is_empty());

        let mut m = CoeffMap::new();
        m.insert(1, Complex64::new(1.0, 0.0));
        m.insert(4, Complex64::new(1.0, 0.0));
        let c = cutoff(&m, &grid);
        assert_eq!(c.len(), 1);
        assert!(c.contains_key(&1));
    }

    #[test]
    fn csv_roundtrip() {
        let grid = GridSpec::new(7).unwrap();
        let u = pseudo_random_field(grid, 17);
        let back = LatticeField::from_csv(grid, &u.to_csv()).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-15);
        }
        let f = dft_forward(&u);
        let fback = SpectralField::from_csv(grid, &f.to_csv()).unwrap();
        for k in grid.modes() {
            assert!((f.coeff(k) - fback.coeff(k)).norm() < 1e-15);
        }
    }
}
