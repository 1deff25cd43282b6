//! Time integration of the lattice Burgers / KPZ / heat dynamics.
//!
//! Burgers and the height equation use exponential Euler: the linear Fourier
//! multiplier is applied exactly per step, the stochastic convolution over a
//! step is sampled from its exact Gaussian law, and only the quadratic term
//! is explicit. This makes the linear-plus-noise part of the flow exactly
//! distribution preserving, so invariance experiments isolate the
//! discretization error of the nonlinearity.
//!
//! The multiplicative heat equation deliberately uses plain Ito Euler for the
//! noise term: the exp-height/heat correspondence is an Ito statement and the
//! renormalization constant is calibrated to Ito quadratic variation.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::constants::lattice_renorm_sum;
use crate::ensemble;
use crate::grid::{dft_forward, dft_inverse, GridSpec, LatticeField, SpectralField};
use crate::noise::{stationary_ou_from_symbols, Mollifier, NoiseError, NoiseStream};
use crate::scheme::SymbolTable;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dt = {dt} violates the stability guard dt <= eps^2 = {limit:.6e}")]
    DtGuard { dt: f64, limit: f64 },
    #[error("dt must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("blow-up threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("Monte Carlo needs at least 100 paths, got {0}")]
    TooFewPaths(usize),
    #[error("dt values must be positive and t_end an integer multiple of each; offender: {0}")]
    BadDtLadder(f64),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Burgers,
    Kpz,
    She,
}

/// Initial condition of a run.
#[derive(Debug, Clone)]
pub enum InitialData {
    Zero,
    /// Stationary law of the linear dynamics (mode zero pinned to 0).
    StationaryOu,
    /// Product Gaussian on the sites: iid `N(mean, eps^{-1}/2)`. This is the
    /// invariant family of the conservative bilinear form.
    WhiteInvariant { mean: f64 },
    Custom(SpectralField),
}

/// Everything a run needs besides the noise stream.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub symbols: SymbolTable,
    pub equation: Equation,
    pub dt: f64,
    pub t_end: f64,
    /// Constant subtracted from the squared-gradient term (height equation
    /// only); 0 for Burgers.
    pub renorm_constant: f64,
    /// `tau_c` threshold on the lattice sup norm.
    pub blowup_threshold: f64,
    pub mollifier: Option<(Mollifier, f64)>,
    pub initial: InitialData,
    /// Record every `stride`-th state; 0 keeps only the first and last.
    pub snapshot_stride: usize,
    pub with_noise: bool,
    pub with_nonlinearity: bool,
}

impl SimConfig {
    pub fn new(
        grid: GridSpec,
        symbols: SymbolTable,
        equation: Equation,
        dt: f64,
        t_end: f64,
    ) -> Result<SimConfig, SimError> {
        let cfg = SimConfig {
            grid,
            symbols,
            equation,
            dt,
            t_end,
            renorm_constant: 0.0,
            blowup_threshold: default_blowup_threshold(&grid),
            mollifier: None,
            initial: InitialData::Zero,
            snapshot_stride: 0,
            with_noise: true,
            with_nonlinearity: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.dt <= 0.0 {
            return Err(SimError::NonPositiveDt(self.dt));
        }
        if self.blowup_threshold <= 0.0 {
            return Err(SimError::BadThreshold(self.blowup_threshold));
        }
        let eps2 = self.grid.eps() * self.grid.eps();
        if self.with_nonlinearity && self.dt > eps2 {
            return Err(SimError::DtGuard {
                dt: self.dt,
                limit: eps2,
            });
        }
        Ok(())
    }
}

/// Far above stationary fluctuations, far below overflow.
pub fn default_blowup_threshold(grid: &GridSpec) -> f64 {
    1e6 / grid.eps().sqrt()
}

/// `phi_1(z) = (1 - e^{-z})/z` with the `z -> 0` limit filled.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-7 {
        1.0 - 0.5 * z + z * z / 6.0
    } else {
        (1.0 - (-z).exp()) / z
    }
}

/// Per-mode tables for one `(grid, symbols, dt)` triple plus the scaled
/// noise amplitudes. Index `i` corresponds to mode `k = i - (N-1)/2`.
pub struct Stepper {
    grid: GridSpec,
    symbols: SymbolTable,
    equation: Equation,
    renorm: f64,
    with_noise: bool,
    with_nonlinearity: bool,
    decay: Vec<f64>,
    phi1dt: Vec<f64>,
    deriv: Vec<Complex64>,
    moll: Vec<f64>,
    /// Standard deviation per real component of the exact stochastic
    /// convolution increment; index by `k >= 0`.
    conv_sd: Vec<f64>,
    /// Same for the plain white increment (Ito stepping).
    plain_sd: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Stepper {
        let grid = cfg.grid;
        let eps = grid.eps();
        let half = grid.max_mode();
        let n = grid.size();
        let mut decay = vec![0.0; n];
        let mut phi1dt = vec![0.0; n];
        let mut deriv = vec![Complex64::default(); n];
        let mut moll = vec![1.0; n];
        for (i, k) in grid.modes().enumerate() {
            let kf = k as f64;
            let lam = kf * kf * cfg.symbols.f(eps * kf);
            decay[i] = (-lam * cfg.dt).exp();
            phi1dt[i] = phi1(lam * cfg.dt) * cfg.dt;
            deriv[i] = Complex64::new(0.0, kf) * cfg.symbols.g(eps * kf);
            if let Some((m, eps_reg)) = &cfg.mollifier {
                moll[i] = m.phi(eps_reg * kf);
            }
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut conv_sd = vec![0.0; (half + 1) as usize];
        let mut plain_sd = vec![0.0; (half + 1) as usize];
        for k in 0..=half {
            let kf = k as f64;
            let lam = kf * kf * cfg.symbols.f(eps * kf);
            let var_total = if lam * cfg.dt < 1e-12 {
                two_pi * cfg.dt
            } else {
                two_pi * (1.0 - (-2.0 * lam * cfg.dt).exp()) / (2.0 * lam)
            };
            // Mode zero is real and carries the full variance; k > 0 splits
            // it between the real and imaginary parts.
            let split = if k == 0 { 1.0 } else { 0.5 };
            conv_sd[k as usize] = (split * var_total).sqrt();
            plain_sd[k as usize] = (split * two_pi * cfg.dt).sqrt();
        }
        Stepper {
            grid,
            symbols: cfg.symbols.clone(),
            equation: cfg.equation,
            renorm: cfg.renorm_constant,
            with_noise: cfg.with_noise,
            with_nonlinearity: cfg.with_nonlinearity,
            decay,
            phi1dt,
            deriv,
            moll,
            conv_sd,
            plain_sd,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Standardized Gaussian draws for one step: entry 0 is the (real) mode
    /// zero, entry `k` the complex unit draw for mode `k > 0`. Drawing is in
    /// a fixed order so trajectories do not depend on scheduling.
    pub fn draw(&self, stream: &mut NoiseStream) -> Vec<Complex64> {
        let half = self.grid.max_mode() as usize;
        let mut zeta = vec![Complex64::default(); half + 1];
        if self.with_noise {
            zeta[0] = Complex64::new(stream.standard_normal(), 0.0);
            for z in zeta.iter_mut().skip(1) {
                let re = stream.standard_normal();
                let im = stream.standard_normal();
                *z = Complex64::new(re, im);
            }
        }
        zeta
    }

    fn zeta_at(&self, zeta: &[Complex64], k: i64, sd: &[f64]) -> Complex64 {
        if k >= 0 {
            sd[k as usize] * zeta[k as usize]
        } else {
            (sd[(-k) as usize] * zeta[(-k) as usize]).conj()
        }
    }

    /// One exponential-Euler step of conservative Burgers dynamics.
    pub fn step_burgers(&self, state: &SpectralField, zeta: &[Complex64]) -> StepOutput {
        let phys = dft_inverse(state);
        let linf = phys.linf_norm();
        let bilinear = self.with_nonlinearity.then(|| {
            dft_forward(&stencil_combine(&self.symbols, &phys, &phys))
        });
        let mut next = SpectralField::zeros(self.grid, state.real_flag());
        for (i, k) in self.grid.modes().enumerate() {
            let mut v = self.decay[i] * state.coeff(k);
            if let Some(b) = &bilinear {
                v += self.phi1dt[i] * self.deriv[i] * b.coeff(k);
            }
            if self.with_noise && k != 0 {
                v += self.deriv[i] * self.moll[i] * self.zeta_at(zeta, k, &self.conv_sd);
            }
            next.set_coeff(k, v);
        }
        StepOutput {
            state: next,
            linf_before: linf,
            min_real_before: phys.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min),
        }
    }

    /// One exponential-Euler step of the height dynamics: squared gradient
    /// minus the renormalization constant, noise without the derivative.
    pub fn step_kpz(&self, state: &SpectralField, zeta: &[Complex64]) -> StepOutput {
        let phys = dft_inverse(state);
        let linf = phys.linf_norm();
        let bilinear = self.with_nonlinearity.then(|| {
            let grad = state.map_modes(|k, c| {
                self.deriv[(k + self.grid.max_mode()) as usize] * c
            });
            let grad_phys = dft_inverse(&grad);
            dft_forward(&stencil_combine(&self.symbols, &grad_phys, &grad_phys))
        });
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut next = SpectralField::zeros(self.grid, state.real_flag());
        for (i, k) in self.grid.modes().enumerate() {
            let mut v = self.decay[i] * state.coeff(k);
            let mut forcing = Complex64::default();
            if let Some(b) = &bilinear {
                forcing += b.coeff(k);
            }
            if k == 0 {
                forcing -= Complex64::new(two_pi * self.renorm, 0.0);
            }
            v += self.phi1dt[i] * forcing;
            if self.with_noise {
                v += self.moll[i] * self.zeta_at(zeta, k, &self.conv_sd);
            }
            next.set_coeff(k, v);
        }
        StepOutput {
            state: next,
            linf_before: linf,
            min_real_before: phys.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min),
        }
    }

    /// One Ito-Euler step of the multiplicative heat equation: the heat
    /// semigroup applied spectrally to `w + w dB` with `dB` the mollified
    /// plain white increment in physical space.
    pub fn step_she(&self, state: &SpectralField, zeta: &[Complex64]) -> StepOutput {
        let phys = dft_inverse(state);
        let linf = phys.linf_norm();
        let min_real = phys.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
        let mut forced = phys.clone();
        if self.with_noise {
            let mut dw = SpectralField::zeros(self.grid, true);
            for (i, k) in self.grid.modes().enumerate() {
                dw.set_coeff(k, self.moll[i] * self.zeta_at(zeta, k, &self.plain_sd));
            }
            let db = dft_inverse(&dw);
            for (w, b) in forced.values_mut().iter_mut().zip(db.values()) {
                *w += *w * b;
            }
        }
        let hatw = dft_forward(&forced);
        let next = hatw.map_modes(|k, c| self.decay[(k + self.grid.max_mode()) as usize] * c);
        StepOutput {
            state: next,
            linf_before: linf,
            min_real_before: min_real,
        }
    }

    pub fn step(&self, state: &SpectralField, zeta: &[Complex64]) -> StepOutput {
        match self.equation {
            Equation::Burgers => self.step_burgers(state, zeta),
            Equation::Kpz => self.step_kpz(state, zeta),
            Equation::She => self.step_she(state, zeta),
        }
    }
}

/// Result of a single step: the new state plus lattice diagnostics of the
/// pre-step state (used for blow-up and positivity tracking).
pub struct StepOutput {
    pub state: SpectralField,
    pub linf_before: f64,
    pub min_real_before: f64,
}

/// Physical-space combination of two synthesized fields through the bilinear
/// stencil of the symbols.
fn stencil_combine(
    symbols: &SymbolTable,
    u: &LatticeField,
    v: &LatticeField,
) -> LatticeField {
    let grid = *u.grid();
    let n = grid.size() as i64;
    let mut out = LatticeField::zeros(grid);
    let stencil: Vec<(i64, i64, f64)> = match symbols {
        SymbolTable::Continuum => vec![(0, 0, 1.0)],
        SymbolTable::Measures { mu, .. } => mu.iter().collect(),
    };
    for (y, z, w) in stencil {
        for l in 0..grid.size() {
            let a = (l as i64 + y).rem_euclid(n) as usize;
            let b = (l as i64 + z).rem_euclid(n) as usize;
            out.values_mut()[l] += w * u.values()[a] * v.values()[b];
        }
    }
    out
}

/// A recorded run. If `blown_up_at` is set, no states after that time are
/// recorded.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub blown_up_at: Option<f64>,
    /// Heat runs from positive data flag excursions below zero.
    pub negativity_flagged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory records at least t=0")
    }

    /// Summary CSV with columns `t,l2_norm,linf_norm,mode0`.
    pub fn summary_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t,l2_norm,linf_norm,mode0\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            let phys = dft_inverse(s);
            let _ = writeln!(
                out,
                "{t:.12e},{:.12e},{:.12e},{:.12e}",
                phys.l2_norm(),
                phys.linf_norm(),
                s.coeff(0).re
            );
        }
        out
    }

    /// JSONL records `{"t": ..., "field": [per-site values]}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (t, s) in self.times.iter().zip(&self.states) {
            let phys = dft_inverse(s);
            let record = serde_json::json!({
                "t": t,
                "field": phys.real_parts(),
            });
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }
}

fn build_initial(cfg: &SimConfig, stream: &mut NoiseStream) -> SpectralField {
    match &cfg.initial {
        InitialData::Zero => SpectralField::zeros(cfg.grid, true),
        InitialData::StationaryOu => stationary_ou_from_symbols(&cfg.grid, &cfg.symbols, stream),
        InitialData::WhiteInvariant { mean } => {
            let sd = (0.5 / cfg.grid.eps()).sqrt();
            let vals: Vec<f64> = (0..cfg.grid.size())
                .map(|_| mean + sd * stream.standard_normal())
                .collect();
            dft_forward(&LatticeField::from_real(cfg.grid, &vals).expect("sized to grid"))
        }
        InitialData::Custom(f) => f.clone(),
    }
}

/// Integrate to `t_end` or until the sup norm crosses the blow-up threshold.
pub fn run(cfg: &SimConfig, stream: &mut NoiseStream) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let stepper = Stepper::new(cfg);
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut state = build_initial(cfg, stream);
    let positive_start = dft_inverse(&state)
        .values()
        .iter()
        .all(|v| v.re > 0.0);

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![state.clone()],
        blown_up_at: None,
        negativity_flagged: false,
    };

    for step_idx in 1..=steps {
        let zeta = stepper.draw(stream);
        let out = stepper.step(&state, &zeta);
        let t = step_idx as f64 * cfg.dt;
        if out.linf_before >= cfg.blowup_threshold {
            traj.blown_up_at = Some((step_idx - 1) as f64 * cfg.dt);
            return Ok(traj);
        }
        let bad = !out.state.iter().all(|(_, c)| c.re.is_finite() && c.im.is_finite());
        if bad {
            traj.blown_up_at = Some(t);
            return Ok(traj);
        }
        if cfg.equation == Equation::She && positive_start && out.min_real_before < 0.0 {
            traj.negativity_flagged = true;
        }
        state = out.state;
        let record = (cfg.snapshot_stride > 0 && step_idx % cfg.snapshot_stride == 0)
            || step_idx == steps;
        if record {
            traj.times.push(t);
            traj.states.push(state.clone());
        }
    }
    if cfg.equation == Equation::She && positive_start {
        let final_min = dft_inverse(&state)
            .values()
            .iter()
            .map(|v| v.re)
            .fold(f64::INFINITY, f64::min);
        if final_min < 0.0 {
            traj.negativity_flagged = true;
        }
    }
    Ok(traj)
}

/// Exp-height/heat consistency report: sup error per time step size and the
/// empirical convergence order under refinement.
#[derive(Debug, Clone, Serialize)]
pub struct ColeHopfReport {
    /// `(dt, sup_{t <= T, x} |e^{h} - w|)` per level.
    pub errors: Vec<(f64, f64)>,
    pub dt_order: f64,
    pub renorm_constant: f64,
}

/// Run the height equation (renormalized squared gradient) and the
/// multiplicative heat equation from matched data (`w0 = exp(h0)`) with the
/// same driving noise, at every step size in `dts`, and report the sup
/// difference `|e^h - w|` and its decay order.
///
/// All levels are driven by the same underlying fine-step draws (coarser
/// levels aggregate them), so the fitted order is a strong self-convergence
/// order, not noise across realizations.
pub fn cole_hopf_check(
    grid: GridSpec,
    mollifier: Mollifier,
    eps_reg: f64,
    t_end: f64,
    dts: &[f64],
    h0_amplitude: f64,
    with_noise: bool,
    seed: u64,
) -> Result<ColeHopfReport, SimError> {
    let mut sorted: Vec<f64> = dts.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dt_fine = sorted[0];
    if dt_fine <= 0.0 {
        return Err(SimError::BadDtLadder(dt_fine));
    }
    for &dt in &sorted {
        let ratio = dt / dt_fine;
        if (ratio - ratio.round()).abs() > 1e-9 || (t_end / dt - (t_end / dt).round()).abs() > 1e-6
        {
            return Err(SimError::BadDtLadder(dt));
        }
    }

    let renorm = if with_noise {
        lattice_renorm_sum(&mollifier, eps_reg, &grid)
    } else {
        0.0
    };

    let h0_vals: Vec<f64> = (0..grid.size())
        .map(|l| {
            let x = grid.site(l);
            h0_amplitude * (x.sin() + 0.5 * (2.0 * x).cos())
        })
        .collect();
    let h0 = dft_forward(&LatticeField::from_real(grid, &h0_vals).expect("sized"));
    let w0_vals: Vec<f64> = h0_vals.iter().map(|&v| v.exp()).collect();
    let w0 = dft_forward(&LatticeField::from_real(grid, &w0_vals).expect("sized"));

    let mut errors = Vec::new();
    for &dt in dts {
        let aggregate = (dt / dt_fine).round() as usize;
        let steps = (t_end / dt).round() as usize;

        let mut kpz_cfg = SimConfig::new(grid, SymbolTable::Continuum, Equation::Kpz, dt, t_end)?;
        kpz_cfg.renorm_constant = renorm;
        kpz_cfg.mollifier = Some((mollifier, eps_reg));
        kpz_cfg.with_noise = with_noise;
        let kpz = Stepper::new(&kpz_cfg);

        let mut she_cfg = SimConfig::new(grid, SymbolTable::Continuum, Equation::She, dt, t_end)?;
        she_cfg.mollifier = Some((mollifier, eps_reg));
        she_cfg.with_noise = with_noise;
        let she = Stepper::new(&she_cfg);

        let mut stream = NoiseStream::new(seed, 0);
        let mut h = h0.clone();
        let mut w = w0.clone();
        let mut sup_err: f64 = 0.0;
        let half = grid.max_mode() as usize;
        for _ in 0..steps {
            // Aggregate fine draws into one standardized coarse draw.
            let mut zeta = vec![Complex64::default(); half + 1];
            for _ in 0..aggregate {
                let fine = kpz.draw(&mut stream);
                for (z, f) in zeta.iter_mut().zip(&fine) {
                    *z += *f;
                }
            }
            let norm = (aggregate as f64).sqrt().recip();
            for z in zeta.iter_mut() {
                *z *= norm;
            }
            h = kpz.step_kpz(&h, &zeta).state;
            w = she.step_she(&w, &zeta).state;
            let hp = dft_inverse(&h);
            let wp = dft_inverse(&w);
            for (a, b) in hp.values().iter().zip(wp.values()) {
                sup_err = sup_err.max((a.re.exp() - b.re).abs());
            }
        }
        errors.push((dt, sup_err));
    }

    // Least-squares order: slope of ln(err) against ln(dt).
    let dt_order = if errors.len() >= 2 {
        let xs: Vec<f64> = errors.iter().map(|(dt, _)| dt.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|(_, e)| e.max(1e-300).ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };

    Ok(ColeHopfReport {
        errors,
        dt_order,
        renorm_constant: renorm,
    })
}

/// Monte Carlo estimate of `log E[exp(h_bar(x + B_T) + int_0^T theta(T - s,
/// x + B_s) ds)]` over variance-2 Brownian paths, with a delta-method
/// standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FkEstimate {
    pub log_mean: f64,
    pub std_err: f64,
    pub n_paths: usize,
    /// Mean and standard error of the exponent itself (the control payoff of
    /// the zero-control strategy).
    pub exponent_mean: f64,
    pub exponent_se: f64,
}

pub fn feynman_kac_mc<Th, H>(
    theta: Th,
    h_bar: H,
    t_end: f64,
    x: f64,
    n_paths: usize,
    dt_path: f64,
    stream: &NoiseStream,
) -> Result<FkEstimate, SimError>
where
    Th: Fn(f64, f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    if n_paths < 100 {
        return Err(SimError::TooFewPaths(n_paths));
    }
    if dt_path <= 0.0 || t_end <= 0.0 {
        return Err(SimError::NonPositiveDt(dt_path.min(t_end)));
    }
    let steps = (t_end / dt_path).round().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let sqrt_inc = (2.0 * dt).sqrt();

    let samples: Vec<(f64, f64)> = ensemble::run_ensemble(n_paths, |i| {
        let mut s = stream.replica(i as u64 + 1);
        let mut b = 0.0;
        // Trapezoid in time along the path; theta is evaluated time-reversed.
        let mut integral = 0.5 * theta(t_end, x);
        for j in 1..=steps {
            b += sqrt_inc * s.standard_normal();
            let t = j as f64 * dt;
            let weight = if j == steps { 0.5 } else { 1.0 };
            integral += weight * theta(t_end - t, x + b);
        }
        let exponent = h_bar(x + b) + integral * dt;
        (exponent.exp(), exponent)
    });

    let n = n_paths as f64;
    let mean = samples.iter().map(|(e, _)| e).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|(e, _)| (e - mean) * (e - mean))
        .sum::<f64>()
        / (n - 1.0);
    let exp_mean = samples.iter().map(|(_, z)| z).sum::<f64>() / n;
    let exp_var = samples
        .iter()
        .map(|(_, z)| (z - exp_mean) * (z - exp_mean))
        .sum::<f64>()
        / (n - 1.0);
    Ok(FkEstimate {
        log_mean: mean.ln(),
        std_err: (var / n).sqrt() / mean,
        n_paths,
        exponent_mean: exp_mean,
        exponent_se: (exp_var / n).sqrt(),
    })
}

/// The zero-control direction of the variational representation: the mean
/// payoff of `v = 0` must not exceed the log-mean-exp estimate (Jensen),
/// within three combined standard errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariationalCheck {
    pub lower_mean: f64,
    pub lower_se: f64,
    pub fk_log_mean: f64,
    pub fk_se: f64,
    pub holds: bool,
}

pub fn variational_lower_bound_check<Th, H>(
    theta: Th,
    h_bar: H,
    t_end: f64,
    x: f64,
    n_paths: usize,
    dt_path: f64,
    stream: &NoiseStream,
) -> Result<VariationalCheck, SimError>
where
    Th: Fn(f64, f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    let fk = feynman_kac_mc(theta, h_bar, t_end, x, n_paths, dt_path, stream)?;
    let slack = 3.0 * (fk.std_err + fk.exponent_se);
    Ok(VariationalCheck {
        lower_mean: fk.exponent_mean,
        lower_se: fk.exponent_se,
        fk_log_mean: fk.log_mean,
        fk_se: fk.std_err,
        holds: fk.exponent_mean <= fk.log_mean + slack,
    })
}

/// Deterministic forced height equation on the torus, integrated spectrally
/// with the exact heat multiplier: the reference the Monte Carlo estimate is
/// checked against.
pub fn spectral_kpz_reference<Th>(
    theta: Th,
    h0: &SpectralField,
    dt: f64,
    t_end: f64,
) -> Result<SpectralField, SimError>
where
    Th: Fn(f64, f64) -> f64,
{
    if dt <= 0.0 {
        return Err(SimError::NonPositiveDt(dt));
    }
    let grid = *h0.grid();
    let mut cfg = SimConfig::new(grid, SymbolTable::Continuum, Equation::Kpz, dt, t_end)?;
    cfg.with_noise = false;
    let stepper = Stepper::new(&cfg);
    let steps = (t_end / dt).round() as usize;
    let zeta = vec![Complex64::default(); grid.max_mode() as usize + 1];
    let mut h = h0.clone();
    for j in 0..steps {
        // Midpoint evaluation of the forcing.
        let t_mid = (j as f64 + 0.5) * dt;
        let forcing_vals: Vec<f64> = (0..grid.size()).map(|l| theta(t_mid, grid.site(l))).collect();
        let forcing = dft_forward(&LatticeField::from_real(grid, &forcing_vals).expect("sized"));
        let mut next = stepper.step_kpz(&h, &zeta).state;
        for (i, k) in grid.modes().enumerate() {
            let v = next.coeff(k) + stepper.phi1dt[i] * forcing.coeff(k);
            next.set_coeff(k, v);
        }
        h = next;
    }
    Ok(h)
}
