//! Acceptance gate: every shipped claim of the toolkit, one test per
//! criterion, each printing a pass line with the measured numbers. Run with
//! `cargo test --test acceptance -- --nocapture` to see them all.

use std::time::Instant;

use kpz_core::besov::{besov_profile, default_fit_range, estimate_regularity, DyadicPartition};
use kpz_core::constants::{
    correction_constant, discrete_zero_chaos, kpz_cancellation, renormalization_constant,
    vertex_v5_l1, KernelParams,
};
use kpz_core::dynamics::{
    cole_hopf_check, feynman_kac_mc, run, spectral_kpz_reference, variational_lower_bound_check,
    Equation, InitialData, SimConfig,
};
use kpz_core::ensemble;
use kpz_core::grid::{
    cutoff, dft_forward, dft_inverse, extend, fold_mode, periodize, CoeffMap, GridSpec,
    LatticeField, SpectralField,
};
use kpz_core::noise::{stationary_ou_init, Mollifier, NoiseStream};
use kpz_core::quad::QuadratureSpec;
use kpz_core::scheme::{apply_bilinear, apply_derivative, Scheme};
use kpz_core::stats;
use num_complex::Complex64;

const SEED: u64 = 20250809;

fn random_real_field(grid: GridSpec, stream: &mut NoiseStream) -> LatticeField {
    let vals: Vec<f64> = (0..grid.size()).map(|_| stream.standard_normal()).collect();
    LatticeField::from_real(grid, &vals).unwrap()
}

#[test]
fn criterion_01_correction_constant_standard() {
    let t0 = Instant::now();
    let c = correction_constant(&Scheme::preset_standard(), &QuadratureSpec::with_tol(1e-10))
        .unwrap();
    let elapsed = t0.elapsed();
    assert!(
        (c - 0.125).abs() <= 1e-8,
        "correction constant {c} is not 1/8 within 1e-8"
    );
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!("criterion 01 PASS: c(standard) = {c:.12} (|c - 1/8| = {:.2e}, {elapsed:?})", (c - 0.125).abs());
}

#[test]
fn criterion_02_correction_constant_ss_family() {
    for (kappa, lambda) in [(1.0, 0.5), (0.0, 1.0), (1.0, 0.0)] {
        let scheme = Scheme::preset_sasamoto_spohn(kappa, lambda).unwrap();
        let c = correction_constant(&scheme, &QuadratureSpec::with_tol(1e-12)).unwrap();
        assert!(
            c.abs() <= 1e-10,
            "c = {c} for kappa={kappa}, lambda={lambda}; expected 0 within 1e-10"
        );
    }
    println!("criterion 02 PASS: c = 0 within 1e-10 across the conservative family");
}

#[test]
fn criterion_03_cubic_conservation_identity() {
    let scheme = Scheme::preset_sasamoto_spohn(1.0, 0.5).unwrap();
    let sym = scheme.symbols();
    let mut stream = NoiseStream::new(SEED, 3);
    let mut worst: f64 = 0.0;
    for n in [15usize, 31, 63] {
        let grid = GridSpec::new(n).unwrap();
        for _ in 0..100 {
            let phi = random_real_field(grid, &mut stream);
            let pf = dft_forward(&phi);
            let flux = dft_inverse(&apply_derivative(&sym, &apply_bilinear(&sym, &pf, &pf)));
            let inner: f64 = grid.eps()
                * phi
                    .values()
                    .iter()
                    .zip(flux.values())
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum::<f64>();
            let scale = phi.l2_norm() * flux.l2_norm();
            let rel = inner.abs() / scale.max(1e-30);
            assert!(
                rel <= 1e-11,
                "conservation identity violated: N={n}, relative {rel:.2e}"
            );
            worst = worst.max(rel);
        }
    }
    println!("criterion 03 PASS: <phi, D B(phi,phi)> = 0; worst relative {worst:.2e} over 300 fields");
}

#[test]
fn criterion_04_white_noise_invariance() {
    let t0 = Instant::now();
    let grid = GridSpec::new(63).unwrap();
    let scheme = Scheme::preset_sasamoto_spohn(1.0, 0.5).unwrap();
    let sym = scheme.symbols();
    let replicas = 256;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = ensemble::run_ensemble(replicas, |r| {
        let mut cfg = SimConfig::new(grid, sym.clone(), Equation::Burgers, 1e-4, 1.0).unwrap();
        cfg.initial = InitialData::WhiteInvariant { mean: 0.0 };
        let mut stream = NoiseStream::new(SEED, r as u64);
        let traj = run(&cfg, &mut stream).unwrap();
        assert!(traj.blown_up_at.is_none(), "replica {r} blew up");
        (
            dft_inverse(&traj.states[0]).real_parts(),
            dft_inverse(traj.final_state()).real_parts(),
        )
    });
    let initial: Vec<f64> = pairs.iter().flat_map(|(a, _)| a.clone()).collect();
    let evolved: Vec<f64> = pairs.iter().flat_map(|(_, b)| b.clone()).collect();
    let target_var = 0.5 / grid.eps();
    let mean = stats::z_test_mean("site mean", &evolved, 0.0, 0.01);
    let var = stats::chi_square_variance("site variance", &evolved, target_var, 0.01);
    let ks = stats::ks_two_sample("marginal t=0 vs t=1", &initial, &evolved, 0.01);
    let elapsed = t0.elapsed();
    for report in [&mean, &var, &ks] {
        assert!(
            report.pass,
            "{} failed: statistic {:.4}, p = {:.4}",
            report.name, report.statistic, report.p_value
        );
    }
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}, budget 5 min");
    println!(
        "criterion 04 PASS: invariance tests p = {:.3}/{:.3}/{:.3} at level 0.01 ({elapsed:?})",
        mean.p_value, var.p_value, ks.p_value
    );
}

#[test]
fn criterion_05_zero_chaos_convergence() {
    let scheme = Scheme::preset_standard();
    let mut prev_gap = f64::INFINITY;
    let mut last = 0.0;
    for n in [255usize, 511, 1023] {
        let v = discrete_zero_chaos(&scheme, n, 1.0).unwrap();
        let gap = (v - 0.125).abs() / 0.125;
        assert!(gap < prev_gap, "gap did not shrink at N={n}: {gap:.3e} vs {prev_gap:.3e}");
        prev_gap = gap;
        last = v;
    }
    assert!(
        prev_gap <= 0.05,
        "zero-chaos value {last} not within 5% of 1/8 at N=1023"
    );
    println!("criterion 05 PASS: zero-chaos -> 1/8, final value {last:.6} (gap {prev_gap:.2e})");
}

#[test]
fn criterion_06_renormalization_constant() {
    let quad = QuadratureSpec::with_tol(1e-12);
    let mut worst: f64 = 0.0;
    for n in [101usize, 201, 401] {
        let eps = 2.0 * std::f64::consts::PI / n as f64;
        let r = renormalization_constant(&Mollifier::Indicator, eps, &quad).unwrap();
        let rel = ((r.lattice_sum - r.continuum) / r.continuum).abs();
        assert!(
            rel <= 2.0 * eps,
            "lattice/continuum gap {rel:.3e} exceeds 2 eps at N={n}"
        );
        worst = worst.max(rel / eps);
    }
    println!("criterion 06 PASS: lattice sum matches continuum, worst gap {worst:.3} eps");
}

#[test]
fn criterion_07_cole_hopf_self_consistency() {
    let grid = GridSpec::new(63).unwrap();
    let report = cole_hopf_check(
        grid,
        Mollifier::Indicator,
        0.25,
        0.1,
        &[4e-5, 2e-5, 1e-5],
        0.1,
        true,
        SEED,
    )
    .unwrap();
    let mut sorted = report.errors.clone();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for w in sorted.windows(2) {
        assert!(
            w[1].1 < w[0].1,
            "sup error did not decrease under dt halving: {:?}",
            report.errors
        );
    }
    assert!(
        report.dt_order >= 0.4,
        "fitted order {} below 0.4 (errors {:?})",
        report.dt_order,
        report.errors
    );
    println!(
        "criterion 07 PASS: sup|e^h - w| = {:?}, fitted order {:.3}",
        report.errors, report.dt_order
    );
}

#[test]
fn criterion_08_regularity_exponent_of_stationary_ensemble() {
    let grid = GridSpec::new(1023).unwrap();
    let scheme = Scheme::preset_standard();
    let part = DyadicPartition::for_grid(&grid);
    let profiles: Vec<_> = ensemble::run_ensemble(256, |r| {
        let mut stream = NoiseStream::new(SEED, r as u64);
        let x = stationary_ou_init(&grid, &scheme, &mut stream).unwrap();
        besov_profile(&part, &x, f64::INFINITY)
    });
    let fit = estimate_regularity(&profiles, default_fit_range(&part)).unwrap();
    assert!(
        (-0.65..=-0.40).contains(&fit.alpha_hat),
        "alpha_hat = {} outside [-0.65, -0.40]",
        fit.alpha_hat
    );
    println!(
        "criterion 08 PASS: alpha_hat = {:.4} (r^2 = {:.4}) on fit range {:?}",
        fit.alpha_hat, fit.r_squared, fit.fit_range
    );
}

#[test]
fn criterion_09_vertex_bound_shadow() {
    let params = KernelParams::default();
    let quad = QuadratureSpec::with_tol(1e-7);
    let mut prev = f64::INFINITY;
    let mut ratios = Vec::new();
    for k in [8i64, 16, 32, 64, 128] {
        let v = vertex_v5_l1(k, &params, &quad).unwrap();
        let ratio = v.value / (k as f64).powf(0.25);
        assert!(
            ratio <= prev,
            "value(k)/k^0.25 increased at k={k}: {ratio:.4} > {prev:.4}"
        );
        ratios.push(ratio);
        prev = ratio;
    }
    println!("criterion 09 PASS: value(k)/k^0.25 nonincreasing: {ratios:.4?}");
}

#[test]
fn criterion_10_kpz_cancellation() {
    let coarse = kpz_cancellation(&Mollifier::Indicator, 64, &QuadratureSpec::with_tol(1e-4))
        .unwrap();
    assert!(
        coarse.symmetric_zero.abs() <= 1e-12 * coarse.scale,
        "symmetrized sum {} vs scale {}",
        coarse.symmetric_zero,
        coarse.scale
    );
    let fine = kpz_cancellation(&Mollifier::Indicator, 64, &QuadratureSpec::with_tol(1e-6))
        .unwrap();
    assert!(fine.regularized_limit.is_finite());
    let rel = ((coarse.regularized_limit - fine.regularized_limit) / fine.regularized_limit).abs();
    assert!(
        rel <= 0.01,
        "regularized limit unstable between refinement levels: {rel:.3e}"
    );
    // Pinned by the Riemann oracle during development; the smooth-profile
    // evaluation agrees with -pi^2/3 to 2e-9, the indicator to 4e-6.
    let reference = -std::f64::consts::PI.powi(2) / 3.0;
    assert!(
        ((fine.regularized_limit - reference) / reference).abs() <= 1e-4,
        "regularized limit {} drifted from frozen reference {}",
        fine.regularized_limit,
        reference
    );
    println!(
        "criterion 10 PASS: symmetrized sum {:.1e} (scale {:.1e}), regularized limit {:.8}",
        coarse.symmetric_zero, coarse.scale, fine.regularized_limit
    );
}

#[test]
fn criterion_11_feynman_kac_vs_spectral() {
    let theta = |_t: f64, y: f64| y.cos();
    let t_end = 0.25;
    let grid = GridSpec::new(63).unwrap();
    let h0 = SpectralField::zeros(grid, true);
    let href = spectral_kpz_reference(theta, &h0, 1e-4, t_end).unwrap();
    let stream = NoiseStream::new(SEED, 9000);
    let x = 0.0;
    let fk = feynman_kac_mc(theta, |_| 0.0, t_end, x, 10_000, 2.5e-4, &stream).unwrap();
    let spectral = extend(&href, x).re;
    let gap = (fk.log_mean - spectral).abs();
    assert!(
        gap <= 3.0 * fk.std_err,
        "MC {} vs spectral {} differ by {gap:.3e} > 3 se ({:.3e})",
        fk.log_mean,
        spectral,
        fk.std_err
    );
    let vb = variational_lower_bound_check(theta, |_| 0.0, t_end, x, 10_000, 2.5e-4, &stream)
        .unwrap();
    assert!(vb.holds, "zero-control lower bound violated: {vb:?}");
    println!(
        "criterion 11 PASS: MC {:.6} vs spectral {:.6} (se {:.1e}); lower bound {:.6} holds",
        fk.log_mean, spectral, fk.std_err, vb.lower_mean
    );
}

#[test]
fn criterion_12_exactness_suite() {
    let t0 = Instant::now();
    let mut stream = NoiseStream::new(SEED, 12);

    // DFT roundtrip and Parseval over odd sizes.
    for n in [5usize, 15, 63, 255, 1023, 1025] {
        let grid = GridSpec::new(n).unwrap();
        let u = random_real_field(grid, &mut stream);
        let f = dft_forward(&u);
        let back = dft_inverse(&f);
        let scale = u.linf_norm();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!((a - b).norm() <= 1e-12 * scale, "roundtrip failed at N={n}");
        }
        let phys: f64 = grid.eps() * u.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
        assert!(
            (phys - f.energy()).abs() <= 1e-12 * phys,
            "Parseval failed at N={n}"
        );
    }

    // fold periodicity, periodization, cutoff.
    let grid = GridSpec::new(63).unwrap();
    for k in -200..=200 {
        for j in -3..=3i64 {
            assert_eq!(fold_mode(k + j * 63, &grid), fold_mode(k, &grid));
        }
    }
    let mut m = CoeffMap::new();
    m.insert(70, Complex64::new(1.0, 2.0));
    m.insert(7, Complex64::new(0.5, 0.0));
    let folded = periodize(&m, &grid);
    assert_eq!(folded.coeff(7), Complex64::new(1.5, 2.0));
    assert!(cutoff(&m, &grid).len() == 1);

    // Paraproduct decomposition identity.
    let band = 24;
    let mut f_map = CoeffMap::new();
    let mut g_map = CoeffMap::new();
    for k in -band..=band {
        f_map.insert(k, Complex64::new(stream.standard_normal(), stream.standard_normal()));
        g_map.insert(k, Complex64::new(stream.standard_normal(), stream.standard_normal()));
    }
    let parts = kpz_core::besov::paraproducts(&f_map, &g_map);
    let direct = kpz_core::besov::convolve(&f_map, &g_map);
    let mut recombined = parts.less.clone();
    for (k, c) in parts.greater.iter().chain(parts.resonant.iter()) {
        *recombined.entry(*k).or_insert(Complex64::default()) += *c;
    }
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, c) in &direct {
        scale = scale.max(c.norm());
        let got = recombined.get(k).copied().unwrap_or_default();
        defect = defect.max((got - c).norm());
    }
    assert!(defect <= 1e-11 * scale, "decomposition defect {defect:.2e}");

    // Spectral vs stencil operators for every preset.
    for scheme in [
        Scheme::preset_standard(),
        Scheme::preset_sasamoto_spohn(1.0, 0.5).unwrap(),
        Scheme::preset_sasamoto_spohn(0.0, 1.0).unwrap(),
    ] {
        let sym = scheme.symbols();
        for n in [15usize, 31, 63] {
            let grid = GridSpec::new(n).unwrap();
            let u = random_real_field(grid, &mut stream);
            let v = random_real_field(grid, &mut stream);
            let uf = dft_forward(&u);
            let vf = dft_forward(&v);
            let pairs = [
                (
                    dft_inverse(&kpz_core::scheme::apply_laplacian(&sym, &uf)),
                    scheme.laplacian_stencil(&u),
                ),
                (
                    dft_inverse(&apply_derivative(&sym, &uf)),
                    scheme.derivative_stencil(&u),
                ),
                (
                    dft_inverse(&apply_bilinear(&sym, &uf, &vf)),
                    scheme.bilinear_stencil(&u, &v),
                ),
            ];
            for (spec_side, phys_side) in pairs {
                let scale = phys_side.linf_norm().max(1e-10);
                for (a, b) in spec_side.values().iter().zip(phys_side.values()) {
                    assert!(
                        (a - b).norm() <= 1e-10 * scale,
                        "operator equivalence failed: N={n}, scheme {}",
                        scheme.name
                    );
                }
            }
        }
    }

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "exactness suite took {elapsed:?}");
    println!("criterion 12 PASS: exactness suite complete in {elapsed:?}");
}
