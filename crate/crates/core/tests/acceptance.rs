//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the report lines are always
//! printed. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aerosplit::acoustics::{compare_sources, solve_convective_wave, true_source, LighthillForcing, SourceSeries};
use aerosplit::baseflow::{compute_base_flow, BaseFlow};
use aerosplit::diagnostics::{conservation_drift, intensity};
use aerosplit::fields::random::{band_limited_scalar, band_limited_vector};
use aerosplit::fields::{spectral_shift, transform_forward, Grid, ScalarField, VectorField};
use aerosplit::perturbation::{coefficient_matrix, eigendecompose, evolve, step, FluxMode, PerturbationState};
use aerosplit::scenarios::{FlowKind, FlowProvider};
use aerosplit::splitting::helmholtz_split;

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Plane-wave initial state `p' = P cos(k.x + phase)`, `u' = P / (rho c) n cos(..)`.
fn plane_wave_state(grid: &Grid, mode: [i64; 2], amp: f64, rho: f64, c: f64, phase: f64) -> PerturbationState {
    let l = grid.length();
    let k = [2.0 * PI * mode[0] as f64 / l[0], 2.0 * PI * mode[1] as f64 / l[1]];
    let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let n = [k[0] / kn, k[1] / kn];
    let p = ScalarField::from_fn(*grid, |x| amp * (k[0] * x[0] + k[1] * x[1] + phase).cos());
    let u = VectorField::from_fn(*grid, |x| {
        let v = amp / (rho * c) * (k[0] * x[0] + k[1] * x[1] + phase).cos();
        [v * n[0], v * n[1], 0.0]
    });
    PerturbationState::from_primitive(0.0, &p, &u, rho, c).unwrap()
}

fn mode_phase(f: &ScalarField, mode: [i64; 2]) -> f64 {
    transform_forward(f).unwrap().coefficient(&mode).arg()
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn criterion_1() -> Outcome {
    let grid = Grid::uniform(2, 128, 1.0).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_curl, mut worst_div, mut worst_rec) = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for _ in 0..100 {
        let kmax = rng.gen_range(2..=10);
        let u = band_limited_vector(&grid, kmax, &mut rng);
        let s = helmholtz_split(&u).map_err(err)?;
        let c = s.certificates(&u);
        ok &= c.holds(1e-10, 1e-14) && c.recombination < 1e-12;
        worst_curl = worst_curl.max(c.curl_relative());
        worst_div = worst_div.max(c.div_relative());
        worst_rec = worst_rec.max(c.recombination);
    }
    Ok((
        ok,
        format!("100 fields n=128: max rel curl(u_a) {worst_curl:.2e}, max rel div(u_v) {worst_div:.2e}, recombination {worst_rec:.2e}"),
    ))
}

fn criterion_2() -> Outcome {
    let grid = Grid::uniform(2, 128, 1.0).map_err(err)?;
    let (rho, c) = (1.0, 1.0);
    let bf = BaseFlow::uniform(&grid, &[0.3, -0.15], rho * c * c, c).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p0 = band_limited_scalar(&grid, 6, &mut rng).scale(1e-2);
    let u0 = band_limited_vector(&grid, 6, &mut rng).scale(1e-2);
    let ua = helmholtz_split(&u0).map_err(err)?.u_a;
    let dt = 0.3 * grid.min_spacing() / (0.3f64.hypot(0.15) + c);
    let mut full = PerturbationState::from_primitive(0.0, &p0, &u0, rho, c).map_err(err)?;
    let mut acoustic = PerturbationState::from_primitive(0.0, &p0, &ua, rho, c).map_err(err)?;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        full = step(&full, &bf, dt, FluxMode::Central).map_err(err)?;
        acoustic = step(&acoustic, &bf, dt, FluxMode::Central).map_err(err)?;
        worst = worst.max(full.p_prime().sub(&acoustic.p_prime()).rms());
    }
    Ok((worst < 1e-10, format!("200 central steps n=128: max L2 |p'_full - p'_acoustic| = {worst:.2e}")))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_eig, mut worst_rec) = (0.0f64, 0.0f64);
    for case in 0..1000 {
        let d = 2 + case % 2;
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nu: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let rho = rng.gen_range(0.3..3.0);
        let c = rng.gen_range(0.3..3.0);
        let a = coefficient_matrix(&u, rho, c, &nu).map_err(err)?;
        let e = eigendecompose(&a).map_err(err)?;
        let un: f64 = u.iter().zip(&nu).map(|(x, y)| x * y).sum();
        let mut expected = vec![un - c];
        expected.extend(std::iter::repeat_n(un, d - 1));
        expected.push(un + c);
        // independent oracle: eigenvalues of the symmetrized matrix S^(1/2) A S^(-1/2)
        let mut s_half = DMatrix::identity(d + 1, d + 1);
        s_half[(0, 0)] = rho * c;
        let mut s_half_inv = DMatrix::identity(d + 1, d + 1);
        s_half_inv[(0, 0)] = 1.0 / (rho * c);
        let sym = &s_half * &a * &s_half_inv;
        let sym = (&sym + sym.transpose()) * 0.5;
        let mut oracle: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        oracle.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for k in 0..=d {
            worst_eig = worst_eig.max((e.lambda[k] - expected[k]).abs()).max((oracle[k] - expected[k]).abs());
        }
        let diff = e.reconstruct() - &a;
        let inf_norm = (0..=d).map(|r| diff.row(r).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        worst_rec = worst_rec.max(inf_norm);
    }
    Ok((
        worst_eig < 1e-12 && worst_rec < 1e-12,
        format!("1000 cases: max eigenvalue error {worst_eig:.2e}, max |R L R^-1 - A|_inf {worst_rec:.2e}"),
    ))
}

fn criterion_4() -> Outcome {
    let grid = Grid::uniform(2, 128, 1.0).map_err(err)?;
    let (rho, c) = (1.0, 1.0);
    let u_bar = [0.2, 0.1];
    let bf = BaseFlow::uniform(&grid, &u_bar, rho * c * c, c).map_err(err)?;
    let dt = 0.3 * grid.min_spacing() / (u_bar[0].hypot(u_bar[1]) + c);
    let s0 = plane_wave_state(&grid, [1, 1], 1e-2, rho, c, 0.3);
    let central = conservation_drift(&evolve(&s0, &bf, dt, 100, FluxMode::Central).map_err(err)?).map_err(err)?;
    let drift = central.max_abs_drift();

    let dt_up = 0.5 * grid.min_spacing() / (u_bar[0].hypot(u_bar[1]) + c);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mixed = PerturbationState::new(
        0.0,
        band_limited_scalar(&grid, 8, &mut rng),
        band_limited_vector(&grid, 8, &mut rng),
        rho,
        c,
    )
    .map_err(err)?;
    let mut monotone = true;
    let mut up_drift = 0.0;
    for s in [s0, mixed] {
        let rep = conservation_drift(&evolve(&s, &bf, dt_up, 100, FluxMode::Upwind).map_err(err)?).map_err(err)?;
        monotone &= rep.is_non_increasing(0.0);
        up_drift = *rep.drift.last().unwrap();
    }
    Ok((
        drift < 1e-8 && monotone,
        format!(
            "central 100 steps CFL 0.3: max rel drift {drift:.2e}; upwind CFL 0.5 non-increasing: {monotone} (mixed-state loss {:.2e})",
            -up_drift
        ),
    ))
}

fn criterion_5() -> Outcome {
    let grid = Grid::uniform(2, 64, 1.0).map_err(err)?;
    let (rho, c) = (1.2, 0.8);
    let bf = BaseFlow::uniform(&grid, &[0.15, -0.1], rho * c * c, c).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s0 = PerturbationState::from_primitive(
        0.0,
        &band_limited_scalar(&grid, 6, &mut rng),
        &band_limited_vector(&grid, 6, &mut rng),
        rho,
        c,
    )
    .map_err(err)?;
    let dt = 0.3 * grid.min_spacing() / (0.15f64.hypot(0.1) + c);
    let mut worst = 0.0f64;
    for mode in [FluxMode::Central, FluxMode::Upwind] {
        let rep = conservation_drift(&evolve(&s0, &bf, dt, 50, mode).map_err(err)?).map_err(err)?;
        worst = worst.max(rep.max_identity_defect());
    }
    Ok((worst < 1e-8, format!("mixed-mode runs, 50 steps each mode: max |eta - (acoustic + vortical)| / eta = {worst:.2e}")))
}

/// Interior (r < 0.5) max of the pathline-averaged velocity for solid rotation.
fn rotation_error(n: usize) -> Result<(f64, BaseFlow, Grid), String> {
    let grid = Grid::uniform(2, n, 2.0).map_err(err)?;
    let omega = 2.0 * PI;
    let p = FlowProvider::new(FlowKind::SolidRotation { omega, p0: 1.0 }, 1.0).map_err(err)?;
    let dt = 3.0 * grid.min_spacing() / (omega * 0.8);
    let bf = compute_base_flow(&p, &grid, 1.0, dt, &[0.0]).map_err(err)?;
    let u = &bf.samples()[0];
    let mut worst = 0.0f64;
    for (k, x) in grid.centers().enumerate() {
        if (x[0] - 1.0).hypot(x[1] - 1.0) < 0.5 {
            let v = u.at(k);
            worst = worst.max(v[0].abs()).max(v[1].abs());
        }
    }
    Ok((worst, bf, grid))
}

/// Pathline average of rigid rotation from `x` over `[0, tau]`: RK4 pathline
/// with the analytic velocity and composite Simpson quadrature.
fn rotation_oracle(x: [f64; 3], omega: f64, tau: f64) -> [f64; 2] {
    let vel = |p: [f64; 2]| [-omega * (p[1] - 1.0), omega * (p[0] - 1.0)];
    let steps = 2000;
    let h = tau / steps as f64;
    let mut pos = [x[0], x[1]];
    let mut samples = vec![vel(pos)];
    for _ in 0..steps {
        let k1 = vel(pos);
        let k2 = vel([pos[0] + 0.5 * h * k1[0], pos[1] + 0.5 * h * k1[1]]);
        let k3 = vel([pos[0] + 0.5 * h * k2[0], pos[1] + 0.5 * h * k2[1]]);
        let k4 = vel([pos[0] + h * k3[0], pos[1] + h * k3[1]]);
        for a in 0..2 {
            pos[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
        samples.push(vel(pos));
    }
    let mut avg = [0.0; 2];
    for (i, s) in samples.iter().enumerate() {
        let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        for a in 0..2 {
            avg[a] += w * s[a] * h / 3.0 / tau;
        }
    }
    avg
}

fn criterion_6() -> Outcome {
    // uniform flow
    let grid = Grid::uniform(2, 32, 1.0).map_err(err)?;
    let uni = FlowProvider::uniform(&[0.3, -0.2], 1.0, 1.0).map_err(err)?;
    let bf = compute_base_flow(&uni, &grid, 1.0, 0.05, &[0.0, 0.5, 1.0]).map_err(err)?;
    let uniform_err = bf
        .samples()
        .iter()
        .map(|u| u.sub(&VectorField::constant(grid, &[0.3, -0.2]).unwrap()).max_abs())
        .fold(0.0, f64::max);

    // oscillating uniform flow averaged over one period
    let osc = FlowProvider::new(
        FlowKind::OscillatingUniform {
            u0: vec![0.2, 0.1],
            amplitude: 0.5,
            direction: vec![0.6, 0.8],
            period: 2.0,
            p0: 1.0,
        },
        1.0,
    )
    .map_err(err)?;
    let bf = compute_base_flow(&osc, &grid, 2.0, 0.02, &[0.0, 0.7, 2.0]).map_err(err)?;
    let osc_err = bf
        .samples()
        .iter()
        .map(|u| u.sub(&VectorField::constant(grid, &[0.2, 0.1]).unwrap()).max_abs())
        .fold(0.0, f64::max);

    // solid rotation, refinement study and ODE oracle
    let mut errs = Vec::new();
    let mut last = None;
    for n in [32, 64, 128] {
        let (e, bf, g) = rotation_error(n)?;
        errs.push(e);
        last = Some((bf, g));
    }
    let (bf, g) = last.unwrap();
    let mut oracle_gap = 0.0f64;
    let mut oracle_size = 0.0f64;
    for (k, x) in g.centers().enumerate().step_by(37) {
        if (x[0] - 1.0).hypot(x[1] - 1.0) < 0.5 {
            let o = rotation_oracle(x, 2.0 * PI, 1.0);
            let v = bf.samples()[0].at(k);
            oracle_gap = oracle_gap.max((v[0] - o[0]).abs()).max((v[1] - o[1]).abs());
            oracle_size = oracle_size.max(o[0].abs()).max(o[1].abs());
        }
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    // least-squares slope of log2(err) against log2(1/h) over the three grids;
    // the coarsest grid resolves the cutoff ring with about three cells, so a
    // single pair is not a fair order estimate
    let fitted = (errs[0] / errs[2]).log2() / 2.0;
    let ok = uniform_err < 1e-12
        && osc_err < 1e-8
        && errs[2] < 5e-3
        && errs.windows(2).all(|w| w[1] < w[0])
        && fitted >= 1.0
        && oracle_gap < 5e-3
        && oracle_size < 1e-10;
    Ok((
        ok,
        format!(
            "uniform {uniform_err:.1e}; oscillating {osc_err:.1e}; rotation interior n=32/64/128: {:.2e}/{:.2e}/{:.2e} (pair orders {:.2}, {:.2}, fitted {fitted:.2}); oracle |u_bar| {oracle_size:.1e}, scheme-oracle gap {oracle_gap:.2e}",
            errs[0], errs[1], errs[2], orders[0], orders[1]
        ),
    ))
}

fn criterion_7() -> Outcome {
    let grid = Grid::uniform(2, 128, 1.0).map_err(err)?;
    let c = 1.0;
    let u_bar = [0.3, 0.2];
    let moving = BaseFlow::uniform(&grid, &u_bar, 1.0, c).map_err(err)?;
    let rest = BaseFlow::uniform(&grid, &[0.0, 0.0], 1.0, c).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let p0 = band_limited_scalar(&grid, 3, &mut rng);
    let r0 = band_limited_scalar(&grid, 3, &mut rng);
    let period = 1.0 / c;
    let dt = 0.3 * grid.min_spacing() / (u_bar[0].hypot(u_bar[1]) + c);
    let a = solve_convective_wave(&p0, &r0, &moving, &SourceSeries::none(), period, dt).map_err(err)?;
    let b = solve_convective_wave(&p0, &r0, &rest, &SourceSeries::none(), period, dt).map_err(err)?;
    let t = *a.times.last().unwrap();
    let translated = spectral_shift(b.p.last().unwrap(), &[u_bar[0] * t, u_bar[1] * t]);
    let galilean = a.p.last().unwrap().sub(&translated).rms();

    // dispersion: right-running plane wave, track the phase of its mode
    let mode = [2i64, 1];
    let k = [2.0 * PI * 2.0, 2.0 * PI];
    let kn = k[0].hypot(k[1]);
    let p_wave = ScalarField::from_fn(grid, |x| (k[0] * x[0] + k[1] * x[1]).cos());
    let rate = ScalarField::from_fn(grid, |x| c * kn * (k[0] * x[0] + k[1] * x[1]).sin());
    let tr = solve_convective_wave(&p_wave, &rate, &moving, &SourceSeries::none(), 0.5, dt).map_err(err)?;
    let mut total = 0.0;
    for w in tr.p.windows(2) {
        total += wrap_angle(mode_phase(&w[1], mode) - mode_phase(&w[0], mode));
    }
    let t_end = *tr.times.last().unwrap();
    let speed = -total / (kn * t_end);
    let expected = (u_bar[0] * k[0] + u_bar[1] * k[1]) / kn + c;
    let rel = (speed - expected).abs() / expected;
    Ok((
        galilean < 1e-5 && rel < 5e-4,
        format!("Galilean L2 {galilean:.2e} over one period n=128; phase speed {speed:.6} vs u.k/|k| + c = {expected:.6} (rel {rel:.1e})"),
    ))
}

fn criterion_8() -> Outcome {
    // analytic source
    let g = Grid::uniform(2, 128, 2.0 * PI).map_err(err)?;
    let u = VectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
    let want = ScalarField::from_fn(g, |x| 2.0 * (2.0 * x[0]).cos());
    let analytic = true_source(&u, 1.0, 0.0).map_err(err)?.s.sub(&want).max_abs();

    // first-order system vs convective wave with the true source
    let grid = Grid::uniform(2, 128, 1.0).map_err(err)?;
    let (amp, c, p0) = (1e-3, 1.0, 1.0);
    let u0 = [0.3, 0.0];
    let provider = FlowProvider::plane_wave(&u0, p0, c, amp, &[1, 0], 0.0).map_err(err)?;
    let bf = BaseFlow::uniform(&grid, &u0, p0, c).map_err(err)?;
    let dt = 0.3 * grid.min_spacing() / (0.3 + c);
    let cmp = compare_sources(&provider, &bf, 1.0, dt, LighthillForcing::TrueSource).map_err(err)?;
    let cross = cmp.rows.iter().map(|r| r.l2_true_vs_theorem1).fold(0.0, f64::max);

    // Lighthill operator vs convective operator: phase shift u_bar.k T
    let coarse = Grid::uniform(2, 32, 1.0).map_err(err)?;
    let t_end = 0.25;
    let mut diffs = Vec::new();
    let mut sign_ok = true;
    let mut worst_shape = 0.0f64;
    for speed in [0.05, 0.1, 0.2, 0.3] {
        let prov = FlowProvider::plane_wave(&[speed, 0.0], p0, c, amp, &[1, 0], 0.0).map_err(err)?;
        let bf = BaseFlow::uniform(&coarse, &[speed, 0.0], p0, c).map_err(err)?;
        let dt = 0.3 * coarse.min_spacing() / (speed + c);
        let cmp = compare_sources(&prov, &bf, t_end, dt, LighthillForcing::TrueSource).map_err(err)?;
        let last = cmp.last();
        diffs.push(last.l2_true_vs_lighthill);
        let conv = cmp.convective.p.last().unwrap();
        let light = cmp.lighthill.p.last().unwrap();
        let shift = wrap_angle(mode_phase(conv, [1, 0]) - mode_phase(light, [1, 0]));
        let expected = -speed * 2.0 * PI * last.t;
        sign_ok &= shift < 0.0 && (shift - expected).abs() < 1e-3 * expected.abs();
        let predicted = 2f64.sqrt() * amp * (0.5 * speed * 2.0 * PI * last.t).sin().abs();
        worst_shape = worst_shape.max((last.l2_true_vs_lighthill - predicted).abs() / predicted);
    }
    let monotone = diffs.windows(2).all(|w| w[1] > w[0]);
    let ok = analytic < 1e-10 && cross < 1e-4 && monotone && sign_ok && worst_shape < 1e-2;
    Ok((
        ok,
        format!(
            "analytic source {analytic:.1e}; first-order vs convective L2 {cross:.2e}; Lighthill gap for |u_bar| 0.05..0.3: {} (monotone {monotone}, lagging phase {sign_ok}, rel. deviation from sqrt2 P |sin(u.kT/2)| {worst_shape:.1e})",
            diffs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join("/")
        ),
    ))
}

fn criterion_9() -> Outcome {
    let grid = Grid::uniform(2, 128, 1.0).map_err(err)?;
    let (p0, c) = (1.3, 0.9);
    let rho = p0 / (c * c);
    let amp = 1e-2;
    let u0 = [0.25, -0.1];
    let p = FlowProvider::plane_wave(&u0, p0, c, amp, &[2, 3], 0.4).map_err(err)?;
    let kn = (2f64 * 2.0 * PI).hypot(3.0 * 2.0 * PI);
    let n = [4.0 * PI / kn, 6.0 * PI / kn];
    let mut worst = 0.0f64;
    for t in [0.0, 0.37, 1.9] {
        let s = p.sample(&grid, t).map_err(err)?;
        for k in 0..grid.len() {
            let pp = s.p.values()[k] - p0;
            let un = (s.u.component(0).values()[k] - u0[0]) * n[0] + (s.u.component(1).values()[k] - u0[1]) * n[1];
            if un.abs() > 1e-3 * amp / (rho * c) {
                worst = worst.max((pp / un - rho * c).abs());
            } else {
                worst = worst.max((pp - rho * c * un).abs() / amp);
            }
        }
    }
    Ok((worst < 1e-10, format!("max |p'/(u'.n) - rho_bar c| = {worst:.2e} at 3 times, n=128")))
}

fn criterion_10() -> Outcome {
    let grid = Grid::uniform(2, 64, 1.0).map_err(err)?;
    let (rho, c) = (1.2, 1.0);
    let amp = 1.0;
    let bf = BaseFlow::uniform(&grid, &[0.0, 0.0], rho * c * c, c).map_err(err)?;
    // mode (1, 0): one period is 1 / c; CFL 0.15 keeps the RK4 phase error of
    // the window well below the tolerance
    let steps = (1.0 / (0.15 * grid.min_spacing() / c)).ceil() as usize;
    let dt = 1.0 / (c * steps as f64);
    let h = grid.spacing(0);
    let s0 = plane_wave_state(&grid, [1, 0], amp, rho, c, 0.5 * 2.0 * PI * h);
    let traj = evolve(&s0, &bf, dt, steps, FluxMode::Central).map_err(err)?;
    let i = intensity(&traj, &bf, steps).map_err(err)?;
    let expected = amp * amp / (2.0 * rho * c);
    let mag_err = i.i.component(0).map(|v| v - expected).max_abs().max(i.i.component(1).max_abs());
    Ok((
        i.div_norm < 1e-8 && mag_err < 1e-8,
        format!("one-period window ({steps} steps): div_norm {:.2e}, max |I - P^2/(2 rho c) n| {mag_err:.2e}", i.div_norm),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("splitting certificates", criterion_1),
        ("acoustic independence", criterion_2),
        ("eigenstructure", criterion_3),
        ("energy conservation", criterion_4),
        ("acoustic energy identity", criterion_5),
        ("base flow", criterion_6),
        ("convective wave", criterion_7),
        ("source identities", criterion_8),
        ("impedance relation", criterion_9),
        ("intensity corollary", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<26} {} ({:.1} s) {}",
            k + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
