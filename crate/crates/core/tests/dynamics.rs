use std::f64::consts::PI;

use aerosplit::acoustics::{solve_convective_wave, SourceSeries};
use aerosplit::baseflow::BaseFlow;
use aerosplit::diagnostics::{energy_balance_residual, scale_separation};
use aerosplit::fields::random::band_limited_vector;
use aerosplit::fields::{Grid, ScalarField, VectorField};
use aerosplit::perturbation::{evolve, FluxMode, PerturbationState};
use aerosplit::scenarios::FlowProvider;
use aerosplit::splitting::{acoustic_subsystem_step, helmholtz_split, vortical_constraint_residual};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const RHO: f64 = 1.0;
const C: f64 = 1.0;

fn rest(grid: &Grid, u: &[f64]) -> BaseFlow {
    BaseFlow::uniform(grid, u, RHO * C * C, C).unwrap()
}

#[test]
fn divergence_free_shear_is_advected_without_sound() {
    let grid = Grid::uniform(2, 64, 1.0).unwrap();
    let u_bar = [0.3, 0.2];
    let bf = rest(&grid, &u_bar);
    let shear = |x: [f64; 3], t: f64| (2.0 * PI * (x[0] - u_bar[0] * t)).sin();
    let u0 = VectorField::from_fn(grid, |x| [0.0, shear(x, 0.0), 0.0]);
    let s0 = PerturbationState::from_primitive(0.0, &ScalarField::zeros(grid), &u0, RHO, C).unwrap();
    let dt = 0.3 * grid.spacing(0) / (0.4 + C);
    let steps = (0.5 / dt).ceil() as usize;
    let dt = 0.5 / steps as f64;
    let end = evolve(&s0, &bf, dt, steps, FluxMode::Central).unwrap().pop().unwrap();
    assert!(end.p_prime().max_abs() < 1e-10, "{:e}", end.p_prime().max_abs());
    let exact = VectorField::from_fn(grid, |x| [0.0, shear(x, 0.5), 0.0]);
    let err = end.u_prime().sub(&exact).rms();
    assert!(err < 1e-3, "{err:e}");
}

#[test]
fn central_is_exact_and_upwind_converges_at_first_order() {
    let (u0, t_end) = (0.2, 0.25);
    let mut prev: Option<f64> = None;
    for n in [32usize, 64, 128] {
        let grid = Grid::uniform(2, n, 1.0).unwrap();
        let bf = rest(&grid, &[u0, 0.0]);
        let p = ScalarField::from_fn(grid, |x| (2.0 * PI * x[0]).cos());
        let u = VectorField::from_fn(grid, |x| [(2.0 * PI * x[0]).cos() / (RHO * C), 0.0, 0.0]);
        let s0 = PerturbationState::from_primitive(0.0, &p, &u, RHO, C).unwrap();
        let steps = (t_end / (0.25 * grid.spacing(0) / (u0 + C))).ceil() as usize;
        let dt = t_end / steps as f64;
        let exact = ScalarField::from_fn(grid, |x| (2.0 * PI * (x[0] - (u0 + C) * t_end)).cos());
        let a = evolve(&s0, &bf, dt, steps, FluxMode::Central).unwrap().pop().unwrap();
        assert!(a.p_prime().sub(&exact).rms() < 1e-6, "n = {n}");
        let b = evolve(&s0, &bf, dt, steps, FluxMode::Upwind).unwrap().pop().unwrap();
        let err = b.p_prime().sub(&exact).rms();
        if let Some(e) = prev {
            let order = (e / err).log2();
            assert!(order > 0.9, "n = {n}: order {order:.2}");
        }
        prev = Some(err);
    }
}

/// Standing wave `p' = cos(k (x - u t)) cos(k c t)` with its divergence.
fn standing(grid: Grid, u: f64, t: f64) -> (ScalarField, ScalarField) {
    let k = 2.0 * PI;
    let p = ScalarField::from_fn(grid, |x| (k * (x[0] - u * t)).cos() * (k * C * t).cos());
    // D(p / (rho c^2))/Dt = -theta
    let theta = ScalarField::from_fn(grid, |x| (k * (x[0] - u * t)).cos() * k * C * (k * C * t).sin() / (RHO * C * C));
    (p, theta)
}

#[test]
fn acoustic_subsystem_returns_after_one_period() {
    let grid = Grid::uniform(2, 128, 1.0).unwrap();
    for (u, tol) in [(0.0, 1e-6), (0.4, 1e-5)] {
        let bf = rest(&grid, &[u, 0.0]);
        let period = 1.0 / C;
        let steps = (period / (0.3 * grid.spacing(0) / (u + C))).ceil() as usize;
        let dt = period / steps as f64;
        let (mut p, mut theta) = standing(grid, u, 0.0);
        for k in 0..steps {
            (p, theta) = acoustic_subsystem_step(&p, &theta, &bf, k as f64 * dt, dt).unwrap();
        }
        let (pe, te) = standing(grid, u, period);
        let err = p.sub(&pe).max_abs().max(theta.sub(&te).max_abs() / (2.0 * PI));
        assert!(err < tol, "u = {u}: {err:e}");
    }
}

#[test]
fn convective_wave_solver_matches_the_standing_wave() {
    let grid = Grid::uniform(2, 128, 1.0).unwrap();
    let bf = rest(&grid, &[0.0, 0.0]);
    let (p0, _) = standing(grid, 0.0, 0.0);
    let traj =
        solve_convective_wave(&p0, &ScalarField::zeros(grid), &bf, &SourceSeries::none(), 1.0, 0.3 * grid.spacing(0))
            .unwrap();
    for (t, p) in traj.times.iter().zip(&traj.p) {
        let err = p.sub(&standing(grid, 0.0, *t).0).max_abs();
        assert!(err < 1e-6, "t = {t}: {err:e}");
    }
}

#[test]
fn advected_vortical_field_satisfies_the_constraint() {
    let grid = Grid::uniform(2, 128, 1.0).unwrap();
    let u_bar = [0.3, -0.2];
    let bf = rest(&grid, &u_bar);
    let u_v = |t: f64| {
        VectorField::from_fn(grid, |x| {
            let (a, b) = (x[0] - u_bar[0] * t, x[1] - u_bar[1] * t);
            let cx = (2.0 * PI * a).sin() * (2.0 * PI * b).cos();
            let cy = -(2.0 * PI * a).cos() * (2.0 * PI * b).sin();
            [cx, cy, 0.0]
        })
    };
    let dt = 1e-4;
    let series: Vec<_> = (0..3).map(|k| u_v(k as f64 * dt)).collect();
    let zeros = vec![VectorField::zeros(grid); 3];
    let r = vortical_constraint_residual(&series, &zeros, &bf, 0.0, dt).unwrap();
    assert!(r.max_abs() < 1e-6, "{:e}", r.max_abs());
    // a field that does not move with the flow violates it
    let frozen = vec![u_v(0.0); 3];
    let r = vortical_constraint_residual(&frozen, &zeros, &bf, 0.0, dt).unwrap();
    assert!(r.max_abs() > 1.0);
}

#[test]
fn split_of_an_evolved_state_carries_sound_in_the_curl_free_part() {
    let grid = Grid::uniform(2, 64, 1.0).unwrap();
    let bf = rest(&grid, &[0.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = band_limited_vector(&grid, 4, &mut rng);
    let vortical = helmholtz_split(&u).unwrap().u_v;
    let s0 = PerturbationState::from_primitive(0.0, &ScalarField::zeros(grid), &vortical, RHO, C).unwrap();
    let end = evolve(&s0, &bf, 0.004, 50, FluxMode::Central).unwrap().pop().unwrap();
    // at rest the vortical part is steady and never radiates
    let split = helmholtz_split(&end.u_prime()).unwrap();
    assert!(split.u_a.max_abs() < 1e-10);
    assert!(split.u_v.sub(&vortical).max_abs() < 1e-10);
    assert!(end.p_prime().max_abs() < 1e-10);
}

#[test]
fn energy_balance_residual_shrinks_with_the_step() {
    let grid = Grid::uniform(2, 32, 1.0).unwrap();
    let bf = rest(&grid, &[0.25, 0.1]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = band_limited_vector(&grid, 3, &mut rng);
    let p = u.component(0).scale(0.5);
    let s0 = PerturbationState::from_primitive(0.0, &p, &u, RHO, C).unwrap();
    let mut prev = f64::INFINITY;
    for dt in [0.004, 0.002, 0.001] {
        let tr = evolve(&s0, &bf, dt, 2, FluxMode::Central).unwrap();
        let r = energy_balance_residual(&tr[0], &tr[1], &tr[2], &bf, dt).unwrap().max_abs();
        assert!(r < prev / 3.0, "dt = {dt}: {r:e}");
        prev = r;
    }
}

#[test]
fn scale_ratios_are_linear_in_the_wave_amplitude() {
    let grid = Grid::uniform(2, 32, 1.0).unwrap();
    let reports: Vec<_> = [1e-3, 2e-3]
        .iter()
        .map(|&a| {
            let p = FlowProvider::plane_wave(&[0.2, 0.0], 1.0, C, a, &[1, 0], 0.0).unwrap();
            let bf = BaseFlow::uniform(&grid, &[0.2, 0.0], 1.0, C).unwrap();
            scale_separation(&p, &bf, 0.0).unwrap()
        })
        .collect();
    let (a, b) = (reports[0], reports[1]);
    for (x, y) in [
        (a.pressure_ratio, b.pressure_ratio),
        (a.velocity_ratio, b.velocity_ratio),
        (a.fluctuation_mach, b.fluctuation_mach),
    ] {
        assert!(x > 0.0 && (y / x - 2.0).abs() < 1e-9, "{x:e} -> {y:e}");
    }
}
