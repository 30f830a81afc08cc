//! Seeded band-limited random fields.
//!
//! Every field is a finite Fourier sum whose amplitudes and phases are drawn
//! from the caller's generator in a fixed order, so a seeded ChaCha stream
//! reproduces the same field on every platform.

use std::f64::consts::PI;

use rand::Rng;

use super::{Grid, ScalarField, VectorField};

/// Real field containing every mode with `0 < max_a |m_a| <= kmax`, amplitudes
/// uniform in [-1, 1] divided by `1 + |m|^2`.
pub fn band_limited_scalar<R: Rng>(grid: &Grid, kmax: i64, rng: &mut R) -> ScalarField {
    let d = grid.dim();
    let mut modes = Vec::new();
    let range = -kmax..=kmax;
    for m0 in range.clone() {
        for m1 in range.clone() {
            let m2s: Vec<i64> = if d == 3 { range.clone().collect() } else { vec![0] };
            for m2 in m2s {
                let m = [m0, m1, m2];
                // one representative of each +/- pair
                if m == [0, 0, 0] || !is_positive_half(&m) {
                    continue;
                }
                let amp: f64 = rng.gen_range(-1.0..1.0);
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                let norm2 = (m0 * m0 + m1 * m1 + m2 * m2) as f64;
                modes.push((m, amp / (1.0 + norm2), phase));
            }
        }
    }
    let l = grid.length().to_vec();
    ScalarField::from_fn(*grid, |x| {
        modes
            .iter()
            .map(|(m, a, ph)| {
                let arg: f64 = (0..d).map(|ax| 2.0 * PI * m[ax] as f64 * x[ax] / l[ax]).sum();
                a * (arg + ph).cos()
            })
            .sum()
    })
}

pub fn band_limited_vector<R: Rng>(grid: &Grid, kmax: i64, rng: &mut R) -> VectorField {
    let comps = (0..grid.dim()).map(|_| band_limited_scalar(grid, kmax, rng)).collect();
    VectorField::from_components(comps).expect("components share the grid")
}

fn is_positive_half(m: &[i64; 3]) -> bool {
    for &v in m {
        if v != 0 {
            return v > 0;
        }
    }
    false
}
