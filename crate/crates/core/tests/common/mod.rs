#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syzygy::dynamics::{
    conserved, matrix_form, mutual_distances, project_zero_angular_momentum,
    reduce_to_barycenter, MassTriple, PhaseState,
};
use syzygy::linalg::Vec2;

/// Equal unit masses on an equilateral triangle of side 1, rigidly rotating
/// at ω = √3 (a circular Lagrange solution).
pub fn lagrange_state() -> PhaseState {
    let r = 1.0 / 3f64.sqrt();
    let omega = 3f64.sqrt();
    let z = [0.0, 2.0, 4.0].map(|k: f64| {
        let ang = k * std::f64::consts::PI / 3.0 + 0.3;
        Vec2::new(r * ang.cos(), r * ang.sin())
    });
    let v = z.map(|zk| omega * zk.perp());
    PhaseState::new(0.0, z, v)
}

pub fn lagrange_period() -> f64 {
    2.0 * std::f64::consts::PI / 3f64.sqrt()
}

pub fn max_state_diff(a: &PhaseState, b: &PhaseState) -> f64 {
    a.to_flat()
        .iter()
        .zip(b.to_flat())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A barycentric, zero-angular-momentum, negative-energy start whose
/// configuration is well away from collisions and from a syzygy.
pub fn random_start(rng: &mut impl Rng) -> (MassTriple, PhaseState) {
    loop {
        let masses = MassTriple::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
        )
        .unwrap();
        let z = [(); 3].map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let v = [(); 3].map(|_| Vec2::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)));
        let s = reduce_to_barycenter(&masses, &PhaseState::new(0.0, z, v));
        let s = project_zero_angular_momentum(&masses, &s);
        let d = mutual_distances(&s);
        if d.iter().any(|&x| x < 0.5) {
            continue;
        }
        let x = matrix_form(&masses, &s).x;
        if x.det().abs() < 0.15 * x.row(0).norm() * x.row(1).norm() {
            continue;
        }
        if conserved(&masses, &s).unwrap().energy > -0.2 {
            continue;
        }
        return (masses, s);
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
