//! The equal-mass figure-eight benchmark and its reference numbers.

use crate::dynamics::{MassTriple, PhaseState};
use crate::linalg::{Mat2, Vec2};

pub const Z1: Vec2 = Vec2::new(1.08075, -0.0126893);
pub const Z2: Vec2 = Vec2::new(-0.570154, 0.350807);
pub const V1: Vec2 = Vec2::new(0.0193421, 0.467219);
pub const V2: Vec2 = Vec2::new(1.0852, -0.174718);

/// Reference time of the first syzygy.
pub const FIRST_SYZYGY: f64 = 0.55431;
/// Reference distance window before the first syzygy.
pub const ALPHA: f64 = 0.690526;
pub const BETA: f64 = 2.0;
pub const THETA_ALPHA: f64 = 3.01849;
pub const THETA_BETA: f64 = 0.612372;
/// Reference `Ẋ₀X₀⁻¹`.
pub const C0: Mat2 = Mat2::new(0.734528, 1.35841, 0.755791, -0.470708);
pub const SPECTRUM: (f64, f64) = (-1.047, 1.31082);
pub const PI_S: f64 = -1.047;
pub const LOWER_BOUND: f64 = 0.409781;
pub const UPPER_BOUND: f64 = 0.864231;

/// Period of the orbit started from [`initial_state`], located by minimising
/// the distance between the initial state and the state after one revolution.
pub const PERIOD: f64 = 6.325874676;

/// Equal unit masses.
pub fn masses() -> MassTriple {
    MassTriple::equal()
}

/// Reference initial state, with `z₃ = −z₁ − z₂` and `v₃ = −v₁ − v₂`.
pub fn initial_state() -> PhaseState {
    PhaseState::new(0.0, [Z1, Z2, -(Z1 + Z2)], [V1, V2, -(V1 + V2)])
}

/// Eight-digit figure-eight initial data (Simó's normalisation) used where
/// the six printed digits above are too coarse, e.g. for periodicity checks.
pub fn high_precision_state() -> PhaseState {
    let z1 = Vec2::new(0.97000436, -0.24308753);
    let v3 = Vec2::new(-0.93240737, -0.86473146);
    let v1 = -0.5 * v3;
    PhaseState::new(0.0, [z1, -z1, Vec2::ZERO], [v1, v1, v3])
}

pub const HIGH_PRECISION_PERIOD: f64 = 6.32591398;
