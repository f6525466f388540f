//! Newtonian planar three-body dynamics (G = 1) and the mass-weighted 2×2
//! matrix form of the equations of motion.
//!
//! Index conventions: pair quantities are always ordered
//! `(|z₃ − z₂|, |z₁ − z₃|, |z₂ − z₁|)`, so that entry `k` refers to the side
//! opposite body `k`. The inverse cubes of these distances are the `ρ`
//! coefficients fed to [`coefficient_matrix`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Smallest mutual distance tolerated before a state counts as a collision.
pub const DEFAULT_COLLISION_FLOOR: f64 = 1e-6;

/// Relative gate for "zero angular momentum": `|L| ≤ rtol · Σ m_k |z_k| |v_k|`.
pub const ZERO_ANGULAR_MOMENTUM_RTOL: f64 = 1e-5;

/// Pairs `(j, k)` opposite to bodies 0, 1, 2.
const OPPOSITE: [(usize, usize); 3] = [(2, 1), (0, 2), (1, 0)];

/// Three strictly positive masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassTriple {
    m: [f64; 3],
}

impl MassTriple {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        for m in [m1, m2, m3] {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidMass(m));
            }
        }
        Ok(Self { m: [m1, m2, m3] })
    }

    pub fn equal() -> Self {
        Self { m: [1.0; 3] }
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.m
    }

    /// Mass of body `k` (zero-based).
    pub fn get(&self, k: usize) -> f64 {
        self.m[k]
    }

    pub fn m1(&self) -> f64 {
        self.m[0]
    }

    pub fn m2(&self) -> f64 {
        self.m[1]
    }

    pub fn m3(&self) -> f64 {
        self.m[2]
    }

    /// Total mass `M`.
    pub fn total(&self) -> f64 {
        self.m[0] + self.m[1] + self.m[2]
    }
}

impl<'de> Deserialize<'de> for MassTriple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = <[f64; 3]>::deserialize(d)?;
        MassTriple::new(m[0], m[1], m[2]).map_err(serde::de::Error::custom)
    }
}

/// Positions and velocities of the three bodies at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    pub z: [Vec2; 3],
    pub v: [Vec2; 3],
}

impl PhaseState {
    pub fn new(t: f64, z: [Vec2; 3], v: [Vec2; 3]) -> Self {
        Self { t, z, v }
    }

    /// Flat layout `[x1, y1, x2, y2, x3, y3, vx1, vy1, …, vy3]`.
    pub fn to_flat(&self) -> [f64; 12] {
        let mut y = [0.0; 12];
        for k in 0..3 {
            y[2 * k] = self.z[k].x;
            y[2 * k + 1] = self.z[k].y;
            y[6 + 2 * k] = self.v[k].x;
            y[6 + 2 * k + 1] = self.v[k].y;
        }
        y
    }

    pub fn from_flat(t: f64, y: &[f64; 12]) -> Self {
        let mut z = [Vec2::ZERO; 3];
        let mut v = [Vec2::ZERO; 3];
        for k in 0..3 {
            z[k] = Vec2::new(y[2 * k], y[2 * k + 1]);
            v[k] = Vec2::new(y[6 + 2 * k], y[6 + 2 * k + 1]);
        }
        Self { t, z, v }
    }
}

/// The classical first integrals of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedSet {
    pub energy: f64,
    pub angular_momentum: f64,
    pub linear_momentum: Vec2,
    pub barycenter: Vec2,
}

/// Mass-weighted position and velocity matrices built from bodies 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixPair {
    pub x: Mat2,
    pub xdot: Mat2,
}

/// `(|z₃₂|, |z₁₃|, |z₂₁|)`.
pub fn mutual_distances(state: &PhaseState) -> [f64; 3] {
    distances_of(&state.z)
}

pub(crate) fn distances_of(z: &[Vec2; 3]) -> [f64; 3] {
    OPPOSITE.map(|(j, k)| (z[j] - z[k]).norm())
}

fn check_floor(d: &[f64; 3], floor: f64) -> Result<()> {
    for (k, &dist) in d.iter().enumerate() {
        // NaN distances are collisions too
        if !(dist >= floor) {
            let (i, j) = OPPOSITE[k];
            return Err(Error::Collision {
                i: i.min(j) + 1,
                j: i.max(j) + 1,
                distance: dist,
                floor,
            });
        }
    }
    Ok(())
}

/// `ρ_k = 1/d_k³` for the three mutual distances.
pub fn rho(state: &PhaseState) -> Result<[f64; 3]> {
    let d = mutual_distances(state);
    check_floor(&d, DEFAULT_COLLISION_FLOOR)?;
    Ok(d.map(|dk| 1.0 / (dk * dk * dk)))
}

/// Gravitational accelerations for positions `z`, rejecting any pair closer
/// than `floor`.
pub fn accelerations_at(masses: &MassTriple, z: &[Vec2; 3], floor: f64) -> Result<[Vec2; 3]> {
    let d = distances_of(z);
    check_floor(&d, floor)?;
    let mut a = [Vec2::ZERO; 3];
    for (k, &(i, j)) in OPPOSITE.iter().enumerate() {
        let inv3 = 1.0 / (d[k] * d[k] * d[k]);
        // pull of j on i, and the reaction on j
        let rij = z[j] - z[i];
        a[i] += (masses.get(j) * inv3) * rij;
        a[j] -= (masses.get(i) * inv3) * rij;
    }
    Ok(a)
}

pub fn accelerations(masses: &MassTriple, state: &PhaseState) -> Result<[Vec2; 3]> {
    accelerations_at(masses, &state.z, DEFAULT_COLLISION_FLOOR)
}

/// Shift to the barycentric frame: zero center of mass and zero momentum.
pub fn reduce_to_barycenter(masses: &MassTriple, state: &PhaseState) -> PhaseState {
    let total = masses.total();
    let mut com = Vec2::ZERO;
    let mut p = Vec2::ZERO;
    for k in 0..3 {
        com += masses.get(k) * state.z[k];
        p += masses.get(k) * state.v[k];
    }
    let com = (1.0 / total) * com;
    let vcom = (1.0 / total) * p;
    let mut out = *state;
    for k in 0..3 {
        out.z[k] -= com;
        out.v[k] -= vcom;
    }
    out
}

pub fn angular_momentum(masses: &MassTriple, state: &PhaseState) -> f64 {
    (0..3)
        .map(|k| masses.get(k) * state.z[k].cross(state.v[k]))
        .sum()
}

/// `Σ m_k |z_k| |v_k|`, an upper bound for `|L|` used to normalise it.
pub fn angular_momentum_scale(masses: &MassTriple, state: &PhaseState) -> f64 {
    (0..3)
        .map(|k| masses.get(k) * state.z[k].norm() * state.v[k].norm())
        .sum()
}

/// Fails unless the state has zero angular momentum within
/// [`ZERO_ANGULAR_MOMENTUM_RTOL`].
pub fn require_zero_angular_momentum(masses: &MassTriple, state: &PhaseState) -> Result<()> {
    let l = angular_momentum(masses, state);
    let tolerance = ZERO_ANGULAR_MOMENTUM_RTOL * angular_momentum_scale(masses, state);
    if l.abs() > tolerance {
        return Err(Error::NonzeroAngularMomentum { value: l, tolerance });
    }
    Ok(())
}

/// Removes the rigid rotation carrying the angular momentum of a
/// barycentric state, leaving `L = 0` exactly up to round-off.
pub fn project_zero_angular_momentum(masses: &MassTriple, state: &PhaseState) -> PhaseState {
    let inertia: f64 = (0..3)
        .map(|k| masses.get(k) * state.z[k].norm_squared())
        .sum();
    if inertia == 0.0 {
        return *state;
    }
    let omega = angular_momentum(masses, state) / inertia;
    let mut out = *state;
    for k in 0..3 {
        out.v[k] -= omega * state.z[k].perp();
    }
    out
}

pub fn conserved(masses: &MassTriple, state: &PhaseState) -> Result<ConservedSet> {
    let d = mutual_distances(state);
    check_floor(&d, DEFAULT_COLLISION_FLOOR)?;
    let kinetic: f64 = (0..3)
        .map(|k| 0.5 * masses.get(k) * state.v[k].norm_squared())
        .sum();
    let potential: f64 = OPPOSITE
        .iter()
        .zip(d)
        .map(|(&(i, j), dk)| -masses.get(i) * masses.get(j) / dk)
        .sum();
    let mut p = Vec2::ZERO;
    let mut com = Vec2::ZERO;
    for k in 0..3 {
        p += masses.get(k) * state.v[k];
        com += masses.get(k) * state.z[k];
    }
    Ok(ConservedSet {
        energy: kinetic + potential,
        angular_momentum: angular_momentum(masses, state),
        linear_momentum: p,
        barycenter: (1.0 / masses.total()) * com,
    })
}

/// Rows `(m_k x_k, m_k y_k)` for k = 1, 2, and the same with velocities.
pub fn matrix_form(masses: &MassTriple, state: &PhaseState) -> MatrixPair {
    let (m1, m2) = (masses.m1(), masses.m2());
    MatrixPair {
        x: Mat2::from_rows(m1 * state.z[0], m2 * state.z[1]),
        xdot: Mat2::from_rows(m1 * state.v[0], m2 * state.v[1]),
    }
}

/// The coefficient matrix `𝒜(φ₁, φ₂, φ₃)` of the linear system `Z̈ = 𝒜 Z`.
///
/// With `φ = ρ` this is the matrix of the mass-weighted equations of motion.
pub fn coefficient_matrix(masses: &MassTriple, phi: [f64; 3]) -> Result<Mat2> {
    if let Some(bad) = phi.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidCoefficient(format!(
            "phi must be finite and nonnegative, got {bad}"
        )));
    }
    Ok(coefficient_matrix_unchecked(masses, phi))
}

pub(crate) fn coefficient_matrix_unchecked(masses: &MassTriple, phi: [f64; 3]) -> Mat2 {
    let [m1, m2, m3] = masses.as_array();
    let [p1, p2, p3] = phi;
    Mat2::new(
        -m2 * p3 - (m1 + m3) * p2,
        m1 * (p3 - p2),
        m2 * (p3 - p1),
        -m1 * p3 - (m3 + m2) * p1,
    )
}

/// Max-norm of `Ẍ − A X` with `Ẍ` built from the Newtonian accelerations.
pub fn matrix_ode_residual(masses: &MassTriple, state: &PhaseState) -> Result<f64> {
    let acc = accelerations(masses, state)?;
    let xddot = Mat2::from_rows(masses.m1() * acc[0], masses.m2() * acc[1]);
    let a = coefficient_matrix_unchecked(masses, rho(state)?);
    let pair = matrix_form(masses, state);
    Ok((xddot - a * pair.x).max_abs())
}

/// Initial-condition document:
/// `{"masses":[m1,m2,m3], "positions":[[x,y],…], "velocities":[[x,y],…]}`.
///
/// The third position/velocity may be omitted; it is then rebuilt from the
/// zero-barycenter and zero-momentum constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub masses: [f64; 3],
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
}

impl InitialConditions {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Validated masses and barycentric, collision-free state at `t = 0`.
    pub fn to_state(&self) -> Result<(MassTriple, PhaseState)> {
        let masses = MassTriple::new(self.masses[0], self.masses[1], self.masses[2])?;
        let z = complete_third(&masses, &self.positions, "positions")?;
        let v = complete_third(&masses, &self.velocities, "velocities")?;
        let state = reduce_to_barycenter(&masses, &PhaseState::new(0.0, z, v));
        check_floor(&mutual_distances(&state), DEFAULT_COLLISION_FLOOR)?;
        Ok((masses, state))
    }
}

fn complete_third(masses: &MassTriple, given: &[Vec2], what: &str) -> Result<[Vec2; 3]> {
    match *given {
        [a, b, c] => Ok([a, b, c]),
        [a, b] => {
            let c = (-1.0 / masses.m3()) * (masses.m1() * a + masses.m2() * b);
            log::info!("reconstructed third body {what} as ({}, {})", c.x, c.y);
            Ok([a, b, c])
        }
        _ => Err(Error::Input(format!(
            "expected 2 or 3 {what}, got {}",
            given.len()
        ))),
    }
}
