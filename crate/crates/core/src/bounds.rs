//! Upper and lower bounds on the time of the first syzygy from Riccati
//! comparison.
//!
//! Between syzygies `B = ẊX⁻¹` solves `Ḃ + B² − 𝒜(ρ) = 0`. Replacing the
//! `ρ` coefficients by the constants `1/β³` (resp. `1/α³`) coming from a
//! window `α ≤ |z_ij| ≤ β` gives a constant-coefficient equation whose
//! blow-up time is explicit, and the comparison theorem for symmetric
//! Riccati equations sandwiches the true first-syzygy time between the two.
//! The symmetrizer `P` conjugates every `𝒜(φ)` into a symmetric matrix, which
//! is what makes the comparison applicable.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::{
    accelerations, coefficient_matrix_unchecked, distances_of, matrix_form, rho, MassTriple,
    MatrixPair, PhaseState, ZERO_ANGULAR_MOMENTUM_RTOL,
};
use crate::error::{Error, Result};
use crate::events::{delta1_rate, first_syzygy};
use crate::integrate::{integrate, IntegratorConfig, Trajectory};
use crate::linalg::{Mat2, Vec2};

/// `|det X₀| < NEAR_SYZYGY_RTOL · ‖row₁‖‖row₂‖` counts as a syzygy start.
pub const NEAR_SYZYGY_RTOL: f64 = 1e-10;
/// Quadratic discriminants below `−COMPLEX_RTOL · ‖C₀‖²` mean a complex pair.
pub const COMPLEX_RTOL: f64 = 1e-12;
/// Step of the central difference used by [`riccati_residual`].
pub const RICCATI_FD_STEP: f64 = 1e-6;
/// Minimum number of samples in [`estimate_distance_window`].
pub const WINDOW_SAMPLES: usize = 10_000;

/// Symmetrizer `P` and the two constant matrices spanning the traceless
/// part of `B` when the angular momentum vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiFrame {
    pub p: Mat2,
    pub p_inv: Mat2,
    pub a_tilde_1: Mat2,
    pub a_tilde_2: Mat2,
}

impl RiccatiFrame {
    /// `P⁻¹ A P`.
    pub fn conjugate(&self, a: Mat2) -> Mat2 {
        self.p_inv * a * self.p
    }
}

pub fn symmetrizer(masses: &MassTriple) -> RiccatiFrame {
    let [m1, m2, m3] = masses.as_array();
    let m13 = m1 + m3;
    let m32 = m3 + m2;
    let p = Mat2::new(
        -m1 / m13,
        (m1 * m3 * masses.total() / m2).sqrt() / m13,
        1.0,
        0.0,
    );
    let p_inv = p.inverse().expect("P is invertible for positive masses");
    RiccatiFrame {
        p,
        p_inv,
        a_tilde_1: Mat2::new(0.5 * m32, 0.0, -m2, -0.5 * m32),
        a_tilde_2: Mat2::new(-0.5 * m13, -m1, 0.0, 0.5 * m13),
    }
}

/// The matrix analogue of angular momentum,
/// `(1/m₁)w(r₁) + (1/m₂)w(r₂) + (1/m₃)w(r₁ + r₂)` with `w(r) = r × ṙ`.
///
/// For a barycentric three-body state it equals the angular momentum.
pub fn matrix_momentum_k(masses: &MassTriple, pair: &MatrixPair) -> f64 {
    let (r1, r2) = (pair.x.row(0), pair.x.row(1));
    let (v1, v2) = (pair.xdot.row(0), pair.xdot.row(1));
    r1.cross(v1) / masses.m1() + r2.cross(v2) / masses.m2() + (r1 + r2).cross(v1 + v2) / masses.m3()
}

fn k_scale(masses: &MassTriple, pair: &MatrixPair) -> f64 {
    let (r1, r2) = (pair.x.row(0), pair.x.row(1));
    let (v1, v2) = (pair.xdot.row(0), pair.xdot.row(1));
    r1.norm() * v1.norm() / masses.m1()
        + r2.norm() * v2.norm() / masses.m2()
        + (r1 + r2).norm() * (v1 + v2).norm() / masses.m3()
}

fn require_zero_k(masses: &MassTriple, pair: &MatrixPair) -> Result<()> {
    let k = matrix_momentum_k(masses, pair);
    let tolerance = ZERO_ANGULAR_MOMENTUM_RTOL * k_scale(masses, pair);
    if k.abs() > tolerance {
        return Err(Error::NonzeroAngularMomentum { value: k, tolerance });
    }
    Ok(())
}

fn require_non_syzygy(x: &Mat2, t: f64, rtol: f64) -> Result<()> {
    let det = x.det();
    let threshold = rtol * x.row(0).norm() * x.row(1).norm();
    if !(det.abs() >= threshold) || threshold == 0.0 {
        return Err(Error::NearSyzygy { t, det, threshold });
    }
    Ok(())
}

/// `C₀ = Ẋ₀X₀⁻¹` and its real spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C0Spectrum {
    pub c0: Mat2,
    /// `(λ_min, λ_max)`.
    pub eigenvalues: (f64, f64),
    pub pi_s: f64,
}

pub fn c0_spectrum(masses: &MassTriple, pair: &MatrixPair) -> Result<C0Spectrum> {
    require_non_syzygy(&pair.x, 0.0, NEAR_SYZYGY_RTOL)?;
    require_zero_k(masses, pair)?;
    let x_inv = pair.x.inverse().ok_or(Error::NearSyzygy {
        t: 0.0,
        det: 0.0,
        threshold: 0.0,
    })?;
    let c0 = pair.xdot * x_inv;
    let scale = c0.frobenius();
    let eigenvalues = c0
        .real_eigenvalues(COMPLEX_RTOL * scale * scale)
        .map_err(Error::ComplexSpectrum)?;
    Ok(C0Spectrum {
        c0,
        eigenvalues,
        pi_s: eigenvalues.0,
    })
}

/// `√M / d^{3/2}`.
pub fn theta(distance: f64, total_mass: f64) -> Result<f64> {
    if !(distance > 0.0 && distance.is_finite()) || !(total_mass > 0.0 && total_mass.is_finite()) {
        return Err(Error::Config(format!(
            "theta needs positive distance and mass, got {distance} and {total_mass}"
        )));
    }
    Ok(total_mass.sqrt() / distance.powf(1.5))
}

/// `arccot` on the branch `(0, π)`.
pub fn arccot(x: f64) -> f64 {
    0.5 * PI - x.atan()
}

/// `(1/θ) arccot(−π_s/θ)`, a time in `(0, π/θ)`.
pub fn syzygy_bound(theta: f64, pi_s: f64) -> f64 {
    debug_assert!(theta > 0.0);
    arccot(-pi_s / theta) / theta
}

/// First positive zero of `t ↦ det(cos(θt) I + sin(θt)/θ · C₀)`.
///
/// The determinant is rewritten as `a₀ + R cos(2θt − φ)` and the zero taken
/// from the smallest positive solution of the cosine equation. No
/// eigen-decomposition is involved.
pub fn constant_riccati_blowup(c0: &Mat2, theta: f64) -> f64 {
    let d = c0.det() / (theta * theta);
    let s = c0.trace() / (2.0 * theta);
    let a0 = 0.5 * (1.0 + d);
    let c = 0.5 * (1.0 - d);
    let r = c.hypot(s);
    if r == 0.0 {
        return f64::INFINITY;
    }
    let phi = s.atan2(c);
    let spread = (-a0 / r).clamp(-1.0, 1.0).acos();
    let first = |tau0: f64| {
        let tau = tau0 - PI * (tau0 / PI).floor();
        if tau <= 0.0 {
            PI
        } else {
            tau
        }
    };
    let tau = first(0.5 * (phi + spread)).min(first(0.5 * (phi - spread)));
    tau / theta
}

/// Where the distance window of a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSource {
    UserSupplied,
    /// Measured on `[0, T_s]` after the fact.
    EstimatedAPosteriori,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub c0: Mat2,
    pub eigenvalues: (f64, f64),
    pub pi_s: f64,
    pub alpha: f64,
    pub beta_dist: f64,
    pub theta_alpha: f64,
    pub theta_beta: f64,
    pub lower: f64,
    pub upper: f64,
    pub window_source: WindowSource,
    pub measured_ts: Option<f64>,
}

impl BoundReport {
    /// `lower − slack ≤ T_s ≤ upper + slack`, if `T_s` was measured.
    pub fn sandwich_holds(&self, slack: f64) -> Option<bool> {
        self.measured_ts
            .map(|ts| self.lower - slack <= ts && ts <= self.upper + slack)
    }
}

pub fn bound_report(
    masses: &MassTriple,
    initial: &PhaseState,
    alpha: f64,
    beta_dist: f64,
) -> Result<BoundReport> {
    if !(alpha > 0.0 && alpha < beta_dist && beta_dist.is_finite()) {
        return Err(Error::Config(format!(
            "distance window needs 0 < alpha < beta, got alpha = {alpha}, beta = {beta_dist}"
        )));
    }
    let spec = c0_spectrum(masses, &matrix_form(masses, initial))?;
    let total = masses.total();
    let theta_alpha = theta(alpha, total)?;
    let theta_beta = theta(beta_dist, total)?;
    let lower = syzygy_bound(theta_alpha, spec.pi_s);
    let upper = syzygy_bound(theta_beta, spec.pi_s);
    Ok(BoundReport {
        c0: spec.c0,
        eigenvalues: spec.eigenvalues,
        pi_s: spec.pi_s,
        alpha,
        beta_dist,
        theta_alpha,
        theta_beta,
        lower,
        upper,
        window_source: WindowSource::UserSupplied,
        measured_ts: None,
    })
}

fn golden_extremum(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, minimize: bool) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let g = |t: f64| if minimize { f(t) } else { -f(t) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while hi - lo > 1e-12 * (1.0 + hi.abs()) {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
    }
    let v = g(0.5 * (lo + hi)).min(f1).min(f2);
    if minimize {
        v
    } else {
        -v
    }
}

/// `(min, max)` of the three mutual distances over `[t₀, t_end]`.
///
/// Uses at least [`WINDOW_SAMPLES`] uniform samples and refines every
/// interior local extremum by golden-section search.
pub fn estimate_distance_window(trajectory: &Trajectory, t_end: f64) -> (f64, f64) {
    let t0 = trajectory.t_start();
    let t_end = t_end.min(trajectory.t_end());
    let n = WINDOW_SAMPLES.max(8 * trajectory.segments().len());
    let times: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                t_end
            } else {
                t0 + (t_end - t0) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let dist = |t: f64| distances_of(&trajectory.state_at(t).z);
    let d: Vec<[f64; 3]> = times.iter().map(|&t| dist(t)).collect();

    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for row in &d {
        for &x in row {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    for pair in 0..3 {
        for i in 1..n.saturating_sub(1) {
            let (prev, cur, next) = (d[i - 1][pair], d[i][pair], d[i + 1][pair]);
            let f = |t: f64| dist(t)[pair];
            if cur < prev && cur <= next {
                lo = lo.min(golden_extremum(f, times[i - 1], times[i + 1], true));
            } else if cur > prev && cur >= next {
                hi = hi.max(golden_extremum(f, times[i - 1], times[i + 1], false));
            }
        }
    }
    (lo, hi)
}

/// Integrates until `t_max`, measures the first syzygy `T_s` and builds the
/// bound report. Without a user window, `(α, β)` are estimated on
/// `[0, T_s]`.
pub fn first_syzygy_report(
    masses: &MassTriple,
    initial: &PhaseState,
    t_max: f64,
    config: &IntegratorConfig,
    window: Option<(f64, f64)>,
) -> Result<BoundReport> {
    // fail fast on inadmissible starts before integrating
    c0_spectrum(masses, &matrix_form(masses, initial))?;
    let traj = integrate(masses, initial, t_max, config)?;
    let ts = first_syzygy(&traj).map(|e| e.time);
    let (alpha, beta, source) = match (window, ts) {
        (Some((a, b)), _) => (a, b, WindowSource::UserSupplied),
        (None, Some(ts)) => {
            let (a, b) = estimate_distance_window(&traj, ts);
            (a, b, WindowSource::EstimatedAPosteriori)
        }
        (None, None) => {
            return Err(traj
                .require_complete()
                .err()
                .unwrap_or(Error::NoSyzygy(t_max)))
        }
    };
    let mut report = bound_report(masses, initial, alpha, beta)?;
    report.window_source = source;
    report.measured_ts = ts;
    Ok(report)
}

fn rk4_step(masses: &MassTriple, s: &PhaseState, h: f64) -> Result<PhaseState> {
    let deriv = |z: [Vec2; 3], v: [Vec2; 3]| -> Result<([Vec2; 3], [Vec2; 3])> {
        let st = PhaseState::new(0.0, z, v);
        Ok((v, accelerations(masses, &st)?))
    };
    let shift = |base: [Vec2; 3], k: [Vec2; 3], c: f64| {
        [0, 1, 2].map(|i| base[i] + c * k[i])
    };
    let (dz1, dv1) = deriv(s.z, s.v)?;
    let (dz2, dv2) = deriv(shift(s.z, dz1, 0.5 * h), shift(s.v, dv1, 0.5 * h))?;
    let (dz3, dv3) = deriv(shift(s.z, dz2, 0.5 * h), shift(s.v, dv2, 0.5 * h))?;
    let (dz4, dv4) = deriv(shift(s.z, dz3, h), shift(s.v, dv3, h))?;
    let combine = |base: [Vec2; 3], k1: [Vec2; 3], k2: [Vec2; 3], k3: [Vec2; 3], k4: [Vec2; 3]| {
        [0, 1, 2].map(|i| base[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    };
    Ok(PhaseState::new(
        s.t + h,
        combine(s.z, dz1, dz2, dz3, dz4),
        combine(s.v, dv1, dv2, dv3, dv4),
    ))
}

/// Max-norm of `Ḃ + B² − A` at `t` for a fundamental-matrix curve
/// `t ↦ (Y, Ẏ)` with `Ÿ = A Y`, `B = ẎY⁻¹`, and `Ḃ` from a central
/// difference of step `h`. A stencil that straddles a zero of `det Y` is
/// rejected as near-syzygy.
pub fn riccati_residual_with(
    curve: impl Fn(f64) -> (Mat2, Mat2),
    coefficient: Mat2,
    t: f64,
    h: f64,
) -> Result<f64> {
    let b_at = |tt: f64| -> Result<(Mat2, f64)> {
        let (y, ydot) = curve(tt);
        require_non_syzygy(&y, tt, 1e-8)?;
        Ok((ydot * y.inverse().expect("checked non-singular"), y.det()))
    };
    let (b, det) = b_at(t)?;
    let (b_fwd, det_fwd) = b_at(t + h)?;
    let (b_bwd, det_bwd) = b_at(t - h)?;
    if det_fwd.signum() != det.signum() || det_bwd.signum() != det.signum() {
        return Err(Error::NearSyzygy {
            t,
            det,
            threshold: f64::NAN,
        });
    }
    let b_dot = (1.0 / (2.0 * h)) * (b_fwd - b_bwd);
    Ok((b_dot + b * b - coefficient).max_abs())
}

/// Residual of the Riccati equation satisfied by `B = ẊX⁻¹` along the
/// trajectory at time `t`.
///
/// The neighbouring states at `t ± h` come from one classical RK4 step of the
/// exact field from the interpolated state at `t`, so the difference
/// quotient sees a single smooth solution rather than the interpolant.
pub fn riccati_residual(trajectory: &Trajectory, t: f64) -> Result<f64> {
    let masses = &trajectory.masses;
    let center = trajectory.state_at(t);
    let a = coefficient_matrix_unchecked(masses, rho(&center)?);
    let h = RICCATI_FD_STEP;
    let forward = rk4_step(masses, &center, h)?;
    let backward = rk4_step(masses, &center, -h)?;
    let curve = |tt: f64| {
        let s = if tt > t {
            forward
        } else if tt < t {
            backward
        } else {
            center
        };
        let pair = matrix_form(masses, &s);
        (pair.x, pair.xdot)
    };
    riccati_residual_with(curve, a, t, h)
}

/// `max(‖A‖, ‖B‖²)` at `t`, the size of the terms in [`riccati_residual`].
pub fn riccati_scale(trajectory: &Trajectory, t: f64) -> Result<f64> {
    let s = trajectory.state_at(t);
    let a = coefficient_matrix_unchecked(&trajectory.masses, rho(&s)?);
    let pair = matrix_form(&trajectory.masses, &s);
    let b = pair.xdot * pair.x.inverse().ok_or(Error::NearSyzygy {
        t,
        det: 0.0,
        threshold: 0.0,
    })?;
    Ok(a.max_abs().max(b.max_abs().powi(2)))
}

/// Max-norm difference between `B = ẊX⁻¹` and its zero-`k` decomposition
/// `(δ̇/2δ) I + (b/(m₂δ)) Ã₁ − (a/(m₁δ)) Ã₂`.
pub fn b_decomposition_check(
    masses: &MassTriple,
    pair: &MatrixPair,
    frame: &RiccatiFrame,
) -> Result<f64> {
    require_zero_k(masses, pair)?;
    require_non_syzygy(&pair.x, f64::NAN, NEAR_SYZYGY_RTOL)?;
    let b_direct = pair.xdot * pair.x.inverse().expect("checked non-singular");
    let delta = pair.x.det();
    let a = pair.x.row(0).cross(pair.xdot.row(0));
    let b = pair.x.row(1).cross(pair.xdot.row(1));
    let b_decomposed = (delta1_rate(pair) / (2.0 * delta)) * Mat2::IDENTITY
        + (b / (masses.m2() * delta)) * frame.a_tilde_1
        - (a / (masses.m1() * delta)) * frame.a_tilde_2;
    Ok((b_direct - b_decomposed).max_abs())
}
