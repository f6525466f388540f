//! Adaptive Dormand–Prince 5(4) integration of the three-body field with
//! continuous (dense) output.
//!
//! Each accepted step stores the five coefficient vectors of the standard
//! fourth-order DOPRI5 interpolant, so a [`Trajectory`] can be evaluated at
//! any time in its span. Step-size control follows the PI controller of
//! Hairer, Nørsett & Wanner.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::{
    accelerations_at, conserved, distances_of, MassTriple, PhaseState, DEFAULT_COLLISION_FLOOR,
};
use crate::error::{Error, Result};
use crate::linalg::Vec2;

const DIM: usize = 12;
type State = [f64; DIM];

// Butcher tableau (the field is autonomous, so the nodes c_i are not needed)
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error weights (5th minus embedded 4th order)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;
const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub collision_floor: f64,
    /// Time between energy-drift checkpoints recorded in [`IntegrationStats`].
    pub drift_check_interval: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            collision_floor: DEFAULT_COLLISION_FLOOR,
            drift_check_interval: 0.1,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("collision_floor", self.collision_floor),
            ("drift_check_interval", self.drift_check_interval),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    /// Smallest mutual distance seen at step endpoints and stage points.
    pub min_distance: f64,
    /// Largest `|E(t) − E(t₀)|` over the drift checkpoints.
    pub max_checkpoint_energy_drift: f64,
}

/// Why an integration stopped before `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Aborted(Error),
}

/// One accepted step with its interpolant coefficients.
#[derive(Debug, Clone)]
pub struct Segment {
    pub t0: f64,
    pub h: f64,
    coeffs: [State; 5],
}

impl Segment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    fn eval(&self, t: f64) -> State {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        let mut y = [0.0; DIM];
        for i in 0..DIM {
            y[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
        y
    }
}

/// Dense-output record of one integration run. Immutable once built.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub masses: MassTriple,
    pub initial: PhaseState,
    segments: Vec<Segment>,
    pub stats: IntegrationStats,
    pub termination: Termination,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.initial.t
    }

    pub fn t_end(&self) -> f64 {
        self.segments
            .last()
            .map_or(self.initial.t, |seg| seg.t1())
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t_start(), self.t_end())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// The trajectory itself if it reached `t_end`, otherwise the abort error.
    pub fn require_complete(self) -> Result<Self> {
        match self.termination {
            Termination::Completed => Ok(self),
            Termination::Aborted(e) => Err(e),
        }
    }

    /// State at time `t`, clamped into the span.
    pub fn state_at(&self, t: f64) -> PhaseState {
        if self.segments.is_empty() {
            return PhaseState { t, ..self.initial };
        }
        let t = t.clamp(self.t_start(), self.t_end());
        let idx = self
            .segments
            .partition_point(|seg| seg.t1() < t)
            .min(self.segments.len() - 1);
        PhaseState::from_flat(t, &self.segments[idx].eval(t))
    }

    /// `n ≥ 2` equally spaced states covering the span, endpoints included.
    pub fn uniform_samples(&self, n: usize) -> Vec<PhaseState> {
        let (a, b) = self.span();
        if n < 2 || b <= a {
            return vec![self.initial];
        }
        (0..n)
            .map(|i| {
                let t = if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                };
                self.state_at(t)
            })
            .collect()
    }

    /// Sample times placing `per_step` sub-intervals inside every accepted
    /// step, strictly increasing and including both endpoints.
    pub fn step_sample_times(&self, per_step: usize) -> Vec<f64> {
        let per_step = per_step.max(1);
        let mut ts = Vec::with_capacity(self.segments.len() * per_step + 1);
        ts.push(self.t_start());
        for seg in &self.segments {
            for i in 1..per_step {
                ts.push(seg.t0 + seg.h * i as f64 / per_step as f64);
            }
            ts.push(seg.t1());
        }
        ts
    }

    /// CSV with header `t,x1,y1,x2,y2,x3,y3,vx1,vy1,vx2,vy2,vx3,vy3`.
    pub fn write_csv<W: Write>(&self, mut out: W, samples: usize) -> Result<()> {
        writeln!(out, "t,x1,y1,x2,y2,x3,y3,vx1,vy1,vx2,vy2,vx3,vy3")?;
        for s in self.uniform_samples(samples) {
            write!(out, "{}", s.t)?;
            for v in s.to_flat() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct Field<'a> {
    masses: &'a MassTriple,
    floor: f64,
    evaluations: usize,
    min_distance: f64,
}

impl Field<'_> {
    fn eval(&mut self, y: &State) -> Result<State> {
        self.evaluations += 1;
        let z = [
            Vec2::new(y[0], y[1]),
            Vec2::new(y[2], y[3]),
            Vec2::new(y[4], y[5]),
        ];
        let d = distances_of(&z);
        self.min_distance = d.iter().fold(self.min_distance, |m, &x| m.min(x));
        let a = accelerations_at(self.masses, &z, self.floor)?;
        let mut dy = [0.0; DIM];
        dy[..6].copy_from_slice(&y[6..]);
        for k in 0..3 {
            dy[6 + 2 * k] = a[k].x;
            dy[7 + 2 * k] = a[k].y;
        }
        Ok(dy)
    }
}

fn combine(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for i in 0..DIM {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn weighted_rms(v: &State, y0: &State, y1: &State, cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = (0..DIM)
        .map(|i| {
            let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
            (v[i] / sc).powi(2)
        })
        .sum();
    (sum / DIM as f64).sqrt()
}

/// Starting step from the Hairer–Wanner heuristic.
fn initial_step(field: &mut Field, y0: &State, f0: &State, cfg: &IntegratorConfig) -> Result<f64> {
    let zero = [0.0; DIM];
    let d0 = weighted_rms(y0, y0, y0, cfg);
    let d1 = weighted_rms(f0, y0, y0, cfg);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(cfg.max_step);
    let y1 = combine(y0, h0, &[(1.0, f0)]);
    let f1 = field.eval(&y1)?;
    let mut diff = zero;
    for i in 0..DIM {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = weighted_rms(&diff, y0, y0, cfg) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(cfg.max_step))
}

/// Integrates from `initial` to `t_end`.
///
/// Collisions and step-size underflow do not return `Err`: the trajectory up
/// to the abort is kept and the reason is stored in
/// [`Trajectory::termination`]. Invalid input returns `Err`.
pub fn integrate(
    masses: &MassTriple,
    initial: &PhaseState,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if !(t_end > initial.t) {
        return Err(Error::Config(format!(
            "t_end {t_end} must exceed the initial time {}",
            initial.t
        )));
    }
    let mut field = Field {
        masses,
        floor: config.collision_floor,
        evaluations: 0,
        min_distance: f64::INFINITY,
    };
    let mut traj = Trajectory {
        masses: *masses,
        initial: *initial,
        segments: Vec::new(),
        stats: IntegrationStats::default(),
        termination: Termination::Completed,
    };
    let energy0 = conserved(masses, initial)
        .map(|c| c.energy)
        .map_err(|e| Error::Config(format!("initial state rejected: {e}")))?;

    let mut t = initial.t;
    let mut y = initial.to_flat();
    let mut k1 = field.eval(&y)?;
    let mut h = initial_step(&mut field, &y, &k1, config)?;
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut next_check = t + config.drift_check_interval;
    let mut max_drift: f64 = 0.0;

    let outcome: Result<()> = (|| {
        loop {
            if t >= t_end {
                return Ok(());
            }
            if traj.stats.accepted_steps + traj.stats.rejected_steps >= MAX_STEPS {
                return Err(Error::StepUnderflow { t, h });
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h });
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }

            let y2 = combine(&y, h, &[(A21, &k1)]);
            let k2 = field.eval(&y2)?;
            let y3 = combine(&y, h, &[(A31, &k1), (A32, &k2)]);
            let k3 = field.eval(&y3)?;
            let y4 = combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = field.eval(&y4)?;
            let y5 = combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = field.eval(&y5)?;
            let y6 = combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            let k6 = field.eval(&y6)?;
            let y_new = combine(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = field.eval(&y_new)?;

            let mut err = [0.0; DIM];
            for i in 0..DIM {
                err[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
            }
            let err_norm = weighted_rms(&err, &y, &y_new, config);
            let fac11 = err_norm.powf(0.2 - 0.75 * PI_BETA);

            if err_norm <= 1.0 {
                fac_old = err_norm.max(1e-4);
                let mut fac = fac11 / fac_old.powf(PI_BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = (h / fac).min(config.max_step);
                if last_rejected {
                    h_new = h_new.min(h);
                }

                let mut coeffs = [[0.0; DIM]; 5];
                for i in 0..DIM {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    coeffs[0][i] = y[i];
                    coeffs[1][i] = ydiff;
                    coeffs[2][i] = bspl;
                    coeffs[3][i] = ydiff - h * k7[i] - bspl;
                    coeffs[4][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                traj.segments.push(Segment { t0: t, h, coeffs });
                traj.stats.accepted_steps += 1;

                t = if last { t_end } else { t + h };
                y = y_new;
                k1 = k7;

                while next_check <= t {
                    let s = traj.state_at(next_check);
                    if let Ok(c) = conserved(masses, &s) {
                        max_drift = max_drift.max((c.energy - energy0).abs());
                    }
                    next_check += config.drift_check_interval;
                }

                h = h_new;
                last_rejected = false;
            } else {
                traj.stats.rejected_steps += 1;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
            }
        }
    })();

    if let Err(e) = outcome {
        log::warn!("integration aborted at t = {t}: {e}");
        traj.termination = Termination::Aborted(e);
    }
    traj.stats.rhs_evaluations = field.evaluations;
    traj.stats.min_distance = field.min_distance;
    traj.stats.max_checkpoint_energy_drift = max_drift;
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    pub energy: f64,
    pub angular_momentum: f64,
    pub linear_momentum: f64,
}

/// Maximum deviation of each first integral from its initial value over
/// `samples` uniform samples (1000 by convention).
pub fn drift_report_with(trajectory: &Trajectory, samples: usize) -> DriftReport {
    let masses = &trajectory.masses;
    let states = trajectory.uniform_samples(samples);
    let Ok(first) = conserved(masses, &states[0]) else {
        return DriftReport {
            energy: f64::NAN,
            angular_momentum: f64::NAN,
            linear_momentum: f64::NAN,
        };
    };
    let mut rep = DriftReport {
        energy: 0.0,
        angular_momentum: 0.0,
        linear_momentum: 0.0,
    };
    for s in &states[1..] {
        match conserved(masses, s) {
            Ok(c) => {
                rep.energy = rep.energy.max((c.energy - first.energy).abs());
                rep.angular_momentum = rep
                    .angular_momentum
                    .max((c.angular_momentum - first.angular_momentum).abs());
                rep.linear_momentum = rep
                    .linear_momentum
                    .max((c.linear_momentum - first.linear_momentum).norm());
            }
            Err(_) => {
                rep.energy = f64::INFINITY;
            }
        }
    }
    rep
}

pub fn drift_report(trajectory: &Trajectory) -> DriftReport {
    drift_report_with(trajectory, 1000)
}
