//! Syzygies (`det X = 0`) and velocity syzygies (`det Ẋ = 0`) along a
//! trajectory.
//!
//! The determinant is sampled at [`SAMPLES_PER_STEP`] points inside every
//! accepted integrator step. Each sign change is refined by bisection on the
//! dense output. Local minima of `|Δ|` without a sign change are refined by
//! golden-section search: if the search uncovers a pair of hidden sign
//! changes both are bisected, otherwise a minimum below
//! [`TANGENT_RTOL`]` · scale` is reported as an ambiguous (tangential) event.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{matrix_form, require_zero_angular_momentum, MassTriple, MatrixPair, PhaseState};
use crate::error::Result;
use crate::integrate::Trajectory;

pub const SAMPLES_PER_STEP: usize = 8;
/// Bracket width at which bisection stops.
pub const TIME_TOL: f64 = 1e-10;
/// Relative size of `|Δ|` below which a touch without sign change is flagged.
pub const TANGENT_RTOL: f64 = 1e-9;
/// `Δ̇₁² − 4Δ₁Δ₂ ≥ −DISCRIMINANT_RTOL · scale` for zero angular momentum.
pub const DISCRIMINANT_RTOL: f64 = 1e-9;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Syzygy,
    VelocitySyzygy,
}

impl EventKind {
    pub const ALL: [EventKind; 2] = [EventKind::Syzygy, EventKind::VelocitySyzygy];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Syzygy => "syzygy",
            EventKind::VelocitySyzygy => "velocity_syzygy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "syzygy" => Some(EventKind::Syzygy),
            "velocity_syzygy" | "velocity" => Some(EventKind::VelocitySyzygy),
            _ => None,
        }
    }

    /// The monitored determinant and its natural size `‖row₁‖ ‖row₂‖`.
    pub fn determinant(self, pair: &MatrixPair) -> (f64, f64) {
        let m = match self {
            EventKind::Syzygy => pair.x,
            EventKind::VelocitySyzygy => pair.xdot,
        };
        (m.det(), m.row(0).norm() * m.row(1).norm())
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    /// Determinant at `time`.
    pub delta_value: f64,
    pub bracket: (f64, f64),
    /// Set for a touch of zero without a sign change.
    pub ambiguous: bool,
}

/// `Δ₁ = det X`.
pub fn delta1(pair: &MatrixPair) -> f64 {
    pair.x.det()
}

/// `Δ₂ = det Ẋ`.
pub fn delta2(pair: &MatrixPair) -> f64 {
    pair.xdot.det()
}

/// `dΔ₁/dt` by the product rule.
pub fn delta1_rate(pair: &MatrixPair) -> f64 {
    let x = &pair.x.m;
    let v = &pair.xdot.m;
    v[0][0] * x[1][1] + x[0][0] * v[1][1] - v[0][1] * x[1][0] - x[0][1] * v[1][0]
}

/// `(‖X‖_F ‖Ẋ‖_F)²`, the size of each term of the discriminant.
pub fn discriminant_scale(pair: &MatrixPair) -> f64 {
    (pair.x.frobenius() * pair.xdot.frobenius()).powi(2)
}

/// `Δ̇₁² − 4Δ₁Δ₂`, nonnegative for zero angular momentum.
pub fn discriminant(pair: &MatrixPair, masses: &MassTriple, state: &PhaseState) -> Result<f64> {
    require_zero_angular_momentum(masses, state)?;
    let rate = delta1_rate(pair);
    Ok(rate * rate - 4.0 * delta1(pair) * delta2(pair))
}

struct Probe<'a> {
    traj: &'a Trajectory,
    kind: EventKind,
}

impl Probe<'_> {
    fn value(&self, t: f64) -> f64 {
        self.value_and_scale(t).0
    }

    fn value_and_scale(&self, t: f64) -> (f64, f64) {
        let pair = matrix_form(&self.traj.masses, &self.traj.state_at(t));
        self.kind.determinant(&pair)
    }

    fn record(&self, time: f64, bracket: (f64, f64), ambiguous: bool) -> EventRecord {
        EventRecord {
            time,
            kind: self.kind,
            delta_value: self.value(time),
            bracket,
            ambiguous,
        }
    }

    /// Bisection on a sign-change bracket.
    fn bisect(&self, mut lo: f64, mut hi: f64, mut f_lo: f64) -> EventRecord {
        while hi - lo > TIME_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = self.value(mid);
            if f_mid == 0.0 {
                return self.record(mid, (mid, mid), false);
            }
            if (f_mid > 0.0) == (f_lo > 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        self.record(0.5 * (lo + hi), (lo, hi), false)
    }

    /// Golden-section search for the minimum of `|Δ|` on `[a, c]`, where
    /// `Δ` has the sign `sign` at both ends and at the interior sample `b`.
    fn inspect_touch(&self, a: f64, c: f64, sign: f64, out: &mut Vec<EventRecord>) {
        let mut lo = a;
        let mut hi = c;
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = self.value(x1);
        let mut f2 = self.value(x2);
        loop {
            for (x, f) in [(x1, f1), (x2, f2)] {
                if f == 0.0 || f.signum() != sign {
                    // two sign changes hidden between samples
                    let fa = self.value(a);
                    if f == 0.0 {
                        out.push(self.record(x, (x, x), false));
                    } else {
                        out.push(self.bisect(a, x, fa));
                        out.push(self.bisect(x, c, f));
                    }
                    return;
                }
            }
            if hi - lo <= TIME_TOL {
                break;
            }
            if f1.abs() < f2.abs() {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = self.value(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = self.value(x2);
            }
        }
        let t = 0.5 * (lo + hi);
        let (v, scale) = self.value_and_scale(t);
        if v.abs() <= TANGENT_RTOL * scale {
            out.push(self.record(t, (lo, hi), true));
        }
    }
}

struct Samples {
    times: Vec<f64>,
    values: Vec<f64>,
}

fn sample(traj: &Trajectory, kind: EventKind) -> Samples {
    let times = traj.step_sample_times(SAMPLES_PER_STEP);
    let probe = Probe { traj, kind };
    let values = times.par_iter().map(|&t| probe.value(t)).collect();
    Samples { times, values }
}

/// Events whose left sample index lies in `range`.
fn scan(
    traj: &Trajectory,
    kind: EventKind,
    s: &Samples,
    range: std::ops::Range<usize>,
) -> Vec<EventRecord> {
    let probe = Probe { traj, kind };
    let (ts, vs) = (&s.times, &s.values);
    let mut out = Vec::new();
    for i in range {
        if i + 1 >= ts.len() {
            break;
        }
        let (a, b) = (vs[i], vs[i + 1]);
        if i == 0 && a == 0.0 {
            out.push(probe.record(ts[0], (ts[0], ts[0]), false));
        }
        if b == 0.0 {
            if a != 0.0 {
                let ambiguous = vs.get(i + 2).is_some_and(|&c| c != 0.0 && c.signum() == a.signum());
                out.push(probe.record(ts[i + 1], (ts[i + 1], ts[i + 1]), ambiguous));
            }
        } else if a != 0.0 && a.signum() != b.signum() {
            out.push(probe.bisect(ts[i], ts[i + 1], a));
        } else if a != 0.0 {
            if let Some(&c) = vs.get(i + 2) {
                if c != 0.0 && c.signum() == b.signum() && b.abs() < a.abs() && b.abs() <= c.abs() {
                    probe.inspect_touch(ts[i], ts[i + 2], b.signum(), &mut out);
                }
            }
        }
    }
    out
}

fn merge(mut events: Vec<EventRecord>) -> Vec<EventRecord> {
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.kind.cmp(&b.kind)));
    events
}

/// All events of the selected kinds, in increasing time.
///
/// Coincident events of different kinds are kept as separate records.
pub fn detect_events(trajectory: &Trajectory, kinds: &[EventKind]) -> Vec<EventRecord> {
    let mut all = Vec::new();
    for &kind in dedup(kinds).iter() {
        let s = sample(trajectory, kind);
        all.extend(scan(trajectory, kind, &s, 0..s.times.len()));
    }
    merge(all)
}

/// Same result as [`detect_events`], with the sample range split into
/// `windows` chunks scanned in parallel.
pub fn detect_events_windowed(
    trajectory: &Trajectory,
    kinds: &[EventKind],
    windows: usize,
) -> Vec<EventRecord> {
    let windows = windows.max(1);
    let mut all = Vec::new();
    for &kind in dedup(kinds).iter() {
        let s = sample(trajectory, kind);
        let n = s.times.len();
        let chunk = n.div_ceil(windows).max(1);
        let parts: Vec<Vec<EventRecord>> = (0..n)
            .step_by(chunk)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|start| scan(trajectory, kind, &s, start..(start + chunk).min(n)))
            .collect();
        all.extend(parts.into_iter().flatten());
    }
    merge(all)
}

fn dedup(kinds: &[EventKind]) -> Vec<EventKind> {
    let mut k = kinds.to_vec();
    k.sort();
    k.dedup();
    k
}

/// First non-ambiguous syzygy strictly after the start of the trajectory.
pub fn first_syzygy(trajectory: &Trajectory) -> Option<EventRecord> {
    detect_events(trajectory, &[EventKind::Syzygy])
        .into_iter()
        .find(|e| !e.ambiguous && e.time > trajectory.t_start())
}

/// Three consecutive syzygies with no velocity syzygy between the first
/// and the last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterleavingViolation {
    pub syzygies: [f64; 3],
}

/// Checks that every window `[t_i, t_{i+2}]` spanned by three consecutive
/// syzygies contains a velocity syzygy. Ambiguous syzygies are not counted.
pub fn verify_interleaving(events: &[EventRecord]) -> Vec<InterleavingViolation> {
    let syz: Vec<f64> = events
        .iter()
        .filter(|e| e.kind == EventKind::Syzygy && !e.ambiguous)
        .map(|e| e.time)
        .collect();
    let vel: Vec<f64> = events
        .iter()
        .filter(|e| e.kind == EventKind::VelocitySyzygy)
        .map(|e| e.time)
        .collect();
    syz.windows(3)
        .filter(|w| !vel.iter().any(|&t| t >= w[0] && t <= w[2]))
        .map(|w| InterleavingViolation {
            syzygies: [w[0], w[1], w[2]],
        })
        .collect()
}

/// CSV with header `t,kind,delta_value,bracket_lo,bracket_hi,ambiguous`.
pub fn write_events_csv<W: Write>(mut out: W, events: &[EventRecord]) -> Result<()> {
    writeln!(out, "t,kind,delta_value,bracket_lo,bracket_hi,ambiguous")?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.time, e.kind, e.delta_value, e.bracket.0, e.bracket.1, e.ambiguous
        )?;
    }
    Ok(())
}
