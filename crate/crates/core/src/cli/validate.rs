//! End-to-end check of the figure-eight reference numbers.

use serde::Serialize;

use crate::bounds::bound_report;
use crate::dynamics::{conserved, matrix_form};
use crate::error::Result;
use crate::events::{
    detect_events, discriminant, discriminant_scale, verify_interleaving, EventKind,
    DISCRIMINANT_RTOL,
};
use crate::figure_eight as f8;
use crate::integrate::{integrate, IntegratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured − expected| ≤ tolerance`
    Within,
    /// `measured ≤ expected`
    AtMost,
    /// `measured ≥ expected`
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn within(name: &str, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_owned(),
            measured,
            expected,
            relation: Relation::Within,
            tolerance,
            passed: (measured - expected).abs() <= tolerance,
        }
    }

    fn at_most(name: &str, measured: f64, expected: f64) -> Self {
        Self {
            name: name.to_owned(),
            measured,
            expected,
            relation: Relation::AtMost,
            tolerance: 0.0,
            passed: measured <= expected,
        }
    }

    fn at_least(name: &str, measured: f64, expected: f64) -> Self {
        Self {
            name: name.to_owned(),
            measured,
            expected,
            relation: Relation::AtLeast,
            tolerance: 0.0,
            passed: measured >= expected,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs the whole pipeline on the figure-eight data. `window` overrides the
/// reference `(α, β)`.
pub fn validate_figure_eight(
    config: &IntegratorConfig,
    window: Option<(f64, f64)>,
) -> Result<ValidationReport> {
    let masses = f8::masses();
    let initial = f8::initial_state();
    let (alpha, beta) = window.unwrap_or((f8::ALPHA, f8::BETA));

    // config errors (inverted window, bad tolerances) surface before any work
    let report = bound_report(&masses, &initial, alpha, beta)?;
    let traj = integrate(&masses, &initial, 3.0 * f8::PERIOD, config)?.require_complete()?;
    let events = detect_events(&traj, &EventKind::ALL);
    let ts = events
        .iter()
        .find(|e| e.kind == EventKind::Syzygy && !e.ambiguous && e.time > 0.0)
        .map_or(f64::NAN, |e| e.time);

    let mut checks = vec![Check::within("first_syzygy", ts, f8::FIRST_SYZYGY, 1e-3)];
    for i in 0..2 {
        for j in 0..2 {
            checks.push(Check::within(
                &format!("c0[{i}][{j}]"),
                report.c0.m[i][j],
                f8::C0.m[i][j],
                1e-4,
            ));
        }
    }
    checks.extend([
        Check::within("lambda_min", report.eigenvalues.0, f8::SPECTRUM.0, 1e-4),
        Check::within("lambda_max", report.eigenvalues.1, f8::SPECTRUM.1, 1e-4),
        Check::within("pi_s", report.pi_s, f8::PI_S, 1e-4),
        Check::within("theta_alpha", report.theta_alpha, f8::THETA_ALPHA, 1e-4),
        Check::within("theta_beta", report.theta_beta, f8::THETA_BETA, 1e-4),
        Check::within("lower_bound", report.lower, f8::LOWER_BOUND, 1e-4),
        Check::within("upper_bound", report.upper, f8::UPPER_BOUND, 1e-4),
        Check::at_least("sandwich_lower", ts, report.lower),
        Check::at_most("sandwich_upper", ts, report.upper),
    ]);

    let c = conserved(&masses, &initial)?;
    checks.push(Check::at_most("energy", c.energy, 0.0));
    checks.push(Check::at_most(
        "abs_angular_momentum",
        c.angular_momentum.abs(),
        1e-4,
    ));

    let one_period = integrate(&masses, &initial, f8::PERIOD, config)?.require_complete()?;
    let mut worst = f64::INFINITY;
    for s in one_period.uniform_samples(1000) {
        let pair = matrix_form(&masses, &s);
        let d = discriminant(&pair, &masses, &s)?;
        worst = worst.min(d / discriminant_scale(&pair));
    }
    checks.push(Check::at_least(
        "relative_discriminant_min",
        worst,
        -DISCRIMINANT_RTOL,
    ));
    checks.push(Check::at_most(
        "interleaving_violations",
        verify_interleaving(&events).len() as f64,
        0.0,
    ));

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { checks, passed })
}
