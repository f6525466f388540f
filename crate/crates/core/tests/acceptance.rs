//! End-to-end acceptance suite. Run with `--nocapture` to see one
//! PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use syzygy::bounds::*;
use syzygy::dynamics::{angular_momentum, coefficient_matrix, matrix_form, MassTriple};
use syzygy::events::*;
use syzygy::figure_eight as f8;
use syzygy::integrate::{drift_report, integrate, IntegratorConfig, Trajectory};
use syzygy::linalg::Mat2;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name} = {got}, expected {want} ± {tol}"))
}

fn figure_eight(t_end: f64) -> Result<Trajectory, String> {
    integrate(&f8::masses(), &f8::initial_state(), t_end, &IntegratorConfig::default())
        .and_then(Trajectory::require_complete)
        .map_err(|e| e.to_string())
}

fn first_syzygy_time() -> Result<f64, String> {
    let traj = figure_eight(0.6)?;
    first_syzygy(&traj).map(|e| e.time).ok_or_else(|| "no syzygy before 0.6".into())
}

fn c1_first_syzygy() -> Outcome {
    let ts = first_syzygy_time()?;
    within("T_s", ts, f8::FIRST_SYZYGY, 1e-3)?;
    Ok(format!("T_s = {ts:.10}"))
}

fn c2_bounds() -> Outcome {
    let ts = first_syzygy_time()?;
    let r = bound_report(&f8::masses(), &f8::initial_state(), f8::ALPHA, f8::BETA)
        .map_err(|e| e.to_string())?;
    within("θ_α", r.theta_alpha, f8::THETA_ALPHA, 1e-4)?;
    within("θ_β", r.theta_beta, f8::THETA_BETA, 1e-4)?;
    within("π_s", r.pi_s, f8::PI_S, 1e-4)?;
    within("lower", r.lower, f8::LOWER_BOUND, 1e-4)?;
    within("upper", r.upper, f8::UPPER_BOUND, 1e-4)?;
    ensure(r.lower <= ts && ts <= r.upper, || format!("{} ≤ {ts} ≤ {} fails", r.lower, r.upper))?;
    Ok(format!("{:.6} ≤ {ts:.6} ≤ {:.6}", r.lower, r.upper))
}

fn c3_c0() -> Outcome {
    let spec = c0_spectrum(&f8::masses(), &matrix_form(&f8::masses(), &f8::initial_state()))
        .map_err(|e| e.to_string())?;
    let err = (spec.c0 - f8::C0).max_abs();
    ensure(err <= 1e-4, || format!("C0 entrywise error {err}"))?;
    within("λ_min", spec.eigenvalues.0, f8::SPECTRUM.0, 1e-4)?;
    within("λ_max", spec.eigenvalues.1, f8::SPECTRUM.1, 1e-4)?;
    Ok(format!("max entry error {err:.2e}, spectrum {:?}", spec.eigenvalues))
}

/// RK4 march of `Ÿ = −θ²Y` from `(I, C₀)` to the first zero of `det Y`,
/// refined by bisection on a partial final step.
fn blowup_oracle(c0: Mat2, theta: f64) -> f64 {
    type S = (Mat2, Mat2);
    let w2 = theta * theta;
    let f = |(y, v): S| (v, -w2 * y);
    let step = |s: S, h: f64| -> S {
        let add = |(a, b): S, (c, d): S, k: f64| (a + k * c, b + k * d);
        let k1 = f(s);
        let k2 = f(add(s, k1, 0.5 * h));
        let k3 = f(add(s, k2, 0.5 * h));
        let k4 = f(add(s, k3, h));
        (
            s.0 + (h / 6.0) * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            s.1 + (h / 6.0) * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    };
    let h = 2e-3 / theta.max(c0.max_abs()).max(1.0);
    let (mut s, mut t): (S, f64) = ((Mat2::IDENTITY, c0), 0.0);
    loop {
        if step(s, h).0.det() <= 0.0 {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if step(s, mid).0.det() > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return t + 0.5 * (lo + hi);
        }
        s = step(s, h);
        t += h;
    }
}

fn c4_closed_form() -> Outcome {
    let mut rng = common::rng(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (l1, l2) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let s = loop {
            let s = Mat2::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if s.det().abs() > 0.2 {
                break s;
            }
        };
        let c0 = s * Mat2::new(l1, 0.0, 0.0, l2) * s.inverse().unwrap();
        let th = rng.gen_range(0.1..5.0);
        let diff = (constant_riccati_blowup(&c0, th) - blowup_oracle(c0, th)).abs();
        ensure(diff <= 1e-8, || format!("θ = {th}, C0 = {c0:?}: diff {diff}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("100 cases, max diff {worst:.2e}"))
}

fn c5_conservation() -> Outcome {
    let traj = figure_eight(f8::PERIOD)?;
    let m = f8::masses();
    let d = drift_report(&traj);
    ensure(d.energy < 1e-8, || format!("energy drift {}", d.energy))?;
    let k0 = matrix_momentum_k(&m, &matrix_form(&m, &traj.initial));
    let (mut max_l, mut max_dk) = (0.0f64, 0.0f64);
    for s in traj.uniform_samples(1000) {
        max_l = max_l.max(angular_momentum(&m, &s).abs());
        max_dk = max_dk.max((matrix_momentum_k(&m, &matrix_form(&m, &s)) - k0).abs());
    }
    ensure(max_l < 1e-4, || format!("|L| reaches {max_l}"))?;
    ensure(max_dk < 1e-8, || format!("k varies by {max_dk}"))?;
    Ok(format!("ΔE {:.2e}, max |L| {max_l:.2e}, Δk {max_dk:.2e}", d.energy))
}

fn min_relative_discriminant(traj: &Trajectory) -> Result<f64, String> {
    let mut worst = f64::INFINITY;
    for s in traj.uniform_samples(1000) {
        let pair = matrix_form(&traj.masses, &s);
        let d = discriminant(&pair, &traj.masses, &s).map_err(|e| e.to_string())?;
        worst = worst.min(d / discriminant_scale(&pair));
    }
    Ok(worst)
}

fn c6_discriminant() -> Outcome {
    let mut worst = min_relative_discriminant(&figure_eight(f8::PERIOD)?)?;
    let mut rng = common::rng(6);
    for _ in 0..20 {
        let (m, s) = common::random_start(&mut rng);
        let traj = integrate(&m, &s, 10.0, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
        worst = worst.min(min_relative_discriminant(&traj)?);
    }
    ensure(worst >= -DISCRIMINANT_RTOL, || format!("relative discriminant {worst}"))?;
    Ok(format!("min relative discriminant {worst:.3e} over 21 runs"))
}

fn c7_interleaving() -> Outcome {
    let traj = figure_eight(3.0 * f8::PERIOD)?;
    let evs = detect_events(&traj, &EventKind::ALL);
    let bad = verify_interleaving(&evs);
    ensure(bad.is_empty(), || format!("figure-eight violations {bad:?}"))?;
    let mut rng = common::rng(7);
    let (mut aborted, mut windows) = (0, 0);
    for _ in 0..20 {
        let (m, s) = common::random_start(&mut rng);
        let traj = integrate(&m, &s, 10.0, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
        let evs = detect_events(&traj, &EventKind::ALL);
        let syz: Vec<f64> = evs
            .iter()
            .filter(|e| e.kind == EventKind::Syzygy && !e.ambiguous)
            .map(|e| e.time)
            .collect();
        if !traj.is_complete() {
            aborted += 1;
        } else {
            ensure(syz.len() >= 5, || format!("only {} syzygies by t = 10", syz.len()))?;
        }
        let cut = syz.get(4).copied().unwrap_or(f64::INFINITY);
        let window: Vec<_> = evs.into_iter().filter(|e| e.time <= cut).collect();
        let bad = verify_interleaving(&window);
        ensure(bad.is_empty(), || format!("random run violations {bad:?}"))?;
        windows += syz.len().min(5).saturating_sub(2);
    }
    Ok(format!("0 violations; {windows} random windows checked, {aborted} runs aborted"))
}

fn c8_symmetrizer() -> Outcome {
    let mut rng = common::rng(8);
    for _ in 0..50 {
        let m = MassTriple::new(
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
        )
        .map_err(|e| e.to_string())?;
        let phi = [rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)];
        let a = coefficient_matrix(&m, phi).map_err(|e| e.to_string())?;
        let sym = symmetrizer(&m).conjugate(a);
        let scale = a.max_abs().max(1.0);
        ensure(sym.asymmetry() <= 1e-12 * scale, || format!("asymmetry {}", sym.asymmetry()))?;
        let (l1, l2) = sym
            .real_eigenvalues(1e-12 * scale * scale)
            .map_err(|d| format!("complex spectrum, discriminant {d}"))?;
        ensure(l1.max(l2) <= 1e-12 * scale, || format!("positive eigenvalue {l2}"))?;
        let [m1, m2, m3] = m.as_array();
        let det = m.total() * (m3 * phi[0] * phi[1] + m2 * phi[0] * phi[2] + m1 * phi[1] * phi[2]);
        let tr = -((m3 + m2) * phi[0] + (m1 + m3) * phi[1] + (m2 + m1) * phi[2]);
        ensure((a.det() - det).abs() <= 1e-12 * det.abs().max(1.0), || format!("det {} vs {det}", a.det()))?;
        ensure((a.trace() - tr).abs() <= 1e-12 * tr.abs().max(1.0), || format!("trace {} vs {tr}", a.trace()))?;
    }
    Ok("50 mass triples".into())
}

fn c9_sandwich() -> Outcome {
    let mut rng = common::rng(9);
    let (mut accepted, mut rejected) = (0, 0);
    let mut tightest = f64::INFINITY;
    while accepted < 20 {
        let (m, s) = common::random_start(&mut rng);
        let r = match first_syzygy_report(&m, &s, 20.0, &IntegratorConfig::default(), None) {
            Ok(r) => r,
            // not a collision-free start; draw again
            Err(syzygy::Error::Collision { .. }) if rejected < 20 => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let ts = r.measured_ts.ok_or("missing measured T_s")?;
        ensure(r.sandwich_holds(1e-6) == Some(true), || {
            format!("{} ≤ {ts} ≤ {} fails", r.lower, r.upper)
        })?;
        tightest = tightest.min(r.upper - r.lower);
        accepted += 1;
    }
    Ok(format!(
        "20 starts ({rejected} colliding draws skipped), narrowest bracket {tightest:.3e}"
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        ("1 figure-eight first syzygy", c1_first_syzygy, Some(Duration::from_secs(5))),
        ("2 bound reproduction", c2_bounds, Some(Duration::from_secs(1))),
        ("3 C0 cross-check", c3_c0, None),
        ("4 closed form vs ODE oracle", c4_closed_form, Some(Duration::from_secs(10))),
        ("5 conservation", c5_conservation, None),
        ("6 discriminant inequality", c6_discriminant, None),
        ("7 interleaving", c7_interleaving, None),
        ("8 symmetrizer properties", c8_symmetrizer, None),
        ("9 property-based sandwich", c9_sandwich, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if elapsed > limit {
                outcome = Err(format!("took {elapsed:?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
