mod common;

use syzygy::dynamics::{matrix_form, MassTriple, PhaseState};
use syzygy::error::Error;
use syzygy::events::*;
use syzygy::figure_eight as f8;
use syzygy::integrate::{integrate, IntegratorConfig, Trajectory};
use syzygy::linalg::Vec2;

fn figure_eight(t_end: f64) -> Trajectory {
    integrate(&f8::masses(), &f8::initial_state(), t_end, &IntegratorConfig::default()).unwrap()
}

fn det_at(traj: &Trajectory, kind: EventKind, t: f64) -> f64 {
    kind.determinant(&matrix_form(&traj.masses, &traj.state_at(t))).0
}

/// Uniform-grid sign scan with plain bisection: the independent oracle for
/// the step-sampled detector.
fn grid_oracle(traj: &Trajectory, kind: EventKind, n: usize) -> Vec<f64> {
    let (a, b) = traj.span();
    let ts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| det_at(traj, kind, t)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        if vs[i].signum() != vs[i + 1].signum() {
            let (mut lo, mut hi, flo) = (ts[i], ts[i + 1], vs[i]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if det_at(traj, kind, mid).signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
}

#[test]
fn figure_eight_first_syzygy() {
    let traj = figure_eight(0.6);
    let first = first_syzygy(&traj).expect("a syzygy before t = 0.6");
    assert!((first.time - f8::FIRST_SYZYGY).abs() < 1e-3, "{}", first.time);
    assert!(first.bracket.0 <= first.time && first.time <= first.bracket.1);
    assert!(first.bracket.1 - first.bracket.0 <= TIME_TOL);
    assert!(first.delta_value.abs() < 1e-9);
}

#[test]
fn figure_eight_initial_delta1() {
    let pair = matrix_form(&f8::masses(), &f8::initial_state());
    // 1.08075·0.350807 − (−0.0126893)(−0.570154)
    assert!((delta1(&pair) - 0.371900).abs() < 1e-5);
}

#[test]
fn collinear_start_is_an_event_at_t0() {
    let s = PhaseState::new(
        0.0,
        [Vec2::new(-1.0, 0.0), Vec2::new(0.2, 0.0), Vec2::new(0.8, 0.0)],
        [Vec2::new(0.0, 0.3), Vec2::new(0.0, -0.5), Vec2::new(0.0, 0.2)],
    );
    let traj = integrate(&MassTriple::equal(), &s, 0.2, &IntegratorConfig::default()).unwrap();
    let evs = detect_events(&traj, &[EventKind::Syzygy]);
    assert_eq!(evs[0].time, 0.0);
    assert_eq!(evs[0].delta_value, 0.0);
    assert!(!evs[0].ambiguous);
}

#[test]
fn one_period_matches_grid_scan_oracle() {
    let traj = figure_eight(f8::PERIOD);
    let evs = detect_events(&traj, &EventKind::ALL);
    for kind in EventKind::ALL {
        let found: Vec<f64> = evs.iter().filter(|e| e.kind == kind).map(|e| e.time).collect();
        let oracle = grid_oracle(&traj, kind, 100_000);
        assert_eq!(found.len(), oracle.len(), "{kind}");
        for (a, b) in found.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{kind}: {a} vs {b}");
        }
    }
    // frozen from an independent DOP853 run (rtol 1e-13) scanned on 1e5 points
    let syz = [0.5543169945, 1.608629361, 2.662930113, 3.7172259442, 4.7715831585, 5.8258682118];
    let vel = [0.5543140095, 1.608627982, 2.6629324401, 3.7172342185, 4.7715721529, 5.8258679584];
    for (kind, golden) in [(EventKind::Syzygy, syz), (EventKind::VelocitySyzygy, vel)] {
        let found: Vec<f64> = evs.iter().filter(|e| e.kind == kind).map(|e| e.time).collect();
        assert_eq!(found.len(), 6);
        for (a, b) in found.iter().zip(golden) {
            assert!((a - b).abs() < 1e-7, "{kind}: {a} vs {b}");
        }
    }
    assert!(evs.iter().all(|e| !e.ambiguous));
}

#[test]
fn determinant_keeps_sign_between_events() {
    let traj = figure_eight(f8::PERIOD);
    let evs = detect_events(&traj, &EventKind::ALL);
    for kind in EventKind::ALL {
        let mut cuts = vec![traj.t_start()];
        cuts.extend(evs.iter().filter(|e| e.kind == kind).map(|e| e.time));
        cuts.push(traj.t_end());
        for w in cuts.windows(2) {
            let (a, b) = (w[0] + 1e-8, w[1] - 1e-8);
            let signs: Vec<f64> = (1..=100)
                .map(|i| det_at(&traj, kind, a + (b - a) * i as f64 / 101.0).signum())
                .collect();
            assert!(signs.iter().all(|&s| s == signs[0]), "{kind} in {w:?}");
        }
    }
}

#[test]
fn brackets_straddle_sign_changes() {
    let traj = figure_eight(f8::PERIOD);
    for e in detect_events(&traj, &EventKind::ALL) {
        let lo = det_at(&traj, e.kind, e.bracket.0);
        let hi = det_at(&traj, e.kind, e.bracket.1);
        assert!(lo * hi <= 0.0, "{e:?}");
        assert!(e.bracket.1 - e.bracket.0 <= TIME_TOL);
    }
}

#[test]
fn windowed_detection_matches_single_pass() {
    let traj = figure_eight(2.0 * f8::PERIOD);
    let single = detect_events(&traj, &EventKind::ALL);
    for windows in [2, 7, 64] {
        assert_eq!(detect_events_windowed(&traj, &EventKind::ALL, windows), single);
    }
}

#[test]
fn event_times_stable_under_tighter_tolerance() {
    let run = |rel_tol: f64| {
        let cfg = IntegratorConfig {
            rel_tol,
            abs_tol: rel_tol * 1e-2,
            ..Default::default()
        };
        let traj = integrate(&f8::masses(), &f8::initial_state(), f8::PERIOD, &cfg).unwrap();
        detect_events(&traj, &EventKind::ALL)
    };
    let coarse = run(1e-10);
    let fine = run(1e-11);
    assert_eq!(coarse.len(), fine.len());
    for (a, b) in coarse.iter().zip(&fine) {
        assert_eq!(a.kind, b.kind);
        assert!((a.time - b.time).abs() < 1e-7);
    }
}

#[test]
fn straight_line_configuration_has_zero_discriminant() {
    let masses = MassTriple::equal();
    let s = PhaseState::new(
        0.0,
        [Vec2::new(-1.0, 0.0), Vec2::new(0.3, 0.0), Vec2::new(0.7, 0.0)],
        [Vec2::new(0.2, 0.0), Vec2::new(-0.5, 0.0), Vec2::new(0.3, 0.0)],
    );
    let d = discriminant(&matrix_form(&masses, &s), &masses, &s).unwrap();
    assert_eq!(d, 0.0);
}

#[test]
fn discriminant_nonnegative_on_figure_eight() {
    let traj = figure_eight(f8::PERIOD);
    for s in traj.uniform_samples(1000) {
        let pair = matrix_form(&traj.masses, &s);
        let d = discriminant(&pair, &traj.masses, &s).unwrap();
        assert!(d >= -DISCRIMINANT_RTOL * discriminant_scale(&pair));
    }
}

#[test]
fn discriminant_rejects_rotating_state() {
    let masses = MassTriple::equal();
    let s = common::lagrange_state();
    let err = discriminant(&matrix_form(&masses, &s), &masses, &s).unwrap_err();
    assert!(matches!(err, Error::NonzeroAngularMomentum { .. }));
}

#[test]
fn three_figure_eight_periods_interleave() {
    let traj = figure_eight(3.0 * f8::PERIOD);
    let evs = detect_events(&traj, &EventKind::ALL);
    assert_eq!(evs.iter().filter(|e| e.kind == EventKind::Syzygy).count(), 18);
    assert!(verify_interleaving(&evs).is_empty());
}

#[test]
fn random_runs_interleave() {
    let mut rng = common::rng(2024);
    for _ in 0..20 {
        let (m, s) = common::random_start(&mut rng);
        let traj = integrate(&m, &s, 10.0, &IntegratorConfig::default()).unwrap();
        let evs = detect_events(&traj, &EventKind::ALL);
        let syzygies = evs.iter().filter(|e| e.kind == EventKind::Syzygy).count();
        assert!(syzygies >= 5 || !traj.is_complete());
        let fifth = evs
            .iter()
            .filter(|e| e.kind == EventKind::Syzygy && !e.ambiguous)
            .nth(4)
            .map_or(f64::INFINITY, |e| e.time);
        let window: Vec<_> = evs.into_iter().filter(|e| e.time <= fifth).collect();
        assert!(verify_interleaving(&window).is_empty());
    }
}
