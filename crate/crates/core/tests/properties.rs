use latolato_core::*;
use proptest::prelude::*;

fn ball(c: f64) -> PendulumParams {
    PendulumParams::new(0.8, 1.0, 0.1, c, 9.8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identical_inputs_give_identical_trajectories(a0 in 0.0f64..0.3, w in 1.0f64..15.0, v0 in -3.0f64..3.0) {
        let p = ball(0.02);
        let d = DriveSchedule::single(a0, w).unwrap();
        let cfg = SimConfig::new(1e-3, 5.0, p.critical_angles().unwrap().min, v0.abs()).with_collisions(true);
        let a = simulate(&p, &d, &cfg).unwrap();
        let b = simulate(&p, &d, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn collisions_confine_the_angle(a0 in 0.0f64..0.5, w in 1.0f64..16.0, v0 in 0.0f64..8.0, e in 0.3f64..=1.0) {
        let p = ball(0.0);
        let ang = p.critical_angles().unwrap();
        let d = DriveSchedule::single(a0, w).unwrap();
        let cfg = SimConfig::new(1e-3, 8.0, ang.min, v0).with_collisions(true).with_restitution(e);
        let tr = simulate(&p, &d, &cfg).unwrap();
        let tol = cfg.event_tol;
        for th in &tr.theta {
            prop_assert!(*th >= ang.min - tol && *th <= ang.max + tol, "θ = {}", th);
        }
        for ev in &tr.events {
            prop_assert!((ev.v_post.abs() - e * ev.v_pre.abs()).abs() <= 1e-12 * ev.v_pre.abs().max(1.0));
            if e == 1.0 {
                prop_assert_eq!(ev.v_post.abs(), ev.v_pre.abs());
            }
        }
    }

    #[test]
    fn free_pendulum_conserves_energy(theta0 in -3.0f64..3.0, v0 in -2.0f64..2.0) {
        let p = ball(0.0);
        let tr = simulate(&p, &DriveSchedule::stationary(), &SimConfig::new(1e-3, 60.0, theta0, v0)).unwrap();
        let e0 = p.pivot_energy(theta0, v0);
        let scale = e0.abs().max(p.m * p.g * p.l);
        for s in tr.states() {
            prop_assert!((p.pivot_energy(s.theta, s.theta_dot) - e0).abs() < 1e-6 * scale);
        }
    }

    #[test]
    fn dissipated_work_matches_energy_loss(c in 0.005f64..0.2, theta0 in 0.1f64..2.5) {
        let p = ball(c);
        let d = DriveSchedule::stationary();
        let tr = simulate(&p, &d, &SimConfig::new(1e-3, 20.0, theta0, 0.0)).unwrap();
        let e = energy_trace(&tr, &p, &d).unwrap();
        let lost = e.pivot_energy[0] - e.pivot_energy[e.len() - 1];
        let w = e.dissipated_energy();
        prop_assert!(w >= 0.0);
        prop_assert!((w - lost).abs() < 1e-5 * lost.abs().max(1e-9));
    }

    #[test]
    fn pivot_position_continuous_across_switches(a1 in 0.01f64..0.3, a2 in 0.01f64..0.3, w1 in 1.0f64..20.0, w2 in 1.0f64..20.0, ts in 0.5f64..10.0) {
        let d = DriveSchedule::new(vec![DriveStage::new(a1, w1).until(ts), DriveStage::new(a2, w2)]);
        if let Ok(d) = d {
            let before = d.kinematics(ts - 1e-9).y;
            let after = d.kinematics(ts).y;
            prop_assert!((before - after).abs() < 1e-7);
        }
    }

    #[test]
    fn fit_recovers_damping(m in 0.05f64..1.0, l in 0.1f64..1.5, ratio in 0.005f64..0.1) {
        let w0 = (9.8 / l).sqrt();
        let c = 2.0 * m * l * ratio * w0;
        let p = PendulumParams::new(m, l, 0.0, c, 9.8).unwrap();
        // three decay times, capped at sixty periods
        let duration = (3.0 / (ratio * w0)).min(60.0 * std::f64::consts::TAU / w0);
        let cfg = SimConfig::new(1e-3, duration, 0.2, 0.0).with_model(Model::SmallAngle);
        let tr = simulate(&p, &DriveSchedule::stationary(), &cfg).unwrap();
        let fit = fit_decay(&tr.t, &tr.theta, m, l).unwrap();
        prop_assert!((fit.c - c).abs() < 0.02 * c, "C {} vs {}", fit.c, c);
    }
}

/// Where the drive feeds energy in, the pivot-frame energy can only fall by
/// what damping removes.
#[test]
fn positive_input_windows_do_not_lose_more_than_dissipation() {
    let p = ball(0.02);
    let d = DriveSchedule::single(0.2, 6.26).unwrap();
    let tr = simulate(&p, &d, &SimConfig::new(1e-3, 30.0, 0.3, 0.0)).unwrap();
    let e = energy_trace(&tr, &p, &d).unwrap();
    let mut windows = 0;
    let mut i = 0;
    while i < e.len() {
        if e.input_power[i] <= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < e.len() && e.input_power[i + 1] > 0.0 {
            i += 1;
        }
        if i > start {
            let gain = e.pivot_energy[i] - e.pivot_energy[start];
            let diss = trapezoid(&e.t[start..=i], &e.dissipated_power[start..=i]);
            assert!(gain >= -diss - 1e-9, "window [{}, {}]: {gain} < -{diss}", e.t[start], e.t[i]);
            windows += 1;
        }
        i += 1;
    }
    assert!(windows > 10);
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (b[0] + b[1]) * (a[1] - a[0])).sum()
}

#[test]
fn undriven_undamped_drift_over_full_horizon() {
    let p = ball(0.0);
    for theta0 in [0.001, 1.0, 2.5] {
        let tr = simulate(&p, &DriveSchedule::stationary(), &SimConfig::new(1e-3, 300.0, theta0, 0.0)).unwrap();
        let e0 = p.pivot_energy(theta0, 0.0);
        let worst = tr
            .states()
            .map(|s| ((p.pivot_energy(s.theta, s.theta_dot) - e0) / e0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "θ₀ = {theta0}: {worst}");
    }
}

#[test]
fn reference_cells_keep_their_labels() {
    let p = ball(0.0);
    let spec = SweepSpec::default();
    let cfg = spec.sim_config(&p).unwrap();
    let threshold = spec.resolved_energy_threshold(&p).unwrap();
    let w0 = p.natural_frequency();
    let resonant = evaluate_cell(&spec, &p, &cfg, threshold, 0.05, 6.0 / w0);
    let detuned = evaluate_cell(&spec, &p, &cfg, threshold, 0.05, 5.9 / w0);
    assert_eq!(resonant.energy_label, Some(Label::Unstable));
    assert_eq!(detuned.energy_label, Some(Label::Stable));
    // frozen from a reference run at h = 2 ms over 300 s
    assert!(resonant.mean_energy.unwrap() - threshold > 0.1);
    assert!(detuned.mean_energy.unwrap() - p.pivot_energy(0.0, 0.0) < 1e-4);
}

#[test]
fn coarse_map_properties() {
    let p = ball(0.0);
    let spec = SweepSpec { n_a: 6, n_ratio: 11, ..SweepSpec::default() };
    let map = run_sweep(&spec, &p).unwrap();
    assert_eq!(map.failed_cells().count(), 0);
    let energy = map.unstable_grid(Criterion::MeanEnergy);
    let crossing = map.unstable_grid(Criterion::CrossingCount);
    for j in 0..map.ratio.len() {
        assert!(!energy[0][j] && !crossing[0][j]);
    }
    for i in 0..map.a0.len() {
        for j in 0..map.ratio.len() {
            assert!(!crossing[i][j] || energy[i][j], "A0 {} ratio {}", map.a0[i], map.ratio[j]);
        }
    }
    assert!(crossing.iter().flatten().any(|&u| u));

    // evaluating the cells in reverse order changes nothing
    let cp = spec.cell_params(&p).unwrap();
    let cfg = spec.sim_config(&cp).unwrap();
    let th = spec.resolved_energy_threshold(&cp).unwrap();
    for k in (0..map.cells.len()).rev() {
        let c = &map.cells[k];
        assert_eq!(&evaluate_cell(&spec, &cp, &cfg, th, c.a0, c.ratio), c);
    }
}
