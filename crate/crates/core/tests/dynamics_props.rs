mod common;

use cavcool::dynamics::*;
use cavcool::molstruct::{boltzmann_populations, Ladder, LineKind};
use cavcool::rates::Calibration;
use cavcool::scheduler::ScheduleSegment;
use cavcool::units;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::{expm, oh, stationary};

fn generator(rates: &[f64], n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for f in 0..n {
            if i != f {
                w[(f, i)] = rates[k];
                w[(i, i)] -= rates[k];
                k += 1;
            }
        }
    }
    w
}

fn simplex(raw: &[f64]) -> DVector<f64> {
    let v = DVector::from_vec(raw.to_vec());
    &v / v.sum()
}

proptest! {
    #[test]
    fn integration_conserves_probability(
        rates in prop::collection::vec(0.0f64..20.0, 30),
        raw in prop::collection::vec(0.01f64..1.0, 6),
        duration in 0.01f64..3.0,
    ) {
        let w = generator(&rates, 6);
        let p0 = simplex(&raw);
        let traj = integrate_populations(&w, &p0, duration, 1e-3).unwrap();
        for (_, p) in &traj {
            prop_assert!((p.sum() - 1.0).abs() <= 1e-9);
            prop_assert!(p.min() >= -1e-12);
        }
        let exact = expm(&w, duration) * &p0;
        prop_assert!((&traj.last().unwrap().1 - exact).amax() <= 1e-6);
    }

    #[test]
    fn spontaneous_only_dynamics_reach_stationary_vector(
        rates in prop::collection::vec(0.5f64..5.0, 20),
        raw in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let w = generator(&rates, 5);
        let pi = stationary(&w);
        let traj = integrate_populations(&w, &simplex(&raw), 40.0, 1e-2).unwrap();
        prop_assert!((&traj.last().unwrap().1 - pi).amax() <= 1e-8);
    }
}

#[test]
fn laser_off_gives_zero_generator() {
    let mut setup = oh();
    setup.model.laser.rabi = 0.0;
    let m = &setup.model;
    let rm = build_rate_matrix(m, LaserSetting::rayleigh(&m.cavity, 0.0), 3.6e-6);
    assert!(rm.w.iter().all(|&x| x == 0.0));
    assert!(rm.rayleigh_amp.iter().all(|&x| x == 0.0));
}

#[test]
fn resonant_line_dominates_off_resonant_ones() {
    let mut setup = oh();
    setup.model.calibration = Calibration { c_spont: 0.0, ..setup.model.calibration };
    let m = &setup.model;
    let i20 = m.line_index("v0J2->v0J0").unwrap();
    let laser = cavcool::combspec::laser_for_line(&m.cavity, m.lines[i20].shift);
    let setting = LaserSetting { laser, finetune: 0.0 };
    let t = m.calibration.t_ref;
    let rates = m.line_rates(setting, t);
    let rm = build_rate_matrix(m, setting, t);
    let (l0, l2) = (m.levels.position(0, 0).unwrap(), m.levels.position(0, 2).unwrap());
    let dominant = rm.w[(l0, l2)];
    for (i, l) in m.lines.iter().enumerate() {
        if i == i20 || l.kind == LineKind::Rayleigh {
            continue;
        }
        let entry = rm.w[(l.to, l.from)];
        assert!(entry < dominant);
        // Lorentzian suppression, corrected for the different line strengths
        let d = rates[i].detuning / m.cavity.kappa;
        let strength = m.lines[i20].strength / l.strength;
        let bound = (d * d) * strength.min(1.0) * 0.25;
        assert!(dominant / entry >= bound, "{} vs {}", l.label(&m.levels), dominant / entry);
    }
    // 2→0 cooling rate of a few per second
    assert!((1.0..12.0).contains(&dominant), "{dominant}");
}

#[test]
fn generator_columns_sum_to_zero() {
    let setup = oh();
    let m = &setup.model;
    let rm = build_rate_matrix(m, LaserSetting::rayleigh(&m.cavity, 1.234e9), 3.6e-6);
    for c in 0..rm.w.ncols() {
        assert!(rm.w.column(c).sum().abs() <= 1e-12 * rm.max_diagonal().max(1.0));
        for r in 0..rm.w.nrows() {
            if r != c {
                assert!(rm.w[(r, c)] >= 0.0);
            }
        }
    }
}

#[test]
fn anti_stokes_only_never_raises_mean_j() {
    let mut setup = oh();
    setup.model.calibration = Calibration { c_spont: 0.0, ..setup.model.calibration };
    let m = &setup.model;
    let p0 = DVector::from_vec(boltzmann_populations(&m.levels, 300.0).unwrap());
    for label in ["v0J2->v0J0", "v0J5->v0J3", "v0J8->v0J6"] {
        let i = m.line_index(label).unwrap();
        let laser = cavcool::combspec::laser_for_line(&m.cavity, m.lines[i].shift);
        let rm = build_rate_matrix(m, LaserSetting { laser, finetune: 0.0 }, m.calibration.t_ref);
        // keep only the resonant anti-Stokes channels
        let mut w = rm.w.clone();
        for l in &m.lines {
            if l.kind == LineKind::Stokes {
                let r = w[(l.to, l.from)];
                w[(l.to, l.from)] = 0.0;
                w[(l.from, l.from)] += r;
            }
        }
        let traj = integrate_populations(&w, &p0, 1.0, 1e-3).unwrap();
        let mut prev = mean_j(&p0, &m.levels);
        for (_, p) in &traj {
            let now = mean_j(p, &m.levels);
            assert!(now <= prev + 1e-12, "{label}");
            prev = now;
        }
    }
}

#[test]
fn mean_j_examples() {
    let setup = oh();
    let ls = &setup.model.levels;
    let n = ls.len();
    let mut p = DVector::zeros(n);
    p[ls.position(0, 0).unwrap()] = 1.0;
    assert_eq!(mean_j(&p, ls), 0.0);
    p[ls.position(0, 0).unwrap()] = 0.5;
    p[ls.position(0, 1).unwrap()] = 0.5;
    assert_eq!(mean_j(&p, ls), 0.5);

    // direct Boltzmann sum over J with the rigid-rotor-plus-distortion terms
    let thermal = DVector::from_vec(boltzmann_populations(ls, 300.0).unwrap());
    let beta = units::HBAR * units::RAD_PER_S_PER_WAVENUMBER / (units::K_B * 300.0);
    let (mut z, mut zj) = (0.0, 0.0);
    for j in 0..=8u32 {
        let x = (j * (j + 1)) as f64;
        let w = (2 * j + 1) as f64 * (-beta * (18.55 * x - 0.00191 * x * x)).exp();
        z += w;
        zj += w * j as f64;
    }
    assert!((mean_j(&thermal, ls) - zj / z).abs() < 1e-12);
}

#[test]
fn translational_equilibrium_at_linewidth_limit() {
    let setup = oh();
    let m = &setup.model;
    let p = setup.initial_populations().unwrap();
    let set = setup.cooling_setting();
    let hot = translational_trajectory(m, &p, set, 1.0, 0.2).unwrap();
    let warm = translational_trajectory(m, &p, set, 0.1, 0.2).unwrap();
    let floor = units::rad_s_to_kelvin(m.cavity.kappa);
    assert!((hot.t_final / floor - 1.0).abs() < 1e-3, "{}", hot.t_final);
    assert!((hot.t_final - warm.t_final).abs() / hot.t_final < 0.05);
    assert!(hot.temperatures.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn heating_side_is_rejected() {
    let setup = oh();
    let m = &setup.model;
    let p = setup.initial_populations().unwrap();
    for dw in [0.0, m.cavity.kappa] {
        let err = translational_trajectory(m, &p, LaserSetting::rayleigh(&m.cavity, dw), 1.0, 0.1).unwrap_err();
        assert!(matches!(err, DynError::HeatingConfiguration { .. }));
    }
}

#[test]
fn without_recoil_energy_decreases_monotonically() {
    let kappa = units::hz_to_rad_s(75e3);
    let setup = oh();
    let (k, mass) = (setup.model.cavity.k, setup.model.molecule.mass);
    for model in [TranslationalModel::LowVelocity, TranslationalModel::ThermalAverage] {
        for t in [1e-7, 3.6e-6, 1e-4, 1e-2] {
            let e = units::kelvin_to_energy_1d(t);
            let r = energy_rate_with_recoil(model, e, 1e14, -kappa, kappa, k, mass, 0.0);
            assert!(r < 0.0, "{model:?} {t}");
        }
    }
}

#[test]
fn simulate_edge_cases() {
    let setup = oh();
    let m = &setup.model;
    let init = SimState::new(setup.initial_populations().unwrap(), 1e-4);
    let empty = simulate(m, &[], &init, 0.01).unwrap();
    assert_eq!(empty.samples.len(), 1);
    assert_eq!(empty.samples[0].p, init.p);

    let rayleigh = ScheduleSegment::new(setup.cooling_setting(), 0.05, vec![]);
    let ts = simulate(m, &[rayleigh], &init, 0.01).unwrap();
    assert!(ts.last().t_tr < init.t_tr());
    // only the weak spontaneous background moves population
    assert!((&ts.last().p - &init.p).amax() < 1e-2);
    assert!(ts.monitor.ok());

    let bad = ScheduleSegment::new(setup.cooling_setting(), 0.05, vec!["v0J9->v0J7".into()]);
    assert!(matches!(simulate(m, &[bad], &init, 0.01), Err(DynError::UnknownLine { .. })));
    let zero = ScheduleSegment { duration: 0.0, ..ScheduleSegment::new(setup.cooling_setting(), 1.0, vec![]) };
    assert!(simulate(m, &[zero], &init, 0.01).is_err());
}

#[test]
fn optimized_schedule_conserves_and_matches_matrix_exponential() {
    let setup = oh();
    let m = &setup.model;
    let state = setup.initial_state().unwrap();
    let schedule = setup.auto_schedule(&state).unwrap();
    let ts = setup.simulate(&schedule, &state).unwrap();
    assert!(ts.monitor.max_sum_drift <= 1e-9);
    assert!(ts.monitor.max_ladder_drift <= 1e-9);
    assert!(ts.monitor.min_population >= -1e-12);
    let even0 = ladder_population(&state.p, &m.levels, Ladder::Even);
    for s in &ts.samples {
        assert!((ladder_population(&s.p, &m.levels, Ladder::Even) - even0).abs() <= 1e-9);
    }

    // per segment, against the series matrix exponential of the same generator
    let mut p = state.p.clone();
    let mut t_tr = state.t_tr();
    for (seg, rep) in schedule.segments.iter().zip(&ts.segments) {
        let rm = build_rate_matrix(m, seg.setting(), t_tr);
        let exact = expm(&rm.w, seg.duration) * &p;
        let traj = integrate_populations(&rm.w, &p, seg.duration, m.dt_max).unwrap();
        let stepped = &traj.last().unwrap().1;
        assert!((stepped - &exact).amax() <= 1e-6);
        p = stepped.clone();
        t_tr = rep.t_tr_end;
    }
}

/// Both momentum branches summed on a dense uniform grid.
fn thermal_rate_oracle(t: f64, amp: f64, dw: f64, kappa: f64, k: f64, mass: f64, e_rec: f64) -> f64 {
    let sigma = k * (units::K_B * t / mass).sqrt();
    let half = 10.0 * sigma + 40.0 * kappa;
    let h = (kappa / 40.0).min(sigma / 40.0);
    let n = (2.0 * half / h).ceil() as usize;
    let h = 2.0 * half / n as f64;
    let lor = |x: f64| 1.0 / (x * x + kappa * kappa);
    let mut sum = 0.0;
    for i in 0..=n {
        let u = -half + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let gauss = (-0.5 * (u / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let plus = lor(dw + u) * (-units::HBAR * u + 2.0 * e_rec);
        let minus = lor(dw - u) * (units::HBAR * u + 2.0 * e_rec);
        sum += w * gauss * (plus + minus);
    }
    amp * sum * h
}

#[test]
fn thermal_average_matches_grid_oracle() {
    let setup = oh();
    let (k, mass) = (setup.model.cavity.k, setup.model.molecule.mass);
    let kappa = setup.model.cavity.kappa;
    let e_rec = units::HBAR * units::HBAR * k * k / (2.0 * mass);
    for t in [1e-7, 3.6e-6, 1e-4, 1e-2, 1.0] {
        let e = units::kelvin_to_energy_1d(t);
        for rec in [0.0, e_rec] {
            let ours = energy_rate_with_recoil(TranslationalModel::ThermalAverage, e, 1.0, -kappa, kappa, k, mass, rec);
            let oracle = thermal_rate_oracle(t, 1.0, -kappa, kappa, k, mass, rec);
            assert!((ours - oracle).abs() <= 1e-6 * oracle.abs(), "T {t} rec {rec}: {ours} vs {oracle}");
        }
    }
}

#[test]
fn recoil_outweighs_doppler_friction_for_oh_in_the_exact_average() {
    // E_rec ≈ 0.55 ħκ for OH at 532 nm
    let setup = oh();
    let (k, mass, kappa) = (setup.model.cavity.k, setup.model.molecule.mass, setup.model.cavity.kappa);
    let e_rec = units::HBAR * units::HBAR * k * k / (2.0 * mass);
    for t in [1e-6, 3.6e-6, 1e-4, 1e-2, 1.0] {
        let e = units::kelvin_to_energy_1d(t);
        let r = energy_rate_with_recoil(TranslationalModel::ThermalAverage, e, 1.0, -kappa, kappa, k, mass, e_rec);
        assert!(r > 0.0, "{t}");
    }
    // the low-velocity limit of the same expression
    let e = units::kelvin_to_energy_1d(1e-10);
    let exact = energy_rate_with_recoil(TranslationalModel::ThermalAverage, e, 1.0, -kappa, kappa, k, mass, 0.0);
    let lv = energy_rate_with_recoil(TranslationalModel::LowVelocity, e, 1.0, -kappa, kappa, k, mass, 0.0);
    assert!((exact / lv - 1.0).abs() < 1e-2, "{exact} vs {lv}");
}
