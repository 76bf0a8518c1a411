use dicke_battery::analytic::{build_solution, BoundLuminositySolution, Branch};
use dicke_battery::battery::{
    battery_energy, charging_period, charging_power, charging_time, energy_scale, max_energy,
    scaling_study, SweepMode,
};
use dicke_battery::dynamics::{
    integrate, spin_to_canonical, IntegrationOptions, PhaseState, PoleConvention, SpinVector, State,
};
use dicke_battery::elliptic::{complete_elliptic_k, EllipticModulus};
use dicke_battery::model::{critical_coupling, ModelParams};
use proptest::prelude::*;

fn modulus(k: f64) -> EllipticModulus {
    EllipticModulus::new(k).unwrap()
}

fn reference(n: u64) -> ModelParams {
    ModelParams::new(1.0, 1.0, 0.5, -1.0, n).unwrap()
}

fn solution(p: &ModelParams, k: f64) -> BoundLuminositySolution {
    build_solution(p, modulus(k), Branch::Minus).unwrap()
}

#[test]
fn qphi_trajectory_matches_reduced() {
    let p = reference(40);
    let s = p.spin();
    let spin = SpinVector::new(0.6 * s, 0.3 * s, -(1.0f64 - 0.45).sqrt() * s);
    let opts = IntegrationOptions::new(3.0, 0.01, 1e-11).unwrap();
    let reduced = integrate(State::Reduced(spin), &p, &opts).unwrap();
    let canonical = spin_to_canonical(&spin, s, PoleConvention::Error).unwrap();
    let qphi = integrate(State::QPhi(canonical), &p, &opts).unwrap();
    let worst = reduced
        .spins()
        .iter()
        .zip(qphi.spins())
        .map(|(a, b)| {
            (a.sx - b.sx)
                .abs()
                .max((a.sy - b.sy).abs())
                .max((a.sz - b.sz).abs())
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-6 * s, "{worst}");
}

#[test]
fn extended_model_full_system_conserves() {
    let p = ModelParams::new(1.0, 1.0, 0.8, -0.5, 60).unwrap();
    let sol = solution(&p, 0.7);
    let opts = IntegrationOptions::new(10.0 * sol.sx_period().unwrap(), 0.01, 1e-10).unwrap();
    let traj = integrate(
        State::Full(PhaseState::adiabatic(sol.spin_at(0.0), &p)),
        &p,
        &opts,
    )
    .unwrap();
    assert!(traj.spin_norm_drift() < 1e-8);
    assert!(traj.energy_drift() < 1e-8);
}

#[test]
fn exponents_stable_under_grid_shift() {
    let base = reference(100);
    let grid = [100u64, 200, 400, 800, 1600, 3200];
    let shifted: Vec<u64> = grid.iter().map(|n| n * 13 / 10).collect();
    let a = scaling_study(&base, &grid, modulus(0.8), SweepMode::FixedLambda).unwrap();
    let b = scaling_study(&base, &shifted, modulus(0.8), SweepMode::FixedLambda).unwrap();
    assert!((a.exponent_p_avg() - b.exponent_p_avg()).abs() < 0.02);
    assert!((a.exponent_p_max() - b.exponent_p_max()).abs() < 0.02);
    assert!((a.exponent_tc() - b.exponent_tc()).abs() < 0.02);
}

#[test]
fn full_charge_doubles_with_spin_at_fixed_ratio() {
    let k = 0.8;
    let ratio = 3.0;
    let e_max = |n: u64| {
        let base = reference(n);
        let p = base
            .with_coupling(ratio * critical_coupling(&base).unwrap())
            .unwrap();
        max_energy(&solution(&p, k))
    };
    for n in [100, 400, 1600] {
        assert!((e_max(2 * n) / e_max(n) - 2.0).abs() < 1e-9);
    }
}

#[test]
fn small_modulus_charging_time() {
    let p = reference(100);
    let sol = solution(&p, 1e-4);
    let expected = std::f64::consts::FRAC_PI_2 / sol.omega_big;
    assert!((charging_time(&sol) / expected - 1.0).abs() < 1e-7);
}

proptest! {
    #[test]
    fn battery_energy_is_periodic(k in 0.05f64..2.5, t in 0.0f64..1.0) {
        prop_assume!((k - 1.0).abs() > 1e-3);
        let sol = solution(&reference(100), k);
        let period = charging_period(&sol).unwrap();
        let scale = max_energy(&sol);
        let a = battery_energy(&sol, t);
        let b = battery_energy(&sol, t + period);
        prop_assert!((a - b).abs() <= 1e-9 * scale, "{} vs {}", a, b);
    }

    #[test]
    fn charging_is_monotone(k in 0.05f64..2.5, frac in 0.0f64..=1.0) {
        let sol = solution(&reference(100), k);
        let t = frac * charging_time(&sol);
        let scale = energy_scale(&sol) * sol.omega_big;
        prop_assert!(charging_power(&sol, t) >= -1e-12 * scale);
    }

    #[test]
    fn energy_follows_two_level_energy(k in 0.05f64..2.5, t in 0.0f64..0.5) {
        prop_assume!((k - 1.0).abs() > 1e-3);
        let p = reference(100);
        let sol = solution(&p, k);
        // Sz(t) is minimal where |Sx| is, a quarter period after the start.
        let km = modulus(k);
        let t0 = if k < 1.0 {
            complete_elliptic_k(km).unwrap() / sol.omega_big
        } else {
            complete_elliptic_k(km.reciprocal().unwrap()).unwrap() / (sol.omega_big * k)
        };
        let from_spin = p.omega0() * (sol.spin_at(t0 + t).sz - sol.spin_at(t0).sz);
        let e = battery_energy(&sol, t);
        prop_assert!((e - from_spin).abs() <= 1e-6 * (1.0 + e.abs()), "{} vs {}", e, from_spin);
    }

    #[test]
    fn full_charge_is_bounded(k in 0.01f64..5.0, n in 10u64..2000, ratio in 1.01f64..20.0) {
        let base = reference(2 * n);
        let p = base.with_coupling(ratio * critical_coupling(&base).unwrap()).unwrap();
        let sol = solution(&p, k);
        prop_assert!(max_energy(&sol) <= 2.0 * p.omega0() * p.spin() + 1e-9);
    }
}
