//! Cross-module self-check suite: elliptic identities, fixed points,
//! frequency-equation residuals, analytic versus numerical trajectories and
//! the battery energy chain.

use serde::{Deserialize, Serialize};

use crate::analytic::{build_solution, omega_residual, BoundLuminositySolution, Branch};
use crate::battery::{battery_energy, charging_power, charging_time};
use crate::dynamics::{full_rhs, integrate, IntegrationOptions, State};
use crate::elliptic::{complete_elliptic_k, jacobi_functions, EllipticModulus, ModulusRegime};
use crate::format::number;
use crate::model::{critical_coupling, fixed_points, ModelParams};
use crate::Result;

/// Moduli exercised by the trajectory-level checks.
pub const CHECK_MODULI: [f64; 3] = [0.5, 0.8, 1.2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub params: ModelParams,
    /// Added to every solved `Ω` before the residual check; a testing hook.
    pub omega_perturbation: f64,
    /// Integrator tolerance of the analytic-versus-ODE check.
    pub tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            params: ModelParams::new(1.0, 1.0, 0.5, -1.0, 100).expect("valid defaults"),
            omega_perturbation: 0.0,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed error measure.
    pub value: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckResult {
    fn from_value(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail,
        }
    }

    fn failed(name: &str, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs every check; individual failures are reported, not returned as errors.
pub fn run_validation(opts: &ValidationOptions) -> ValidationReport {
    let checks = vec![
        elliptic_identities(),
        fixed_point_rhs(&opts.params),
        omega_residuals(&opts.params, opts.omega_perturbation),
        guard("analytic_vs_ode", 1e-6, || {
            analytic_vs_ode(&opts.params, opts.tol)
        }),
        guard("battery_energy_chain", 1e-6, || battery_chain(&opts.params)),
        guard("power_vs_finite_difference", 1e-6, || {
            power_vs_difference(&opts.params)
        }),
    ];
    ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn guard(name: &str, tolerance: f64, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| CheckResult::failed(name, tolerance, e.to_string()))
}

fn modulus(k: f64) -> EllipticModulus {
    EllipticModulus::new(k).expect("fixed test modulus")
}

fn solutions(p: &ModelParams) -> Result<Vec<BoundLuminositySolution>> {
    CHECK_MODULI
        .iter()
        .map(|&k| build_solution(p, modulus(k), Branch::Minus))
        .collect()
}

/// `sn² + cn² = 1` and `dn² + k²sn² = 1` on a `(u, k)` grid, plus
/// `dn(K(k), k) = k'`.
pub fn elliptic_identities() -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let u = -10.0 + 20.0 * i as f64 / 99.0;
        for m in 0..20 {
            let k = 0.05 + 2.95 * m as f64 / 19.0;
            let j = jacobi_functions(u, modulus(k)).expect("finite phase");
            worst = worst
                .max((j.sn * j.sn + j.cn * j.cn - 1.0).abs())
                .max((j.dn * j.dn + k * k * j.sn * j.sn - 1.0).abs());
        }
    }
    for m in 0..20 {
        let k = modulus(0.99 * m as f64 / 19.0);
        let j = jacobi_functions(complete_elliptic_k(k).expect("k < 1"), k).expect("finite");
        worst = worst.max((j.dn - k.complementary()).abs());
    }
    CheckResult::from_value("elliptic_identities", worst, 1e-12, String::new())
}

/// The right-hand side of the full system vanishes at every fixed point,
/// relative to the size of the fixed point.
pub fn fixed_point_rhs(p: &ModelParams) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for factor in [0.5, 1.0, 2.0, 4.0] {
        let Ok(q) = p.with_coupling(p.coupling() * factor) else {
            continue;
        };
        for fp in fixed_points(&q) {
            let scale = fp
                .state
                .to_array()
                .iter()
                .fold(1.0_f64, |m, v| m.max(v.abs()));
            let rhs = full_rhs(&fp.state, &q).to_array();
            worst = rhs.iter().fold(worst, |m, v| m.max(v.abs() / scale));
            count += 1;
        }
    }
    CheckResult::from_value(
        "fixed_point_rhs",
        worst,
        1e-12,
        format!("{count} fixed points"),
    )
}

/// Relative residual of the frequency equation over a grid of
/// `(λ/λ_c, k, S)`, with `perturbation` added to each solved `Ω`.
pub fn omega_residuals(p: &ModelParams, perturbation: f64) -> CheckResult {
    const NAME: &str = "omega_residual";
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    for n in [20, 200, 2000] {
        let Ok(base) = p.with_n_tls(n) else { continue };
        let Ok(lambda_c) = critical_coupling(&base) else {
            return CheckResult::failed(NAME, 1e-9, "degenerate model".into());
        };
        for ratio in [1.1, 1.5, 2.0, 4.0, 10.0] {
            let Ok(q) = base.with_coupling(ratio * lambda_c) else {
                continue;
            };
            for k in [0.2, 0.5, 0.8, 1.2, 2.0] {
                let k = modulus(k);
                match build_solution(&q, k, Branch::Minus) {
                    Ok(sol) => {
                        worst = worst.max(omega_residual(&q, k, sol.omega_big + perturbation));
                        solved += 1;
                    }
                    Err(e) => return CheckResult::failed(NAME, 1e-9, e.to_string()),
                }
            }
        }
    }
    CheckResult::from_value(NAME, worst, 1e-9, format!("{solved} solutions"))
}

/// Largest `|Sx_analytic − Sx_ODE| / S` over one period of `Sx`.
pub fn analytic_vs_ode(p: &ModelParams, tol: f64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for sol in solutions(p)? {
        let t_end = sol.sx_period().expect("away from the separatrix");
        let opts = IntegrationOptions::new(t_end, t_end / 400.0, tol)?;
        let traj = integrate(State::Reduced(sol.spin_at(0.0)), p, &opts)?;
        for (t, s) in traj.times.iter().zip(traj.spins()) {
            worst = worst.max((s.sx - sol.spin_at(*t).sx).abs() / p.spin());
        }
    }
    Ok(CheckResult::from_value(
        "analytic_vs_ode",
        worst,
        1e-6,
        format!("tol {}", number(tol)),
    ))
}

/// Time at which the analytic `Sz(t)` is minimal, the battery's time origin.
fn discharge_offset(sol: &BoundLuminositySolution) -> f64 {
    let k = sol.k;
    match k.regime() {
        ModulusRegime::Oscillating => complete_elliptic_k(k).expect("k < 1") / sol.omega_big,
        _ => {
            let inv = k.reciprocal().expect("positive modulus");
            complete_elliptic_k(inv).expect("1/k < 1") / (sol.omega_big * k.value())
        }
    }
}

/// `E_B(t)` against `ω₀[Sz(t) − Sz(0)]` from the spin solution and against
/// the integral of `P`, on one charging cycle, relative to `e_max`-scale.
pub fn battery_chain(p: &ModelParams) -> Result<CheckResult> {
    const STEPS: usize = 4000;
    let mut worst: f64 = 0.0;
    for sol in solutions(p)? {
        let t0 = discharge_offset(&sol);
        let sz0 = sol.spin_at(t0).sz;
        let t_end = 2.0 * charging_time(&sol);
        let h = t_end / STEPS as f64;
        let scale = battery_energy(&sol, charging_time(&sol)).max(1.0);
        let mut integral = 0.0;
        let mut last_power = charging_power(&sol, 0.0);
        for i in 1..=STEPS {
            let t = i as f64 * h;
            // Simpson on each interval.
            let mid = charging_power(&sol, t - 0.5 * h);
            let power = charging_power(&sol, t);
            integral += h / 6.0 * (last_power + 4.0 * mid + power);
            last_power = power;
            let e = battery_energy(&sol, t);
            let from_spin = p.omega0() * (sol.spin_at(t0 + t).sz - sz0);
            worst = worst
                .max((e - from_spin).abs() / scale)
                .max((e - integral).abs() / scale);
        }
    }
    Ok(CheckResult::from_value(
        "battery_energy_chain",
        worst,
        1e-6,
        String::new(),
    ))
}

/// `P(t)` against a Richardson-extrapolated central difference of `E_B` on
/// 1000 points of one charging cycle, with mixed tolerance
/// `|ΔP| ≤ 1e−6 (1 + |P|)`.
pub fn power_vs_difference(p: &ModelParams) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for sol in solutions(p)? {
        let t_end = 2.0 * charging_time(&sol);
        let h = 1e-3 / sol.omega_big;
        let central = |t: f64, h: f64| {
            (battery_energy(&sol, t + h) - battery_energy(&sol, t - h)) / (2.0 * h)
        };
        for i in 0..1000 {
            let t = t_end * i as f64 / 999.0;
            let fd = (4.0 * central(t, 0.5 * h) - central(t, h)) / 3.0;
            let exact = charging_power(&sol, t);
            worst = worst.max((exact - fd).abs() / (1.0 + exact.abs()));
        }
    }
    Ok(CheckResult::from_value(
        "power_vs_finite_difference",
        worst,
        1e-6,
        String::new(),
    ))
}
