//! Battery observables of the bound luminosity state.
//!
//! The time origin is shifted to the minimum of the two-level energy
//! `ω₀ Sz(t)`, where the battery is discharged. With
//! `B = ωΩ²/(4|ε|λ²)` the stored energy is
//!
//! ```text
//! k < 1:  E_B(t) = B [dn²(Ωt + K(k), k) − 1 + k²]
//! k > 1:  E_B(t) = B cn²(Ωkt + K(1/k), 1/k)
//! k = 1:  E_B(t) = B (1 − sech²(Ωt))
//! ```
//!
//! On the separatrix the charge never completes; the curve rises
//! monotonically towards `B` with characteristic time `1/Ω`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{build_solution, BoundLuminositySolution, Branch};
use crate::elliptic::{complete_elliptic_k, jacobi_functions, EllipticModulus, ModulusRegime};
use crate::fit::{fit_power_law, PowerLawFit};
use crate::format::number;
use crate::model::{critical_coupling, ModelParams};
use crate::{Error, Result};

/// Minimum number of valid sweep points for an exponent fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Minimum span of a sweep, in decades of `N`.
pub const MIN_SWEEP_DECADES: f64 = 1.5;

/// `B = ωΩ²/(4|ε|λ²)`, the energy scale of the battery curves.
pub fn energy_scale(sol: &BoundLuminositySolution) -> f64 {
    let p = &sol.params;
    p.omega() * sol.omega_big * sol.omega_big
        / (4.0 * p.epsilon().abs() * p.coupling() * p.coupling())
}

fn quarter(k: EllipticModulus) -> f64 {
    complete_elliptic_k(k).expect("modulus below one")
}

fn reciprocal(k: EllipticModulus) -> EllipticModulus {
    k.reciprocal().expect("rotating modulus is positive")
}

/// Stored energy `E_B(t) = ω₀[Sz(t) − Sz(0)]` in the shifted time origin.
pub fn battery_energy(sol: &BoundLuminositySolution, t: f64) -> f64 {
    let scale = energy_scale(sol);
    let k = sol.k;
    let w = sol.omega_big;
    match k.regime() {
        ModulusRegime::Oscillating => {
            let kv = k.value();
            let j = jacobi_functions(w * t + quarter(k), k).expect("finite phase");
            scale * (j.dn * j.dn - (1.0 - kv) * (1.0 + kv))
        }
        ModulusRegime::Rotating => {
            let inv = reciprocal(k);
            let j = jacobi_functions(w * k.value() * t + quarter(inv), inv).expect("finite phase");
            scale * j.cn * j.cn
        }
        ModulusRegime::Separatrix => {
            let sech = 1.0 / (w * t).cosh();
            scale * (1.0 - sech * sech)
        }
    }
}

/// Charging power `P(t) = dE_B/dt`, the exact derivative of
/// [`battery_energy`].
pub fn charging_power(sol: &BoundLuminositySolution, t: f64) -> f64 {
    let scale = energy_scale(sol);
    let k = sol.k;
    let w = sol.omega_big;
    match k.regime() {
        ModulusRegime::Oscillating => {
            let kv = k.value();
            let j = jacobi_functions(w * t + quarter(k), k).expect("finite phase");
            -2.0 * scale * w * kv * kv * j.sn * j.cn * j.dn
        }
        ModulusRegime::Rotating => {
            let kv = k.value();
            let inv = reciprocal(k);
            let j = jacobi_functions(w * kv * t + quarter(inv), inv).expect("finite phase");
            -2.0 * scale * w * kv * j.sn * j.cn * j.dn
        }
        ModulusRegime::Separatrix => {
            let x = w * t;
            let sech = 1.0 / x.cosh();
            2.0 * scale * w * x.tanh() * sech * sech
        }
    }
}

/// Time of full charge: `K(k)/Ω` (`k < 1`), `K(1/k)/(Ωk)` (`k > 1`),
/// `1/Ω` on the separatrix.
pub fn charging_time(sol: &BoundLuminositySolution) -> f64 {
    let k = sol.k;
    match k.regime() {
        ModulusRegime::Oscillating => quarter(k) / sol.omega_big,
        ModulusRegime::Rotating => quarter(reciprocal(k)) / (sol.omega_big * k.value()),
        ModulusRegime::Separatrix => 1.0 / sol.omega_big,
    }
}

/// Maximal stored energy: `k² B` for `k < 1`, `B` for `k ≥ 1`.
pub fn max_energy(sol: &BoundLuminositySolution) -> f64 {
    let scale = energy_scale(sol);
    match sol.k.regime() {
        ModulusRegime::Oscillating => sol.k.value().powi(2) * scale,
        _ => scale,
    }
}

/// Period of `E_B(t)`; `None` on the separatrix.
pub fn charging_period(sol: &BoundLuminositySolution) -> Option<f64> {
    sol.period()
}

/// Largest charging power over one charging cycle.
pub fn peak_power(sol: &BoundLuminositySolution) -> f64 {
    if sol.k.regime() == ModulusRegime::Separatrix {
        // max of tanh·sech² is 2/(3√3), reached at tanh² = 1/3.
        return 2.0 * energy_scale(sol) * sol.omega_big * 2.0 / (3.0 * 3f64.sqrt());
    }
    let t_c = charging_time(sol);
    maximize(|t| charging_power(sol, t), 0.0, t_c)
}

/// Grid search followed by golden-section refinement.
fn maximize<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const GRID: usize = 256;
    let h = (b - a) / GRID as f64;
    let (best, _) =
        (0..=GRID)
            .map(|i| (i, f(a + i as f64 * h)))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let mut lo = a + best.saturating_sub(1) as f64 * h;
    let mut hi = (a + (best + 1) as f64 * h).min(b);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * b.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2).max(f(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySample {
    pub t: f64,
    #[serde(rename = "E_B")]
    pub energy: f64,
    #[serde(rename = "P")]
    pub power: f64,
}

/// Sampled charging curve of one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryCurve {
    pub sol: BoundLuminositySolution,
    pub samples: Vec<BatterySample>,
    pub t_c: f64,
    pub e_max: f64,
}

impl BatteryCurve {
    /// `samples + 1` equally spaced points on `[0, t_end]`.
    pub fn sample(sol: &BoundLuminositySolution, t_end: f64, samples: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) || samples == 0 {
            return Err(Error::Domain(format!(
                "battery curve needs t_end > 0 and at least one interval, got {t_end}, {samples}"
            )));
        }
        let h = t_end / samples as f64;
        let samples = (0..=samples)
            .map(|i| {
                let t = i as f64 * h;
                BatterySample {
                    t,
                    energy: battery_energy(sol, t),
                    power: charging_power(sol, t),
                }
            })
            .collect();
        Ok(Self {
            sol: *sol,
            samples,
            t_c: charging_time(sol),
            e_max: max_energy(sol),
        })
    }

    /// One full period, or `8/Ω` on the separatrix.
    pub fn one_period(sol: &BoundLuminositySolution, samples: usize) -> Result<Self> {
        let t_end = charging_period(sol).unwrap_or(8.0 / sol.omega_big);
        Self::sample(sol, t_end, samples)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,E_B,P")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{}",
                number(s.t),
                number(s.energy),
                number(s.power)
            )?;
        }
        Ok(())
    }
}

/// How the coupling changes with `N` in a scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// `λ` fixed; `λ/λ_c` grows as `√N`.
    #[default]
    FixedLambda,
    /// `λ = r λ_c(N)` with `r` taken from the base parameters.
    FixedLambdaRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "Omega")]
    pub omega_big: f64,
    pub t_c: f64,
    pub e_max: f64,
    pub p_max: f64,
    /// Average charging power `e_max / t_c`.
    pub p_avg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFits {
    pub p_avg: PowerLawFit,
    pub p_max: PowerLawFit,
    pub t_c: PowerLawFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFailure {
    #[serde(rename = "N")]
    pub n: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub mode: SweepMode,
    pub k: f64,
    pub entries: Vec<ScalingEntry>,
    pub fits: ScalingFits,
    /// Requested `N` values that produced no solution.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<ScalingFailure>,
}

impl ScalingReport {
    pub fn exponent_p_avg(&self) -> f64 {
        self.fits.p_avg.exponent
    }

    pub fn exponent_p_max(&self) -> f64 {
        self.fits.p_max.exponent
    }

    pub fn exponent_tc(&self) -> f64 {
        self.fits.t_c.exponent
    }

    /// Smallest coefficient of determination among the three fits.
    pub fn min_r_squared(&self) -> f64 {
        self.fits
            .p_avg
            .r_squared
            .min(self.fits.p_max.r_squared)
            .min(self.fits.t_c.r_squared)
    }
}

/// Battery observables for one solution.
pub fn scaling_entry(sol: &BoundLuminositySolution) -> ScalingEntry {
    let t_c = charging_time(sol);
    let e_max = max_energy(sol);
    ScalingEntry {
        n: sol.params.n_tls(),
        omega_big: sol.omega_big,
        t_c,
        e_max,
        p_max: peak_power(sol),
        p_avg: e_max / t_c,
    }
}

/// Sweeps the number of two-level systems and fits power laws in `N` to the
/// average power, the peak power and the charging time.
///
/// `n_values` must be even; duplicates are removed. Entries whose parameters
/// admit no bound luminosity solution are listed in `failures` and left out
/// of the fits.
pub fn scaling_study(
    base: &ModelParams,
    n_values: &[u64],
    k: EllipticModulus,
    mode: SweepMode,
) -> Result<ScalingReport> {
    base.require_attractive()?;
    if let Some(odd) = n_values.iter().find(|n| **n == 0 || **n % 2 == 1) {
        return Err(Error::InvalidParams(format!(
            "sweep values of N must be positive and even (N = 2S), got {odd}"
        )));
    }
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            valid: ns.len(),
            required: MIN_FIT_POINTS,
            failures: vec![],
        });
    }
    let decades = (ns[ns.len() - 1] as f64 / ns[0] as f64).log10();
    if decades < MIN_SWEEP_DECADES - 1e-9 {
        return Err(Error::InvalidParams(format!(
            "sweep spans {decades:.3} decades of N, at least {MIN_SWEEP_DECADES} required"
        )));
    }
    let ratio = match mode {
        SweepMode::FixedLambda => None,
        SweepMode::FixedLambdaRatio => Some(base.coupling() / critical_coupling(base)?),
    };

    let results: Vec<std::result::Result<ScalingEntry, ScalingFailure>> = ns
        .par_iter()
        .map(|&n| {
            let solve = || -> Result<ScalingEntry> {
                let mut p = base.with_n_tls(n)?;
                if let Some(r) = ratio {
                    p = p.with_coupling(r * critical_coupling(&p)?)?;
                }
                Ok(scaling_entry(&build_solution(&p, k, Branch::Minus)?))
            };
            solve().map_err(|e| ScalingFailure {
                n,
                reason: e.to_string(),
            })
        })
        .collect();

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    if entries.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            valid: entries.len(),
            required: MIN_FIT_POINTS,
            failures: failures.into_iter().map(|f| (f.n, f.reason)).collect(),
        });
    }

    let ns: Vec<f64> = entries.iter().map(|e| e.n as f64).collect();
    let column = |f: fn(&ScalingEntry) -> f64| entries.iter().map(f).collect::<Vec<_>>();
    let fits = ScalingFits {
        p_avg: fit_power_law(&ns, &column(|e| e.p_avg))?,
        p_max: fit_power_law(&ns, &column(|e| e.p_max))?,
        t_c: fit_power_law(&ns, &column(|e| e.t_c))?,
    };
    Ok(ScalingReport {
        mode,
        k: k.value(),
        entries,
        fits,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::solve_omega;

    fn modulus(k: f64) -> EllipticModulus {
        EllipticModulus::new(k).unwrap()
    }

    fn reference(n: u64) -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.5, -1.0, n).unwrap()
    }

    fn solution(k: f64) -> BoundLuminositySolution {
        build_solution(&reference(100), modulus(k), Branch::Minus).unwrap()
    }

    #[test]
    fn discharged_at_origin() {
        for k in [0.3, 0.8, 1.0, 1.2, 2.0] {
            let sol = solution(k);
            assert!(
                battery_energy(&sol, 0.0).abs() <= 1e-12 * max_energy(&sol),
                "k = {k}"
            );
            assert!(charging_power(&sol, 0.0).abs() <= 1e-9 * max_energy(&sol) * sol.omega_big);
        }
    }

    #[test]
    fn reference_charge() {
        let sol = solution(0.8);
        let omega = solve_omega(&reference(100), modulus(0.8)).unwrap();
        let t_c = charging_time(&sol);
        assert!((t_c - 1.995_302_777_664_729 / omega).abs() < 1e-14);
        assert!((t_c - 0.16133).abs() < 1e-4, "{t_c}");
        let expected = 0.64 * omega * omega;
        assert!((max_energy(&sol) - expected).abs() < 1e-12 * expected);
        assert!((battery_energy(&sol, t_c) / expected - 1.0).abs() < 1e-9);
        assert!((expected - 97.9).abs() < 0.1);
        assert!(expected < 100.0);
        assert!(charging_power(&sol, t_c).abs() < 1e-9 * expected * omega);
    }

    #[test]
    fn small_modulus_charging_time() {
        let sol = solution(1e-4);
        let limit = std::f64::consts::FRAC_PI_2 / sol.omega_big;
        assert!((charging_time(&sol) / limit - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rotating_branch_table() {
        let sol = solution(1.5);
        let t_c = charging_time(&sol);
        let inv = modulus(1.0 / 1.5);
        assert!((t_c - complete_elliptic_k(inv).unwrap() / (1.5 * sol.omega_big)).abs() < 1e-15);
        let b = energy_scale(&sol);
        assert!((battery_energy(&sol, t_c) / b - 1.0).abs() < 1e-9);
        assert_eq!(max_energy(&sol), b);
    }

    #[test]
    fn separatrix_curve() {
        let sol = solution(1.0);
        assert_eq!(charging_time(&sol), 1.0 / sol.omega_big);
        let b = energy_scale(&sol);
        let mut last = -1.0;
        for i in 0..200 {
            let e = battery_energy(&sol, i as f64 * 0.05 / sol.omega_big);
            assert!(e >= last && e <= b);
            last = e;
        }
        assert!((battery_energy(&sol, 20.0 / sol.omega_big) / b - 1.0).abs() < 1e-12);
        let peak = peak_power(&sol);
        let brute = (0..10_000)
            .map(|i| charging_power(&sol, i as f64 * 1e-3 / sol.omega_big))
            .fold(0.0, f64::max);
        assert!((peak - brute).abs() < 1e-6 * peak);
    }

    #[test]
    fn energy_never_exceeds_full_charge() {
        for n in [2, 10, 100, 1000] {
            for k in [0.1, 0.5, 0.9, 1.0, 1.1, 2.0] {
                let Ok(sol) = build_solution(&reference(n), modulus(k), Branch::Minus) else {
                    continue;
                };
                let ceiling = 2.0 * sol.params.omega0() * sol.params.spin();
                assert!(max_energy(&sol) <= ceiling + 1e-9, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn peak_power_matches_dense_search() {
        for k in [0.5, 0.8, 1.2] {
            let sol = solution(k);
            let t_c = charging_time(&sol);
            let brute = (0..=20_000)
                .map(|i| charging_power(&sol, t_c * i as f64 / 20_000.0))
                .fold(f64::NEG_INFINITY, f64::max);
            let peak = peak_power(&sol);
            assert!(peak >= brute - 1e-12 * peak);
            assert!((peak - brute) / peak < 1e-7);
        }
    }

    #[test]
    fn curve_csv() {
        let curve = BatteryCurve::one_period(&solution(0.8), 10).unwrap();
        assert_eq!(curve.samples.len(), 11);
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,E_B,P\n0.0,"));
        assert_eq!(text.lines().count(), 12);
        assert!(BatteryCurve::sample(&solution(0.8), 0.0, 10).is_err());
    }

    #[test]
    fn sweep_validation() {
        let base = reference(100);
        let k = modulus(0.8);
        let mode = SweepMode::FixedLambda;
        assert!(matches!(
            scaling_study(&base, &[100, 200, 401, 800, 1600, 3200], k, mode),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            scaling_study(&base, &[100, 200, 400, 800], k, mode),
            Err(Error::InsufficientPoints { .. })
        ));
        assert!(matches!(
            scaling_study(&base, &[100, 120, 140, 160, 180, 200], k, mode),
            Err(Error::InvalidParams(_))
        ));
        let dup = scaling_study(&base, &[3200, 100, 200, 200, 400, 800, 1600], k, mode).unwrap();
        assert_eq!(dup.entries.len(), 6);
        assert!(dup.entries.windows(2).all(|w| w[0].n < w[1].n));
    }

    #[test]
    fn sweep_excludes_subcritical_points() {
        // λ = 0.08: λ_c(N) = 1/(2√N) exceeds it for N ≤ 38.
        let base = ModelParams::new(1.0, 1.0, 0.08, -1.0, 100).unwrap();
        let ns = [2, 4, 100, 200, 400, 800, 1600, 3200];
        let report = scaling_study(&base, &ns, modulus(0.8), SweepMode::FixedLambda).unwrap();
        assert_eq!(report.entries.len(), 6);
        assert_eq!(
            report.failures.iter().map(|f| f.n).collect::<Vec<_>>(),
            vec![2, 4]
        );
        let too_few = scaling_study(
            &base,
            &[2, 4, 6, 8, 100, 200],
            modulus(0.8),
            SweepMode::FixedLambda,
        );
        match too_few {
            Err(Error::InsufficientPoints {
                valid, failures, ..
            }) => {
                assert_eq!(valid, 2);
                assert_eq!(failures.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixed_ratio_mode_keeps_ratio() {
        let base = reference(100);
        let report = scaling_study(
            &base,
            &[100, 200, 400, 800, 1600, 3200],
            modulus(0.8),
            SweepMode::FixedLambdaRatio,
        )
        .unwrap();
        // Ω∞ ∝ λ√S is N-independent at fixed λ/λ_c; e_max ∝ Ω²/λ² grows as N.
        assert!(
            report.exponent_tc().abs() < 0.05,
            "{}",
            report.exponent_tc()
        );
        let e_fit = fit_power_law(
            &report
                .entries
                .iter()
                .map(|e| e.n as f64)
                .collect::<Vec<_>>(),
            &report.entries.iter().map(|e| e.e_max).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((e_fit.exponent - 1.0).abs() < 0.05);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["mode"], "fixed_lambda_ratio");
    }
}
