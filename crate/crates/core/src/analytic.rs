//! Closed-form "bound luminosity" solution of the reduced spin dynamics.
//!
//! With `a = 8ελ²/ω` the reduced equations conserve the LMG energy
//! `E = ω₀ Sz + (a/2) Sx²`, and `Sx` obeys
//!
//! ```text
//! Ṡx² = C + (aE − ω₀²) Sx² − (a²/4) Sx⁴ ≡ C − U(Sx)
//! ```
//!
//! which is solved by `Sx(t) = ± A dn(Ωt, k)` with amplitude
//! `A = ωΩ / (4λ²|ε|)`. The modulus `k` is the only free parameter: `Ω`
//! follows from the spin-length constraint, `E` from the `Sx²` coefficient
//! `(2 − k²)Ω² = aE − ω₀²`, and `C = (k² − 1) ω²Ω⁴ / (16ε²λ⁴)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::SpinVector;
use crate::elliptic::{jacobi_functions, EllipticModulus, ModulusRegime};
use crate::model::{critical_coupling, ModelParams};
use crate::{Error, Result};

/// Sign of `Sx(t) = ± A dn(Ωt, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    /// Negative `Sx`, positive field coordinate `q`.
    #[default]
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Position of the "energy" `C` relative to the barrier top of `U(Sx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialRegime {
    /// `C < 0`, `k < 1`: oscillation inside one well.
    BelowBarrier,
    /// `C = 0`, `k = 1`: the separatrix.
    AtBarrier,
    /// `C > 0`, `k > 1`: meandering over the barrier between both wells.
    AboveBarrier,
}

impl From<ModulusRegime> for PotentialRegime {
    fn from(r: ModulusRegime) -> Self {
        match r {
            ModulusRegime::Oscillating => PotentialRegime::BelowBarrier,
            ModulusRegime::Separatrix => PotentialRegime::AtBarrier,
            ModulusRegime::Rotating => PotentialRegime::AboveBarrier,
        }
    }
}

/// Roots of the quadratic in `x = Ω²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaRoots {
    /// Selected beat frequency `Ω > 0`.
    pub omega: f64,
    /// The other root `x` of the quadratic in `Ω²`, which is not used.
    pub discarded_root: f64,
}

/// Bound luminosity solution for one modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundLuminositySolution {
    pub k: EllipticModulus,
    /// Beat frequency `Ω`.
    pub omega_big: f64,
    /// LMG energy integral `E`.
    pub energy: f64,
    /// Integration constant `C` of the `Sx` equation.
    pub const_c: f64,
    pub branch: Branch,
    pub params: ModelParams,
    /// The unused root of the quadratic in `Ω²`.
    pub discarded_root: f64,
}

/// JSON summary of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub k: f64,
    #[serde(rename = "Omega")]
    pub omega_big: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "C")]
    pub const_c: f64,
    pub lambda_c: f64,
    pub regime: PotentialRegime,
    pub amplitude: f64,
}

fn check_modulus(k: EllipticModulus) -> Result<f64> {
    let k = k.value();
    if k <= 0.0 {
        return Err(Error::InfeasibleModulus {
            k,
            reason: "the modulus must be positive".into(),
        });
    }
    Ok(k)
}

fn check_supercritical(p: &ModelParams) -> Result<()> {
    if p.epsilon() >= 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "the bound luminosity state needs epsilon < 0, got {}",
            p.epsilon()
        )));
    }
    let lambda_c = critical_coupling(p)?;
    if p.coupling() <= lambda_c {
        return Err(Error::NoRealSolution {
            lambda: p.coupling(),
            lambda_c,
        });
    }
    Ok(())
}

/// Coefficients `(a, b, c)` of `a x² + b x + c = 0`, `x = Ω²`, obtained by
/// multiplying the frequency equation by `k⁴`.
fn quadratic(p: &ModelParams, k: f64) -> (f64, f64, f64) {
    let w02 = p.omega0() * p.omega0();
    let k2 = k * k;
    let lam2 = p.coupling() * p.coupling();
    let drive = 64.0 * p.epsilon() * p.epsilon() * lam2 * lam2 * w02 * p.spin() * p.spin()
        / (p.omega() * p.omega());
    (k2 * k2, 2.0 * w02 * (2.0 - k2), w02 * w02 - drive)
}

/// Both roots of the frequency equation and the selected `Ω`.
pub fn solve_omega_roots(p: &ModelParams, k: EllipticModulus) -> Result<OmegaRoots> {
    check_supercritical(p)?;
    let kv = check_modulus(k)?;
    let (a, b, c) = quadratic(p, kv);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::InfeasibleModulus {
            k: kv,
            reason: "no real root for Omega^2".into(),
        });
    }
    // Cancellation-free pair of roots.
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (x1, x2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    let x_inf = omega_asymptotic(p, k)?.powi(2);
    let (chosen, other) = match (x1 > 0.0, x2 > 0.0) {
        (true, false) => (x1, x2),
        (false, true) => (x2, x1),
        (true, true) if (x1 - x_inf).abs() <= (x2 - x_inf).abs() => (x1, x2),
        (true, true) => (x2, x1),
        (false, false) => {
            return Err(Error::InfeasibleModulus {
                k: kv,
                reason: "no positive root for Omega^2".into(),
            })
        }
    };
    Ok(OmegaRoots {
        omega: chosen.sqrt(),
        discarded_root: other,
    })
}

/// Beat frequency `Ω(k)`, the positive root of
/// `Ω⁴ + 2ω₀²Ω²(2 − k²)/k⁴ − 64ε²λ⁴ω₀²S²/(k⁴ω²) + ω₀⁴/k⁴ = 0`.
pub fn solve_omega(p: &ModelParams, k: EllipticModulus) -> Result<f64> {
    solve_omega_roots(p, k).map(|r| r.omega)
}

/// Residual of the frequency equation at `omega_big`, relative to its
/// largest term.
pub fn omega_residual(p: &ModelParams, k: EllipticModulus, omega_big: f64) -> f64 {
    let k4 = k.value().powi(4);
    let (_, b, c) = quadratic(p, k.value());
    let x = omega_big * omega_big;
    let terms = [
        x * x,
        b * x / k4,
        p.omega0().powi(4) / k4,
        (c - p.omega0().powi(4)) / k4,
    ];
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    sum.abs() / scale
}

/// Large-`S` asymptote `Ω∞ = (2√2 λ / k) sqrt(|ε| ω₀ S / ω)`.
pub fn omega_asymptotic(p: &ModelParams, k: EllipticModulus) -> Result<f64> {
    if p.epsilon() >= 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "the asymptotic frequency needs epsilon < 0, got {}",
            p.epsilon()
        )));
    }
    let k = check_modulus(k)?;
    Ok(2.0 * std::f64::consts::SQRT_2 * p.coupling() / k
        * (p.epsilon().abs() * p.omega0() * p.spin() / p.omega()).sqrt())
}

/// Builds and checks the solution for modulus `k` on the given branch.
pub fn build_solution(
    p: &ModelParams,
    k: EllipticModulus,
    branch: Branch,
) -> Result<BoundLuminositySolution> {
    p.require_attractive()?;
    let roots = solve_omega_roots(p, k)?;
    BoundLuminositySolution::from_omega(p, k, branch, roots.omega, roots.discarded_root)
}

impl BoundLuminositySolution {
    /// Assembles a solution around a given `Ω` without solving for it.
    ///
    /// `E` and `C` are derived from `(k, Ω)`; the amplitude bound `A ≤ S` is
    /// enforced but the frequency equation is not, so perturbed `Ω` values can
    /// be studied.
    pub fn from_omega(
        p: &ModelParams,
        k: EllipticModulus,
        branch: Branch,
        omega_big: f64,
        discarded_root: f64,
    ) -> Result<Self> {
        p.require_attractive()?;
        let kv = check_modulus(k)?;
        let k2 = kv * kv;
        let lam2 = p.coupling() * p.coupling();
        let w2 = omega_big * omega_big;
        let energy =
            p.omega() * ((2.0 - k2) * w2 + p.omega0() * p.omega0()) / (8.0 * p.epsilon() * lam2);
        let const_c = (k2 - 1.0) * p.omega() * p.omega() * w2 * w2
            / (16.0 * p.epsilon() * p.epsilon() * lam2 * lam2);
        let sol = Self {
            k,
            omega_big,
            energy,
            const_c,
            branch,
            params: *p,
            discarded_root,
        };
        let amplitude = sol.amplitude();
        if amplitude > p.spin() * (1.0 + 1e-12) {
            return Err(Error::InfeasibleModulus {
                k: kv,
                reason: format!("amplitude {amplitude} exceeds the spin length {}", p.spin()),
            });
        }
        Ok(sol)
    }

    /// `A = ωΩ / (4λ²|ε|)`, the largest `|Sx|` along the solution.
    pub fn amplitude(&self) -> f64 {
        let p = &self.params;
        p.omega() * self.omega_big / (4.0 * p.coupling() * p.coupling() * p.epsilon().abs())
    }

    pub fn regime(&self) -> PotentialRegime {
        self.k.regime().into()
    }

    /// Beat period `2K(k)/Ω` for `k < 1`, `2K(1/k)/(Ωk)` for `k > 1`
    /// (the period of `dn`); `None` on the separatrix.
    pub fn period(&self) -> Option<f64> {
        use crate::elliptic::complete_elliptic_k;
        let k = self.k.value();
        match self.k.regime() {
            ModulusRegime::Oscillating => complete_elliptic_k(self.k)
                .ok()
                .map(|q| 2.0 * q / self.omega_big),
            ModulusRegime::Rotating => self
                .k
                .reciprocal()
                .and_then(complete_elliptic_k)
                .ok()
                .map(|q| 2.0 * q / (self.omega_big * k)),
            ModulusRegime::Separatrix => None,
        }
    }

    /// Period of `Sx(t)` itself: equal to [`period`](Self::period) for
    /// `k < 1`, twice it for `k > 1` where `Sx` changes sign.
    pub fn sx_period(&self) -> Option<f64> {
        let t = self.period()?;
        Some(match self.k.regime() {
            ModulusRegime::Rotating => 2.0 * t,
            _ => t,
        })
    }

    /// `(Sx, Ṡx)` at time `t`.
    pub fn sx_and_rate(&self, t: f64) -> (f64, f64) {
        let amp = self.branch.sign() * self.amplitude();
        let j = jacobi_functions(self.omega_big * t, self.k)
            .expect("phase is finite for finite t and a valid solution");
        (amp * j.dn, amp * self.omega_big * j.dn_derivative(self.k))
    }

    /// Spin vector at time `t`: `Sx = ±A dn(Ωt, k)`, `Sy = −Ṡx/ω₀`,
    /// `Sz = (E − (4ελ²/ω) Sx²)/ω₀`.
    pub fn spin_at(&self, t: f64) -> SpinVector {
        let p = &self.params;
        let (sx, rate) = self.sx_and_rate(t);
        SpinVector {
            sx,
            sy: -rate / p.omega0(),
            sz: (self.energy - 0.5 * p.lmg_rate() * sx * sx) / p.omega0(),
        }
    }

    /// Effective double-well potential
    /// `U(Sx) = −(8ελ²E/ω − ω₀²) Sx² + (16ε²λ⁴/ω²) Sx⁴`.
    ///
    /// Physical for `|Sx| ≤ S` only.
    pub fn potential(&self, sx: f64) -> f64 {
        let p = &self.params;
        let a = p.lmg_rate();
        let s2 = sx * sx;
        -(a * self.energy - p.omega0() * p.omega0()) * s2 + 0.25 * a * a * s2 * s2
    }

    /// `|Sx|` at the two minima of [`potential`](Self::potential).
    pub fn potential_minimum(&self) -> f64 {
        let p = &self.params;
        let a = p.lmg_rate();
        (2.0 * (a * self.energy - p.omega0() * p.omega0()) / (a * a))
            .max(0.0)
            .sqrt()
    }

    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            k: self.k.value(),
            omega_big: self.omega_big,
            energy: self.energy,
            const_c: self.const_c,
            lambda_c: critical_coupling(&self.params).unwrap_or(f64::NAN),
            regime: self.regime(),
            amplitude: self.amplitude(),
        }
    }
}

/// Spin vector of the solution at time `t`.
pub fn spin_trajectory(sol: &BoundLuminositySolution, t: f64) -> SpinVector {
    sol.spin_at(t)
}

/// `U(Sx)` of the solution's effective potential.
pub fn effective_potential(sol: &BoundLuminositySolution, sx: f64) -> f64 {
    sol.potential(sx)
}
