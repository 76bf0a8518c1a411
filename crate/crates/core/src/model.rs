//! Parameters of the extended Dicke model
//!
//! ```text
//! H = ω a†a + ω₀ Sz + 2λ (a† + a) Sx + (1 + ε)(4λ²/ω) Sx²
//! ```
//!
//! and the structural quantities that follow from them: the critical coupling,
//! the phase and the fixed points of the semiclassical flow.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::PhaseState;
use crate::{Error, Result};

/// Physical constants of the model. `spin` is the total superspin `S = N/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct ModelParams {
    omega: f64,
    omega0: f64,
    coupling: f64,
    epsilon: f64,
    spin: f64,
}

/// JSON form of [`ModelParams`]: `{omega, omega0, lambda, epsilon, N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub omega: f64,
    pub omega0: f64,
    pub lambda: f64,
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: u64,
}

impl TryFrom<ModelConfig> for ModelParams {
    type Error = Error;

    fn try_from(c: ModelConfig) -> Result<Self> {
        ModelParams::new(c.omega, c.omega0, c.lambda, c.epsilon, c.n)
    }
}

impl From<ModelParams> for ModelConfig {
    fn from(p: ModelParams) -> Self {
        ModelConfig {
            omega: p.omega,
            omega0: p.omega0,
            lambda: p.coupling,
            epsilon: p.epsilon,
            n: p.n_tls(),
        }
    }
}

impl ModelParams {
    /// Builds parameters for `n_tls` two-level systems (`S = n_tls / 2`).
    pub fn new(omega: f64, omega0: f64, coupling: f64, epsilon: f64, n_tls: u64) -> Result<Self> {
        if n_tls == 0 {
            return Err(Error::InvalidParams(
                "the number of two-level systems must be positive".into(),
            ));
        }
        Self::with_spin(omega, omega0, coupling, epsilon, 0.5 * n_tls as f64)
    }

    /// Builds parameters from the superspin `S`, which must be a positive
    /// half-integer.
    pub fn with_spin(
        omega: f64,
        omega0: f64,
        coupling: f64,
        epsilon: f64,
        spin: f64,
    ) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("omega", omega)?;
        positive("omega0", omega0)?;
        positive("spin", spin)?;
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "coupling lambda must be non-negative and finite, got {coupling}"
            )));
        }
        if !epsilon.is_finite() {
            return Err(Error::InvalidParams(format!(
                "epsilon must be finite, got {epsilon}"
            )));
        }
        if (2.0 * spin).fract() != 0.0 {
            return Err(Error::InvalidParams(format!(
                "spin must be a half-integer (2S = N two-level systems), got {spin}"
            )));
        }
        Ok(Self {
            omega,
            omega0,
            coupling,
            epsilon,
            spin,
        })
    }

    /// Cavity frequency `ω`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Two-level splitting `ω₀`.
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Coupling `λ`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Direct-interaction parameter `ε` (`ε = −1` is the ordinary Dicke model).
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Total superspin `S = N/2`.
    pub fn spin(&self) -> f64 {
        self.spin
    }

    pub fn n_tls(&self) -> u64 {
        (2.0 * self.spin).round() as u64
    }

    /// `8ελ²/ω`, the nonlinearity of the reduced (LMG) spin equations.
    pub fn lmg_rate(&self) -> f64 {
        8.0 * self.epsilon * self.coupling * self.coupling / self.omega
    }

    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        Self::with_spin(self.omega, self.omega0, coupling, self.epsilon, self.spin)
    }

    pub fn with_n_tls(&self, n_tls: u64) -> Result<Self> {
        Self::new(self.omega, self.omega0, self.coupling, self.epsilon, n_tls)
    }

    /// Checks `−1 ≤ ε < 0`, the range in which the superradiant condensate
    /// and the bound luminosity state exist.
    pub fn require_attractive(&self) -> Result<()> {
        if (-1.0..0.0).contains(&self.epsilon) {
            Ok(())
        } else {
            Err(Error::UnsupportedRegime(format!(
                "bound luminosity and battery quantities need -1 <= epsilon < 0, got {}",
                self.epsilon
            )))
        }
    }
}

/// `λ_c = sqrt(ω ω₀ / (8 S |ε|))`.
pub fn critical_coupling(p: &ModelParams) -> Result<f64> {
    if p.epsilon == 0.0 {
        return Err(Error::DegenerateModel);
    }
    Ok((p.omega * p.omega0 / (8.0 * p.spin * p.epsilon.abs())).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Normal,
    Superradiant,
}

/// Superradiant iff `λ > λ_c`; the boundary itself counts as normal.
pub fn classify_phase(p: &ModelParams) -> Phase {
    match critical_coupling(p) {
        Ok(lambda_c) if p.coupling > lambda_c => Phase::Superradiant,
        _ => Phase::Normal,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    NormalPole,
    /// `q > 0`, `Sx < 0`.
    SuperradiantPlus,
    /// `q < 0`, `Sx > 0`.
    SuperradiantMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub state: PhaseState,
    pub kind: FixedPointKind,
}

/// Fixed points of the full semiclassical flow.
///
/// The two poles `Sz = ±S` always exist. Above the critical coupling the
/// superradiant pair appears with
///
/// ```text
/// Sz = ω ω₀ / (8 ε λ²),   Sx = ∓R,   q = ±(2√2 λ/ω) R,   R = sqrt(S² − Sz²)
/// ```
pub fn fixed_points(p: &ModelParams) -> Vec<FixedPoint> {
    let pole = |sz| FixedPoint {
        state: PhaseState {
            q: 0.0,
            p: 0.0,
            sx: 0.0,
            sy: 0.0,
            sz,
        },
        kind: FixedPointKind::NormalPole,
    };
    let mut points = vec![pole(p.spin), pole(-p.spin)];
    if classify_phase(p) == Phase::Superradiant {
        let sz = p.omega * p.omega0 / (8.0 * p.epsilon * p.coupling * p.coupling);
        let r = ((p.spin - sz) * (p.spin + sz)).max(0.0).sqrt();
        let q = 2.0 * SQRT_2 * p.coupling / p.omega * r;
        for (sign, kind) in [
            (1.0, FixedPointKind::SuperradiantPlus),
            (-1.0, FixedPointKind::SuperradiantMinus),
        ] {
            points.push(FixedPoint {
                state: PhaseState {
                    q: sign * q,
                    p: 0.0,
                    sx: -sign * r,
                    sy: 0.0,
                    sz,
                },
                kind,
            });
        }
    }
    points
}
