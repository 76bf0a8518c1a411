//! Semiclassical equations of motion.
//!
//! Three systems are provided:
//!
//! * the full five-variable condensate–superspin system in `(q, p, Sx, Sy, Sz)`,
//! * the reduced spin system obtained when the field coordinate follows
//!   `q ≈ −2√2 λ Sx / ω`, `p ≈ 0` adiabatically; it is generated by the LMG
//!   Hamiltonian `ω₀ Sz + (4ελ²/ω) Sx²`,
//! * the same reduced dynamics (Dicke case `ε = −1` only) in the canonical
//!   coordinates `Q = 2 Sz = 2S cos θ`, `φ = atan2(Sy, Sx)`.

mod integrator;
mod trajectory;

pub use integrator::{Dopri5, IntegratorStats};
pub use trajectory::{integrate, Diagnostics, IntegrationOptions, State, SystemKind, Trajectory};

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::{Error, Result};

/// Point of the full phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    /// Field coordinate `(a + a†)/√2`.
    pub q: f64,
    /// Field momentum `i(a† − a)/√2`.
    pub p: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

/// Superspin of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

/// Canonical pair `(Q, φ)` with `Q = 2S cos θ = 2 Sz`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CanonicalSpin {
    pub big_q: f64,
    pub phi: f64,
}

/// What to do with the azimuth at the poles, where it is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoleConvention {
    #[default]
    Error,
    /// Use `φ = 0`.
    ZeroAngle,
}

impl PhaseState {
    pub fn spin(&self) -> SpinVector {
        SpinVector {
            sx: self.sx,
            sy: self.sy,
            sz: self.sz,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.q, self.p, self.sx, self.sy, self.sz]
    }

    pub fn from_array(y: [f64; 5]) -> Self {
        Self {
            q: y[0],
            p: y[1],
            sx: y[2],
            sy: y[3],
            sz: y[4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Places the field at the bottom of its parabolic well for the given spin:
    /// `q = −2√2 λ Sx / ω`, `p = 0`.
    pub fn adiabatic(spin: SpinVector, params: &ModelParams) -> Self {
        Self {
            q: -2.0 * SQRT_2 * params.coupling() * spin.sx / params.omega(),
            p: 0.0,
            sx: spin.sx,
            sy: spin.sy,
            sz: spin.sz,
        }
    }
}

impl SpinVector {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Self {
        Self { sx, sy, sz }
    }

    pub fn norm_squared(&self) -> f64 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.sx, self.sy, self.sz]
    }

    pub fn from_array(y: [f64; 3]) -> Self {
        Self {
            sx: y[0],
            sy: y[1],
            sz: y[2],
        }
    }
}

impl CanonicalSpin {
    pub fn to_array(self) -> [f64; 2] {
        [self.big_q, self.phi]
    }

    pub fn from_array(y: [f64; 2]) -> Self {
        Self {
            big_q: y[0],
            phi: y[1],
        }
    }
}

/// Time derivative of the full system.
pub fn full_rhs(s: &PhaseState, params: &ModelParams) -> PhaseState {
    let (omega, omega0, lambda) = (params.omega(), params.omega0(), params.coupling());
    let field = 2.0 * SQRT_2 * lambda;
    let direct = (1.0 + params.epsilon()) * 8.0 * lambda * lambda / omega;
    PhaseState {
        sx: -omega0 * s.sy,
        sy: omega0 * s.sx - field * s.q * s.sz - direct * s.sx * s.sz,
        sz: field * s.q * s.sy + direct * s.sx * s.sy,
        q: omega * s.p,
        p: -omega * s.q - field * s.sx,
    }
}

/// Time derivative of the reduced spin system.
pub fn reduced_rhs(s: &SpinVector, params: &ModelParams) -> SpinVector {
    let a = params.lmg_rate();
    SpinVector {
        sx: -params.omega0() * s.sy,
        sy: params.omega0() * s.sx - a * s.sx * s.sz,
        sz: a * s.sx * s.sy,
    }
}

/// Time derivative of the reduced Dicke (`ε = −1`) system in `(Q, φ)`.
///
/// ```text
/// dQ/dt = −(2λ²/ω) (4S² − Q²) sin 2φ
/// dφ/dt = ω₀ + (4λ²/ω) Q cos² φ
/// ```
///
/// This is the exact image of [`reduced_rhs`] under `Q = 2 Sz`,
/// `φ = atan2(Sy, Sx)`, i.e. Hamilton's equations of
/// `ω₀ Q/2 − (4λ²/ω)(S² − Q²/4) cos² φ` with `{φ, Q/2} = 1`.
pub fn qphi_rhs(s: &CanonicalSpin, params: &ModelParams) -> Result<CanonicalSpin> {
    require_dicke(params)?;
    let rate = params.coupling() * params.coupling() / params.omega();
    let four_s2 = 4.0 * params.spin() * params.spin();
    let cos = s.phi.cos();
    Ok(CanonicalSpin {
        big_q: -2.0 * rate * (four_s2 - s.big_q * s.big_q) * (2.0 * s.phi).sin(),
        phi: params.omega0() + 4.0 * rate * s.big_q * cos * cos,
    })
}

pub(crate) fn require_dicke(params: &ModelParams) -> Result<()> {
    if params.epsilon() != -1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "the (Q, phi) system is only defined for the Dicke case epsilon = -1, got {}",
            params.epsilon()
        )));
    }
    Ok(())
}

/// Maps a spin of length `spin` to `(Q, φ)`.
pub fn spin_to_canonical(
    s: &SpinVector,
    spin: f64,
    convention: PoleConvention,
) -> Result<CanonicalSpin> {
    let norm = s.norm();
    if (norm - spin).abs() > 1e-9 * spin.max(1.0) {
        return Err(Error::Domain(format!(
            "spin vector has length {norm}, expected {spin}"
        )));
    }
    let phi = if s.sx == 0.0 && s.sy == 0.0 {
        match convention {
            PoleConvention::Error => return Err(Error::PoleSingularity),
            PoleConvention::ZeroAngle => 0.0,
        }
    } else {
        s.sy.atan2(s.sx)
    };
    let cos_theta = (s.sz / spin).clamp(-1.0, 1.0);
    Ok(CanonicalSpin {
        big_q: 2.0 * spin * cos_theta,
        phi,
    })
}

/// Inverse of [`spin_to_canonical`].
pub fn canonical_to_spin(c: &CanonicalSpin, spin: f64) -> Result<SpinVector> {
    if c.big_q.abs() > 2.0 * spin * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "|Q| = {} exceeds 2S = {}",
            c.big_q.abs(),
            2.0 * spin
        )));
    }
    let sz = 0.5 * c.big_q;
    let sin_theta = ((spin - sz) * (spin + sz)).max(0.0).sqrt();
    let (sin_phi, cos_phi) = c.phi.sin_cos();
    Ok(SpinVector {
        sx: sin_theta * cos_phi,
        sy: sin_theta * sin_phi,
        sz,
    })
}

/// Full-system energy `ω(q² + p²)/2 + ω₀ Sz + 2√2 λ q Sx + (1+ε)(4λ²/ω) Sx²`.
pub fn full_energy(s: &PhaseState, params: &ModelParams) -> f64 {
    let (omega, lambda) = (params.omega(), params.coupling());
    0.5 * omega * (s.q * s.q + s.p * s.p)
        + params.omega0() * s.sz
        + 2.0 * SQRT_2 * lambda * s.q * s.sx
        + (1.0 + params.epsilon()) * 4.0 * lambda * lambda / omega * s.sx * s.sx
}

/// LMG energy `ω₀ Sz + (4ελ²/ω) Sx²`.
pub fn lmg_energy(s: &SpinVector, params: &ModelParams) -> f64 {
    params.omega0() * s.sz + 0.5 * params.lmg_rate() * s.sx * s.sx
}

/// LMG energy written in `(Q, φ)`.
pub fn canonical_energy(c: &CanonicalSpin, params: &ModelParams) -> f64 {
    let spin = params.spin();
    let cos = c.phi.cos();
    params.omega0() * 0.5 * c.big_q
        + params.lmg_rate() * 0.5 * (spin * spin - 0.25 * c.big_q * c.big_q) * cos * cos
}
