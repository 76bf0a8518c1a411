//! Complete elliptic integral of the first kind and the Jacobi elliptic
//! functions.
//!
//! **Argument convention.** Every function here takes the Jacobi *modulus*
//! `k`, never the parameter `m = k²`. Libraries differ on this point (Cephes,
//! Boost and SciPy use `m`); `dn(u, k)` in this crate is `dn(u | m = k²)`
//! elsewhere.
//!
//! Moduli `k > 1` are first-class inputs. They are mapped onto `1/k < 1` with
//! the reciprocal-modulus transformation
//!
//! ```text
//! sn(u, k) = sn(uk, 1/k) / k,   cn(u, k) = dn(uk, 1/k),   dn(u, k) = cn(uk, 1/k)
//! ```
//!
//! and moduli within [`SEPARATRIX_WINDOW`] of one use the hyperbolic limits
//! `(tanh u, sech u, sech u)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Half-width of the window around `k = 1` treated as the separatrix.
pub const SEPARATRIX_WINDOW: f64 = 1e-12;

/// The descending Landen sequence stops once its modulus drops below this.
const LANDEN_TOLERANCE: f64 = 1e-15;

const MAX_AGM_ITERATIONS: usize = 64;

/// Jacobi modulus `k ≥ 0` (not the parameter `m = k²`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EllipticModulus(f64);

/// Qualitative regime selected by the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusRegime {
    /// `k < 1`: oscillation inside one well, `dn`-type.
    Oscillating,
    /// `|k − 1| ≤ 1e−12`: the separatrix, `sech`-type.
    Separatrix,
    /// `k > 1`: meandering between wells, `cn`-type.
    Rotating,
}

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Domain(format!("modulus must be finite, got {k}")));
        }
        if k < 0.0 {
            return Err(Error::Domain(format!(
                "modulus must be non-negative, got {k}"
            )));
        }
        Ok(Self(k))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn regime(self) -> ModulusRegime {
        if (self.0 - 1.0).abs() <= SEPARATRIX_WINDOW {
            ModulusRegime::Separatrix
        } else if self.0 < 1.0 {
            ModulusRegime::Oscillating
        } else {
            ModulusRegime::Rotating
        }
    }

    /// Complementary modulus `k' = sqrt(1 − k²)`, zero for `k ≥ 1`.
    pub fn complementary(self) -> f64 {
        complementary(self.0)
    }

    /// The reciprocal modulus `1/k`.
    pub fn reciprocal(self) -> Result<Self> {
        if self.0 == 0.0 {
            return Err(Error::Domain("reciprocal of zero modulus".into()));
        }
        Ok(Self(1.0 / self.0))
    }
}

impl TryFrom<f64> for EllipticModulus {
    type Error = Error;

    fn try_from(k: f64) -> Result<Self> {
        Self::new(k)
    }
}

impl From<EllipticModulus> for f64 {
    fn from(k: EllipticModulus) -> f64 {
        k.0
    }
}

/// Values of `sn`, `cn` and `dn` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

impl JacobiTriple {
    /// `d dn / du = −k² sn cn`, valid for every modulus regime.
    pub fn dn_derivative(&self, k: EllipticModulus) -> f64 {
        -k.value() * k.value() * self.sn * self.cn
    }
}

fn complementary(k: f64) -> f64 {
    // (1 − k)(1 + k) avoids cancellation close to k = 1.
    ((1.0 - k) * (1.0 + k)).max(0.0).sqrt()
}

/// Arithmetic–geometric mean of two non-negative numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..MAX_AGM_ITERATIONS {
        if (a - b).abs() <= f64::EPSILON * a.abs() {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Quarter period `K(k) = π / (2 agm(1, sqrt(1 − k²)))` for `0 ≤ k < 1`.
pub fn complete_elliptic_k(k: EllipticModulus) -> Result<f64> {
    let k = k.value();
    if k >= 1.0 {
        return Err(Error::Domain(format!(
            "complete elliptic integral K(k) diverges for k >= 1, got k = {k}"
        )));
    }
    Ok(FRAC_PI_2 / agm(1.0, complementary(k)))
}

/// Jacobi elliptic functions `sn(u, k)`, `cn(u, k)`, `dn(u, k)`.
pub fn jacobi_functions(u: f64, k: EllipticModulus) -> Result<JacobiTriple> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("phase must be finite, got {u}")));
    }
    Ok(match k.regime() {
        ModulusRegime::Separatrix => {
            let sech = 1.0 / u.cosh();
            JacobiTriple {
                sn: u.tanh(),
                cn: sech,
                dn: sech,
            }
        }
        ModulusRegime::Oscillating => landen(u, k.value()),
        ModulusRegime::Rotating => {
            let k = k.value();
            let inner = landen(u * k, 1.0 / k);
            JacobiTriple {
                sn: inner.sn / k,
                cn: inner.dn,
                dn: inner.cn,
            }
        }
    })
}

/// Descending Landen (AGM) evaluation for `0 ≤ k < 1`.
fn landen(u: f64, k: f64) -> JacobiTriple {
    if k < LANDEN_TOLERANCE {
        return JacobiTriple {
            sn: u.sin(),
            cn: u.cos(),
            dn: 1.0,
        };
    }

    let mut a = [0.0; MAX_AGM_ITERATIONS + 1];
    let mut c = [0.0; MAX_AGM_ITERATIONS + 1];
    a[0] = 1.0;
    c[0] = k;
    let mut b = complementary(k);
    let mut n = 0;
    while c[n].abs() >= LANDEN_TOLERANCE && n < MAX_AGM_ITERATIONS {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }

    let mut phi = a[n] * u * (n as f64).exp2();
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }

    let (sn, cn) = phi.sin_cos();
    // dn² = k'² + k² cn² has no cancellation, unlike 1 − k² sn² or the
    // cos φ₀ / cos(φ₁ − φ₀) form, which is 0/0 at odd multiples of K.
    let kc = complementary(k);
    let dn = (kc * kc + k * k * cn * cn).sqrt();
    JacobiTriple { sn, cn, dn }
}
