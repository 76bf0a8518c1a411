use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{
    canonical_energy, canonical_to_spin, full_energy, full_rhs, lmg_energy, qphi_rhs, reduced_rhs,
    require_dicke, CanonicalSpin, Dopri5, IntegratorStats, PhaseState, SpinVector,
};
use crate::format::number;
use crate::model::ModelParams;
use crate::{Error, Result};

/// Which equation system to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Full,
    Reduced,
    QPhi,
}

/// A state of any of the three systems; the variant selects the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase")]
pub enum State {
    Full(PhaseState),
    Reduced(SpinVector),
    QPhi(CanonicalSpin),
}

impl State {
    pub fn kind(&self) -> SystemKind {
        match self {
            State::Full(_) => SystemKind::Full,
            State::Reduced(_) => SystemKind::Reduced,
            State::QPhi(_) => SystemKind::QPhi,
        }
    }

    /// The superspin carried by this state (mapped back for `(Q, φ)`).
    pub fn spin(&self, spin_length: f64) -> SpinVector {
        match self {
            State::Full(s) => s.spin(),
            State::Reduced(s) => *s,
            State::QPhi(c) => canonical_to_spin(c, spin_length).unwrap_or_else(|_| {
                // |Q| drifted past 2S by rounding; clamp onto the pole.
                SpinVector::new(0.0, 0.0, c.big_q.signum() * spin_length)
            }),
        }
    }
}

/// Conserved-quantity monitors at one output sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Full-system energy, or the LMG energy for the reduced and `(Q, φ)` systems.
    pub energy: f64,
    pub spin_norm2: f64,
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub t_end: f64,
    pub dt_out: f64,
    pub tol: f64,
}

impl IntegrationOptions {
    pub fn new(t_end: f64, dt_out: f64, tol: f64) -> Result<Self> {
        let opts = Self { t_end, dt_out, tol };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Domain(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.dt_out.is_finite() && self.dt_out > 0.0) {
            return Err(Error::Domain(format!(
                "dt_out must be positive, got {}",
                self.dt_out
            )));
        }
        if !(1e-13..=1e-3).contains(&self.tol) {
            return Err(Error::Domain(format!(
                "tolerance must lie in [1e-13, 1e-3], got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Uniform output grid `0, dt_out, 2 dt_out, … ≤ t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let count = (self.t_end / self.dt_out + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| i as f64 * self.dt_out)
            .filter(|&t| t <= self.t_end)
            .collect()
    }
}

/// Sampled solution of one integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: SystemKind,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub diagnostics: Vec<Diagnostics>,
    /// Total spin `S` of the model that produced the trajectory.
    pub spin: f64,
    #[serde(skip)]
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Superspin at every sample.
    pub fn spins(&self) -> Vec<SpinVector> {
        self.states.iter().map(|s| s.spin(self.spin)).collect()
    }

    /// `max |Sx² + Sy² + Sz² − S²| / S²` over the samples.
    pub fn spin_norm_drift(&self) -> f64 {
        let s2 = self.spin * self.spin;
        self.diagnostics
            .iter()
            .map(|d| (d.spin_norm2 - s2).abs() / s2)
            .fold(0.0, f64::max)
    }

    /// `max |H(t) − H(0)| / |H(0)|` over the samples; absolute when `H(0) = 0`.
    pub fn energy_drift(&self) -> f64 {
        let Some(first) = self.diagnostics.first() else {
            return 0.0;
        };
        let scale = if first.energy == 0.0 {
            1.0
        } else {
            first.energy.abs()
        };
        self.diagnostics
            .iter()
            .map(|d| (d.energy - first.energy).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn csv_header(&self) -> &'static str {
        match self.kind {
            SystemKind::Full => "t,q,p,sx,sy,sz,H,spin_norm2",
            SystemKind::Reduced => "t,sx,sy,sz,H_lmg,spin_norm2",
            SystemKind::QPhi => "t,Q,phi,sx,sy,sz,H_lmg,spin_norm2",
        }
    }

    /// Writes the header line and one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        for ((t, state), diag) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            let mut row = vec![number(*t)];
            match state {
                State::Full(s) => row.extend(s.to_array().map(number)),
                State::Reduced(s) => row.extend(s.to_array().map(number)),
                State::QPhi(c) => {
                    row.extend(c.to_array().map(number));
                    row.extend(state.spin(self.spin).to_array().map(number));
                }
            }
            row.push(number(diag.energy));
            row.push(number(diag.spin_norm2));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrates the system selected by the variant of `initial` on the uniform
/// output grid of `opts`.
///
/// The step error is controlled with `rtol = tol` and
/// `atol = tol · max(1, ‖y₀‖∞)`; output samples come from the dense
/// interpolant, so the step sequence does not depend on `dt_out`.
pub fn integrate(
    initial: State,
    params: &ModelParams,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let times = opts.sample_times();
    let mut out = Trajectory {
        kind: initial.kind(),
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        diagnostics: Vec::with_capacity(times.len()),
        spin: params.spin(),
        stats: IntegratorStats::default(),
    };

    let stats = match initial {
        State::Full(s0) => {
            let y0 = s0.to_array();
            solver(&y0, opts).solve(
                |y| full_rhs(&PhaseState::from_array(*y), params).to_array(),
                y0,
                opts.t_end,
                &times,
                |t, y| {
                    let s = PhaseState::from_array(*y);
                    out.push(
                        t,
                        State::Full(s),
                        full_energy(&s, params),
                        s.spin().norm_squared(),
                    );
                },
            )?
        }
        State::Reduced(s0) => {
            if params.epsilon() >= 0.0 {
                return Err(Error::UnsupportedRegime(format!(
                    "the reduced spin system requires epsilon < 0, got {}",
                    params.epsilon()
                )));
            }
            let y0 = s0.to_array();
            solver(&y0, opts).solve(
                |y| reduced_rhs(&SpinVector::from_array(*y), params).to_array(),
                y0,
                opts.t_end,
                &times,
                |t, y| {
                    let s = SpinVector::from_array(*y);
                    out.push(
                        t,
                        State::Reduced(s),
                        lmg_energy(&s, params),
                        s.norm_squared(),
                    );
                },
            )?
        }
        State::QPhi(c0) => {
            require_dicke(params)?;
            let y0 = c0.to_array();
            let spin = params.spin();
            solver(&y0, opts).solve(
                // The ε = −1 check above is the only failure mode of qphi_rhs.
                |y| {
                    qphi_rhs(&CanonicalSpin::from_array(*y), params)
                        .map(|d| d.to_array())
                        .unwrap_or([f64::NAN; 2])
                },
                y0,
                opts.t_end,
                &times,
                |t, y| {
                    let c = CanonicalSpin::from_array(*y);
                    let state = State::QPhi(c);
                    let norm2 = state.spin(spin).norm_squared();
                    out.push(t, state, canonical_energy(&c, params), norm2);
                },
            )?
        }
    };
    out.stats = stats;
    Ok(out)
}

fn solver<const D: usize>(y0: &[f64; D], opts: &IntegrationOptions) -> Dopri5 {
    let scale = y0.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    Dopri5::new(opts.tol, opts.tol * scale)
}

impl Trajectory {
    fn push(&mut self, t: f64, state: State, energy: f64, spin_norm2: f64) {
        self.times.push(t);
        self.states.push(state);
        self.diagnostics.push(Diagnostics { energy, spin_norm2 });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_options() {
        assert!(IntegrationOptions::new(0.0, 0.1, 1e-8).is_err());
        assert!(IntegrationOptions::new(1.0, -0.1, 1e-8).is_err());
        assert!(IntegrationOptions::new(1.0, 0.1, 1e-2).is_err());
        assert!(IntegrationOptions::new(1.0, 0.1, 1e-14).is_err());
    }

    #[test]
    fn sample_grid_is_uniform() {
        let opts = IntegrationOptions::new(1.0, 0.1, 1e-8).unwrap();
        let t = opts.sample_times();
        assert_eq!(t.len(), 11);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!((t[10] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_field_when_decoupled() {
        let p = ModelParams::new(1.0, 1.0, 0.0, -1.0, 20).unwrap();
        let s0 = PhaseState {
            q: 1.0,
            p: 0.0,
            sx: 0.0,
            sy: 0.0,
            sz: 10.0,
        };
        let opts = IntegrationOptions::new(20.0, 0.1, 1e-11).unwrap();
        let traj = integrate(State::Full(s0), &p, &opts).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let State::Full(s) = s else { unreachable!() };
            assert!((s.q - t.cos()).abs() < 1e-8, "t = {t}: {}", s.q);
        }
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams::new(1.0, 1.0, 0.5, -1.0, 20).unwrap();
        let opts = IntegrationOptions::new(0.2, 0.1, 1e-8).unwrap();
        let traj = integrate(State::Reduced(SpinVector::new(6.0, 0.0, -8.0)), &p, &opts).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,sx,sy,sz,H_lmg,spin_norm2");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0,6.0,0.0,-8.0,"));
    }

    #[test]
    fn reduced_requires_attractive_interaction() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 0.5, 20).unwrap();
        let opts = IntegrationOptions::new(1.0, 0.1, 1e-8).unwrap();
        assert!(integrate(State::Reduced(SpinVector::new(0.0, 0.0, 10.0)), &p, &opts).is_err());
    }
}
