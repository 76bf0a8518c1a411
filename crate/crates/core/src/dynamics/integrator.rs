//! Embedded Dormand–Prince 5(4) integrator with continuous (dense) output.

use crate::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order solution minus embedded fourth-order solution.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension (Hairer, Nørsett & Wanner, DOPRI5 dense output).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

/// Step statistics of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Adaptive Dormand–Prince 5(4) stepper for autonomous systems of dimension `D`.
///
/// The weighted RMS error of each step is kept below one, with weights
/// `atol + rtol · max(|y_old|, |y_new|)` per component.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 10_000_000,
        }
    }

    /// Integrates `dy/dt = f(y)` from `t = 0` and calls `sample(t, y)` for
    /// every time in `sample_times`, which must be sorted and lie in
    /// `[0, t_end]`. Samples are taken from the continuous extension.
    pub fn solve<const D: usize, F, S>(
        &self,
        f: F,
        y0: [f64; D],
        t_end: f64,
        sample_times: &[f64],
        mut sample: S,
    ) -> Result<IntegratorStats>
    where
        F: Fn(&[f64; D]) -> [f64; D],
        S: FnMut(f64, &[f64; D]),
    {
        let mut stats = IntegratorStats::default();
        let mut next_sample = 0;
        while next_sample < sample_times.len() && sample_times[next_sample] <= 0.0 {
            sample(sample_times[next_sample], &y0);
            next_sample += 1;
        }

        let mut t = 0.0;
        let mut y = y0;
        let mut k1 = f(&y);
        stats.evaluations += 1;
        let mut h = self.initial_step(&f, &y, &k1, t_end);
        stats.evaluations += 1;
        let mut previous_error: f64 = 1e-4;
        let mut last_rejected = false;

        while t < t_end {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepSizeUnderflow { t });
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
            let reaches_end = t + h >= t_end;
            if reaches_end {
                h = t_end - t;
            }

            let stage = |k: &[[f64; D]], coeffs: &[f64]| -> [f64; D] {
                let mut out = y;
                for (kj, cj) in k.iter().zip(coeffs) {
                    for i in 0..D {
                        out[i] += h * cj * kj[i];
                    }
                }
                out
            };
            let k2 = f(&stage(&[k1], &[A21]));
            let k3 = f(&stage(&[k1, k2], &[A31, A32]));
            let k4 = f(&stage(&[k1, k2, k3], &[A41, A42, A43]));
            let k5 = f(&stage(&[k1, k2, k3, k4], &[A51, A52, A53, A54]));
            let k6 = f(&stage(&[k1, k2, k3, k4, k5], &[A61, A62, A63, A64, A65]));
            let y_new = stage(&[k1, k3, k4, k5, k6], &[A71, A73, A74, A75, A76]);
            let k7 = f(&y_new);
            stats.evaluations += 6;

            if y_new.iter().chain(k7.iter()).any(|v| !v.is_finite()) {
                if h < 1e-10 * t.abs().max(1.0) {
                    return Err(Error::Divergence { t });
                }
                h *= MIN_FACTOR;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }

            let mut sum = 0.0;
            for i in 0..D {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                sum += (e / scale).powi(2);
            }
            let err = (sum / D as f64).sqrt();

            if err <= 1.0 {
                let t_new = if reaches_end { t_end } else { t + h };
                while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                    let ts = sample_times[next_sample];
                    let theta = ((ts - t) / h).clamp(0.0, 1.0);
                    let ys = dense_point(&y, &y_new, &[k1, k3, k4, k5, k6, k7], h, theta);
                    sample(ts, &ys);
                    next_sample += 1;
                }
                let mut factor = err.max(1e-16).powf(EXPO) / previous_error.powf(BETA);
                factor = (factor / SAFETY).clamp(1.0 / MAX_FACTOR, 1.0 / MIN_FACTOR);
                let mut h_next = h / factor;
                if last_rejected {
                    h_next = h_next.min(h);
                }
                previous_error = err.max(1e-4);
                last_rejected = false;
                stats.accepted += 1;
                t = t_new;
                y = y_new;
                k1 = k7;
                h = h_next;
            } else {
                let factor = (err.powf(EXPO) / SAFETY).min(1.0 / MIN_FACTOR);
                h /= factor;
                stats.rejected += 1;
                last_rejected = true;
            }
        }

        // Samples that sit at t_end up to rounding.
        while next_sample < sample_times.len() {
            sample(sample_times[next_sample], &y);
            next_sample += 1;
        }
        Ok(stats)
    }

    fn initial_step<const D: usize, F>(&self, f: &F, y: &[f64; D], dy: &[f64; D], t_end: f64) -> f64
    where
        F: Fn(&[f64; D]) -> [f64; D],
    {
        let weight = |i: usize| self.atol + self.rtol * y[i].abs();
        let rms = |v: &dyn Fn(usize) -> f64| {
            ((0..D).map(|i| (v(i) / weight(i)).powi(2)).sum::<f64>() / D as f64).sqrt()
        };
        let d0 = rms(&|i| y[i]);
        let d1 = rms(&|i| dy[i]);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(t_end);
        let mut y1 = *y;
        for i in 0..D {
            y1[i] += h0 * dy[i];
        }
        let f1 = f(&y1);
        let d2 = rms(&|i| f1[i] - dy[i]) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(t_end)
    }
}

fn dense_point<const D: usize>(
    y: &[f64; D],
    y_new: &[f64; D],
    k: &[[f64; D]; 6],
    h: f64,
    theta: f64,
) -> [f64; D] {
    let [k1, k3, k4, k5, k6, k7] = k;
    let theta1 = 1.0 - theta;
    let mut out = [0.0; D];
    for i in 0..D {
        let diff = y_new[i] - y[i];
        let bspl = h * k1[i] - diff;
        let c3 = diff - h * k7[i] - bspl;
        let c4 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        out[i] = y[i] + theta * (diff + theta1 * (bspl + theta * (c3 + theta1 * c4)));
    }
    out
}
