//! Adaptive Dormand–Prince 5(4) integrator over real or complex vectors.

use std::ops::{Add, Mul};

use crate::error::{Error, Result};
use crate::hamiltonian::C64;

pub trait OdeScalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
}

impl OdeScalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for C64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

pub trait OdeSystem<T: OdeScalar> {
    fn rhs(&mut self, t: f64, y: &[T], dy: &mut [T]) -> Result<()>;

    /// Called after every accepted step; an error aborts the integration.
    fn accept(&mut self, _t: f64, _y: &[T]) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; 0 means unbounded.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-14,
            max_steps: 10_000_000,
            max_step: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine<T: OdeScalar>(out: &mut [T], y: &[T], h: f64, coeffs: &[f64], ks: &[Vec<T>]) {
    for i in 0..y.len() {
        let mut acc = T::default();
        for (c, k) in coeffs.iter().zip(ks) {
            if *c != 0.0 {
                acc = acc + k[i] * *c;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `y` in place from `t0` to `t1` (`t1 >= t0`).
pub fn integrate<T, S>(sys: &mut S, t0: f64, t1: f64, y: &mut [T], opts: &OdeOptions) -> Result<OdeStats>
where
    T: OdeScalar,
    S: OdeSystem<T>,
{
    let mut stats = OdeStats::default();
    if t1 < t0 {
        return Err(Error::Integration {
            time: t0,
            reason: format!("cannot integrate backwards to {t1}"),
        });
    }
    if t1 == t0 || y.is_empty() {
        return Ok(stats);
    }
    let n = y.len();
    let mut ks: Vec<Vec<T>> = (0..7).map(|_| vec![T::default(); n]).collect();
    let mut tmp = vec![T::default(); n];
    let mut y_new = vec![T::default(); n];

    let mut t = t0;
    sys.rhs(t, y, &mut ks[0])?;

    // initial step from the derivative scale
    let d0 = y.iter().map(|v| v.magnitude()).fold(0.0, f64::max);
    let d1 = ks[0].iter().map(|v| v.magnitude()).fold(0.0, f64::max);
    let mut h = if d0 > 1e-5 && d1 > 1e-5 { 0.01 * d0 / d1 } else { 1e-6 };
    h = h.min(t1 - t0);
    if opts.max_step > 0.0 {
        h = h.min(opts.max_step);
    }

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integration {
                time: t,
                reason: "step budget exhausted".into(),
            });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        for (stage, a) in [&A2[..], &A3[..], &A4[..], &A5[..], &A6[..]].iter().enumerate() {
            let (known, next) = ks.split_at_mut(stage + 1);
            combine(&mut tmp, y, h, a, known);
            sys.rhs(t + C[stage + 1] * h, &tmp, &mut next[0])?;
        }
        let (known, last_stage) = ks.split_at_mut(6);
        combine(&mut y_new, y, h, &B, known);
        sys.rhs(t + h, &y_new, &mut last_stage[0])?;

        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = T::default();
            for (c, k) in E.iter().zip(&ks) {
                if *c != 0.0 {
                    e = e + k[i] * *c;
                }
            }
            let scale = opts.atol + opts.rtol * y[i].magnitude().max(y_new[i].magnitude());
            err = err.max((e * h).magnitude() / scale);
        }
        if !err.is_finite() {
            return Err(Error::Integration {
                time: t,
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&y_new);
            ks.swap(0, 6);
            stats.accepted += 1;
            sys.accept(t, y)?;
        } else {
            stats.rejected += 1;
        }

        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if opts.max_step > 0.0 {
            h = h.min(opts.max_step);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                time: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
    }
    Ok(stats)
}
