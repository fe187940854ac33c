//! Dormand-Prince 5(4) with local error control, for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_min: 1e-12,
            h_max: 0.25,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Segment<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// Suggested size for the next step.
    pub h: f64,
    /// True when the monitor asked to stop before reaching the end point.
    pub stopped: bool,
    pub steps: usize,
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 > t0`.
///
/// After every accepted step `monitor(t, y)` is called; returning `true` ends
/// the integration at that step.
pub fn integrate<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    h0: f64,
    control: &StepControl,
    mut monitor: impl FnMut(f64, &[f64; N]) -> bool,
) -> Result<Segment<N>> {
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.min(control.h_max).min(t1 - t0).max(control.h_min);
    let mut k = [[0.0; N]; 7];
    k[0] = rhs(t, &y);
    let mut steps = 0;
    while t < t1 {
        if steps >= control.max_steps {
            return Err(Error::StepUnderflow { zeta: t, step: h });
        }
        let last = t + h >= t1;
        let h_try = if last { t1 - t } else { h };
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                *v += h_try * acc;
            }
            k[s] = rhs(t + C[s] * h_try, &ys);
        }
        // FSAL: the seventh stage is evaluated at the proposed solution.
        let mut y_new = y;
        for (i, v) in y_new.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += A[6][j] * k[j][i];
            }
            *v += h_try * acc;
        }
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            let scale = control.atol + control.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((h_try * e).abs() / scale);
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if h_try <= control.h_min {
                return Err(Error::NonFinite {
                    location: format!("zeta = {t}"),
                });
            }
            h = (h_try * 0.25).max(control.h_min);
            k[0] = rhs(t, &y);
            continue;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            t = if last { t1 } else { t + h_try };
            y = y_new;
            k[0] = k[6];
            steps += 1;
            if !last {
                h = (h_try * factor).min(control.h_max);
            }
            if monitor(t, &y) {
                return Ok(Segment {
                    t,
                    y,
                    h,
                    stopped: true,
                    steps,
                });
            }
        } else {
            if h_try <= control.h_min {
                return Err(Error::StepUnderflow {
                    zeta: t,
                    step: h_try,
                });
            }
            h = (h_try * factor).max(control.h_min);
            k[0] = rhs(t, &y);
        }
    }
    Ok(Segment {
        t,
        y,
        h,
        stopped: false,
        steps,
    })
}
