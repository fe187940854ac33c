use serde::Serialize;

use super::{
    drift, left_tail, reaction, right_envelope_log, right_envelope_slope, Profile,
    ProfileTolerances,
};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::ode::{integrate, StepControl};

const MIN_AMPLITUDE: f64 = 1e-12;
const MAX_AMPLITUDE: f64 = 1e12;

/// Beyond this, a sampled trajectory no longer resolves the right tail.
const TAIL_SPLICE_LEVEL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotClass {
    /// `phi` reached zero before the right end of the window.
    Overshoot,
    /// `phi` froze at a positive level (or turned back up).
    Undershoot,
    /// Both `phi` and `dphi` are below the tail tolerance at the right end.
    WithinTolerance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub zeta: f64,
    pub phi: f64,
    pub one_minus_phi: f64,
    pub dphi: f64,
}

#[derive(Debug, Clone)]
pub struct Shot {
    pub amplitude: f64,
    pub class: ShotClass,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl Shot {
    pub fn end(&self) -> TrajectoryPoint {
        *self.trajectory.last().expect("trajectory holds the seed")
    }
}

// State (1 - phi, -(dphi)): accurate while phi is close to one.
fn rhs_left(params: &ModelParams) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    let k = params.reaction_coefficient();
    move |z, y| {
        [
            y[1],
            -drift(params, z) * y[1] + k * reaction(params, 1.0 - y[0], y[0]),
        ]
    }
}

// State (phi, dphi).
fn rhs_right(params: &ModelParams) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    let k = params.reaction_coefficient();
    move |z, y| {
        [
            y[1],
            -drift(params, z) * y[1] - k * reaction(params, y[0], 1.0 - y[0]),
        ]
    }
}

fn relative_control(control: &StepControl) -> StepControl {
    StepControl {
        atol: 1e-300,
        ..*control
    }
}

/// Integrates the profile equation forward from the left tail with amplitude `amplitude`
/// and classifies the outcome.
pub fn shoot(
    params: &ModelParams,
    amplitude: f64,
    zeta_minus: f64,
    zeta_plus: f64,
    tol: &ProfileTolerances,
) -> Result<Shot> {
    if !(zeta_minus <= -6.0 && zeta_plus >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "shooting window [{zeta_minus}, {zeta_plus}] must contain [-6, 2]"
        )));
    }
    let (psi0, dpsi0) = left_tail(params, amplitude, zeta_minus)?;
    let control = tol.step_control();
    let mut trajectory = vec![TrajectoryPoint {
        zeta: zeta_minus,
        phi: 1.0 - psi0,
        one_minus_phi: psi0,
        dphi: -dpsi0,
    }];

    let mut turned = false;
    let left = integrate(
        rhs_left(params),
        zeta_minus,
        [psi0, dpsi0],
        zeta_plus,
        1e-2,
        &relative_control(&control),
        |z, y| {
            trajectory.push(TrajectoryPoint {
                zeta: z,
                phi: 1.0 - y[0],
                one_minus_phi: y[0],
                dphi: -y[1],
            });
            turned = y[1] <= 0.0;
            turned || y[0] >= 0.5
        },
    )?;
    if turned || !left.stopped {
        return Ok(Shot {
            amplitude,
            class: ShotClass::Undershoot,
            trajectory,
        });
    }

    let mut class = None;
    let start = [1.0 - left.y[0], -left.y[1]];
    let right = integrate(
        rhs_right(params),
        left.t,
        start,
        zeta_plus,
        left.h,
        &control,
        |z, y| {
            trajectory.push(TrajectoryPoint {
                zeta: z,
                phi: y[0],
                one_minus_phi: 1.0 - y[0],
                dphi: y[1],
            });
            if y[0] <= 0.0 {
                class = Some(ShotClass::Overshoot);
            } else if y[1] >= 0.0 {
                class = Some(ShotClass::Undershoot);
            }
            class.is_some()
        },
    )?;
    let class = class.unwrap_or(
        if right.y[0] <= tol.tail_tol && right.y[1].abs() <= tol.tail_tol {
            ShotClass::WithinTolerance
        } else {
            ShotClass::Undershoot
        },
    );
    Ok(Shot {
        amplitude,
        class,
        trajectory,
    })
}

/// Finds the connecting amplitude by bisection in `ln A`.
///
/// `start` seeds the bracket search; it defaults to `(1, 1)` and is widened by
/// decades until one end overshoots and the other does not.
pub fn bracket_amplitude(
    params: &ModelParams,
    tol: &ProfileTolerances,
    start: Option<(f64, f64)>,
) -> Result<f64> {
    let largest_seed = (0.5 * (-params.left_rate() * tol.zeta_min).exp()).min(MAX_AMPLITUDE);
    let overshoots = |a: f64| -> Result<bool> {
        Ok(shoot(params, a, tol.zeta_min, tol.zeta_max, tol)?.class == ShotClass::Overshoot)
    };
    let (mut lo, mut hi) = start.unwrap_or((1.0, 1.0));
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    lo = lo.clamp(MIN_AMPLITUDE, largest_seed);
    hi = hi.clamp(MIN_AMPLITUDE, largest_seed);
    while overshoots(lo)? {
        if lo <= MIN_AMPLITUDE {
            return Err(Error::NoBracket {
                lo: MIN_AMPLITUDE,
                hi: largest_seed,
            });
        }
        hi = lo;
        lo = (lo / 10.0).max(MIN_AMPLITUDE);
    }
    while !overshoots(hi)? {
        if hi >= largest_seed {
            return Err(Error::NoBracket {
                lo: MIN_AMPLITUDE,
                hi: largest_seed,
            });
        }
        lo = hi;
        hi = (hi * 10.0).min(largest_seed);
    }
    while hi - lo > tol.amplitude_rel * lo {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if overshoots(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Samples the shooting trajectory on `zeta`, splicing the right-tail envelope
/// where the trajectory stops resolving `phi`.
pub(crate) fn sample_on_grid(
    params: &ModelParams,
    amplitude: f64,
    zeta: &[f64],
    tol: &ProfileTolerances,
) -> Result<Profile> {
    let n = zeta.len();
    let control = tol.step_control();
    let (psi0, dpsi0) = left_tail(params, amplitude, zeta[0])?;
    let mut phi = vec![f64::NAN; n];
    let mut psi = vec![f64::NAN; n];
    let mut dphi = vec![f64::NAN; n];
    phi[0] = 1.0 - psi0;
    psi[0] = psi0;
    dphi[0] = -dpsi0;

    let mut state = [psi0, dpsi0];
    let mut left_phase = true;
    let mut h = 1e-2;
    let mut valid = 1;
    for i in 1..n {
        let seg = if left_phase {
            integrate(
                rhs_left(params),
                zeta[i - 1],
                state,
                zeta[i],
                h,
                &relative_control(&control),
                |_, _| false,
            )?
        } else {
            integrate(
                rhs_right(params),
                zeta[i - 1],
                state,
                zeta[i],
                h,
                &control,
                |_, _| false,
            )?
        };
        h = seg.h;
        state = seg.y;
        let (p, s, d) = if left_phase {
            (1.0 - state[0], state[0], -state[1])
        } else {
            (state[0], 1.0 - state[0], state[1])
        };
        if !(p > TAIL_SPLICE_LEVEL && d < 0.0) {
            break;
        }
        phi[i] = p;
        psi[i] = s;
        dphi[i] = d;
        valid = i + 1;
        if left_phase && s >= 0.5 {
            left_phase = false;
            state = [p, d];
        }
    }
    let anchor = valid - 1;
    for i in valid..n {
        let ratio =
            (right_envelope_log(params, zeta[i]) - right_envelope_log(params, zeta[anchor])).exp();
        phi[i] = phi[anchor] * ratio;
        psi[i] = 1.0 - phi[i];
        dphi[i] = phi[i] * right_envelope_slope(params, zeta[i]);
    }
    Ok(Profile {
        zeta: zeta.to_vec(),
        phi,
        one_minus_phi: psi,
        dphi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ModelParams, ProfileTolerances) {
        (
            ModelParams::singular(2.0).unwrap(),
            ProfileTolerances::default(),
        )
    }

    #[test]
    fn large_amplitude_overshoots() {
        let (params, tol) = setup();
        let shot = shoot(&params, 1e6, tol.zeta_min, tol.zeta_max, &tol).unwrap();
        assert_eq!(shot.class, ShotClass::Overshoot);
        assert!(shot.end().phi <= 0.0);
    }

    #[test]
    fn small_amplitude_undershoots() {
        let (params, tol) = setup();
        let shot = shoot(&params, 1e-6, tol.zeta_min, tol.zeta_max, &tol).unwrap();
        assert_eq!(shot.class, ShotClass::Undershoot);
        assert!(shot.end().phi > 0.0);
    }

    #[test]
    fn classification_has_a_single_crossover() {
        let (params, tol) = setup();
        let classes: Vec<bool> = (-6..=6)
            .map(|k| {
                let a = 10f64.powi(k);
                shoot(&params, a, tol.zeta_min, tol.zeta_max, &tol)
                    .unwrap()
                    .class
                    == ShotClass::Overshoot
            })
            .collect();
        let switches = classes.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(switches, 1, "{classes:?}");
        assert!(!classes[0] && classes[classes.len() - 1]);
    }

    #[test]
    fn rejects_narrow_window() {
        let (params, tol) = setup();
        assert!(shoot(&params, 1.0, -3.0, 3.0, &tol).is_err());
        assert!(shoot(&params, 1.0, -12.0, 1.0, &tol).is_err());
    }

    #[test]
    fn bisection_is_insensitive_to_the_starting_bracket() {
        let (params, tol) = setup();
        let a = bracket_amplitude(&params, &tol, None).unwrap();
        let b = bracket_amplitude(&params, &tol, Some((1e-5, 3e-5))).unwrap();
        assert!((a - b).abs() < 1e-9 * a, "{a} vs {b}");
    }
}
