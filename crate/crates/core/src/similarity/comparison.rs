use serde::Serialize;

use super::report::{PropertyReport, Witness};
use super::SimilarityFrame;
use crate::error::{Error, Result};
use crate::model::{ClosedFormStationary, ModelParams};
use crate::profile::{reaction, ProfileSolution};

/// Largest exponent tried when calibrating `b = a 2^k`.
const MAX_DOUBLINGS: i32 = 20;

fn offset_for(params: &ModelParams, profile: &ProfileSolution) -> Result<f64> {
    if params.p() != profile.params.p() {
        return Err(Error::InvalidParameter(format!(
            "profile solved for p = {}, parameters have p = {}",
            profile.params.p(),
            params.p()
        )));
    }
    Ok(ClosedFormStationary::new(params)?.offset_a)
}

fn check_b(b: f64, a: f64) -> Result<()> {
    if !(b >= a) {
        return Err(Error::InvalidParameter(format!(
            "b = {b} is below the offset a = {a}"
        )));
    }
    Ok(())
}

/// Lower and upper halves of the sandwich for one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub t: f64,
    pub b: f64,
    pub lower: PropertyReport,
    pub upper: PropertyReport,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.lower.passed && self.upper.passed
    }
}

/// Checks `phi(xi) - eps <= F <= phi(zeta) + eps` at every frame node, with
/// `xi = ln(e^zeta + b / sqrt(t))`.
pub fn sandwich_check(
    frame: &SimilarityFrame,
    profile: &ProfileSolution,
    params: &ModelParams,
    b: f64,
    epsilon: f64,
) -> Result<SandwichReport> {
    let a = offset_for(params, profile)?;
    check_b(b, a)?;
    if !(frame.t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frame time must be > 0, got {}",
            frame.t
        )));
    }
    let shift = b / frame.t.sqrt();
    let nodes = || frame.zeta.iter().zip(&frame.f);
    let lower = PropertyReport::from_margins(
        format!("sandwich_lower_t{}", frame.t),
        nodes().map(|(&z, &f)| {
            let xi = (z.exp() + shift).ln();
            (f - profile.phi_at(xi) + epsilon, Witness::at_zeta(z))
        }),
    );
    let upper = PropertyReport::from_margins(
        format!("sandwich_upper_t{}", frame.t),
        nodes().map(|(&z, &f)| (profile.phi_at(z) + epsilon - f, Witness::at_zeta(z))),
    );
    Ok(SandwichReport {
        t: frame.t,
        b,
        lower,
        upper,
    })
}

/// Result of [`calibrate_b`]: the smallest passing `b = a 2^k` and its reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub a: f64,
    pub b: f64,
    pub doublings: i32,
    pub reports: Vec<SandwichReport>,
}

impl Calibration {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(SandwichReport::passed)
    }
}

pub fn calibrate_b(
    params: &ModelParams,
    frames: &[SimilarityFrame],
    profile: &ProfileSolution,
    epsilon: f64,
) -> Result<Calibration> {
    if frames.is_empty() {
        return Err(Error::InvalidParameter(
            "no frames to calibrate against".into(),
        ));
    }
    let a = offset_for(params, profile)?;
    for k in 0..=MAX_DOUBLINGS {
        let b = a * 2f64.powi(k);
        let reports = frames
            .iter()
            .map(|f| sandwich_check(f, profile, params, b, epsilon))
            .collect::<Result<Vec<_>>>()?;
        if reports.iter().all(SandwichReport::passed) {
            return Ok(Calibration {
                a,
                b,
                doublings: k,
                reports,
            });
        }
    }
    Err(Error::NoCalibration)
}

/// The bracket of `P[v(x) phi(ln((x + s)/sqrt(t)))]` with the prefactor
/// `v(x)/(x + s)^2` removed.
fn bracket(params: &ModelParams, profile: &ProfileSolution, ratio: f64, z: f64) -> f64 {
    let p = params.p();
    let (phi, dphi) = profile.eval(z);
    4.0 / (p - 1.0) * (1.0 - ratio) * (-dphi)
        + params.reaction_coefficient() * (1.0 - ratio * ratio) * reaction(params, phi, 1.0 - phi)
}

/// Signs of the parabolic residuals of the sub-solution `v(x) phi(ln((x+b)/sqrt t))`
/// (must be `<= 0`) and the super-solution `v(x) phi(ln(x/sqrt t))` (must be `>= 0`)
/// at the sample points `(x, t)`. Returns `(sub, super)`.
pub fn comparison_residuals(
    params: &ModelParams,
    profile: &ProfileSolution,
    b: f64,
    samples: &[(f64, f64)],
) -> Result<(PropertyReport, PropertyReport)> {
    let a = offset_for(params, profile)?;
    check_b(b, a)?;
    let mut sub = Vec::with_capacity(samples.len());
    let mut sup = Vec::with_capacity(samples.len());
    for &(x, t) in samples {
        if !(x > 0.0 && t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample (x, t) = ({x}, {t}) must have x > 0 and t > 0"
            )));
        }
        let half_log_t = 0.5 * t.ln();
        let zeta = x.ln() - half_log_t;
        let z = (x + b).ln() - half_log_t;
        for s in [zeta, z] {
            if !profile.covers(s) {
                return Err(Error::Coverage {
                    lo: profile.zeta_min(),
                    hi: profile.zeta_max(),
                    reason: format!("sample (x, t) = ({x}, {t}) maps to zeta = {s}"),
                });
            }
        }
        let w = Witness::at_point(x, t);
        sub.push((-bracket(params, profile, (x + b) / (x + a), z), w));
        sup.push((bracket(params, profile, x / (x + a), zeta), w));
    }
    Ok((
        PropertyReport::from_margins("comparison_sub", sub),
        PropertyReport::from_margins("comparison_super", sup),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_profile, ProfileTolerances};

    fn setup() -> (ModelParams, ProfileSolution, f64) {
        let params = ModelParams::new(2.0, 1.0).unwrap();
        let sol = solve_profile(
            &ModelParams::singular(2.0).unwrap(),
            &ProfileTolerances::default(),
        )
        .unwrap();
        let a = ClosedFormStationary::new(&params).unwrap().offset_a;
        (params, sol, a)
    }

    #[test]
    fn sub_bracket_vanishes_at_b_equal_a() {
        let (params, sol, a) = setup();
        let samples = [(0.1, 1.0), (1.0, 3.0), (5.0, 40.0)];
        let (sub, sup) = comparison_residuals(&params, &sol, a, &samples).unwrap();
        assert_eq!(sub.worst_margin, 0.0);
        assert!(sub.passed && sup.passed && sup.worst_margin > 0.0);
    }

    #[test]
    fn rejects_small_b_and_uncovered_samples() {
        let (params, sol, a) = setup();
        assert!(comparison_residuals(&params, &sol, 0.5 * a, &[(1.0, 1.0)]).is_err());
        assert!(matches!(
            comparison_residuals(&params, &sol, a, &[(1e-9, 1.0)]),
            Err(Error::Coverage { .. })
        ));
        let frame = SimilarityFrame {
            t: 1.0,
            zeta: vec![0.0],
            f: vec![0.5],
        };
        assert!(sandwich_check(&frame, &sol, &params, 0.5 * a, 1e-3).is_err());
    }

    #[test]
    fn profile_frames_pass_at_the_floor() {
        let (params, sol, a) = setup();
        let zeta: Vec<f64> = (0..200).map(|i| -4.0 + 0.04 * i as f64).collect();
        let frames: Vec<_> = [0.1, 1.0, 100.0]
            .iter()
            .map(|&t| SimilarityFrame::from_profile(t, &sol, &zeta))
            .collect();
        let cal = calibrate_b(&params, &frames, &sol, 0.0).unwrap();
        assert_eq!(cal.b, a);
        assert!(cal.reports.iter().all(|r| r.upper.worst_margin == 0.0));
    }

    #[test]
    fn large_b_makes_the_lower_side_slack() {
        let (params, sol, a) = setup();
        let zeta: Vec<f64> = (0..50).map(|i| -2.0 + 0.08 * i as f64).collect();
        let frame = SimilarityFrame {
            t: 1.0,
            zeta: zeta.clone(),
            f: vec![0.0; 50],
        };
        let r = sandwich_check(&frame, &sol, &params, 1e6 * a, 1e-3).unwrap();
        assert!(r.lower.passed && r.upper.passed);
        assert!(r.lower.worst_margin >= 1e-3 - 1e-12);
    }
}
