//! Seeded property suite over a solved profile and, when available, PDE frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClosedFormStationary, ModelParams};
use crate::profile::{energy, geodesic_path, perturb, Bump, CutoffEta, ProfileSolution};
use crate::similarity::{
    calibrate_b, comparison_residuals, poincare_check, poincare_thresholds, sandwich_check,
    MollifiedGaussians, PoincareGrid, PropertyReport, Side, SimilarityFrame, Witness,
    EPSILON_SCHEME,
};

/// Bound on the sub-solution bracket at `b = a`.
pub const VANISHING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub seed: u64,
    pub comparison_samples: usize,
    pub poincare_functions: usize,
    pub convexity_pairs: usize,
    pub epsilon: f64,
    /// Search for `b` instead of using `b = a` in the sandwich check.
    pub b_search: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            comparison_samples: 10_000,
            poincare_functions: 100,
            convexity_pairs: 10,
            epsilon: EPSILON_SCHEME,
            b_search: true,
        }
    }
}

/// Independent streams for the individual checks, all derived from one seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Points `(x, t)` with `t` log-uniform in `[1e-2, 1e2]` and both
/// `ln(x/sqrt t)` and `ln((x+b)/sqrt t)` inside the profile grid.
pub fn comparison_samples(
    profile: &ProfileSolution,
    b: f64,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = (profile.zeta_min(), profile.zeta_max());
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::Coverage {
                lo,
                hi,
                reason: format!("could not place samples with b = {b}"),
            });
        }
        let t = 10f64.powf(rng.gen_range(-2.0..2.0));
        let zeta = rng.gen_range(lo..hi);
        let x = t.sqrt() * zeta.exp();
        if ((x + b) / t.sqrt()).ln() <= hi {
            out.push((x, t));
        }
    }
    Ok(out)
}

/// Sign checks of the comparison functions: super-solution, sub-solution at
/// `b = 2a`, and the vanishing sub-solution bracket at `b = a`.
pub fn comparison_reports(
    params: &ModelParams,
    profile: &ProfileSolution,
    count: usize,
    seed: u64,
) -> Result<Vec<PropertyReport>> {
    let a = ClosedFormStationary::new(params)?.offset_a;
    let mut rng = stream(seed, 1);
    let samples = comparison_samples(profile, 2.0 * a, count, &mut rng)?;
    let (sub, sup) = comparison_residuals(params, profile, 2.0 * a, &samples)?;
    let (at_a, _) = comparison_residuals(params, profile, a, &samples)?;
    let mut vanishing = at_a;
    vanishing.name = "comparison_sub_vanishes_at_a".into();
    // The sub margin is minus the bracket; the bracket must be zero here.
    vanishing.worst_margin = VANISHING_TOL - vanishing.worst_margin.abs();
    vanishing.passed = vanishing.worst_margin >= 0.0;
    Ok([sup, sub, vanishing]
        .into_iter()
        .map(|r| r.with_seed(seed))
        .collect())
}

/// A random sum of at most five Gaussians on a support drawn around `r`.
fn random_test_function(rng: &mut impl Rng, r: f64, side: Side) -> MollifiedGaussians {
    let support = match side {
        Side::Right => (r - rng.gen_range(0.1..1.0), r + rng.gen_range(0.3..1.5)),
        Side::Left => (r - rng.gen_range(0.5..6.0), r + rng.gen_range(0.1..1.0)),
    };
    let len = support.1 - support.0;
    let bumps = (0..rng.gen_range(1..=5))
        .map(|_| {
            (
                rng.gen_range(support.0..support.1),
                len * rng.gen_range(0.05..0.5),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    MollifiedGaussians { support, bumps }
}

/// The four weighted Poincare inequalities at `R0` and `R0'`, each folded
/// over `count` random test functions.
pub fn poincare_reports(
    params: &ModelParams,
    count: usize,
    seed: u64,
) -> Result<Vec<PropertyReport>> {
    let (r0, r0_prime) = poincare_thresholds(params);
    let grid = PoincareGrid::default();
    let mut out = Vec::new();
    for (side, r, id) in [(Side::Right, r0, 2), (Side::Left, r0_prime, 3)] {
        let mut rng = stream(seed, id);
        let mut interval = Vec::with_capacity(count);
        let mut boundary = Vec::with_capacity(count);
        for _ in 0..count {
            let w = random_test_function(&mut rng, r, side);
            let rep = poincare_check(params, &w, r, side, &grid)?;
            interval.push(rep.interval);
            boundary.push(rep.boundary);
        }
        for reports in [interval, boundary] {
            let name = reports
                .first()
                .map(|r| r.name.clone())
                .unwrap_or_else(|| format!("poincare_{side:?}"));
            out.push(PropertyReport::all(name, &reports).with_seed(seed));
        }
    }
    Ok(out)
}

/// Central second differences of the energy at `t = 1/4, 1/2, 3/4` along the
/// geodesic from the solved profile to `pairs` random perturbations of it.
pub fn convexity_report(
    solution: &ProfileSolution,
    pairs: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let mut rng = stream(seed, 4);
    let eta = CutoffEta;
    let mut margins = Vec::new();
    for _ in 0..pairs {
        let bumps: Vec<Bump> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                Bump {
                    center: rng.gen_range(-2.5..1.5),
                    half_width: rng.gen_range(0.5..1.5),
                    amplitude: sign * rng.gen_range(0.1..0.3),
                }
            })
            .collect();
        let other = perturb(&solution.profile, &bumps)?;
        let e = (0..=4)
            .map(|k| {
                let path = geodesic_path(&solution.profile, &other, k as f64 / 4.0)?;
                Ok(energy(&solution.params, &path, &eta)?.value)
            })
            .collect::<Result<Vec<f64>>>()?;
        for k in 1..4 {
            let witness = Witness {
                t: Some(k as f64 / 4.0),
                ..Witness::default()
            };
            margins.push((e[k + 1] - 2.0 * e[k] + e[k - 1], witness));
        }
    }
    Ok(PropertyReport::from_margins("energy_convexity", margins).with_seed(seed))
}

/// Frame-level checks: `F` non-increasing in zeta, and the sandwich with
/// either the calibrated `b` or `b = a`.
pub fn frame_reports(
    params: &ModelParams,
    profile: &ProfileSolution,
    frames: &[SimilarityFrame],
    epsilon: f64,
    b_search: bool,
) -> Result<Vec<PropertyReport>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    let monotone = PropertyReport::from_margins(
        "frame_monotone",
        frames.iter().map(|f| {
            let worst =
                f.f.windows(2)
                    .enumerate()
                    .max_by(|a, b| (a.1[1] - a.1[0]).total_cmp(&(b.1[1] - b.1[0])))
                    .map(|(i, w)| (w[1] - w[0], f.zeta[i + 1]))
                    .unwrap_or((0.0, 0.0));
            (
                epsilon - worst.0.max(0.0),
                Witness {
                    zeta: Some(worst.1),
                    t: Some(f.t),
                    ..Witness::default()
                },
            )
        }),
    );
    let a = ClosedFormStationary::new(params)?.offset_a;
    let sandwiches = if b_search {
        match calibrate_b(params, frames, profile, epsilon) {
            Ok(cal) => cal.reports,
            // Report the failures seen at the largest b that was tried.
            Err(Error::NoCalibration) => frames
                .iter()
                .map(|f| sandwich_check(f, profile, params, a * 2f64.powi(20), epsilon))
                .collect::<Result<_>>()?,
            Err(e) => return Err(e),
        }
    } else {
        frames
            .iter()
            .map(|f| sandwich_check(f, profile, params, a, epsilon))
            .collect::<Result<_>>()?
    };
    let with_time = |r: &PropertyReport, t: f64| Witness {
        t: Some(t),
        ..r.witness
    };
    let lower = PropertyReport::from_margins(
        "sandwich_lower",
        sandwiches
            .iter()
            .map(|s| (s.lower.worst_margin, with_time(&s.lower, s.t))),
    );
    let upper = PropertyReport::from_margins(
        "sandwich_upper",
        sandwiches
            .iter()
            .map(|s| (s.upper.worst_margin, with_time(&s.upper, s.t))),
    );
    Ok(vec![monotone, lower, upper])
}

/// Runs every check and returns the reports in a fixed order.
pub fn run_properties(
    params: &ModelParams,
    profile: &ProfileSolution,
    frames: &[SimilarityFrame],
    config: &HarnessConfig,
) -> Result<Vec<PropertyReport>> {
    let seed = config.seed;
    let mut out = comparison_reports(params, profile, config.comparison_samples, seed)?;
    out.extend(poincare_reports(params, config.poincare_functions, seed)?);
    out.push(convexity_report(profile, config.convexity_pairs, seed)?);
    out.extend(frame_reports(
        params,
        profile,
        frames,
        config.epsilon,
        config.b_search,
    )?);
    Ok(out)
}
