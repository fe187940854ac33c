//! Snapshots in similarity variables and the checks that compare them with the profile.

mod comparison;
mod poincare;
mod report;

pub use comparison::{
    calibrate_b, comparison_residuals, sandwich_check, Calibration, SandwichReport,
};
pub use poincare::{
    poincare_check, poincare_thresholds, MollifiedGaussians, PoincareGrid, PoincareReport, Side,
};
pub use report::{PropertyReport, Witness};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ClosedFormStationary, ModelParams};
use crate::numerics::interp::MonotoneCubic;
use crate::pde::PdeState;
use crate::profile::ProfileSolution;

/// Nodes with `u` below this are left out of a frame.
pub const FRAME_FLOOR: f64 = 1e-30;

/// Default tolerance on the inequality checks.
pub const EPSILON_SCHEME: f64 = 1e-3;

/// `F = u / v` against `zeta = ln(x / sqrt(t))` for one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityFrame {
    pub t: f64,
    pub zeta: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
}

impl SimilarityFrame {
    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    /// Largest rise of `F` between consecutive nodes; zero for a non-increasing frame.
    pub fn max_rise(&self) -> f64 {
        self.f.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Builds a frame from profile values: `F(zeta) = phi(zeta)` at each `zeta`.
    pub fn from_profile(t: f64, profile: &ProfileSolution, zeta: &[f64]) -> Self {
        Self {
            t,
            zeta: zeta.to_vec(),
            f: zeta.iter().map(|&z| profile.phi_at(z)).collect(),
        }
    }
}

pub fn similarity_frame(state: &PdeState, params: &ModelParams) -> Result<SimilarityFrame> {
    if !(state.t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "similarity frame needs t > 0, got {}",
            state.t
        )));
    }
    let v = ClosedFormStationary::new(params)?;
    let log_root_t = 0.5 * state.t.ln();
    let mut zeta = Vec::new();
    let mut f = Vec::new();
    for (i, &u) in state.u.iter().enumerate() {
        let x = state.grid.x(i);
        if x > 0.0 && u >= FRAME_FLOOR {
            zeta.push(x.ln() - log_root_t);
            f.push(u / v.value(x)?);
        }
    }
    Ok(SimilarityFrame {
        t: state.t,
        zeta,
        f,
    })
}

/// Sup of `|F - phi|` over `window`, both curves read through monotone cubics.
/// The sup is taken over every frame and profile node inside the window and
/// the window ends.
pub fn profile_distance(
    frame: &SimilarityFrame,
    profile: &ProfileSolution,
    window: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = window;
    let coverage = |reason: &str| Error::Coverage {
        lo,
        hi,
        reason: reason.into(),
    };
    if !(lo < hi) {
        return Err(coverage("empty window"));
    }
    if frame.len() < 2 || frame.zeta[0] > lo || frame.zeta[frame.len() - 1] < hi {
        return Err(coverage("frame does not span the window"));
    }
    if !(profile.covers(lo) && profile.covers(hi)) {
        return Err(coverage("profile grid does not span the window"));
    }
    let curve = MonotoneCubic::new(frame.zeta.clone(), frame.f.clone())?;
    let mut points: Vec<f64> = frame
        .zeta
        .iter()
        .chain(profile.zeta_grid())
        .copied()
        .filter(|&z| z > lo && z < hi)
        .collect();
    points.push(lo);
    points.push(hi);
    Ok(points
        .iter()
        .map(|&z| (curve.eval(z) - profile.phi_at(z)).abs())
        .fold(0.0, f64::max))
}
