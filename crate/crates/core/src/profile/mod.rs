//! The self-similar profile `phi(zeta)` connecting 1 at minus infinity to 0 at
//! plus infinity, its energy and the square-root interpolation between profiles.
//!
//! Profiles carry both `phi` and `1 - phi`: on the left `1 - phi` decays like
//! `exp(2(p+1) zeta/(p-1))`, far below the resolution of `phi` itself.

mod collocation;
mod energy;
mod shooting;

pub use collocation::{collocate, collocation_oracle, tanh_guess};
pub use energy::{energy, geodesic_path, perturb, Bump, CutoffEta, EnergyReport};
pub use shooting::{bracket_amplitude, shoot, Shot, ShotClass};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::ode::StepControl;

/// Smallest exponent accepted by the profile solver; the coefficients blow up as `p -> 1`.
pub const MIN_PROFILE_P: f64 = 1.01;

/// Residual of the profile equation
/// `phi'' + (e^(2 zeta)/2 - (p+3)/(p-1)) phi' + 2(p+1)/(p-1)^2 phi (1 - phi^(p-1))`.
pub fn ode_residual(params: &ModelParams, zeta: f64, phi: f64, dphi: f64, d2phi: f64) -> f64 {
    d2phi
        + drift(params, zeta) * dphi
        + params.reaction_coefficient() * reaction(params, phi, 1.0 - phi)
}

pub(crate) fn drift(params: &ModelParams, zeta: f64) -> f64 {
    (2.0 * zeta).exp() / 2.0 - params.drift_constant()
}

/// `phi (1 - |phi|^(p-1))`, evaluated from whichever of `phi`, `1 - phi` is accurate.
///
/// The odd continuation for negative `phi` only matters inside integrator
/// stages; trajectories are stopped as soon as `phi` reaches zero.
pub fn reaction(params: &ModelParams, phi: f64, one_minus_phi: f64) -> f64 {
    let q = params.p() - 1.0;
    if one_minus_phi.abs() < 0.5 {
        -phi * (q * (-one_minus_phi).ln_1p()).exp_m1()
    } else {
        phi * (1.0 - phi.abs().powf(q))
    }
}

/// Derivative of `reaction` with respect to `phi`: `1 - p phi^(p-1)`.
pub(crate) fn reaction_slope(params: &ModelParams, phi: f64) -> f64 {
    1.0 - params.p() * phi.abs().powf(params.p() - 1.0)
}

/// Left tail `(phi, dphi) = (1 - A e^(k zeta), -A k e^(k zeta))` with `k = 2(p+1)/(p-1)`.
pub fn left_asymptote(params: &ModelParams, amplitude: f64, zeta: f64) -> Result<(f64, f64)> {
    let (psi, dpsi) = left_tail(params, amplitude, zeta)?;
    Ok((1.0 - psi, -dpsi))
}

/// Same as [`left_asymptote`] but returns `(1 - phi, -dphi)`, which keep full precision.
pub fn left_tail(params: &ModelParams, amplitude: f64, zeta: f64) -> Result<(f64, f64)> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "amplitude must be >= 0, got {amplitude}"
        )));
    }
    let rate = params.left_rate();
    let psi = amplitude * (rate * zeta).exp();
    if psi >= 1.0 {
        return Err(Error::NotAsymptotic(format!(
            "left amplitude {amplitude} gives 1 - phi = {psi} at zeta = {zeta}"
        )));
    }
    Ok((psi, rate * psi))
}

/// `-e^(2 zeta)/4 + (5-p)/(p-1) zeta`, the log of the right-tail envelope.
pub fn right_envelope_log(params: &ModelParams, zeta: f64) -> f64 {
    -(2.0 * zeta).exp() / 4.0 + params.right_exponent() * zeta
}

/// Logarithmic derivative of the right-tail envelope.
pub fn right_envelope_slope(params: &ModelParams, zeta: f64) -> f64 {
    -(2.0 * zeta).exp() / 2.0 + params.right_exponent()
}

/// Right tail `phi = C exp(-e^(2 zeta)/4 + (5-p)/(p-1) zeta)` and its derivative.
pub fn right_asymptote(params: &ModelParams, amplitude: f64, zeta: f64) -> Result<(f64, f64)> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "amplitude must be >= 0, got {amplitude}"
        )));
    }
    let phi = amplitude * right_envelope_log(params, zeta).exp();
    if phi >= 1.0 {
        return Err(Error::NotAsymptotic(format!(
            "right amplitude {amplitude} gives phi = {phi} at zeta = {zeta}"
        )));
    }
    Ok((phi, phi * right_envelope_slope(params, zeta)))
}

/// Settings for [`solve_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileTolerances {
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub grid_h: f64,
    /// Bound on the collocation residual at interior nodes.
    pub residual: f64,
    /// Relative width at which the amplitude bisection stops.
    pub amplitude_rel: f64,
    /// Level below which `phi` and `dphi` count as having reached zero at `zeta_max`.
    pub tail_tol: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ProfileTolerances {
    fn default() -> Self {
        Self {
            zeta_min: -12.0,
            zeta_max: 3.0,
            grid_h: 1.0 / 256.0,
            residual: 1e-8,
            amplitude_rel: 1e-12,
            tail_tol: 1e-8,
            rtol: 1e-11,
            atol: 1e-12,
        }
    }
}

impl ProfileTolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.grid_h,
            self.residual,
            self.amplitude_rel,
            self.tail_tol,
            self.rtol,
            self.atol,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter(
                "profile tolerances must be > 0".into(),
            ));
        }
        if !(self.zeta_min <= -6.0 && self.zeta_max >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "profile window [{}, {}] must contain [-6, 2]",
                self.zeta_min, self.zeta_max
            )));
        }
        Ok(())
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            ..StepControl::default()
        }
    }

    pub fn node_count(&self) -> usize {
        ((self.zeta_max - self.zeta_min) / self.grid_h).round() as usize + 1
    }

    pub fn zeta_grid(&self) -> Vec<f64> {
        uniform_grid(self.zeta_min, self.grid_h, self.node_count())
    }
}

pub(crate) fn uniform_grid(start: f64, step: f64, len: usize) -> Vec<f64> {
    (0..len).map(|i| start + i as f64 * step).collect()
}

/// A candidate profile sampled on a uniform zeta grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub zeta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `1 - phi`, stored separately to keep relative accuracy in the left tail.
    pub one_minus_phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.zeta[self.len() - 1] - self.zeta[0]) / (self.len() - 1) as f64
    }

    pub fn same_grid(&self, other: &Profile) -> bool {
        self.len() == other.len() && self.zeta.iter().zip(&other.zeta).all(|(a, b)| a == b)
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        let n = self.zeta.len();
        if n < 3 || self.phi.len() != n || self.one_minus_phi.len() != n || self.dphi.len() != n {
            return Err(Error::GridMismatch(
                "profile arrays must share one grid of >= 3 nodes".into(),
            ));
        }
        Ok(())
    }
}

/// The solved profile together with solver diagnostics.
#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub params: ModelParams,
    pub profile: Profile,
    /// Left amplitude `A` in `1 - phi ~ A e^(2(p+1) zeta/(p-1))` found by shooting.
    pub shooting_amplitude: f64,
    pub max_residual: f64,
    pub tolerances: ProfileTolerances,
    phi_interp: MonotoneCubic,
    dphi_interp: MonotoneCubic,
}

impl ProfileSolution {
    pub fn from_profile(
        params: ModelParams,
        profile: Profile,
        shooting_amplitude: f64,
        max_residual: f64,
        tolerances: ProfileTolerances,
    ) -> Result<Self> {
        profile.check_shape()?;
        let phi_interp = MonotoneCubic::new(profile.zeta.clone(), profile.phi.clone())?;
        let dphi_interp = MonotoneCubic::new(profile.zeta.clone(), profile.dphi.clone())?;
        Ok(Self {
            params,
            profile,
            shooting_amplitude,
            max_residual,
            tolerances,
            phi_interp,
            dphi_interp,
        })
    }

    pub fn zeta_grid(&self) -> &[f64] {
        &self.profile.zeta
    }

    pub fn phi(&self) -> &[f64] {
        &self.profile.phi
    }

    pub fn dphi(&self) -> &[f64] {
        &self.profile.dphi
    }

    pub fn one_minus_phi(&self) -> &[f64] {
        &self.profile.one_minus_phi
    }

    pub fn zeta_min(&self) -> f64 {
        self.profile.zeta[0]
    }

    pub fn zeta_max(&self) -> f64 {
        self.profile.zeta[self.profile.len() - 1]
    }

    pub fn covers(&self, zeta: f64) -> bool {
        zeta >= self.zeta_min() && zeta <= self.zeta_max()
    }

    /// `(phi, dphi)` at any zeta: monotone cubic inside the grid, asymptotic
    /// tails matched to the end nodes outside it.
    pub fn eval(&self, zeta: f64) -> (f64, f64) {
        let n = self.profile.len();
        if zeta < self.zeta_min() {
            let rate = self.params.left_rate();
            let psi = self.profile.one_minus_phi[0] * (rate * (zeta - self.zeta_min())).exp();
            (1.0 - psi, -rate * psi)
        } else if zeta > self.zeta_max() {
            let last = self.zeta_max();
            let ratio = (right_envelope_log(&self.params, zeta)
                - right_envelope_log(&self.params, last))
            .exp();
            let phi = self.profile.phi[n - 1] * ratio;
            (phi, phi * right_envelope_slope(&self.params, zeta))
        } else {
            (self.phi_interp.eval(zeta), self.dphi_interp.eval(zeta))
        }
    }

    pub fn phi_at(&self, zeta: f64) -> f64 {
        self.eval(zeta).0
    }
}

/// Solves the profile equation on `[zeta_min, zeta_max]`.
///
/// Bisects the left amplitude between an overshoot and an undershoot, then
/// polishes the sampled trajectory with finite-difference Newton collocation
/// whose end rows impose the asymptotic tail shapes.
pub fn solve_profile(params: &ModelParams, tol: &ProfileTolerances) -> Result<ProfileSolution> {
    solve_profile_from_bracket(params, tol, None)
}

/// Like [`solve_profile`] but starts the bisection from a caller-supplied bracket
/// (any pair of amplitudes; it is widened until it brackets).
pub fn solve_profile_from_bracket(
    params: &ModelParams,
    tol: &ProfileTolerances,
    bracket: Option<(f64, f64)>,
) -> Result<ProfileSolution> {
    check_profile_params(params)?;
    tol.validate()?;
    let amplitude = bracket_amplitude(params, tol, bracket)?;
    let zeta = tol.zeta_grid();
    let guess = shooting::sample_on_grid(params, amplitude, &zeta, tol)?;
    let (profile, max_residual) = collocate(params, guess)?;
    if !(max_residual <= tol.residual) {
        return Err(Error::NewtonDiverged {
            iterations: 0,
            residual: max_residual,
        });
    }
    ProfileSolution::from_profile(*params, profile, amplitude, max_residual, *tol)
}

pub(crate) fn check_profile_params(params: &ModelParams) -> Result<()> {
    if params.p() < MIN_PROFILE_P {
        return Err(Error::InvalidParameter(format!(
            "profile solver needs p >= {MIN_PROFILE_P}, got {}",
            params.p()
        )));
    }
    Ok(())
}

/// Central-difference residuals of the profile equation at interior nodes.
pub fn discrete_residuals(params: &ModelParams, profile: &Profile) -> Vec<f64> {
    let h = profile.step();
    (1..profile.len() - 1)
        .map(|i| {
            let (d1, d2) = central_differences(profile, i, h);
            ode_residual_split(
                params,
                profile.zeta[i],
                profile.phi[i],
                profile.one_minus_phi[i],
                d1,
                d2,
            )
        })
        .collect()
}

fn ode_residual_split(
    params: &ModelParams,
    zeta: f64,
    phi: f64,
    psi: f64,
    d1: f64,
    d2: f64,
) -> f64 {
    d2 + drift(params, zeta) * d1 + params.reaction_coefficient() * reaction(params, phi, psi)
}

/// Which variable a three-point stencil is differenced in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stencil {
    /// `ln(1 - phi)` at all three nodes.
    LeftLog,
    /// `ln(phi)` at all three nodes.
    RightLog,
    /// `phi` itself, across the switch between the two.
    Plain,
}

impl Stencil {
    pub(crate) fn classify(left: [bool; 3]) -> Self {
        match left {
            [true, true, true] => Stencil::LeftLog,
            [false, false, false] => Stencil::RightLog,
            _ => Stencil::Plain,
        }
    }
}

/// First and second central differences of the log variable on a stencil, and
/// the value it is the logarithm of at the centre.
pub(crate) fn log_differences(values: [f64; 3], h: f64) -> (f64, f64) {
    let [a, b, c] = values.map(f64::ln);
    ((c - a) / (2.0 * h), (c - 2.0 * b + a) / (h * h))
}

/// `(phi', phi'')` at node `i` from the given stencil.
///
/// In the tails the differences are taken of `ln(1 - phi)` or `ln(phi)`,
/// which vary slowly even where `phi` decays super-exponentially.
pub(crate) fn stencil_derivatives(
    profile: &Profile,
    i: usize,
    h: f64,
    kind: Stencil,
) -> (f64, f64) {
    let (a, b, c) = (i - 1, i, i + 1);
    match kind {
        Stencil::LeftLog => {
            let s = &profile.one_minus_phi;
            let (u1, u2) = log_differences([s[a], s[b], s[c]], h);
            (-s[b] * u1, -s[b] * (u2 + u1 * u1))
        }
        Stencil::RightLog => {
            let s = &profile.phi;
            let (w1, w2) = log_differences([s[a], s[b], s[c]], h);
            (s[b] * w1, s[b] * (w2 + w1 * w1))
        }
        Stencil::Plain => {
            let s = &profile.phi;
            (
                (s[c] - s[a]) / (2.0 * h),
                (s[c] - 2.0 * s[b] + s[a]) / (h * h),
            )
        }
    }
}

/// Derivatives at node `i`, with nodes where `phi >= 1/2` carried by `1 - phi`.
pub(crate) fn central_differences(profile: &Profile, i: usize, h: f64) -> (f64, f64) {
    let idx = [i - 1, i, i + 1];
    let positive = idx
        .iter()
        .all(|&j| profile.phi[j] > 0.0 && profile.one_minus_phi[j] > 0.0);
    let kind = if positive {
        Stencil::classify(idx.map(|j| profile.phi[j] >= 0.5))
    } else {
        Stencil::Plain
    };
    stencil_derivatives(profile, i, h, kind)
}
