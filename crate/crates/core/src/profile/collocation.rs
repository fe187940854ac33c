use super::{
    central_differences, check_profile_params, discrete_residuals, drift, log_differences,
    ode_residual_split, reaction_slope, right_envelope_log, right_envelope_slope,
    stencil_derivatives, Profile, ProfileSolution, ProfileTolerances, Stencil,
};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::tridiag;

const MAX_NEWTON: usize = 200;
const MAX_HALVINGS: usize = 60;
// Relative merit below which remaining changes are round-off.
const MERIT_FLOOR: f64 = 1e-10;
// Largest change of any log-unknown in one Newton update.
const MAX_LOG_STEP: f64 = 20.0;

/// Unknowns are `1 - phi` left of `switch` and `phi` from `switch` on, so both
/// tails are carried in the variable that decays there.
struct Unknowns {
    switch: usize,
    values: Vec<f64>,
}

impl Unknowns {
    fn to_profile(&self, zeta: &[f64]) -> Profile {
        let n = zeta.len();
        let mut phi = vec![0.0; n];
        let mut psi = vec![0.0; n];
        for i in 0..n {
            if i < self.switch {
                psi[i] = self.values[i];
                phi[i] = 1.0 - psi[i];
            } else {
                phi[i] = self.values[i];
                psi[i] = 1.0 - phi[i];
            }
        }
        Profile {
            zeta: zeta.to_vec(),
            phi,
            one_minus_phi: psi,
            dphi: vec![0.0; n],
        }
    }

    /// Moves the switch to the current `phi = 1/2` crossing.
    fn rebalance(&mut self, zeta: &[f64]) {
        let prof = self.to_profile(zeta);
        let n = zeta.len();
        let switch = prof
            .phi
            .iter()
            .position(|&v| v < 0.5)
            .unwrap_or(n)
            .clamp(2, n - 2);
        if switch != self.switch {
            self.switch = switch;
            self.values = (0..n)
                .map(|i| {
                    if i < switch {
                        prof.one_minus_phi[i]
                    } else {
                        prof.phi[i]
                    }
                })
                .collect();
        }
    }

    fn stencil(&self, i: usize) -> Stencil {
        Stencil::classify([i - 1, i, i + 1].map(|j| j < self.switch))
    }

    fn sign(&self, i: usize) -> f64 {
        if i < self.switch {
            -1.0
        } else {
            1.0
        }
    }
}

struct System<'a> {
    params: &'a ModelParams,
    zeta: &'a [f64],
    h: f64,
    left_ratio: f64,
    right_ratio: f64,
}

impl System<'_> {
    /// Residual rows of the discretized equation.
    fn residual(&self, u: &Unknowns) -> Vec<f64> {
        let n = self.zeta.len();
        let prof = u.to_profile(self.zeta);
        let mut r = vec![0.0; n];
        let y = &u.values;
        r[0] = y[0] - self.left_ratio * y[1];
        for i in 1..n - 1 {
            let (d1, d2) = stencil_derivatives(&prof, i, self.h, u.stencil(i));
            r[i] = ode_residual_split(
                self.params,
                self.zeta[i],
                prof.phi[i],
                prof.one_minus_phi[i],
                d1,
                d2,
            );
        }
        r[n - 1] = y[n - 1] - self.right_ratio * y[n - 2];
        r
    }

    /// Row scales: the local size of the unknowns, over `h^2` on interior rows.
    fn scales(&self, u: &Unknowns) -> Vec<f64> {
        let n = self.zeta.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        (0..n)
            .map(|i| {
                let y = u.values[i];
                let small = y.min(1.0 - y).max(1e-300);
                if i == 0 || i == n - 1 {
                    small
                } else {
                    small * inv_h2
                }
            })
            .collect()
    }
}

/// Root-mean-square of the scaled residual.
fn merit(r: &[f64], scales: &[f64]) -> f64 {
    (r.iter()
        .zip(scales)
        .map(|(a, b)| (a / b).powi(2))
        .sum::<f64>()
        / r.len() as f64)
        .sqrt()
}

impl System<'_> {
    /// Newton direction in the logarithms of the unknowns, so that every
    /// damped update keeps them positive and can rescale a tail wholesale.
    fn newton_step(&self, u: &Unknowns, r: &[f64]) -> Result<Vec<f64>> {
        let n = self.zeta.len();
        let (h, k) = (self.h, self.params.reaction_coefficient());
        let y = &u.values;
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        diag[0] = y[0];
        sup[0] = -self.left_ratio * y[1];
        for i in 1..n - 1 {
            let d = drift(self.params, self.zeta[i]);
            match u.stencil(i) {
                Stencil::Plain => {
                    let phi = if i < u.switch { 1.0 - y[i] } else { y[i] };
                    sub[i] = (1.0 / (h * h) - d / (2.0 * h)) * u.sign(i - 1) * y[i - 1];
                    diag[i] =
                        (-2.0 / (h * h) + k * reaction_slope(self.params, phi)) * u.sign(i) * y[i];
                    sup[i] = (1.0 / (h * h) + d / (2.0 * h)) * u.sign(i + 1) * y[i + 1];
                }
                kind => {
                    // Row is sign * y_i * B + k f(phi) with B = v'' + v'^2 + D v', v = ln y.
                    let sign = if kind == Stencil::LeftLog { -1.0 } else { 1.0 };
                    let (v1, v2) = log_differences([y[i - 1], y[i], y[i + 1]], h);
                    let bracket = v2 + v1 * v1 + d * v1;
                    let phi = if sign < 0.0 { 1.0 - y[i] } else { y[i] };
                    let lean = (2.0 * v1 + d) / (2.0 * h);
                    sub[i] = sign * y[i] * (1.0 / (h * h) - lean);
                    sup[i] = sign * y[i] * (1.0 / (h * h) + lean);
                    diag[i] = sign
                        * y[i]
                        * (bracket - 2.0 / (h * h) + k * reaction_slope(self.params, phi));
                }
            }
        }
        sub[n - 1] = -self.right_ratio * y[n - 2];
        diag[n - 1] = y[n - 1];
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        tridiag::solve(&sub, &diag, &sup, &rhs)
    }
}

/// Damped Newton on the central-difference discretization of the profile
/// equation, starting from `guess`. Returns the converged profile and its
/// largest interior residual.
pub fn collocate(params: &ModelParams, guess: Profile) -> Result<(Profile, f64)> {
    guess.check_shape()?;
    let n = guess.len();
    let h = guess.step();
    let zeta = guess.zeta.clone();
    let switch = guess.phi.iter().position(|&v| v < 0.5).unwrap_or(n);
    if switch < 2 || switch > n - 2 {
        return Err(Error::Inadmissible(
            "initial guess does not cross phi = 1/2 inside the grid".into(),
        ));
    }
    let values = (0..n)
        .map(|i| {
            if i < switch {
                guess.one_minus_phi[i]
            } else {
                guess.phi[i]
            }
        })
        .map(|v| v.clamp(1e-300, 1.0 - 1e-12))
        .collect();
    let mut u = Unknowns { switch, values };
    let sys = System {
        params,
        zeta: &zeta,
        h,
        left_ratio: (-params.left_rate() * h).exp(),
        right_ratio: (right_envelope_log(params, zeta[n - 1])
            - right_envelope_log(params, zeta[n - 2]))
        .exp(),
    };

    let mut r = sys.residual(&u);
    let mut current = merit(&r, &sys.scales(&u));
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let step = sys.newton_step(&u, &r)?;
        // Frozen row scales keep the Newton direction a descent direction.
        let scales = sys.scales(&u);
        let start = merit(&r, &scales);
        let largest = step.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
        let mut lambda = (MAX_LOG_STEP / largest).min(1.0);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = u
                .values
                .iter()
                .zip(&step)
                .map(|(y, d)| y * (lambda * d).exp())
                .collect();
            if trial.iter().all(|&v| v > 0.0 && v < 1.0) {
                let cand = Unknowns {
                    switch: u.switch,
                    values: trial,
                };
                let r_new = sys.residual(&cand);
                let m = merit(&r_new, &scales);
                if m < start || m <= MERIT_FLOOR {
                    accepted = Some((cand, r_new));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((cand, r_new)) = accepted else {
            if largest <= 1e-9 || current <= MERIT_FLOOR {
                converged = true;
                break;
            }
            return Err(Error::NewtonDiverged {
                iterations: MAX_NEWTON,
                residual: current,
            });
        };
        u = cand;
        u.rebalance(&zeta);
        r = r_new;
        current = merit(&r, &sys.scales(&u));
        if lambda == 1.0 && largest <= 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NewtonDiverged {
            iterations: MAX_NEWTON,
            residual: current,
        });
    }

    let mut profile = u.to_profile(&zeta);
    fill_derivative(params, &mut profile);
    let max_residual = discrete_residuals(params, &profile)
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok((profile, max_residual))
}

/// Central differences inside, asymptotic tail slopes at the two ends.
pub(crate) fn fill_derivative(params: &ModelParams, profile: &mut Profile) {
    let n = profile.len();
    let h = profile.step();
    for i in 1..n - 1 {
        profile.dphi[i] = central_differences(profile, i, h).0;
    }
    profile.dphi[0] = -params.left_rate() * profile.one_minus_phi[0];
    profile.dphi[n - 1] = profile.phi[n - 1] * right_envelope_slope(params, profile.zeta[n - 1]);
}

/// Logistic initial guess `phi = (1 - tanh(zeta))/2` with the tails written
/// without cancellation.
pub fn tanh_guess(zeta: &[f64]) -> Profile {
    let phi: Vec<f64> = zeta.iter().map(|z| 1.0 / (1.0 + (2.0 * z).exp())).collect();
    let psi: Vec<f64> = zeta
        .iter()
        .map(|z| 1.0 / (1.0 + (-2.0 * z).exp()))
        .collect();
    let dphi = phi.iter().zip(&psi).map(|(a, b)| -2.0 * a * b).collect();
    Profile {
        zeta: zeta.to_vec(),
        phi,
        one_minus_phi: psi,
        dphi,
    }
}

/// The logistic guess with its right tail replaced by the decay envelope past `zeta = 1`.
pub fn tanh_envelope_guess(params: &ModelParams, zeta: &[f64]) -> Profile {
    let mut prof = tanh_guess(zeta);
    let graft = zeta.partition_point(|&z| z < 1.0).min(zeta.len() - 1);
    for i in graft + 1..zeta.len() {
        let ratio =
            (right_envelope_log(params, zeta[i]) - right_envelope_log(params, zeta[graft])).exp();
        prof.phi[i] = prof.phi[graft] * ratio;
        prof.one_minus_phi[i] = 1.0 - prof.phi[i];
    }
    prof
}

/// Pure collocation from a tanh-shaped guess; no shooting involved. Serves as
/// an independent check of [`super::solve_profile`].
pub fn collocation_oracle(
    params: &ModelParams,
    tol: &ProfileTolerances,
) -> Result<ProfileSolution> {
    check_profile_params(params)?;
    tol.validate()?;
    let (profile, max_residual) = collocate(params, tanh_envelope_guess(params, &tol.zeta_grid()))?;
    let implied_amplitude =
        profile.one_minus_phi[0] * (-params.left_rate() * profile.zeta[0]).exp();
    ProfileSolution::from_profile(*params, profile, implied_amplitude, max_residual, *tol)
}
