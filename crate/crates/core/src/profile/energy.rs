use serde::Serialize;

use super::Profile;
use crate::error::{Error, Result};
use crate::model::{log_weight_rho, ModelParams};

/// C^2 cutoff equal to 1 on `zeta <= 0` and 0 on `zeta >= 1`, built from the
/// quintic smoothstep `10 s^3 - 15 s^4 + 6 s^5`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CutoffEta;

impl CutoffEta {
    pub fn value(&self, zeta: f64) -> f64 {
        if zeta <= 0.0 {
            1.0
        } else if zeta >= 1.0 {
            0.0
        } else {
            let s = zeta;
            1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
        }
    }

    pub fn derivative(&self, zeta: f64) -> f64 {
        if zeta <= 0.0 || zeta >= 1.0 {
            0.0
        } else {
            let s = zeta;
            -30.0 * s * s * (1.0 - s) * (1.0 - s)
        }
    }

    pub fn second_derivative(&self, zeta: f64) -> f64 {
        if zeta <= 0.0 || zeta >= 1.0 {
            0.0
        } else {
            let s = zeta;
            -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// Trapezoid sum plus the estimated tail contributions.
    pub value: f64,
    /// Richardson estimate `|T(h) - T(2h)| / 3` of the trapezoid error.
    pub quadrature_error: f64,
    /// Bound on the magnitude of both tails beyond the grid.
    pub tail_bound: f64,
}

/// `p - 1 - (p+1) phi^2 + 2 phi^(p+1)` as a function of `psi = 1 - phi`.
///
/// Vanishes to second order at `psi = 0`; the series keeps relative accuracy
/// where the weight is exponentially large.
fn left_potential(p: f64, psi: f64) -> f64 {
    if psi >= 0.1 {
        let phi = 1.0 - psi;
        return p - 1.0 - (p + 1.0) * phi * phi + 2.0 * phi.powf(p + 1.0);
    }
    // (p+1)(p-1) psi^2 + 2 sum_{n>=3} C(p+1, n) (-psi)^n
    let mut acc = (p + 1.0) * (p - 1.0) * psi * psi;
    let mut binom = (p + 1.0) * p / 2.0;
    let mut power = psi * psi;
    for n in 3..80 {
        binom *= (p + 1.0 - (n as f64 - 1.0)) / n as f64;
        power *= -psi;
        let term = 2.0 * binom * power;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    acc
}

/// The bracketed integrand of the energy, before multiplying by the weight.
pub(crate) fn energy_density(params: &ModelParams, eta: f64, phi: f64, psi: f64, dphi: f64) -> f64 {
    let p = params.p();
    let q = p - 1.0;
    let kinetic = 0.5 * dphi * dphi;
    if psi < 0.5 {
        kinetic + (eta - 1.0) / q + left_potential(p, psi) / (q * q)
    } else {
        kinetic + eta / q - phi * phi * (p + 1.0 - 2.0 * phi.powf(q)) / (q * q)
    }
}

fn weighted(params: &ModelParams, zeta: f64, density: f64) -> f64 {
    if density == 0.0 {
        return 0.0;
    }
    density.signum() * (log_weight_rho(params, zeta) + density.abs().ln()).exp()
}

/// Weighted energy of `candidate` by trapezoid quadrature with exponential tail estimates.
pub fn energy(params: &ModelParams, candidate: &Profile, eta: &CutoffEta) -> Result<EnergyReport> {
    candidate.check_shape()?;
    if candidate.phi.iter().any(|v| !(0.0..=1.0).contains(v))
        || candidate
            .one_minus_phi
            .iter()
            .any(|v| !(0.0..=1.0).contains(v))
    {
        return Err(Error::Inadmissible("phi must lie in [0, 1]".into()));
    }
    let n = candidate.len();
    let h = candidate.step();
    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            let z = candidate.zeta[i];
            let d = energy_density(
                params,
                eta.value(z),
                candidate.phi[i],
                candidate.one_minus_phi[i],
                candidate.dphi[i],
            );
            weighted(params, z, d)
        })
        .collect();
    if integrand.iter().any(|v| !v.is_finite()) {
        return Err(Error::Inadmissible("energy integrand is not finite".into()));
    }

    let trapezoid = |stride: usize, last: usize| -> f64 {
        let idx: Vec<usize> = (0..=last).step_by(stride).collect();
        let w = h * stride as f64;
        let inner: f64 = idx[1..idx.len() - 1].iter().map(|&i| integrand[i]).sum();
        w * (inner + 0.5 * (integrand[idx[0]] + integrand[idx[idx.len() - 1]]))
    };
    let last_even = if (n - 1).is_multiple_of(2) {
        n - 1
    } else {
        n - 2
    };
    let fine = trapezoid(1, n - 1);
    let quadrature_error = (trapezoid(1, last_even) - trapezoid(2, last_even)).abs() / 3.0;

    let (i0, i1) = (integrand[0], integrand[1]);
    let (j0, j1) = (integrand[n - 1], integrand[n - 2]);
    if i0.abs() > i1.abs() || j0.abs() > j1.abs() {
        return Err(Error::Inadmissible(
            "energy integrand does not decay toward the grid ends".into(),
        ));
    }
    let p = params.p();
    let left_rate = (3.0 * p + 1.0) / (p - 1.0);
    let zr = candidate.zeta[n - 1];
    let right_rate =
        (2.0 * zr).exp() / 2.0 - (2.0 * params.right_exponent() - params.drift_constant());
    if right_rate <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "right end zeta = {zr} is not in the decaying regime"
        )));
    }
    let left_tail = i0 / left_rate;
    let right_tail = j0 / right_rate;
    Ok(EnergyReport {
        value: fine + left_tail + right_tail,
        quadrature_error,
        tail_bound: left_tail.abs() + right_tail.abs(),
    })
}

/// `sqrt(t phi2^2 + (1 - t) phi1^2)` with its exact derivative.
pub fn geodesic_path(phi1: &Profile, phi2: &Profile, t: f64) -> Result<Profile> {
    phi1.check_shape()?;
    phi2.check_shape()?;
    if !phi1.same_grid(phi2) {
        return Err(Error::GridMismatch(
            "geodesic endpoints live on different grids".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "path parameter must lie in [0, 1], got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(phi1.clone());
    }
    if t == 1.0 {
        return Ok(phi2.clone());
    }
    let n = phi1.len();
    let mut out = Profile {
        zeta: phi1.zeta.clone(),
        phi: vec![0.0; n],
        one_minus_phi: vec![0.0; n],
        dphi: vec![0.0; n],
    };
    for i in 0..n {
        let (a, b) = (phi1.phi[i], phi2.phi[i]);
        let (sa, sb) = (phi1.one_minus_phi[i], phi2.one_minus_phi[i]);
        let phi = (t * b * b + (1.0 - t) * a * a).sqrt();
        out.phi[i] = phi;
        // 1 - phi^2 = psi (1 + phi) for each endpoint
        out.one_minus_phi[i] = (t * sb * (1.0 + b) + (1.0 - t) * sa * (1.0 + a)) / (1.0 + phi);
        out.dphi[i] = if phi > 0.0 {
            (t * b * phi2.dphi[i] + (1.0 - t) * a * phi1.dphi[i]) / phi
        } else {
            0.0
        };
    }
    Ok(out)
}

/// Compactly supported smooth bump `amplitude * exp(1 - 1/(1 - r^2))`, `r = (zeta - center)/half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn value(&self, zeta: f64) -> f64 {
        let r = (zeta - self.center) / self.half_width;
        if r.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
        }
    }

    pub fn derivative(&self, zeta: f64) -> f64 {
        let r = (zeta - self.center) / self.half_width;
        if r.abs() >= 1.0 {
            0.0
        } else {
            let s = 1.0 - r * r;
            self.value(zeta) * (-2.0 * r / (s * s)) / self.half_width
        }
    }
}

/// `phi + B phi (1 - phi)` with `B` the sum of the bumps; stays inside (0, 1) while `|B| < 1`.
pub fn perturb(profile: &Profile, bumps: &[Bump]) -> Result<Profile> {
    profile.check_shape()?;
    let mut out = profile.clone();
    for i in 0..profile.len() {
        let z = profile.zeta[i];
        let b: f64 = bumps.iter().map(|k| k.value(z)).sum();
        let db: f64 = bumps.iter().map(|k| k.derivative(z)).sum();
        if b.abs() >= 1.0 {
            return Err(Error::Inadmissible(format!(
                "perturbation {b} at zeta = {z} leaves [0, 1]"
            )));
        }
        let (phi, psi, d) = (profile.phi[i], profile.one_minus_phi[i], profile.dphi[i]);
        out.phi[i] = phi + b * phi * psi;
        out.one_minus_phi[i] = psi * (1.0 - b * phi);
        out.dphi[i] = d + db * phi * psi + b * d * (psi - phi);
    }
    Ok(out)
}
