use serde::Serialize;

use super::report::{PropertyReport, Witness};
use crate::error::{Error, Result};
use crate::model::{log_weight_rho, ModelParams};

/// `(R0, R0')`: from `R0` on, `8 e^(2R) <= (e^(2R)/2 - c)^2`; up to `R0'`,
/// `e^(2R) <= 2c (1 - 1/sqrt 2)`, with `c = (p+3)/(p-1)`.
pub fn poincare_thresholds(params: &ModelParams) -> (f64, f64) {
    let c = params.drift_constant();
    let upper_root = 2.0 * ((c + 8.0) + 4.0 * (c + 4.0).sqrt());
    let left_bound = 2.0 * c * (1.0 - std::f64::consts::FRAC_1_SQRT_2);
    (0.5 * upper_root.ln(), 0.5 * left_bound.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// A sum of Gaussians multiplied by the standard mollifier of `[lo, hi]`,
/// so it is smooth and vanishes outside the support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollifiedGaussians {
    pub support: (f64, f64),
    /// `(center, width, amplitude)`
    pub bumps: Vec<(f64, f64, f64)>,
}

impl MollifiedGaussians {
    fn mollifier(&self, zeta: f64) -> (f64, f64) {
        let (lo, hi) = self.support;
        let scale = 2.0 / (hi - lo);
        let s = (zeta - lo) * scale - 1.0;
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let gap = 1.0 - s * s;
        let m = (1.0 - 1.0 / gap).exp();
        (m, -2.0 * s / (gap * gap) * scale * m)
    }

    fn gaussians(&self, zeta: f64) -> (f64, f64) {
        self.bumps.iter().fold((0.0, 0.0), |(g, dg), &(c, w, a)| {
            let u = (zeta - c) / w;
            let e = a * (-0.5 * u * u).exp();
            (g + e, dg - e * u / w)
        })
    }

    /// `(w, w')`
    pub fn eval(&self, zeta: f64) -> (f64, f64) {
        let (m, dm) = self.mollifier(zeta);
        if m == 0.0 {
            return (0.0, 0.0);
        }
        let (g, dg) = self.gaussians(zeta);
        (m * g, dm * g + m * dg)
    }
}

/// Quadrature domain for [`poincare_check`]. The step is the smaller of
/// `max_step` and `resolution` over the local log-slope of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareGrid {
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub max_step: f64,
    pub resolution: f64,
}

impl Default for PoincareGrid {
    fn default() -> Self {
        Self {
            zeta_min: -15.0,
            zeta_max: 4.5,
            max_step: 1e-3,
            resolution: 1e-2,
        }
    }
}

/// Interval and boundary forms of one side of the weighted Poincare inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport {
    pub side: Side,
    pub r: f64,
    pub interval: PropertyReport,
    pub boundary: PropertyReport,
}

impl PoincareReport {
    pub fn passed(&self) -> bool {
        self.interval.passed && self.boundary.passed
    }
}

/// `(rhs - lhs) / max(lhs, rhs)`, zero when both sides vanish.
fn relative_margin(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (rhs - lhs) / scale
    }
}

/// Trapezoid integrals of `w^2 rho` and `w'^2 rho` over `[a, b]` and
/// `rho w^2` at `at`, all multiplied by a common factor `e^(-shift)`.
fn weighted_integrals(
    params: &ModelParams,
    w: &MollifiedGaussians,
    grid: &PoincareGrid,
    (a, b): (f64, f64),
    at: f64,
) -> (f64, f64, f64) {
    let slope = |z: f64| {
        ((2.0 * z).exp() / 2.0 - params.drift_constant())
            .abs()
            .max(1.0)
    };
    let mut nodes = vec![a];
    let mut z = a;
    while z < b {
        z = (z + grid.max_step.min(grid.resolution / slope(z))).min(b);
        nodes.push(z);
    }
    let shift = log_weight_rho(params, a).max(log_weight_rho(params, b));
    let scaled = |z: f64| {
        let (v, dv) = w.eval(z);
        let rho = (log_weight_rho(params, z) - shift).exp();
        (v * v * rho, dv * dv * rho)
    };
    let (mut i0, mut i1) = (0.0, 0.0);
    let mut prev = scaled(nodes[0]);
    for pair in nodes.windows(2) {
        let cur = scaled(pair[1]);
        let h = pair[1] - pair[0];
        i0 += 0.5 * h * (prev.0 + cur.0);
        i1 += 0.5 * h * (prev.1 + cur.1);
        prev = cur;
    }
    (i0, i1, scaled(at).0)
}

/// Evaluates both forms of the inequality on `side` at `r`:
///
/// * right: `int_R^inf w^2 dmu <= e^(-2R)/2 int_R^inf w'^2 dmu` and
///   `rho(R) w(R)^2 <= 2 e^(-R) int_R^inf w'^2 dmu`, for `R >= R0`;
/// * left: `int_-inf^R w^2 dmu <= 8/c^2 int_-inf^R w'^2 dmu` and
///   `rho(R) w(R)^2 <= 8/c int_-inf^R w'^2 dmu`, for `R <= R0'`.
///
/// Margins are relative, `(rhs - lhs) / max(lhs, rhs)`.
pub fn poincare_check(
    params: &ModelParams,
    w: &MollifiedGaussians,
    r: f64,
    side: Side,
    grid: &PoincareGrid,
) -> Result<PoincareReport> {
    let (r0, r0_prime) = poincare_thresholds(params);
    match side {
        Side::Right if !(r >= r0) => {
            return Err(Error::InvalidParameter(format!(
                "R = {r} is below R0 = {r0}"
            )))
        }
        Side::Left if !(r <= r0_prime) => {
            return Err(Error::InvalidParameter(format!(
                "R = {r} is above R0' = {r0_prime}"
            )))
        }
        _ => {}
    }
    let (lo, hi) = w.support;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::TailNotCertified(format!(
            "support [{lo}, {hi}] is not a bounded interval"
        )));
    }
    if lo < grid.zeta_min || hi > grid.zeta_max {
        return Err(Error::TailNotCertified(format!(
            "support [{lo}, {hi}] leaves the quadrature grid [{}, {}]",
            grid.zeta_min, grid.zeta_max
        )));
    }
    let c = params.drift_constant();
    let range = match side {
        Side::Right => (r.max(lo), hi),
        Side::Left => (lo, r.min(hi)),
    };
    let (i0, i1, boundary) = if range.0 < range.1 {
        weighted_integrals(params, w, grid, range, r.clamp(lo, hi))
    } else {
        (0.0, 0.0, 0.0)
    };
    let (interval_factor, boundary_factor) = match side {
        Side::Right => ((-2.0 * r).exp() / 2.0, 2.0 * (-r).exp()),
        Side::Left => (8.0 / (c * c), 8.0 / c),
    };
    let tag = match side {
        Side::Right => "right",
        Side::Left => "left",
    };
    let witness = Witness::at_zeta(r);
    Ok(PoincareReport {
        side,
        r,
        interval: PropertyReport::new(
            format!("poincare_{tag}_interval"),
            relative_margin(i0, interval_factor * i1),
            witness,
        ),
        boundary: PropertyReport::new(
            format!("poincare_{tag}_boundary"),
            relative_margin(boundary, boundary_factor * i1),
            witness,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_for_p2() {
        let (r0, r0p) = poincare_thresholds(&ModelParams::singular(2.0).unwrap());
        assert!((r0 - 50f64.ln() / 2.0).abs() < 1e-12);
        assert!((r0p - (10.0 * (1.0 - 0.5f64.sqrt())).ln() / 2.0).abs() < 1e-12);
        assert!((r0 - 1.95601).abs() < 1e-5 && (r0p - 0.53732).abs() < 1e-5);
    }

    #[test]
    fn right_threshold_decreases_with_p() {
        let r: Vec<f64> = [2.0, 3.0, 5.0, 9.0]
            .iter()
            .map(|&p| poincare_thresholds(&ModelParams::singular(p).unwrap()).0)
            .collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
    }

    #[test]
    fn test_function_derivative_matches_differences() {
        let w = MollifiedGaussians {
            support: (-1.0, 2.0),
            bumps: vec![(0.3, 0.4, 1.2), (1.1, 0.2, -0.7)],
        };
        let h = 1e-6;
        for z in [-0.9, -0.2, 0.5, 1.3, 1.95] {
            let fd = (w.eval(z + h).0 - w.eval(z - h).0) / (2.0 * h);
            assert!((fd - w.eval(z).1).abs() < 1e-6, "{z}");
        }
        assert_eq!(w.eval(-1.0), (0.0, 0.0));
        assert_eq!(w.eval(2.5), (0.0, 0.0));
    }

    #[test]
    fn zero_function_and_scaling() {
        let params = ModelParams::singular(2.0).unwrap();
        let (r0, r0p) = poincare_thresholds(&params);
        let grid = PoincareGrid::default();
        let zero = MollifiedGaussians {
            support: (r0 - 0.5, r0 + 1.0),
            bumps: vec![],
        };
        let rep = poincare_check(&params, &zero, r0, Side::Right, &grid).unwrap();
        assert!(rep.passed() && rep.interval.worst_margin == 0.0);

        let w = MollifiedGaussians {
            support: (r0p - 3.0, r0p + 0.5),
            bumps: vec![(r0p - 1.0, 0.5, 1.0)],
        };
        let big = MollifiedGaussians {
            bumps: vec![(r0p - 1.0, 0.5, 7.0)],
            ..w.clone()
        };
        let a = poincare_check(&params, &w, r0p, Side::Left, &grid).unwrap();
        let b = poincare_check(&params, &big, r0p, Side::Left, &grid).unwrap();
        assert!(a.passed());
        assert!((a.interval.worst_margin - b.interval.worst_margin).abs() < 1e-12);
        assert!((a.boundary.worst_margin - b.boundary.worst_margin).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_side_and_uncovered_support() {
        let params = ModelParams::singular(2.0).unwrap();
        let (r0, _) = poincare_thresholds(&params);
        let grid = PoincareGrid::default();
        let w = MollifiedGaussians {
            support: (0.0, 3.0),
            bumps: vec![(1.0, 1.0, 1.0)],
        };
        assert!(poincare_check(&params, &w, r0 - 0.1, Side::Right, &grid).is_err());
        assert!(poincare_check(&params, &w, 1.0, Side::Left, &grid).is_err());
        let wide = MollifiedGaussians {
            support: (0.0, 6.0),
            ..w
        };
        assert!(matches!(
            poincare_check(&params, &wide, r0, Side::Right, &grid),
            Err(Error::TailNotCertified(_))
        ));
    }
}
