#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfsim::profile::{
    collocation_oracle, energy, geodesic_path, perturb, solve_profile, solve_profile_from_bracket,
    Bump, CutoffEta, Profile, ProfileSolution, ProfileTolerances,
};
use selfsim::{Error, ModelParams};

fn params(p: f64) -> ModelParams {
    ModelParams::singular(p).unwrap()
}

fn solve(p: f64) -> ProfileSolution {
    solve_profile(&params(p), &ProfileTolerances::default()).unwrap()
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn node(sol: &ProfileSolution, zeta: f64) -> usize {
    sol.zeta_grid()
        .iter()
        .position(|&z| (z - zeta).abs() < 1e-9)
        .unwrap()
}

fn check_shape(sol: &ProfileSolution) {
    let tol = ProfileTolerances::default();
    let phi = sol.phi();
    let n = phi.len();
    assert!(
        sol.max_residual <= tol.residual,
        "residual {}",
        sol.max_residual
    );
    for i in 1..n - 1 {
        // phi rounds to 1 deep in the left tail; 1 - phi is stored exactly.
        assert!(
            phi[i] > 0.0 && phi[i] <= 1.0 && sol.one_minus_phi()[i] > 0.0,
            "bounds at {i}"
        );
        assert!(sol.dphi()[i] < 0.0, "dphi at {i}");
    }
    for i in 0..n - 1 {
        assert!(
            phi[i + 1] < phi[i] || sol.one_minus_phi()[i + 1] > sol.one_minus_phi()[i],
            "monotone at {i}"
        );
    }
    assert!(sol.one_minus_phi()[0] <= tol.tail_tol);
    assert!(phi[n - 1] <= tol.tail_tol);
}

#[test]
fn profiles_are_monotone_bounded_and_resolved() {
    for p in [1.5, 2.0, 3.0, 5.0] {
        check_shape(&solve(p));
    }
}

#[test]
fn interior_residuals_below_tolerance() {
    let sol = solve(2.0);
    let worst = selfsim::profile::discrete_residuals(&sol.params, &sol.profile)
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    assert!(worst <= 1e-8, "{worst}");
    assert_eq!(worst, sol.max_residual);
}

#[test]
fn shooting_and_pure_collocation_agree() {
    for p in [1.5, 2.0, 3.0] {
        let sol = solve(p);
        let oracle = collocation_oracle(&params(p), &ProfileTolerances::default()).unwrap();
        let d = sup_distance(sol.phi(), oracle.phi());
        assert!(d <= 1e-6, "p = {p}: {d}");
    }
}

#[test]
fn perturbed_bracket_gives_same_profile() {
    let tol = ProfileTolerances::default();
    let a = solve(2.0);
    let b = solve_profile_from_bracket(&params(2.0), &tol, Some((1e-7, 2e-7))).unwrap();
    let c = solve_profile_from_bracket(&params(2.0), &tol, Some((40.0, 50.0))).unwrap();
    assert!(sup_distance(a.phi(), b.phi()) <= 1e-6);
    assert!(sup_distance(a.phi(), c.phi()) <= 1e-6);
    assert!((a.shooting_amplitude - b.shooting_amplitude).abs() <= 1e-9 * a.shooting_amplitude);
}

#[test]
fn left_log_slope_matches_linear_mode() {
    for p in [1.5, 2.0, 3.0] {
        let sol = solve(p);
        let kappa = 2.0 * (p + 1.0) / (p - 1.0);
        let h = sol.profile.step();
        let psi = sol.one_minus_phi();
        for zeta in [-8.0, -6.0, -5.0] {
            let i = node(&sol, zeta);
            let slope = (psi[i + 1].ln() - psi[i - 1].ln()) / (2.0 * h);
            assert!(
                (slope - kappa).abs() <= 0.02 * kappa,
                "p = {p}, zeta = {zeta}: {slope} vs {kappa}"
            );
        }
    }
}

#[test]
fn right_log_slope_matches_envelope_exponent() {
    // Secant over [2, 3] of ln(phi) + e^(2 zeta)/4 against (5-p)/(p-1).
    for p in [1.5, 2.0, 3.0] {
        let sol = solve(p);
        let beta = (5.0 - p) / (p - 1.0);
        let g = |z: f64| sol.phi()[node(&sol, z)].ln() + (2.0 * z).exp() / 4.0;
        let slope = g(3.0) - g(2.0);
        assert!(
            (slope - beta).abs() <= 0.02 * beta.abs(),
            "p = {p}: {slope} vs {beta}"
        );
    }
}

#[test]
fn eval_extends_with_tails() {
    let sol = solve(2.0);
    let (phi, dphi) = sol.eval(-20.0);
    assert!(phi <= 1.0 && dphi < 0.0 && dphi > -1e-20);
    let (phi, dphi) = sol.eval(3.5);
    assert!(phi > 0.0 && phi < sol.phi()[sol.phi().len() - 1] && dphi < 0.0);
    let i = node(&sol, 0.5);
    assert_eq!(sol.phi_at(0.5), sol.phi()[i]);
}

#[test]
fn rejects_degenerate_exponents() {
    assert!(matches!(
        ModelParams::singular(0.5),
        Err(Error::InvalidParameter(_))
    ));
    assert!(ModelParams::singular(1.0).is_err());
    let near_one = ModelParams::singular(1.005).unwrap();
    assert!(matches!(
        solve_profile(&near_one, &ProfileTolerances::default()),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn rejects_windows_that_miss_the_core() {
    let tol = ProfileTolerances {
        zeta_min: -4.0,
        ..Default::default()
    };
    assert!(solve_profile(&params(2.0), &tol).is_err());
}

fn smoothstep_candidate(zeta: &[f64]) -> Profile {
    let eta = CutoffEta;
    Profile {
        zeta: zeta.to_vec(),
        phi: zeta.iter().map(|&z| eta.value(z)).collect(),
        one_minus_phi: zeta.iter().map(|&z| 1.0 - eta.value(z)).collect(),
        dphi: zeta.iter().map(|&z| eta.derivative(z)).collect(),
    }
}

#[test]
fn smoothstep_energy_is_reproducible_under_refinement() {
    let p = params(2.0);
    let coarse = ProfileTolerances::default();
    let fine = ProfileTolerances {
        grid_h: coarse.grid_h / 2.0,
        ..coarse
    };
    let e1 = energy(&p, &smoothstep_candidate(&coarse.zeta_grid()), &CutoffEta).unwrap();
    let e2 = energy(&p, &smoothstep_candidate(&fine.zeta_grid()), &CutoffEta).unwrap();
    assert!(e1.value.is_finite());
    assert!(
        (e1.value - e2.value).abs() <= 1e-10,
        "{} vs {}",
        e1.value,
        e2.value
    );
}

#[test]
fn energy_tails_are_below_quadrature_error_and_shrink_with_the_window() {
    let sol = solve(2.0);
    let report = energy(&sol.params, &sol.profile, &CutoffEta).unwrap();
    assert!(report.tail_bound <= report.quadrature_error.max(1e-30));
    let wide = ProfileTolerances {
        zeta_min: -14.0,
        zeta_max: 3.25,
        ..Default::default()
    };
    let wider = solve_profile(&sol.params, &wide).unwrap();
    let report_wide = energy(&sol.params, &wider.profile, &CutoffEta).unwrap();
    assert!(report_wide.tail_bound < report.tail_bound);
    assert!((report_wide.value - report.value).abs() <= 1e-6 * report.value.abs().max(1.0));
}

fn random_bumps(rng: &mut ChaCha8Rng) -> Vec<Bump> {
    (0..rng.gen_range(1..=3))
        .map(|_| Bump {
            center: rng.gen_range(-4.0..1.5),
            half_width: rng.gen_range(0.3..1.5),
            amplitude: rng.gen_range(-0.3..0.3),
        })
        .collect()
}

#[test]
fn solution_minimizes_energy_against_random_bumps() {
    let sol = solve(2.0);
    let base = energy(&sol.params, &sol.profile, &CutoffEta).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let bumps = random_bumps(&mut rng);
        let cand = perturb(&sol.profile, &bumps).unwrap();
        let e = energy(&sol.params, &cand, &CutoffEta).unwrap().value;
        assert!(e >= base, "{bumps:?}: {e} < {base}");
    }
}

#[test]
fn energy_is_convex_along_the_geodesic_path() {
    let sol = solve(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let other = perturb(&sol.profile, &random_bumps(&mut rng)).unwrap();
        let e = |t: f64| {
            energy(
                &sol.params,
                &geodesic_path(&sol.profile, &other, t).unwrap(),
                &CutoffEta,
            )
            .unwrap()
            .value
        };
        let values: Vec<f64> = (0..=4).map(|k| e(k as f64 * 0.25)).collect();
        for k in 1..4 {
            let second = values[k + 1] - 2.0 * values[k] + values[k - 1];
            assert!(second > 0.0, "{values:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn profile_invariants_hold_across_exponents(p in 1.3f64..6.0) {
        check_shape(&solve(p));
    }
}
