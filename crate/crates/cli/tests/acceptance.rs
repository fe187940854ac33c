//! One test per acceptance criterion. Each prints a single PASS/FAIL line to
//! stderr (uncaptured) before asserting.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfsim::harness::{comparison_reports, convexity_report, poincare_reports};
use selfsim::io::{read_csv, read_snapshot, DISTANCES_CSV, DISTANCES_HEADER};
use selfsim::pde::{flux_balance, standard_run, PdeState, STANDARD_TIMES};
use selfsim::profile::{
    collocation_oracle, discrete_residuals, solve_profile, ProfileSolution, ProfileTolerances,
};
use selfsim::similarity::poincare_thresholds;
use selfsim::{ClosedFormStationary, ModelParams};

fn report(criterion: &str, passed: bool, detail: String) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "ACCEPTANCE {verdict} {criterion}: {detail}"
    );
    assert!(passed, "{criterion}: {detail}");
}

fn profile(p: f64) -> ProfileSolution {
    solve_profile(
        &ModelParams::singular(p).unwrap(),
        &ProfileTolerances::default(),
    )
    .unwrap()
}

fn standard_params() -> ModelParams {
    ModelParams::new(2.0, 1.0).unwrap()
}

/// The default-config pipeline `profile`, `pde`, `analyze` through the executable.
struct Pipeline {
    dir: PathBuf,
    elapsed: Duration,
    statuses: Vec<(String, Option<i32>)>,
}

fn pipeline() -> &'static Pipeline {
    static RUN: OnceLock<Pipeline> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-standard");
        let _ = fs::remove_dir_all(&dir);
        let start = Instant::now();
        let statuses = ["profile", "pde", "analyze"]
            .iter()
            .map(|cmd| {
                let out = Command::new(env!("CARGO_BIN_EXE_selfsim"))
                    .args([cmd, "--output-dir", dir.to_str().unwrap()])
                    .output()
                    .unwrap();
                (cmd.to_string(), out.status.code())
            })
            .collect();
        Pipeline {
            dir,
            elapsed: start.elapsed(),
            statuses,
        }
    })
}

fn snapshots() -> Vec<PdeState> {
    let dir = &pipeline().dir;
    STANDARD_TIMES
        .iter()
        .map(|&t| read_snapshot(dir, t).unwrap())
        .collect()
}

#[test]
fn criterion_01_collapse_onto_profile() {
    let run = pipeline();
    let rows = read_csv(&run.dir.join(DISTANCES_CSV), DISTANCES_HEADER).unwrap();
    let d: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let decreasing = d.len() == 4 && d.windows(2).all(|w| w[1] < w[0]);
    let last = d.last().copied().unwrap_or(f64::INFINITY);
    let fast = run.elapsed <= Duration::from_secs(120);
    let commands_ok = run.statuses.iter().all(|(_, c)| *c == Some(0));
    report(
        "collapse",
        decreasing && last <= 0.05 && fast && commands_ok,
        format!(
            "distances {d:?} (strictly decreasing: {decreasing}; t=100 value {last:.4} vs bound 0.05); \
             pipeline {:.1} s; exit codes {:?}",
            run.elapsed.as_secs_f64(),
            run.statuses
        ),
    );
}

#[test]
fn criterion_02_profile_residual_and_oracle() {
    let sol = profile(2.0);
    let worst = discrete_residuals(&sol.params, &sol.profile)
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    let oracle = collocation_oracle(&sol.params, &ProfileTolerances::default()).unwrap();
    let gap = sol
        .phi()
        .iter()
        .zip(oracle.phi())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report(
        "profile residual",
        worst <= 1e-8 && gap <= 1e-6,
        format!("max residual {worst:.2e} (<= 1e-8), oracle sup-distance {gap:.2e} (<= 1e-6)"),
    );
}

#[test]
fn criterion_03_asymptotic_slopes() {
    let mut details = Vec::new();
    let mut ok = true;
    for p in [1.5, 2.0, 3.0] {
        let sol = profile(p);
        let z = sol.zeta_grid();
        let h = sol.profile.step();
        let at = |zeta: f64| z.iter().position(|&v| (v - zeta).abs() < 1e-9).unwrap();
        let psi = sol.one_minus_phi();
        let i = at(-6.0);
        let left = (psi[i + 1].ln() - psi[i - 1].ln()) / (2.0 * h);
        let kappa = 2.0 * (p + 1.0) / (p - 1.0);
        let g = |zeta: f64| sol.phi()[at(zeta)].ln() + (2.0 * zeta).exp() / 4.0;
        let right = g(3.0) - g(2.0);
        let beta = (5.0 - p) / (p - 1.0);
        let l_err = (left - kappa).abs() / kappa;
        let r_err = (right - beta).abs() / beta;
        ok &= l_err <= 0.02 && r_err <= 0.02;
        details.push(format!(
            "p={p}: left {left:.4} vs {kappa:.4} ({:.2}%), right {right:.4} vs {beta:.4} ({:.2}%)",
            100.0 * l_err,
            100.0 * r_err
        ));
    }
    report("asymptotics", ok, details.join("; "));
}

#[test]
fn criterion_04_stationary_flux_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = rng.gen_range(1.1..8.0);
        let alpha = 10f64.powf(rng.gen_range(-2.0..2.0));
        let v = ClosedFormStationary::new(&ModelParams::new(p, alpha).unwrap()).unwrap();
        // Complex-step derivative of amplitude * (a + x)^(-2/(p-1)) at x = 0.
        let h = 1e-20;
        let z = Complex64::new(v.offset_a, h);
        let value = (v.amplitude.ln() - v.decay_exponent * z.ln()).exp();
        let slope = value.im / h;
        worst = worst.max((slope + alpha).abs() / alpha);
    }
    report(
        "closed-form identity",
        worst <= 1e-10,
        format!("worst relative error of v'(0) + alpha over 20 pairs: {worst:.2e} (<= 1e-10)"),
    );
}

#[test]
fn criterion_05_monotone_approach_from_below() {
    let snaps = snapshots();
    let v = ClosedFormStationary::new(&standard_params()).unwrap();
    let mut worst_drop: f64 = 0.0;
    for pair in snaps.windows(2) {
        for (a, b) in pair[0].u.iter().zip(&pair[1].u) {
            worst_drop = worst_drop.max(a - b);
        }
    }
    let mut worst_excess = f64::NEG_INFINITY;
    for s in &snaps {
        for (i, &u) in s.u.iter().enumerate() {
            worst_excess = worst_excess.max(u - v.value(s.grid.x(i)).unwrap());
        }
    }
    report(
        "monotone approach",
        worst_drop <= 0.0 && worst_excess <= 1e-3,
        format!("largest decrease in time {worst_drop:.2e} (<= 0); max(u - v) {worst_excess:.2e} (<= 1e-3)"),
    );
}

#[test]
fn criterion_06_flux_balance() {
    let snaps = standard_run(&standard_params()).unwrap();
    let defects: Vec<f64> = flux_balance(&snaps).iter().map(|b| b.defect).collect();
    let worst = defects.iter().fold(0.0, |m: f64, &d| m.max(d));
    report(
        "flux balance",
        defects.len() == 4 && worst <= 1e-3,
        format!(
            "interval defects {:?} (<= 1e-3 alpha)",
            defects
                .iter()
                .map(|d| format!("{d:.2e}"))
                .collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_07_sandwich() {
    let path = pipeline().dir.join("sandwich.json");
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    let frames = summary["frames"].as_array().map_or(0, Vec::len);
    let (a, b) = (
        summary["a"].as_f64().unwrap(),
        summary["b"].as_f64().unwrap(),
    );
    let worst = summary["frames"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|f| {
            [
                f["lower"]["worst_margin"].as_f64(),
                f["upper"]["worst_margin"].as_f64(),
            ]
        })
        .map(Option::unwrap)
        .fold(f64::INFINITY, f64::min);
    report(
        "sandwich",
        summary["passed"] == true && frames == 4 && b >= a && worst >= 0.0,
        format!("calibrated b = {b:.4} (a = {a:.4}), worst margin with eps = 1e-3: {worst:.2e} over {frames} frames"),
    );
}

#[test]
fn criterion_08_comparison_signs() {
    let params = standard_params();
    let reports = comparison_reports(&params, &profile(2.0), 10_000, 1).unwrap();
    let ok = reports.iter().all(|r| r.passed);
    let detail = reports
        .iter()
        .map(|r| format!("{} margin {:.2e}", r.name, r.worst_margin))
        .collect::<Vec<_>>()
        .join("; ");
    report("comparison signs", ok, format!("10^4 samples: {detail}"));
}

#[test]
fn criterion_09_poincare() {
    let (r0, r0p) = poincare_thresholds(&ModelParams::singular(2.0).unwrap());
    let closed = (r0 - 50f64.ln() / 2.0).abs() <= 1e-12
        && (r0p - (10.0 * (1.0 - 0.5f64.sqrt())).ln() / 2.0).abs() <= 1e-12;
    let mut ok = closed;
    let mut details = vec![format!("p=2 thresholds R0 = {r0:.12}, R0' = {r0p:.12}")];
    for p in [2.0, 3.0] {
        let reports = poincare_reports(&ModelParams::singular(p).unwrap(), 100, 3).unwrap();
        ok &= reports.len() == 4 && reports.iter().all(|r| r.passed);
        let worst = reports
            .iter()
            .fold(f64::INFINITY, |m, r| m.min(r.worst_margin));
        details.push(format!(
            "p={p}: 4 inequalities x 100 functions, worst relative margin {worst:.3}"
        ));
    }
    report("poincare", ok, details.join("; "));
}

#[test]
fn criterion_10_energy_convexity() {
    let r = convexity_report(&profile(2.0), 10, 5).unwrap();
    report(
        "uniqueness proxy",
        r.worst_margin > 0.0,
        format!(
            "smallest second difference over 10 geodesics at t in {{1/4, 1/2, 3/4}}: {:.3e} (> 0)",
            r.worst_margin
        ),
    );
}
