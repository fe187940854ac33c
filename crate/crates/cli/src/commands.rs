use std::fs;
use std::path::Path;

use serde::Serialize;

use selfsim::harness::run_properties;
use selfsim::io::{
    self, read_json, read_snapshot, write_csv, write_frame, write_json, write_profile,
    write_snapshot, PdeRunMeta, ProfileMeta, DISTANCES_CSV, DISTANCES_HEADER, PDE_RUN_JSON,
    PROFILE_JSON, PROPERTIES_JSON, SANDWICH_JSON,
};
use selfsim::pde::{flux_balance, init_state, run_until};
use selfsim::profile::{solve_profile, ProfileSolution};
use selfsim::similarity::{
    calibrate_b, profile_distance, sandwich_check, similarity_frame, SandwichReport,
    SimilarityFrame,
};
use selfsim::{ClosedFormStationary, Error, ModelParams, Result};

use crate::config::RunConfig;

/// Relative tolerance on the mass balance of each snapshot interval.
pub const TOL_BALANCE: f64 = 1e-3;

pub const CONFIG_ECHO: &str = "config.json";

/// Whether every check a command ran has passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub passed: bool,
}

fn prepare(config: &RunConfig) -> Result<&Path> {
    config.validate()?;
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir)?;
    write_json(&dir.join(CONFIG_ECHO), config)?;
    Ok(dir)
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Io(format!(
            "missing prerequisite {}; run the earlier commands first",
            path.display()
        )))
    }
}

fn solve(config: &RunConfig) -> Result<ProfileSolution> {
    solve_profile(&ModelParams::singular(config.p)?, &config.tolerances())
}

pub fn cmd_profile(config: &RunConfig) -> Result<Outcome> {
    let dir = prepare(config)?;
    let sol = solve(config)?;
    write_profile(dir, &sol)?;
    println!("max_residual = {:e}", sol.max_residual);
    println!("A = {:.12e}", sol.shooting_amplitude);
    Ok(Outcome {
        passed: sol.max_residual <= config.profile.residual_tol,
    })
}

pub fn cmd_pde(config: &RunConfig) -> Result<Outcome> {
    let dir = prepare(config)?;
    let params = config.pde_params()?;
    let grid = config.grid()?;
    let controls = config.time_controls();
    let snaps = run_until(
        &init_state(&params, grid),
        &params,
        config.time.t_end,
        &config.time.snapshot_times,
        &controls,
    )?;
    for s in &snaps {
        write_snapshot(dir, s)?;
    }
    write_json(
        &dir.join(PDE_RUN_JSON),
        &PdeRunMeta {
            p: config.p,
            alpha: config.alpha,
            length: grid.length(),
            n: grid.n(),
            dt: controls.dt(&grid, 0.0),
            t_end: config.time.t_end,
            snapshot_times: config.time.snapshot_times.clone(),
            controls,
        },
    )?;
    let mut passed = true;
    for b in flux_balance(&snaps) {
        let ok = b.defect <= TOL_BALANCE * config.alpha;
        passed &= ok;
        println!(
            "balance [{}, {}]: d(mass)/dt = {:.9e}, alpha - int u^p = {:.9e}, defect = {:.3e} {}",
            b.t0,
            b.t1,
            b.mass_rate,
            b.net_source,
            b.defect,
            if ok { "ok" } else { "FAIL" }
        );
    }
    Ok(Outcome { passed })
}

/// Re-solves the profile for the configured tolerances after checking that
/// `profile.json` in `dir` was written for the same problem.
fn load_profile(config: &RunConfig, dir: &Path) -> Result<ProfileSolution> {
    let meta_path = dir.join(PROFILE_JSON);
    require(&meta_path)?;
    let meta: ProfileMeta = read_json(&meta_path)?;
    if meta.p != config.p || meta.tolerances != config.tolerances() {
        return Err(Error::InvalidParameter(format!(
            "{} was written for a different p or profile grid; rerun `profile`",
            meta_path.display()
        )));
    }
    solve(config)
}

fn load_frames(
    config: &RunConfig,
    params: &ModelParams,
    dir: &Path,
) -> Result<Vec<SimilarityFrame>> {
    let run_path = dir.join(PDE_RUN_JSON);
    require(&run_path)?;
    let run: PdeRunMeta = read_json(&run_path)?;
    if run.p != config.p || run.alpha != config.alpha {
        return Err(Error::InvalidParameter(format!(
            "{} was written for different (p, alpha); rerun `pde`",
            run_path.display()
        )));
    }
    run.snapshot_times
        .iter()
        .map(|&t| similarity_frame(&read_snapshot(dir, t)?, params))
        .collect()
}

#[derive(Debug, Serialize)]
struct SandwichSummary {
    a: f64,
    b: f64,
    b_search: bool,
    epsilon: f64,
    passed: bool,
    frames: Vec<SandwichReport>,
}

pub fn cmd_analyze(config: &RunConfig) -> Result<Outcome> {
    let dir = prepare(config)?;
    let params = config.params()?;
    let profile = load_profile(config, dir)?;
    let frames = load_frames(config, &params, dir)?;
    let window = (config.analysis.window[0], config.analysis.window[1]);
    let eps = config.analysis.epsilon_scheme;

    let mut rows = Vec::with_capacity(frames.len());
    for f in &frames {
        write_frame(dir, f)?;
        let d = profile_distance(f, &profile, window)?;
        println!(
            "t = {}: sup |F - phi| on [{}, {}] = {d:.6e}",
            f.t, window.0, window.1
        );
        rows.push([f.t, d]);
    }
    write_csv(&dir.join(DISTANCES_CSV), DISTANCES_HEADER, rows)?;

    let a = ClosedFormStationary::new(&params)?.offset_a;
    let (b, reports) = if config.analysis.b_search {
        match calibrate_b(&params, &frames, &profile, eps) {
            Ok(cal) => (cal.b, cal.reports),
            Err(Error::NoCalibration) => {
                let b = a * 2f64.powi(20);
                let reports = frames
                    .iter()
                    .map(|f| sandwich_check(f, &profile, &params, b, eps))
                    .collect::<Result<_>>()?;
                (b, reports)
            }
            Err(e) => return Err(e),
        }
    } else {
        let reports = frames
            .iter()
            .map(|f| sandwich_check(f, &profile, &params, a, eps))
            .collect::<Result<_>>()?;
        (a, reports)
    };
    let passed = reports.iter().all(SandwichReport::passed);
    println!(
        "sandwich: a = {a:.6}, b = {b:.6}, {}",
        if passed { "passed" } else { "FAILED" }
    );
    write_json(
        &dir.join(SANDWICH_JSON),
        &SandwichSummary {
            a,
            b,
            b_search: config.analysis.b_search,
            epsilon: eps,
            passed,
            frames: reports,
        },
    )?;
    Ok(Outcome { passed })
}

pub fn cmd_properties(config: &RunConfig) -> Result<Outcome> {
    let dir = prepare(config)?;
    let params = config.params()?;
    let profile = load_profile(config, dir)?;
    // Frame checks join in when a PDE run is present.
    let frames = if dir.join(io::PDE_RUN_JSON).exists() {
        load_frames(config, &params, dir)?
    } else {
        Vec::new()
    };
    let reports = run_properties(&params, &profile, &frames, &config.harness())?;
    for r in &reports {
        println!(
            "{:<32} {}  margin = {:.3e}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.worst_margin
        );
    }
    write_json(&dir.join(PROPERTIES_JSON), &reports)?;
    Ok(Outcome {
        passed: reports.iter().all(|r| r.passed),
    })
}
