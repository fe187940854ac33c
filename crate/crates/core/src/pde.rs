//! Semi-implicit finite differences for `u_t = u_xx - u^p` on `[0, L]` with
//! `u_x(0, t) = -alpha`, `u(L, t) = 0` and zero initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const MIN_NODES: usize = 64;

/// Domain length and node count of the standard run (`t_end = 100`).
pub const STANDARD_LENGTH: f64 = 128.0;
pub const STANDARD_NODES: usize = 5121;
pub const STANDARD_TIMES: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

/// `a + 12 sqrt(t_end)`: shortest domain whose Dirichlet end stays out of reach by `t_end`.
pub fn minimum_length(offset_a: f64, t_end: f64) -> f64 {
    offset_a + 12.0 * t_end.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    length: f64,
    n: usize,
    dx: f64,
}

impl SpatialGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "domain length must be > 0, got {length}"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_NODES} nodes, got {n}"
            )));
        }
        Ok(Self {
            length,
            n,
            dx: length / (n - 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Trapezoid rule for nodal values on this grid.
    pub fn integrate(&self, values: impl Iterator<Item = f64>) -> f64 {
        let mut sum = 0.0;
        let mut first = None;
        let mut last = 0.0;
        for v in values {
            if first.is_none() {
                first = Some(v);
            }
            sum += v;
            last = v;
        }
        self.dx * (sum - 0.5 * (first.unwrap_or(0.0) + last))
    }
}

/// Time step rule `dt = min(max(c_dt dx^2, growth t), dt_max)`.
///
/// With `growth = 0` the step is the fixed `min(c_dt dx^2, dt_max)`; a positive
/// `growth` lets the step follow the slowing evolution at late times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeControls {
    pub c_dt: f64,
    pub dt_max: f64,
    pub growth: f64,
}

impl Default for TimeControls {
    fn default() -> Self {
        Self {
            c_dt: 0.25,
            dt_max: 1e-2,
            growth: 2e-4,
        }
    }
}

impl TimeControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_dt > 0.0 && self.dt_max > 0.0 && self.growth >= 0.0) {
            return Err(Error::InvalidParameter(
                "time step controls must be > 0 (growth >= 0)".into(),
            ));
        }
        Ok(())
    }

    pub fn dt(&self, grid: &SpatialGrid, t: f64) -> f64 {
        (self.c_dt * grid.dx() * grid.dx())
            .max(self.growth * t)
            .min(self.dt_max)
    }
}

/// Running totals since `t = 0`; their differences over an interval give the
/// terms of the integrated mass balance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FluxLedger {
    /// Trapezoid integral of `u` at the current time.
    pub mass: f64,
    /// Time integral of the trapezoid integral of `u^p`.
    pub absorbed: f64,
    /// Time integral of the boundary flux `alpha`.
    pub injected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub grid: SpatialGrid,
    pub u: Vec<f64>,
    pub t: f64,
    pub ledger: FluxLedger,
}

fn source(params: &ModelParams) -> f64 {
    // No alpha means no boundary source.
    params.alpha().unwrap_or(0.0)
}

pub fn init_state(_params: &ModelParams, grid: SpatialGrid) -> PdeState {
    PdeState {
        grid,
        u: vec![0.0; grid.n()],
        t: 0.0,
        ledger: FluxLedger::default(),
    }
}

/// `u^(p-1)` for `u >= 0`, with the common integer cases kept exact and fast.
fn absorption_rate(u: f64, q: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if q == 1.0 {
        u
    } else if q == 2.0 {
        u * u
    } else if q == 0.5 {
        u.sqrt()
    } else {
        u.powf(q)
    }
}

/// Scratch space for repeated steps on one grid.
#[derive(Debug, Clone, Default)]
struct Workspace {
    diag: Vec<f64>,
    rhs: Vec<f64>,
    next: Vec<f64>,
}

/// One step of implicit diffusion with linear-implicit absorption
/// `-(u_old)^(p-1) u_new`. Node `n-1` is the Dirichlet node.
///
/// The matrix is an M-matrix, so `u_old >= 0` gives `u_new >= 0`.
fn implicit_step_into(
    u_old: &[f64],
    p: f64,
    alpha: f64,
    dx: f64,
    dt: f64,
    ws: &mut Workspace,
) -> Result<()> {
    let n = u_old.len();
    let m = n - 1;
    let r = dt / (dx * dx);
    let q = p - 1.0;
    ws.diag.resize(m, 0.0);
    ws.rhs.resize(m, 0.0);
    ws.next.resize(n, 0.0);
    for i in 0..m {
        ws.diag[i] = 1.0 + 2.0 * r + dt * absorption_rate(u_old[i], q);
        ws.rhs[i] = u_old[i];
    }
    ws.rhs[0] += 2.0 * r * dx * alpha;
    let mut prev_c = 0.0;
    let mut prev_d = 0.0;
    for i in 0..m {
        let sub = if i == 0 { 0.0 } else { -r };
        let denom = ws.diag[i] - sub * prev_c;
        if !(denom.abs() > 0.0) || !denom.is_finite() {
            return Err(Error::SolveBreakdown { row: i });
        }
        // Row 0 couples to node 1 with weight -2r once the ghost node is folded in.
        let upper = if i == 0 { -2.0 * r } else { -r };
        let c = if i + 1 < m { upper / denom } else { 0.0 };
        let d = (ws.rhs[i] - sub * prev_d) / denom;
        ws.diag[i] = c;
        ws.rhs[i] = d;
        prev_c = c;
        prev_d = d;
    }
    ws.next[m] = 0.0;
    ws.next[m - 1] = ws.rhs[m - 1];
    for i in (0..m - 1).rev() {
        ws.next[i] = ws.rhs[i] - ws.diag[i] * ws.next[i + 1];
    }
    if ws.next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: "implicit step".into(),
        });
    }
    Ok(())
}

/// A single step, returning the new nodal values.
#[cfg(test)]
fn implicit_step(u_old: &[f64], p: f64, alpha: f64, dx: f64, dt: f64) -> Result<Vec<f64>> {
    let mut ws = Workspace::default();
    implicit_step_into(u_old, p, alpha, dx, dt, &mut ws)?;
    Ok(ws.next)
}

fn power_integral(grid: &SpatialGrid, u: &[f64], p: f64) -> f64 {
    grid.integrate(u.iter().map(|&v| {
        if v > 0.0 {
            v * absorption_rate(v, p - 1.0)
        } else {
            0.0
        }
    }))
}

fn advance(state: &mut PdeState, params: &ModelParams, dt: f64, ws: &mut Workspace) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let alpha = source(params);
    implicit_step_into(&state.u, params.p(), alpha, state.grid.dx(), dt, ws)?;
    std::mem::swap(&mut state.u, &mut ws.next);
    state.t += dt;
    state.ledger.mass = state.grid.integrate(state.u.iter().copied());
    state.ledger.absorbed += dt * power_integral(&state.grid, &state.u, params.p());
    state.ledger.injected += dt * alpha;
    Ok(())
}

/// Advances `state` by one step of size `dt`.
pub fn step(state: &PdeState, params: &ModelParams, dt: f64) -> Result<PdeState> {
    let mut next = state.clone();
    advance(&mut next, params, dt, &mut Workspace::default())?;
    Ok(next)
}

/// Steps from `state` to `t_end`, returning a copy of the state at each of
/// `snapshot_times`. Steps are shortened to land on every snapshot exactly.
pub fn run_until(
    state: &PdeState,
    params: &ModelParams,
    t_end: f64,
    snapshot_times: &[f64],
    controls: &TimeControls,
) -> Result<Vec<PdeState>> {
    if !(t_end > state.t) {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} must exceed the current time {}",
            state.t
        )));
    }
    if snapshot_times.windows(2).any(|w| !(w[1] > w[0]))
        || snapshot_times.iter().any(|&s| !(s > state.t && s <= t_end))
    {
        return Err(Error::InvalidParameter(
            "snapshot times must increase strictly within (t, t_end]".into(),
        ));
    }
    controls.validate()?;
    let mut current = state.clone();
    let mut ws = Workspace::default();
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let mut targets: Vec<f64> = snapshot_times.to_vec();
    if targets.last() != Some(&t_end) {
        targets.push(t_end);
    }
    for &target in &targets {
        while current.t < target {
            let dt = controls.dt(&current.grid, current.t);
            // Absorb a sliver of a step rather than taking it separately.
            let last = current.t + dt * (1.0 + 1e-9) >= target;
            let h = if last { target - current.t } else { dt };
            advance(&mut current, params, h, &mut ws).map_err(|e| Error::StepFailed {
                t: current.t,
                source: Box::new(e),
            })?;
            if last {
                current.t = target;
            }
        }
        if snapshot_times.contains(&target) {
            snapshots.push(current.clone());
        }
    }
    Ok(snapshots)
}

/// Snapshots at [`STANDARD_TIMES`] on the standard grid with default time controls.
pub fn standard_run(params: &ModelParams) -> Result<Vec<PdeState>> {
    let grid = SpatialGrid::new(STANDARD_LENGTH, STANDARD_NODES)?;
    let t_end = STANDARD_TIMES[STANDARD_TIMES.len() - 1];
    run_until(
        &init_state(params, grid),
        params,
        t_end,
        &STANDARD_TIMES,
        &TimeControls::default(),
    )
}

/// Mass balance over one interval between snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceInterval {
    pub t0: f64,
    pub t1: f64,
    /// `(M(t1) - M(t0)) / (t1 - t0)` with `M` the integral of `u`.
    pub mass_rate: f64,
    /// Interval mean of `alpha - integral of u^p`.
    pub net_source: f64,
    pub defect: f64,
}

/// Balance over the consecutive intervals `[0, t_1], [t_1, t_2], ...` of `snapshots`.
pub fn flux_balance(snapshots: &[PdeState]) -> Vec<BalanceInterval> {
    let origin = FluxLedger::default();
    let mut prev = (0.0, origin);
    let mut out = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        let (t0, l0) = prev;
        let span = s.t - t0;
        let mass_rate = (s.ledger.mass - l0.mass) / span;
        let net_source =
            ((s.ledger.injected - l0.injected) - (s.ledger.absorbed - l0.absorbed)) / span;
        out.push(BalanceInterval {
            t0,
            t1: s.t,
            mass_rate,
            net_source,
            defect: (mass_rate - net_source).abs(),
        });
        prev = (s.t, s.ledger);
    }
    out
}
