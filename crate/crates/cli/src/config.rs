use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use selfsim::harness::HarnessConfig;
use selfsim::pde::{SpatialGrid, TimeControls, STANDARD_LENGTH, STANDARD_NODES, STANDARD_TIMES};
use selfsim::profile::ProfileTolerances;
use selfsim::similarity::EPSILON_SCHEME;
use selfsim::{Error, ModelParams, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            length: STANDARD_LENGTH,
            n: STANDARD_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt_cap: f64,
    pub c_dt: f64,
    pub dt_growth: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        let c = TimeControls::default();
        Self {
            dt_cap: c.dt_max,
            c_dt: c.c_dt,
            dt_growth: c.growth,
            t_end: STANDARD_TIMES[STANDARD_TIMES.len() - 1],
            snapshot_times: STANDARD_TIMES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub grid_h: f64,
    pub residual_tol: f64,
    pub amplitude_rel_tol: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        let t = ProfileTolerances::default();
        Self {
            zeta_min: t.zeta_min,
            zeta_max: t.zeta_max,
            grid_h: t.grid_h,
            residual_tol: t.residual,
            amplitude_rel_tol: t.amplitude_rel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub window: [f64; 2],
    pub epsilon_scheme: f64,
    pub b_search: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window: [-2.0, 2.0],
            epsilon_scheme: EPSILON_SCHEME,
            b_search: true,
        }
    }
}

/// Everything a run needs. Missing fields take the standard-run defaults
/// (`p = 2`, `alpha = 1`, snapshots at 0.1, 1, 10, 100).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub alpha: f64,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub profile: ProfileConfig,
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            alpha: 1.0,
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            profile: ProfileConfig::default(),
            analysis: AnalysisConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        selfsim::io::read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams::singular(self.p)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        self.grid()?;
        self.time_controls().validate()?;
        self.tolerances().validate()?;
        let t = &self.time;
        if !(t.t_end > 0.0 && t.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be > 0, got {}",
                t.t_end
            )));
        }
        if t.snapshot_times.is_empty()
            || t.snapshot_times.windows(2).any(|w| !(w[1] > w[0]))
            || t.snapshot_times.iter().any(|&s| !(s > 0.0 && s <= t.t_end))
        {
            return Err(Error::InvalidParameter(
                "snapshot_times must be non-empty, strictly increasing and inside (0, t_end]"
                    .into(),
            ));
        }
        let [lo, hi] = self.analysis.window;
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "empty analysis window [{lo}, {hi}]"
            )));
        }
        if !(self.analysis.epsilon_scheme >= 0.0) {
            return Err(Error::InvalidParameter(
                "epsilon_scheme must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Parameters of the evolution problem; `alpha = 0` means no source.
    pub fn pde_params(&self) -> Result<ModelParams> {
        if self.alpha == 0.0 {
            ModelParams::singular(self.p)
        } else {
            ModelParams::new(self.p, self.alpha)
        }
    }

    /// Parameters with a source, needed wherever the stationary state appears.
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.p, self.alpha)
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.length, self.grid.n)
    }

    pub fn time_controls(&self) -> TimeControls {
        TimeControls {
            c_dt: self.time.c_dt,
            dt_max: self.time.dt_cap,
            growth: self.time.dt_growth,
        }
    }

    pub fn tolerances(&self) -> ProfileTolerances {
        ProfileTolerances {
            zeta_min: self.profile.zeta_min,
            zeta_max: self.profile.zeta_max,
            grid_h: self.profile.grid_h,
            residual: self.profile.residual_tol,
            amplitude_rel: self.profile.amplitude_rel_tol,
            ..ProfileTolerances::default()
        }
    }

    pub fn harness(&self) -> HarnessConfig {
        HarnessConfig {
            seed: self.seed,
            epsilon: self.analysis.epsilon_scheme,
            b_search: self.analysis.b_search,
            ..HarnessConfig::default()
        }
    }
}
