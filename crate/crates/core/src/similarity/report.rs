use serde::{Deserialize, Serialize};

/// Where a margin is attained: a similarity coordinate, a space-time point, or both.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
}

impl Witness {
    pub fn at_zeta(zeta: f64) -> Self {
        Self {
            zeta: Some(zeta),
            ..Self::default()
        }
    }

    pub fn at_point(x: f64, t: f64) -> Self {
        Self {
            x: Some(x),
            t: Some(t),
            ..Self::default()
        }
    }
}

/// Outcome of one inequality check. Margins are signed so that a
/// non-negative `worst_margin` means the inequality holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub name: String,
    pub passed: bool,
    pub worst_margin: f64,
    pub witness: Witness,
    pub seed: Option<u64>,
}

impl PropertyReport {
    pub fn new(name: impl Into<String>, worst_margin: f64, witness: Witness) -> Self {
        Self {
            name: name.into(),
            passed: worst_margin >= 0.0,
            worst_margin,
            witness,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Folds margins into the smallest one and where it occurred. An empty
    /// input gives margin zero with no witness.
    pub fn from_margins(
        name: impl Into<String>,
        margins: impl IntoIterator<Item = (f64, Witness)>,
    ) -> Self {
        let mut worst: Option<(f64, Witness)> = None;
        for (m, w) in margins {
            // NaN margins count as failures.
            let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
            if worst.is_none_or(|(best, _)| m < best) {
                worst = Some((m, w));
            }
        }
        let (margin, witness) = worst.unwrap_or((0.0, Witness::default()));
        Self::new(name, margin, witness)
    }

    /// Combines reports into one that passes only if all of them do.
    pub fn all(name: impl Into<String>, reports: &[PropertyReport]) -> Self {
        let mut out = Self::from_margins(name, reports.iter().map(|r| (r.worst_margin, r.witness)));
        out.seed = reports.iter().find_map(|r| r.seed);
        out
    }
}
