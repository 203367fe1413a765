//! Experiment configuration, read from TOML (or JSON by file extension).

use std::path::Path;

use resonance_core::feshbach::{EtaLadder, TraceMethod, TraceMethodKind};
use resonance_core::models::{build_friedrichs, discretize, Coupling, FriedrichsParams, MatrixModel, SpectralModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Friedrichs {
        lambda: f64,
        coupling: Coupling,
        #[serde(default)]
        diag_shift: f64,
    },
    Random {
        dim: usize,
        lambda: f64,
    },
}

/// Star discretization of a Friedrichs model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaLadder {
    pub max: f64,
    pub count: usize,
    pub ratio: f64,
}

impl Default for KappaLadder {
    fn default() -> Self {
        Self { max: 0.2, count: 5, ratio: 0.5 }
    }
}

impl KappaLadder {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.max * self.ratio.powi(j as i32)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub points: usize,
    /// Time span in lifetimes τ = 2/(κ²Γ).
    pub lifetimes: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { points: 601, lifetimes: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    /// Half-width d of the plateau [λ − d, λ + d]; defaults to |I|/4.
    pub plateau: Option<f64>,
    /// Also propagate the discretized model directly (needs `grid`).
    pub direct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MourreConfig {
    pub delta: Option<[f64; 2]>,
    pub eps: f64,
    pub order: usize,
    pub samples: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    pub kappa: f64,
    /// Star grid for the certificate, overriding the top-level `grid`.
    pub grid: Option<GridConfig>,
}

impl Default for MourreConfig {
    fn default() -> Self {
        Self { delta: None, eps: 0.1, order: 3, samples: 100, min_dim: 4, max_dim: 12, kappa: 0.05, grid: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeshbachConfig {
    pub samples: usize,
    /// Star grid for the identity check, overriding the top-level `grid`.
    pub grid: Option<GridConfig>,
}

impl Default for FeshbachConfig {
    fn default() -> Self {
        Self { samples: 50, grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub interval: Option<[f64; 2]>,
    #[serde(default = "default_order")]
    pub n: usize,
    pub method: Option<TraceMethodKind>,
    #[serde(default)]
    pub kappa: KappaLadder,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub mourre: MourreConfig,
    #[serde(default)]
    pub feshbach: FeshbachConfig,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<String>,
}

fn default_order() -> usize {
    2
}

pub fn load(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read '{}': {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let cfg: ExperimentConfig = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    };
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let k = &self.kappa;
        if k.count == 0 {
            return Err(CliError::Config("kappa ladder is empty (kappa.count = 0)".into()));
        }
        if !(k.max > 0.0 && k.max.is_finite()) {
            return Err(CliError::Config(format!("kappa.max must be positive, got {}", k.max)));
        }
        if k.count > 1 && !(k.ratio > 0.0 && k.ratio < 1.0) {
            return Err(CliError::Config(format!(
                "kappa ladder must be strictly decreasing: ratio must lie in (0, 1), got {}",
                k.ratio
            )));
        }
        if self.n == 0 {
            return Err(CliError::Config("n must be at least 1".into()));
        }
        if let Some([a, b]) = self.interval {
            if a >= b || a.is_nan() || b.is_nan() {
                return Err(CliError::Config(format!("interval [{a}, {b}] is empty")));
            }
        }
        if self.time.points < 2 || self.time.lifetimes.is_nan() || self.time.lifetimes <= 0.0 {
            return Err(CliError::Config("time grid needs at least 2 points and a positive span".into()));
        }
        if let ModelConfig::Random { dim, .. } = self.model {
            if dim < 2 {
                return Err(CliError::Config("random model needs dim >= 2".into()));
            }
        }
        let m = &self.mourre;
        if m.min_dim < 2 || m.min_dim > m.max_dim || m.order == 0 || m.eps == 0.0 {
            return Err(CliError::Config("mourre section needs 2 <= min_dim <= max_dim, order >= 1, eps != 0".into()));
        }
        Ok(())
    }

    pub fn interval(&self) -> CliResult<(f64, f64)> {
        self.interval
            .map(|[a, b]| (a, b))
            .ok_or_else(|| CliError::Config("missing interval I (set `interval = [lo, hi]`)".into()))
    }

    pub fn friedrichs(&self) -> CliResult<Option<resonance_core::models::FriedrichsModel>> {
        match &self.model {
            ModelConfig::Friedrichs { lambda, coupling, diag_shift } => build_friedrichs(&FriedrichsParams {
                lambda: *lambda,
                coupling: coupling.clone(),
                diag_shift: *diag_shift,
            })
            .map(Some)
            .map_err(|e| CliError::Config(e.to_string())),
            ModelConfig::Random { .. } => Ok(None),
        }
    }

    /// The finite model: the random model, or the star discretization of a
    /// Friedrichs model on `grid`.
    pub fn matrix_model(&self) -> CliResult<MatrixModel> {
        self.matrix_model_on(self.grid)
    }

    /// As [`Self::matrix_model`] with `grid` taking precedence over the top-level grid.
    pub fn matrix_model_on(&self, grid: Option<GridConfig>) -> CliResult<MatrixModel> {
        match &self.model {
            ModelConfig::Random { dim, lambda } => {
                MatrixModel::random(*dim, self.seed, *lambda).map_err(|e| CliError::Config(e.to_string()))
            }
            ModelConfig::Friedrichs { .. } => {
                let grid = grid
                    .or(self.grid)
                    .ok_or_else(|| CliError::Config("a Friedrichs model needs a [grid] section here".into()))?;
                let f = self.friedrichs()?.expect("friedrichs model");
                discretize(&f, grid.n, grid.l).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    pub fn method_kind(&self) -> TraceMethodKind {
        match (self.method, &self.model) {
            (Some(m), _) => m,
            (None, ModelConfig::Friedrichs { .. }) => TraceMethodKind::ClosedForm,
            (None, ModelConfig::Random { .. }) => TraceMethodKind::EtaExtrapolation,
        }
    }

    /// Model and method for boundary traces.
    pub fn trace_setup(&self) -> CliResult<(SpectralModel, TraceMethod)> {
        match self.method_kind() {
            TraceMethodKind::ClosedForm | TraceMethodKind::PvQuadrature => {
                let f = self
                    .friedrichs()?
                    .ok_or_else(|| CliError::Config("closed-form and pv-quadrature traces need a Friedrichs model".into()))?;
                let method = if self.method_kind() == TraceMethodKind::ClosedForm {
                    TraceMethod::ClosedForm
                } else {
                    TraceMethod::PvQuadrature
                };
                Ok((SpectralModel::Friedrichs(f), method))
            }
            TraceMethodKind::EtaExtrapolation => Ok((
                SpectralModel::Matrix(self.matrix_model()?),
                TraceMethod::EtaExtrapolation(EtaLadder::default()),
            )),
        }
    }
}
