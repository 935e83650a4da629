use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::field::{KernelSpec, TimeGrid};
use crate::multiindex::TruncationSpec;
use crate::spde::SpatialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { t_end: 1.0, n: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub order: usize,
    pub dim: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { order: 4, dim: 16 }
    }
}

/// Spatial initial datum of the heat problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `exp(−(x−c)²/(2w²))`; `c` defaults to the middle of the domain.
    Gaussian { center: Option<f64>, width: f64 },
    /// `sin(2πmx/L)`
    Sine { mode: usize },
    Values { values: Vec<f64> },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Gaussian { center: None, width: 1.0 }
    }
}

/// Integrand of `integrate`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    /// `η = X`, the associated process itself.
    #[default]
    AssociatedProcess,
    /// Deterministic `η`, one value per time node.
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum McTarget {
    #[default]
    WickExp,
    Heat,
    Covariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Diffusivity of the heat problems.
    pub a: f64,
    pub sigma: f64,
    /// Drift of the scalar equation.
    pub drift: f64,
    /// Initial value of the scalar equation.
    pub u0: f64,
    pub initial: InitialCondition,
    pub x_length: f64,
    pub x_n: usize,
    /// Restrict the chaos solver to one Fourier mode.
    pub mode: Option<usize>,
    /// Chaos coefficients of the scalar equation below this sup-norm are
    /// dropped along with their descendants; `None` keeps everything.
    pub prune_tol: Option<f64>,
    pub integrand: IntegrandSpec,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            sigma: 1.0,
            drift: 0.0,
            u0: 1.0,
            initial: InitialCondition::default(),
            x_length: 40.0,
            x_n: 128,
            mode: None,
            prune_tol: Some(1e-6),
            integrand: IntegrandSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write every chaos coefficient.
    pub full: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), full: false }
    }
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub grid: GridConfig,
    pub truncation: TruncationConfig,
    pub problem: ProblemConfig,
    pub target: McTarget,
    pub n_paths: usize,
    pub seed: u64,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::Wiener,
            grid: GridConfig::default(),
            truncation: TruncationConfig::default(),
            problem: ProblemConfig::default(),
            target: McTarget::default(),
            n_paths: 10_000,
            seed: 0,
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("bad config: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn time_grid(&self) -> crate::Result<TimeGrid> {
        TimeGrid::new(self.grid.t_end, self.grid.n)
    }

    pub fn truncation_spec(&self) -> crate::Result<TruncationSpec> {
        TruncationSpec::new(self.truncation.order, self.truncation.dim)
    }

    pub fn space(&self) -> crate::Result<SpatialGrid> {
        SpatialGrid::new(self.problem.x_length, self.problem.x_n)
    }

    pub fn initial_values(&self, space: &SpatialGrid) -> crate::Result<Vec<f64>> {
        match &self.problem.initial {
            InitialCondition::Gaussian { center, width } => {
                if !(*width > 0.0) {
                    return Err(crate::Error::InvalidParameter(format!("width must be positive, got {width}")));
                }
                Ok(space.gaussian(center.unwrap_or(0.5 * space.length), *width))
            }
            InitialCondition::Sine { mode } => {
                let y = space.wavenumber(*mode);
                Ok(space.nodes().iter().map(|x| (y * x).sin()).collect())
            }
            InitialCondition::Values { values } if values.len() == space.n => Ok(values.clone()),
            InitialCondition::Values { values } => {
                Err(crate::Error::GridMismatch { expected: space.n, got: values.len() })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let mut c = ExperimentConfig {
            kernel: KernelSpec::Fbm { hurst: 0.75 },
            target: McTarget::Covariance,
            seed: 42,
            ..Default::default()
        };
        c.problem.initial = InitialCondition::Values { values: vec![0.1, 0.2, 1.0 / 3.0] };
        c.problem.mode = Some(7);
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c = ExperimentConfig::from_json(r#"{"kernel": {"type": "fbm", "H": 0.6}, "grid": {"T": 2.0, "n": 64}}"#)
            .unwrap();
        assert_eq!(c.kernel, KernelSpec::Fbm { hurst: 0.6 });
        assert_eq!(c.grid.n, 64);
        assert_eq!(c.truncation, TruncationConfig::default());
        assert!(ExperimentConfig::from_json(r#"{"kernal": {}}"#).is_err());
    }
}
