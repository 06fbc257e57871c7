use std::fmt;
use std::path::Path;

use rer_core::bandwidth::{BandwidthGrid, CvOptions};
use rer_core::experiments::{BandwidthChoice, ExperimentSpec, GridSpec, TruthSource};
use rer_core::kernels::KernelFamily;
use rer_core::regression::EstimatorKind;
use rer_core::simgen::{
    Contamination, GeneratorOptions, Model, Outliers, ScenarioConfig, DEFAULT_MAX_ATTEMPTS,
};
use serde::{Deserialize, Serialize};

/// A problem with the configuration itself; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn default_kinds() -> Vec<EstimatorKind> {
    vec![EstimatorKind::RerHat, EstimatorKind::Cr]
}

fn default_replicates() -> usize {
    50
}

fn default_calibration_mc_n() -> usize {
    10_000
}

fn default_rate_ns() -> Vec<usize> {
    vec![250, 500, 1000, 2000, 4000]
}

fn default_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

/// The single JSON document read by every subcommand: the scenario fields
/// followed by estimation and experiment settings. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub c: f64,
    pub rho: f64,
    pub n: usize,
    #[serde(default)]
    pub censor_a: f64,
    #[serde(default)]
    pub outliers: Option<Outliers>,
    #[serde(default)]
    pub contamination: Option<Contamination>,
    #[serde(default)]
    pub seed: u64,

    #[serde(default)]
    pub generator: GeneratorOptions,
    /// When set, `censor_a` is replaced by the calibrated shift.
    #[serde(default)]
    pub target_cp: Option<f64>,
    #[serde(default = "default_calibration_mc_n")]
    pub calibration_mc_n: usize,

    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub bandwidth_grid: BandwidthGrid,
    #[serde(default)]
    pub cv: CvOptions,
    /// Skips cross-validation and uses this bandwidth.
    #[serde(default)]
    pub fixed_h: Option<f64>,
    #[serde(default)]
    pub kernel: KernelFamily,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<EstimatorKind>,
    #[serde(default)]
    pub truth: TruthSource,

    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_rate_ns")]
    pub rate_ns: Vec<usize>,
    /// Rate study bandwidth by cross-validation instead of `n^(-1/3)`.
    #[serde(default)]
    pub rate_cv: bool,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            model: self.model,
            c: self.c,
            rho: self.rho,
            n: self.n,
            censor_a: self.censor_a,
            outliers: self.outliers,
            contamination: self.contamination,
            seed: self.seed,
        }
    }

    pub fn bandwidth(&self) -> BandwidthChoice {
        match self.fixed_h {
            Some(h) => BandwidthChoice::Fixed { h },
            None => BandwidthChoice::Cv {
                grid: self.bandwidth_grid,
                options: self.cv,
            },
        }
    }

    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            scenario: self.scenario(),
            generator: self.generator,
            grid: self.grid,
            bandwidth: self.bandwidth(),
            kinds: self.kinds.clone(),
            truth: self.truth,
            kernel: self.kernel,
            max_attempts: self.max_attempts,
        }
    }

    /// Checks every field; messages name the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: rer_core::Error| ConfigError(e.to_string());
        self.spec().validate().map_err(invalid)?;
        self.bandwidth_grid.validate().map_err(invalid)?;
        if let Some(t) = self.target_cp {
            if !(0.0..1.0).contains(&t) {
                return Err(ConfigError(format!(
                    "`target_cp` must lie in [0, 1), got {t}"
                )));
            }
        }
        if self.calibration_mc_n == 0 {
            return Err(ConfigError("`calibration_mc_n` must be positive".into()));
        }
        if self.replicates == 0 {
            return Err(ConfigError("`replicates` must be positive".into()));
        }
        if self.rate_ns.len() < 3
            || self.rate_ns.windows(2).any(|w| w[0] >= w[1])
            || self.rate_ns[0] == 0
        {
            return Err(ConfigError(
                "`rate_ns` needs at least three strictly increasing positive sizes".into(),
            ));
        }
        Ok(())
    }
}
