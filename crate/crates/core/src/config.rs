//! Experiment configuration.
//!
//! A TOML file with nested sections. Every key is optional and unknown keys
//! are rejected. Example with every section at its default:
//!
//! ```toml
//! case = "ieee9"            # bundled case name or path to a .case file
//! out_dir = "runs/ieee9"    # relative paths resolve against the config file
//! seed = 0                  # master seed
//!
//! [scenario]
//! steps = 400
//! anomalies = 20
//! load_noise_sigma = 0.005
//! median_distance_m = 110.0
//!
//! [path_loss]
//! d0 = 1.0
//! bpl_d0 = 40.3308
//! gamma = 1.701
//! sigma_shadow = 2.18
//! pt_dbm = 10.0
//! pn_dbm = -90.0
//! lambda_c = 75.0
//!
//! [detection]
//! lambda_a = 50.0
//! window_w = 32
//! iqr_floor = 1e-6
//!
//! [reward]
//! r1 = 5000.0
//! r2 = 1.075
//! r3 = 0.5
//! budget = 25
//! lambda_s = 0.9
//!
//! [train]
//! mode = "efgd"             # ddpo | gdpo | efgd
//! trajectories = 256
//! timesteps_per_trajectory = 4
//! diffusion_steps = 20
//! schedule = "cosine"       # cosine | linear
//! beta = 0.2
//! learning_rate = 1e-5
//! optimizer = "sgd"         # sgd | adam
//! epochs = 60
//! buffer_size = 50
//!
//! [train.denoiser]
//! hidden = 32
//! layers = 2
//! dropout = 0.1
//!
//! [evaluate]
//! count = 50                # placements generated
//! conditions = 100          # shadowing draws each placement is scored on
//!
//! [output]
//! checkpoint_every = 10     # 0 disables periodic checkpoints
//! record_wall_time = false  # wall-clock column in metrics.csv
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cyber::PathLossParams;
use crate::detect::DetectionConfig;
use crate::error::{Error, Result};
use crate::grid::{bundled_case, load_bundled, load_case, PowerGrid};
use crate::placement::RewardConfig;
use crate::problem::{Problem, ScenarioParams};
use crate::seed::derive;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub count: usize,
    pub conditions: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            count: 50,
            conditions: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub checkpoint_every: usize,
    pub record_wall_time: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            checkpoint_every: 10,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: String,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub scenario: ScenarioParams,
    pub path_loss: PathLossParams,
    pub detection: DetectionConfig,
    pub reward: RewardConfig,
    pub train: TrainConfig,
    pub evaluate: EvaluateConfig,
    pub output: OutputConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: "ieee9".into(),
            out_dir: PathBuf::from("runs"),
            seed: 0,
            scenario: ScenarioParams::default(),
            path_loss: PathLossParams::default(),
            detection: DetectionConfig::default(),
            reward: RewardConfig::default(),
            train: TrainConfig::default(),
            evaluate: EvaluateConfig::default(),
            output: OutputConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Component seeds expanded from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub scenario: u64,
    pub train: u64,
    pub conditions: u64,
    pub inference: u64,
    pub baseline: u64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    /// Path of the case file, or `None` for a bundled case.
    pub fn case_path(&self) -> Option<PathBuf> {
        bundled_case(&self.case).is_none().then(|| self.resolve(Path::new(&self.case)))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.case_path() {
            if !p.is_file() {
                return Err(Error::Config(format!("case file {} does not exist", p.display())));
            }
        }
        if self.scenario.steps < 2 || !(self.scenario.load_noise_sigma >= 0.0) || !(self.scenario.median_distance_m > 0.0) {
            return Err(Error::Config(format!("invalid scenario parameters {:?}", self.scenario)));
        }
        if self.evaluate.count == 0 || self.evaluate.conditions == 0 {
            return Err(Error::Config("evaluate.count and evaluate.conditions must be positive".into()));
        }
        self.path_loss.validate()?;
        self.detection.validate()?;
        self.reward.validate()?;
        self.train.validate()
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            scenario: derive(self.seed, &[1]),
            train: derive(self.seed, &[2]),
            conditions: derive(self.seed, &[3]),
            inference: derive(self.seed, &[4]),
            baseline: derive(self.seed, &[5]),
        }
    }

    /// Training settings with the derived seed filled in.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seeds().train,
            ..self.train
        }
    }

    /// SHA-256 of the serialized configuration, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn load_grid(&self) -> Result<PowerGrid> {
        match self.case_path() {
            None => load_bundled(&self.case),
            Some(p) => load_case(p),
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::generate(
            self.load_grid()?,
            &self.scenario,
            self.path_loss,
            self.detection,
            self.reward,
            self.seeds().scenario,
        )
    }

    /// Test shadowing conditions shared by every evaluation.
    pub fn conditions(&self, problem: &Problem) -> Vec<Vec<bool>> {
        problem.conditions(self.evaluate.conditions, self.seeds().conditions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_are_empty_file() {
        let cfg = ExperimentConfig::from_toml("", Path::new(".")).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let back = ExperimentConfig::from_toml(&cfg.to_toml(), Path::new(".")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn defaults_match_published_settings() {
        let c = ExperimentConfig::default();
        assert_eq!(c.path_loss.lambda_c, 75.0);
        assert_eq!(c.reward.budget, 25);
        assert_eq!(c.detection.lambda_a, 50.0);
        assert_eq!(c.reward.lambda_s, 0.9);
        assert_eq!((c.reward.r1, c.reward.r2, c.reward.r3), (5000.0, 1.075, 0.5));
        assert_eq!(c.train.diffusion_steps, 20);
        assert_eq!(c.train.buffer_size, 50);
        assert_eq!(c.train.beta, 0.2);
        assert_eq!(c.train.learning_rate, 1e-5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("sead = 3", Path::new(".")).is_err());
        assert!(ExperimentConfig::from_toml("[reward]\nbudjet = 3", Path::new(".")).is_err());
        assert!(ExperimentConfig::from_toml("[train]\nseed = 3", Path::new(".")).is_err());
    }

    #[test]
    fn nested_sections_parse() {
        let text = "seed = 9\n[train]\nmode = \"gdpo\"\noptimizer = \"adam\"\n[train.denoiser]\nhidden = 8\n";
        let c = ExperimentConfig::from_toml(text, Path::new(".")).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.train.mode, crate::trainer::Mode::Gdpo);
        assert_eq!(c.train.denoiser.hidden, 8);
        assert_eq!(c.train.denoiser.layers, 2);
    }

    #[test]
    fn missing_case_file_fails_validation() {
        let c = ExperimentConfig {
            case: "no/such/file.case".into(),
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn seeds_depend_on_master() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 1, ..Default::default() };
        assert_ne!(a.seeds(), b.seeds());
        assert_eq!(a.hash(), ExperimentConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
    }
}
