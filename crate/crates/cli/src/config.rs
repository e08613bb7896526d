use std::fs;
use std::path::{Path, PathBuf};

use almm_core::baselines::DEFAULT_SPARSITY;
use almm_core::model::SolverConfig;
use almm_core::synthetic::SceneSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Fclsu,
    Clsu,
    Sclsu,
    Sunsal,
    Ssunsal,
    Almm,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Fclsu => "fclsu",
            Model::Clsu => "clsu",
            Model::Sclsu => "sclsu",
            Model::Sunsal => "sunsal",
            Model::Ssunsal => "ssunsal",
            Model::Almm => "almm",
        }
    }
}

/// One JSON document per run. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneSpec,
    pub solver: SolverConfig,
    pub model: Model,
    pub lambda_sparse: f64,
    /// Scene bundle directory written by `simulate`; supplies any of
    /// `image`, `endmembers`, `truth` that are not given explicitly.
    pub input: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub endmembers: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    /// Variability dictionary for `--model almm`.
    pub dict: Option<PathBuf>,
    /// Learn the dictionary jointly for `--model almm`.
    pub learn: bool,
    /// Directory of estimates for `eval` and `render`.
    pub results: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub strict: bool,
    pub run_id: Option<String>,
    /// When false, reports carry `wall_ms = 0` so reruns are byte-identical.
    pub record_wall_time: bool,
    pub display_range: [f64; 2],
    /// Raster size for `render` when no scene manifest is available.
    pub raster: Option<[usize; 2]>,
    /// Directory for per-iteration dictionary-learning state dumps.
    pub checkpoint: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneSpec::default(),
            solver: SolverConfig::default(),
            model: Model::Sclsu,
            lambda_sparse: DEFAULT_SPARSITY,
            input: None,
            image: None,
            endmembers: None,
            truth: None,
            dict: None,
            learn: false,
            results: None,
            out: None,
            strict: false,
            run_id: None,
            record_wall_time: true,
            display_range: [0.0, 1.0],
            raster: None,
            checkpoint: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.scene.validate()?;
        self.solver.validate()?;
        if !(self.lambda_sparse >= 0.0 && self.lambda_sparse.is_finite()) {
            return Err(CliError::Config(format!("lambda_sparse must be >= 0, got {}", self.lambda_sparse)));
        }
        let [lo, hi] = self.display_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CliError::Config(format!("display_range needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> CliResult<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("no output directory; pass --out DIR".into()))
    }
}
