//! Command-line driver: scene simulation, unmixing, dictionary learning,
//! evaluation and abundance-map rendering.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Model, RunConfig};
use crate::error::{CliError, CliResult};

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "ALMM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "almm", version, about = "Hyperspectral unmixing with spectral-variability modeling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene bundle.
    Simulate,
    /// Unmix an image with one of the supported models.
    Unmix,
    /// Learn a variability dictionary jointly with the abundances.
    Learn,
    /// Score saved estimates against ground truth.
    Eval,
    /// Write one PGM image per endmember abundance map.
    Render,
}

/// Flags override the corresponding keys of the `--config` file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<Model>,
    /// Seed for scene generation and dictionary initialization.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Exit with status 4 if any pixel fails to converge.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Variability dictionary for `--model almm`.
    #[arg(long, global = true, value_name = "PATH")]
    pub dict: Option<PathBuf>,
    /// Learn the variability dictionary during `--model almm`.
    #[arg(long, global = true)]
    pub learn: bool,
    /// Scene bundle directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub image: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub endmembers: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// Directory holding estimates from `unmix` or `learn`.
    #[arg(long, global = true, value_name = "DIR")]
    pub results: Option<PathBuf>,
    /// Sparsity weight for sunsal/ssunsal.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub num_atoms: Option<usize>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub run_id: Option<String>,
    /// Report wall_ms = 0 so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_wall_time: bool,
    /// Display range mapped to 0..255 by `render`.
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"])]
    pub range: Option<Vec<f64>>,
    #[arg(long, global = true, num_args = 2, value_names = ["ROWS", "COLS"])]
    pub raster: Option<Vec<usize>>,
    /// Directory for per-iteration dictionary-learning checkpoints.
    #[arg(long, global = true, value_name = "DIR")]
    pub checkpoint: Option<PathBuf>,
}

impl Flags {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if let Some(seed) = self.seed {
            cfg.scene.rng_seed = seed;
            cfg.solver.rng_seed = seed;
        }
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                slot.clone_from(v);
            }
        };
        set(&mut cfg.out, &self.out);
        set(&mut cfg.dict, &self.dict);
        set(&mut cfg.input, &self.input);
        set(&mut cfg.image, &self.image);
        set(&mut cfg.endmembers, &self.endmembers);
        set(&mut cfg.truth, &self.truth);
        set(&mut cfg.results, &self.results);
        set(&mut cfg.checkpoint, &self.checkpoint);
        cfg.strict |= self.strict;
        cfg.learn |= self.learn;
        if self.no_wall_time {
            cfg.record_wall_time = false;
        }
        if let Some(l) = self.lambda {
            cfg.lambda_sparse = l;
        }
        if let Some(l) = self.num_atoms {
            cfg.solver.num_atoms = l;
        }
        if let Some(n) = self.max_iter {
            cfg.solver.max_iter = n;
        }
        if let Some(id) = &self.run_id {
            cfg.run_id = Some(id.clone());
        }
        if let Some(r) = &self.range {
            cfg.display_range = [r[0], r[1]];
        }
        if let Some(r) = &self.raster {
            cfg.raster = Some([r[0], r[1]]);
        }
        Ok(cfg)
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // A pool that is already initialized keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    let cfg = cli.flags.resolve()?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Unmix => commands::cmd_unmix(&cfg),
        Command::Learn => commands::cmd_learn(&cfg),
        Command::Eval => commands::cmd_eval(&cfg),
        Command::Render => commands::cmd_render(&cfg),
    }
}
