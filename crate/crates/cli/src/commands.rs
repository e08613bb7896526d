use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use almm_core::baselines::{unmix_clsu, unmix_fclsu, unmix_sclsu, unmix_ssunsal, unmix_sunsal};
use almm_core::io::{self, atomic_write};
use almm_core::metrics::{argmax_labels, armse, asam, overall_accuracy, rrmse, ReportRecord};
use almm_core::model::{
    reconstruct, AbundanceMatrix, EndmemberDictionary, HyperspectralImage, ScalingFactors,
    VariabilityCoefficients, VariabilityDictionary,
};
use almm_core::su::unmix_image_almm;
use almm_core::svdl::{learn_svdl_observed, svdl_diagnostics};
use almm_core::synthetic::{generate_scene, SceneSpec};
use almm_core::{PixelStatus, Unmixing};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{Model, RunConfig};
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGE_FILE: &str = "Y.bin";
pub const TRUTH_FILE: &str = "X_true.bin";
pub const ENDMEMBERS_FILE: &str = "A_true.bin";
pub const SCALES_FILE: &str = "scales.bin";

pub const ABUNDANCES_FILE: &str = "X_hat.bin";
pub const SCALE_ESTIMATE_FILE: &str = "S_hat.bin";
pub const COEFFICIENTS_FILE: &str = "B_hat.bin";
pub const DICTIONARY_FILE: &str = "E.bin";
pub const STATUS_FILE: &str = "status.bin";
pub const RUN_FILE: &str = "run.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFiles {
    pub image: String,
    pub abundances: String,
    pub endmembers: String,
    pub scales: String,
}

/// Written next to a simulated scene; records the fully resolved spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub format_version: u32,
    pub spec: SceneSpec,
    pub rows: usize,
    pub cols: usize,
    pub num_bands: usize,
    pub num_endmembers: usize,
    pub files: BundleFiles,
}

impl SceneManifest {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// Summary of an unmixing run, stored beside its estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub run_id: String,
    pub algorithm: String,
    pub converged: usize,
    pub not_converged: usize,
    pub degenerate: usize,
    pub wall_ms: f64,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    Ok(atomic_write(path, text.as_bytes())?)
}

fn create_out_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = cfg.out_dir()?.to_path_buf();
    fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} file {} does not exist", path.display())))
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    let out = create_out_dir(cfg)?;
    let scene = generate_scene(&cfg.scene)?;
    let manifest = SceneManifest {
        format_version: MANIFEST_VERSION,
        spec: cfg.scene.clone(),
        rows: cfg.scene.rows,
        cols: cfg.scene.cols,
        num_bands: cfg.scene.num_bands,
        num_endmembers: cfg.scene.num_endmembers,
        files: BundleFiles {
            image: IMAGE_FILE.into(),
            abundances: TRUTH_FILE.into(),
            endmembers: ENDMEMBERS_FILE.into(),
            scales: SCALES_FILE.into(),
        },
    };
    io::write_matrix(&out.join(IMAGE_FILE), scene.image.data())?;
    io::write_matrix(&out.join(TRUTH_FILE), scene.abundances.data())?;
    io::write_matrix(&out.join(ENDMEMBERS_FILE), scene.endmembers.data())?;
    io::write_matrix(&out.join(SCALES_FILE), &scene.scales)?;
    write_json(&out.join(MANIFEST_FILE), &manifest)
}

struct InputPaths {
    image: PathBuf,
    endmembers: PathBuf,
    truth: Option<PathBuf>,
    manifest: Option<SceneManifest>,
}

fn resolve_inputs(cfg: &RunConfig, need_image: bool) -> CliResult<InputPaths> {
    let manifest = match &cfg.input {
        Some(dir) => Some(SceneManifest::load(dir).map_err(|e| match e {
            CliError::Data(msg) => CliError::Config(format!("input bundle: {msg}")),
            other => other,
        })?),
        None => None,
    };
    let from_bundle = |name: Option<&String>| -> Option<PathBuf> {
        cfg.input.as_ref().zip(name).map(|(dir, f)| dir.join(f))
    };
    let files = manifest.as_ref().map(|m| &m.files);
    let image = cfg
        .image
        .clone()
        .or_else(|| from_bundle(files.map(|f| &f.image)))
        .ok_or_else(|| CliError::Config("no image; pass --input BUNDLE or --image FILE".into()))?;
    let endmembers = cfg
        .endmembers
        .clone()
        .or_else(|| from_bundle(files.map(|f| &f.endmembers)))
        .ok_or_else(|| CliError::Config("no endmembers; pass --input BUNDLE or --endmembers FILE".into()))?;
    let truth = cfg.truth.clone().or_else(|| from_bundle(files.map(|f| &f.abundances)));
    if need_image {
        require_file(&image, "image")?;
    }
    require_file(&endmembers, "endmember")?;
    if let Some(t) = &truth {
        require_file(t, "ground-truth abundance")?;
    }
    Ok(InputPaths { image, endmembers, truth, manifest })
}

struct Inputs {
    image: HyperspectralImage,
    endmembers: EndmemberDictionary,
    truth: Option<AbundanceMatrix>,
    run_id: String,
}

fn load_inputs(cfg: &RunConfig, paths: &InputPaths) -> CliResult<Inputs> {
    let mut image = HyperspectralImage::new(io::read_matrix_any(&paths.image)?)?;
    if let Some(m) = &paths.manifest {
        image = image.with_spatial(m.rows, m.cols)?;
    }
    let endmembers = EndmemberDictionary::new(io::read_matrix_any(&paths.endmembers)?)?;
    let truth = match &paths.truth {
        Some(p) => Some(AbundanceMatrix::new(io::read_matrix_any(p)?, false)?),
        None => None,
    };
    let seed = paths.manifest.as_ref().map_or(cfg.solver.rng_seed, |m| m.spec.rng_seed);
    let run_id = cfg.run_id.clone().unwrap_or_else(|| format!("seed-{seed}"));
    Ok(Inputs { image, endmembers, truth, run_id })
}

/// Estimates plus whatever the model produced beyond abundances.
struct Estimate {
    unmixing: Unmixing,
    dictionary: Option<VariabilityDictionary>,
    wall_ms: f64,
}

fn run_model(cfg: &RunConfig, inputs: &Inputs, out: &Path) -> CliResult<Estimate> {
    let (image, a) = (&inputs.image, &inputs.endmembers);
    let start = Instant::now();
    let (unmixing, dictionary) = match cfg.model {
        Model::Fclsu => (unmix_fclsu(image, a)?, None),
        Model::Clsu => (unmix_clsu(image, a)?, None),
        Model::Sclsu => (unmix_sclsu(image, a)?, None),
        Model::Sunsal => (unmix_sunsal(image, a, cfg.lambda_sparse, &cfg.solver)?, None),
        Model::Ssunsal => (unmix_ssunsal(image, a, cfg.lambda_sparse, &cfg.solver)?, None),
        Model::Almm => match (&cfg.dict, cfg.learn) {
            (_, true) => {
                let checkpoint = cfg.checkpoint.clone();
                let learned = learn_svdl_observed(image, a, &cfg.solver, |state| match &checkpoint {
                    Some(dir) => io::write_svdl_checkpoint(dir, state),
                    None => Ok(()),
                })?;
                let diag = io::encode_diagnostics(svdl_diagnostics(&learned.state))?;
                atomic_write(&out.join(DIAGNOSTICS_FILE), &diag)?;
                let unmixing = Unmixing {
                    abundances: learned.abundances,
                    scales: Some(learned.scales),
                    coefficients: Some(learned.coefficients),
                    status: learned.status,
                };
                (unmixing, Some(learned.dictionary))
            }
            (Some(path), false) => {
                let e = VariabilityDictionary::new(io::read_matrix_any(path)?)?;
                (unmix_image_almm(image, a, &e, &cfg.solver)?, None)
            }
            (None, false) => return Err(missing_dictionary()),
        },
    };
    let wall_ms = if cfg.record_wall_time {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(Estimate { unmixing, dictionary, wall_ms })
}

fn missing_dictionary() -> CliError {
    CliError::Config(
        "--model almm needs a variability dictionary: run `almm learn` first and pass --dict E.bin, or pass --learn".into(),
    )
}

fn status_matrix(status: &[PixelStatus]) -> DMatrix<f64> {
    DMatrix::from_fn(1, status.len(), |_, k| f64::from(status[k].as_code()))
}

fn summary(run_id: &str, algorithm: &str, est: &Estimate) -> RunSummary {
    let u = &est.unmixing;
    RunSummary {
        run_id: run_id.to_owned(),
        algorithm: algorithm.to_owned(),
        converged: u.count(PixelStatus::Converged),
        not_converged: u.count(PixelStatus::NotConverged),
        degenerate: u.count(PixelStatus::Degenerate),
        wall_ms: est.wall_ms,
    }
}

/// Metrics of an estimate against ground truth and the observed image.
#[allow(clippy::too_many_arguments)]
fn report(
    run_id: &str,
    algorithm: &str,
    wall_ms: f64,
    image: Option<&HyperspectralImage>,
    endmembers: Option<&EndmemberDictionary>,
    truth: Option<&AbundanceMatrix>,
    x: &AbundanceMatrix,
    scales: Option<&ScalingFactors>,
    dictionary: Option<&VariabilityDictionary>,
    coefficients: Option<&VariabilityCoefficients>,
) -> CliResult<ReportRecord> {
    let mut record = ReportRecord {
        run_id: run_id.to_owned(),
        algorithm: algorithm.to_owned(),
        armse: None,
        rrmse: None,
        asam: None,
        oa: None,
        wall_ms,
    };
    if let Some(t) = truth {
        record.armse = Some(armse(t.data(), x.data())?);
        record.oa = Some(overall_accuracy(&argmax_labels(t.data()), x)?);
    }
    if let (Some(y), Some(a)) = (image, endmembers) {
        let n = x.num_pixels();
        let ones = ScalingFactors::ones(n);
        let empty_e = VariabilityDictionary::empty(a.num_bands());
        let empty_b = VariabilityCoefficients::empty(n);
        let (e, b) = match (dictionary, coefficients) {
            (Some(e), Some(b)) => (e, b),
            _ => (&empty_e, &empty_b),
        };
        let y_hat = reconstruct(a, x, scales.unwrap_or(&ones), e, b)?;
        record.rrmse = Some(rrmse(y.data(), &y_hat)?);
        record.asam = Some(asam(y.data(), &y_hat)?);
    }
    Ok(record)
}

fn write_estimate(out: &Path, est: &Estimate) -> CliResult<()> {
    let u = &est.unmixing;
    io::write_matrix(&out.join(ABUNDANCES_FILE), u.abundances.data())?;
    if let Some(s) = &u.scales {
        let v = s.values();
        io::write_matrix(&out.join(SCALE_ESTIMATE_FILE), &DMatrix::from_row_slice(1, v.len(), v.as_slice()))?;
    }
    if let Some(b) = &u.coefficients {
        io::write_matrix(&out.join(COEFFICIENTS_FILE), b.data())?;
    }
    if let Some(e) = &est.dictionary {
        io::write_matrix(&out.join(DICTIONARY_FILE), e.data())?;
    }
    io::write_matrix(&out.join(STATUS_FILE), &status_matrix(&u.status))?;
    Ok(())
}

fn unmix_and_write(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    if cfg.model == Model::Almm && cfg.dict.is_none() && !cfg.learn {
        return Err(missing_dictionary());
    }
    if let (Model::Almm, Some(dict), false) = (cfg.model, &cfg.dict, cfg.learn) {
        require_file(dict, "variability dictionary")?;
    }
    let paths = resolve_inputs(cfg, true)?;
    let out = create_out_dir(cfg)?;
    let inputs = load_inputs(cfg, &paths)?;

    let est = run_model(cfg, &inputs, &out)?;
    write_estimate(&out, &est)?;
    let algorithm = cfg.model.name();
    write_json(&out.join(RUN_FILE), &summary(&inputs.run_id, algorithm, &est))?;

    if inputs.truth.is_some() {
        let u = &est.unmixing;
        let fixed_e = match (&cfg.dict, cfg.learn) {
            (Some(path), false) if cfg.model == Model::Almm => Some(VariabilityDictionary::new(io::read_matrix_any(path)?)?),
            _ => None,
        };
        let record = report(
            &inputs.run_id,
            algorithm,
            est.wall_ms,
            Some(&inputs.image),
            Some(&inputs.endmembers),
            inputs.truth.as_ref(),
            &u.abundances,
            u.scales.as_ref(),
            est.dictionary.as_ref().or(fixed_e.as_ref()),
            u.coefficients.as_ref(),
        )?;
        io::write_reports(&out.join(METRICS_FILE), &[record])?;
    }

    let stalled = est.unmixing.count(PixelStatus::NotConverged);
    if cfg.strict && stalled > 0 {
        return Err(CliError::Numerical(format!(
            "{stalled} pixel(s) did not converge within {} iterations",
            cfg.solver.max_iter
        )));
    }
    Ok(())
}

pub fn cmd_unmix(cfg: &RunConfig) -> CliResult<()> {
    unmix_and_write(cfg)
}

pub fn cmd_learn(cfg: &RunConfig) -> CliResult<()> {
    let cfg = RunConfig {
        model: Model::Almm,
        learn: true,
        ..cfg.clone()
    };
    unmix_and_write(&cfg)
}

fn read_optional(path: &Path) -> CliResult<Option<DMatrix<f64>>> {
    if path.is_file() {
        Ok(Some(io::read_matrix(path)?))
    } else {
        Ok(None)
    }
}

fn results_dir(cfg: &RunConfig) -> CliResult<&Path> {
    let dir = cfg
        .results
        .as_deref()
        .ok_or_else(|| CliError::Config("no results directory; pass --results DIR".into()))?;
    require_file(&dir.join(ABUNDANCES_FILE), "abundance estimate")?;
    Ok(dir)
}

pub fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    let results = results_dir(cfg)?;
    let paths = resolve_inputs(cfg, false)?;
    let truth_path = paths
        .truth
        .as_ref()
        .ok_or_else(|| CliError::Config("eval needs ground truth; pass --truth FILE or an --input bundle".into()))?;
    let out = create_out_dir(cfg)?;

    let x = AbundanceMatrix::new(io::read_matrix(&results.join(ABUNDANCES_FILE))?, false)?;
    let truth = AbundanceMatrix::new(io::read_matrix_any(truth_path)?, false)?;
    let image = if paths.image.is_file() {
        Some(HyperspectralImage::new(io::read_matrix_any(&paths.image)?)?)
    } else {
        None
    };
    let endmembers = EndmemberDictionary::new(io::read_matrix_any(&paths.endmembers)?)?;
    let scales = read_optional(&results.join(SCALE_ESTIMATE_FILE))?
        .map(|m| ScalingFactors::new(m.row(0).transpose()))
        .transpose()?;
    let dictionary = read_optional(&results.join(DICTIONARY_FILE))?
        .or(match &cfg.dict {
            Some(p) => Some(io::read_matrix_any(p)?),
            None => None,
        })
        .map(VariabilityDictionary::new)
        .transpose()?;
    let coefficients = read_optional(&results.join(COEFFICIENTS_FILE))?
        .map(VariabilityCoefficients::new)
        .transpose()?;

    let run_path = results.join(RUN_FILE);
    let summary: Option<RunSummary> = if run_path.is_file() {
        let text = fs::read_to_string(&run_path).map_err(|e| CliError::Data(e.to_string()))?;
        Some(serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", run_path.display())))?)
    } else {
        None
    };
    let run_id = cfg
        .run_id
        .clone()
        .or_else(|| summary.as_ref().map(|s| s.run_id.clone()))
        .unwrap_or_else(|| "eval".into());
    let algorithm = summary.as_ref().map_or("unknown".to_owned(), |s| s.algorithm.clone());
    let wall_ms = summary.as_ref().map_or(0.0, |s| s.wall_ms);

    let record = report(
        &run_id,
        &algorithm,
        wall_ms,
        image.as_ref(),
        Some(&endmembers),
        Some(&truth),
        &x,
        scales.as_ref(),
        dictionary.as_ref(),
        coefficients.as_ref(),
    )?;
    io::write_reports(&out.join(METRICS_FILE), &[record])?;
    Ok(())
}

pub fn cmd_render(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    let source = match (&cfg.results, &cfg.truth, &cfg.input) {
        (Some(_), _, _) => results_dir(cfg)?.join(ABUNDANCES_FILE),
        (None, Some(t), _) => t.clone(),
        (None, None, Some(dir)) => dir.join(TRUTH_FILE),
        _ => return Err(CliError::Config("nothing to render; pass --results DIR or --truth FILE".into())),
    };
    require_file(&source, "abundance")?;
    let (rows, cols) = match (cfg.raster, &cfg.input) {
        (Some([r, c]), _) => (r, c),
        (None, Some(dir)) => {
            let m = SceneManifest::load(dir)?;
            (m.rows, m.cols)
        }
        (None, None) => return Err(CliError::Config("unknown raster size; pass --raster ROWS COLS or --input BUNDLE".into())),
    };
    let out = create_out_dir(cfg)?;
    let x = io::read_matrix_any(&source)?;
    if rows * cols != x.ncols() {
        return Err(CliError::Data(format!(
            "raster {rows}x{cols} does not match {} pixels in {}",
            x.ncols(),
            source.display()
        )));
    }
    let [lo, hi] = cfg.display_range;
    for (p, row) in x.row_iter().enumerate() {
        let values: Vec<f64> = row.iter().copied().collect();
        io::write_pgm(&out.join(format!("abundance_{p}.pgm")), &values, rows, cols, lo, hi)?;
    }
    Ok(())
}
