//! Seeded synthetic scenes: smooth Gaussian-bump endmembers, smooth random
//! abundance maps, per-pixel per-endmember scaling, and two noise stages
//! (on the scaled signatures, then on the mixed image).
//!
//! Every stage draws from its own ChaCha stream of the scene seed, so scenes
//! that differ only in `snr_db` share all random draws.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::spectral_angle;
use crate::model::{AbundanceMatrix, EndmemberDictionary, HyperspectralImage};

/// Minimum pairwise spectral angle between generated endmembers, radians.
pub const MIN_ENDMEMBER_ANGLE: f64 = 0.1;

const MAX_REJECTIONS: usize = 10_000;

/// Final-stage noise model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// White Gaussian noise at `snr_db`.
    #[default]
    White,
    /// Equal-weight mixture of one to three Gaussians whose means and
    /// variances are drawn uniformly from [0, 0.01]; ignores `snr_db`.
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub num_bands: usize,
    pub num_endmembers: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    /// SNR of both noise stages; `None` generates a noise-free scene.
    pub snr_db: Option<f64>,
    /// Standard deviation, in pixels, of the Gaussian smoothing kernel; 0
    /// leaves the fields white.
    pub smoothness: f64,
    /// Standard deviation of the standardized fields before the softmax;
    /// larger values give purer pixels.
    pub contrast: f64,
    /// Draw one scale per pixel shared by all endmembers.
    pub shared_scale: bool,
    pub noise: NoiseModel,
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            rows: 200,
            cols: 200,
            num_bands: 224,
            num_endmembers: 5,
            scale_min: 0.75,
            scale_max: 1.25,
            snr_db: Some(25.0),
            smoothness: 10.0,
            contrast: 3.0,
            shared_scale: false,
            noise: NoiseModel::White,
            rng_seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn num_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("scene needs at least one row and column".into()));
        }
        if self.num_bands == 0 || self.num_endmembers == 0 {
            return Err(Error::Config("num_bands and num_endmembers must be positive".into()));
        }
        if self.num_endmembers > self.num_bands {
            return Err(Error::Config(format!(
                "num_endmembers ({}) cannot exceed num_bands ({})",
                self.num_endmembers, self.num_bands
            )));
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < scale_min <= scale_max, got {} and {}",
                self.scale_min, self.scale_max
            )));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::Config(format!("snr_db must be finite, got {snr}; use null for no noise")));
            }
        }
        if !(self.smoothness >= 0.0 && self.smoothness.is_finite()) {
            return Err(Error::Config(format!("smoothness must be >= 0, got {}", self.smoothness)));
        }
        if !(self.contrast > 0.0 && self.contrast.is_finite()) {
            return Err(Error::Config(format!("contrast must be > 0, got {}", self.contrast)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Stage {
    Endmembers = 0,
    Abundances = 1,
    Scales = 2,
    SignatureNoise = 3,
    ImageNoise = 4,
}

fn stage_rng(spec: &SceneSpec, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    rng.set_stream(stage as u64);
    rng
}

/// Smooth nonnegative spectra built from 3–6 Gaussian bumps over a small
/// baseline, with peak in [0.5, 1] and pairwise angles of at least
/// [`MIN_ENDMEMBER_ANGLE`].
pub fn generate_endmembers(spec: &SceneSpec) -> Result<EndmemberDictionary> {
    spec.validate()?;
    let d = spec.num_bands;
    let mut rng = stage_rng(spec, Stage::Endmembers);
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(spec.num_endmembers);
    let mut rejections = 0;
    while accepted.len() < spec.num_endmembers {
        let candidate = random_spectrum(d, &mut rng);
        let distinct = accepted.iter().all(|a| {
            spectral_angle(a.as_view(), candidate.as_view()).is_some_and(|t| t >= MIN_ENDMEMBER_ANGLE)
        });
        if distinct {
            accepted.push(candidate);
        } else {
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(Error::InvalidInput(format!(
                    "could not draw {} endmembers with pairwise angle >= {MIN_ENDMEMBER_ANGLE} over {d} bands",
                    spec.num_endmembers
                )));
            }
        }
    }
    EndmemberDictionary::new(DMatrix::from_columns(&accepted))
}

fn random_spectrum(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let bumps = rng.random_range(3..=6);
    let span = d as f64;
    let mut v = DVector::from_element(d, rng.random_range(0.0..0.05));
    for _ in 0..bumps {
        let center = rng.random_range(0.0..span);
        let width = rng.random_range(span / 40.0..span / 5.0).max(0.5);
        let height = rng.random_range(0.2..1.0);
        for (i, value) in v.iter_mut().enumerate() {
            let z = (i as f64 - center) / width;
            *value += height * (-0.5 * z * z).exp();
        }
    }
    let peak = v.max();
    v * (rng.random_range(0.5..1.0) / peak)
}

/// Ground-truth abundances: per-endmember white-noise maps smoothed by a
/// Gaussian kernel, standardized, multiplied by `contrast` and pushed
/// through a per-pixel softmax. Pixel `k` sits at row `k / cols`.
pub fn generate_abundances(spec: &SceneSpec) -> Result<AbundanceMatrix> {
    spec.validate()?;
    let (rows, cols, p) = (spec.rows, spec.cols, spec.num_endmembers);
    let mut rng = stage_rng(spec, Stage::Abundances);
    let mut logits = DMatrix::zeros(p, rows * cols);
    for e in 0..p {
        let white: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
        let field = standardize(gaussian_blur(&white, rows, cols, spec.smoothness));
        for (k, v) in field.into_iter().enumerate() {
            logits[(e, k)] = spec.contrast * v;
        }
    }
    for mut col in logits.column_iter_mut() {
        let top = col.max();
        col.apply(|v| *v = (*v - top).exp());
        let total = col.sum();
        col /= total;
    }
    AbundanceMatrix::new(logits, true)
}

fn standardize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let std = if std > 0.0 { std } else { 1.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) / std);
    v
}

/// Separable Gaussian blur with symmetric (mirror) boundaries.
fn gaussian_blur(field: &[f64], rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return field.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|w| w / norm).collect();

    let reflect = |i: isize, n: usize| -> usize {
        let n = n as isize;
        let period = 2 * n;
        let mut j = i.rem_euclid(period);
        if j >= n {
            j = period - 1 - j;
        }
        j as usize
    };

    let mut horizontal = vec![0.0; field.len()];
    for r in 0..rows {
        for c in 0..cols {
            horizontal[r * cols + c] = kernel
                .iter()
                .enumerate()
                .map(|(t, w)| w * field[r * cols + reflect(c as isize + t as isize - radius, cols)])
                .sum();
        }
    }
    let mut out = vec![0.0; field.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = kernel
                .iter()
                .enumerate()
                .map(|(t, w)| w * horizontal[reflect(r as isize + t as isize - radius, rows) * cols + c])
                .sum();
        }
    }
    out
}

/// Standard deviation of white noise that gives `m` the requested SNR.
pub fn noise_sigma(m: &DMatrix<f64>, snr_db: f64) -> Result<f64> {
    let power = m.norm_squared();
    if power == 0.0 {
        return Err(Error::InvalidInput("SNR is undefined for an all-zero signal".into()));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidInput(format!("invalid SNR {snr_db} dB")));
    }
    Ok((power / (m.len() as f64 * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `m + W` with `W` i.i.d. zero-mean Gaussian scaled to `snr_db`. Positive
/// infinity returns `m` unchanged.
pub fn add_noise_snr<R: Rng + ?Sized>(m: &DMatrix<f64>, snr_db: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let sigma = noise_sigma(m, snr_db)?;
    if snr_db == f64::INFINITY {
        return Ok(m.clone());
    }
    Ok(m.map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal)))
}

/// Realized SNR of `noisy` relative to `clean`, in dB.
pub fn measured_snr_db(clean: &DMatrix<f64>, noisy: &DMatrix<f64>) -> f64 {
    10.0 * (clean.norm_squared() / (noisy - clean).norm_squared()).log10()
}

fn add_mixture_noise(m: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let components: Vec<Normal<f64>> = (0..rng.random_range(1..=3))
        .map(|_| {
            let mean = rng.random_range(0.0..=0.01);
            let var: f64 = rng.random_range(0.0..=0.01);
            Normal::new(mean, var.sqrt()).map_err(|e| Error::InvalidInput(e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok(m.map(|v| {
        let c = &components[rng.random_range(0..components.len())];
        v + c.sample(rng)
    }))
}

/// A generated scene with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub image: HyperspectralImage,
    pub abundances: AbundanceMatrix,
    pub endmembers: EndmemberDictionary,
    /// P×N factors `c_kp` applied to endmember `p` in pixel `k`.
    pub scales: DMatrix<f64>,
    /// Noise-free mixture of the (noisy, scaled) signatures, before the
    /// image noise stage.
    pub clean: DMatrix<f64>,
}

impl SyntheticScene {
    /// Argmax class of every ground-truth abundance column.
    pub fn labels(&self) -> Vec<Option<usize>> {
        crate::metrics::argmax_labels(self.abundances.data())
    }
}

/// Generates the full scene: `y_k = (A·diag(c_k) + W_k)·x_k + n_k`.
pub fn generate_scene(spec: &SceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let endmembers = generate_endmembers(spec)?;
    let abundances = generate_abundances(spec)?;
    let (d, p, n) = (spec.num_bands, spec.num_endmembers, spec.num_pixels());
    let a = endmembers.data();
    let x = abundances.data();

    let mut scale_rng = stage_rng(spec, Stage::Scales);
    let mut draw_scale = || {
        if spec.scale_min == spec.scale_max {
            spec.scale_min
        } else {
            scale_rng.random_range(spec.scale_min..=spec.scale_max)
        }
    };
    let scales = if spec.shared_scale {
        let per_pixel: Vec<f64> = (0..n).map(|_| draw_scale()).collect();
        DMatrix::from_fn(p, n, |_, k| per_pixel[k])
    } else {
        DMatrix::from_fn(p, n, |_, _| draw_scale())
    };

    // Signature noise: σ is set from the power of all scaled signatures
    // together, then every pixel's signatures get independent draws.
    let sig_sigma = match spec.snr_db {
        Some(snr) => {
            let norms: Vec<f64> = a.column_iter().map(|c| c.norm_squared()).collect();
            let power: f64 = scales
                .column_iter()
                .map(|c| c.iter().zip(&norms).map(|(s, a2)| s * s * a2).sum::<f64>())
                .sum();
            (power / ((d * p * n) as f64 * 10f64.powf(snr / 10.0))).sqrt()
        }
        None => 0.0,
    };
    let mut sig_rng = stage_rng(spec, Stage::SignatureNoise);
    let mut clean = DMatrix::zeros(d, n);
    let mut signatures = DMatrix::zeros(d, p);
    for k in 0..n {
        for j in 0..p {
            let c = scales[(j, k)];
            for i in 0..d {
                let noise = if sig_sigma > 0.0 {
                    sig_sigma * sig_rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                signatures[(i, j)] = c * a[(i, j)] + noise;
            }
        }
        clean.set_column(k, &(&signatures * x.column(k)));
    }

    let mut img_rng = stage_rng(spec, Stage::ImageNoise);
    let y = match (spec.noise, spec.snr_db) {
        (NoiseModel::Mixture, _) => add_mixture_noise(&clean, &mut img_rng)?,
        (NoiseModel::White, Some(snr)) => add_noise_snr(&clean, snr, &mut img_rng)?,
        (NoiseModel::White, None) => clean.clone(),
    };
    let image = HyperspectralImage::new(y)?.with_spatial(spec.rows, spec.cols)?;
    Ok(SyntheticScene {
        spec: spec.clone(),
        image,
        abundances,
        endmembers,
        scales,
        clean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SceneSpec {
        SceneSpec { rows: 20, cols: 25, num_bands: 40, rng_seed: seed, ..SceneSpec::default() }
    }

    #[test]
    fn endmembers_shape_range_and_separation() {
        let spec = small(1);
        let a = generate_endmembers(&spec).unwrap();
        assert_eq!(a.data().shape(), (40, 5));
        assert!(a.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        for i in 0..5 {
            for j in 0..i {
                let t = spectral_angle(a.data().column(i), a.data().column(j)).unwrap();
                assert!(t >= MIN_ENDMEMBER_ANGLE);
            }
        }
        assert_eq!(a, generate_endmembers(&spec).unwrap());
        assert_ne!(a, generate_endmembers(&small(2)).unwrap());
    }

    #[test]
    fn abundances_on_open_simplex() {
        let x = generate_abundances(&small(3)).unwrap();
        for c in x.data().column_iter() {
            assert!((c.sum() - 1.0).abs() < 1e-12);
            assert!(c.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    fn lag1_autocorrelation(x: &DMatrix<f64>, rows: usize, cols: usize) -> f64 {
        let mut total = 0.0;
        for field in x.row_iter() {
            let mean = field.mean();
            let var: f64 = field.iter().map(|v| (v - mean).powi(2)).sum();
            let mut cov = 0.0;
            for r in 0..rows {
                for c in 0..cols - 1 {
                    cov += (field[r * cols + c] - mean) * (field[r * cols + c + 1] - mean);
                }
            }
            total += cov / var;
        }
        total / x.nrows() as f64
    }

    #[test]
    fn smoothing_raises_spatial_autocorrelation() {
        let smooth = SceneSpec { smoothness: 3.0, ..small(4) };
        let white = SceneSpec { smoothness: 0.0, ..small(4) };
        let rho_s = lag1_autocorrelation(generate_abundances(&smooth).unwrap().data(), 20, 25);
        let rho_w = lag1_autocorrelation(generate_abundances(&white).unwrap().data(), 20, 25);
        assert!(rho_s > 0.5, "{rho_s}");
        assert!(rho_w.abs() < 0.2, "{rho_w}");
    }

    #[test]
    fn blur_preserves_constants() {
        let out = gaussian_blur(&[2.0; 35], 5, 7, 1.5);
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn noise_guards() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = DMatrix::from_element(3, 3, 0.5);
        assert_eq!(add_noise_snr(&m, f64::INFINITY, &mut rng).unwrap(), m);
        assert!(add_noise_snr(&DMatrix::zeros(3, 3), 25.0, &mut rng).is_err());
        assert!(add_noise_snr(&m, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn realized_snr_within_half_db() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DMatrix::from_fn(100, 200, |i, j| ((i * 7 + j * 3) % 11) as f64 / 10.0 + 0.1);
        for snr in [5.0, 25.0, 40.0] {
            let noisy = add_noise_snr(&m, snr, &mut rng).unwrap();
            assert!((measured_snr_db(&m, &noisy) - snr).abs() <= 0.5);
        }
    }

    #[test]
    fn noise_free_unit_scale_is_lmm() {
        let spec = SceneSpec { scale_min: 1.0, scale_max: 1.0, snr_db: None, ..small(6) };
        let scene = generate_scene(&spec).unwrap();
        let expected = scene.endmembers.data() * scene.abundances.data();
        assert!((scene.image.data() - expected).amax() < 1e-14);
    }

    #[test]
    fn scales_within_range_and_deterministic() {
        let scene = generate_scene(&small(7)).unwrap();
        assert!(scene.scales.iter().all(|&c| (0.75..=1.25).contains(&c)));
        assert_eq!(scene, generate_scene(&small(7)).unwrap());
        assert_eq!(scene.image.spatial(), Some((20, 25)));
    }

    #[test]
    fn snr_sweep_shares_draws() {
        let lo = generate_scene(&SceneSpec { snr_db: Some(10.0), ..small(8) }).unwrap();
        let hi = generate_scene(&SceneSpec { snr_db: Some(30.0), ..small(8) }).unwrap();
        assert_eq!(lo.abundances, hi.abundances);
        assert_eq!(lo.scales, hi.scales);
        // same standard-normal draws, different amplitude
        let n_lo = lo.image.data() - &lo.clean;
        let n_hi = hi.image.data() - &hi.clean;
        let ratio = n_lo.norm() / n_hi.norm();
        assert!(ratio > 5.0);
    }

    #[test]
    fn image_stage_snr_on_default_bands() {
        let spec = SceneSpec { rows: 30, cols: 30, ..SceneSpec::default() };
        let scene = generate_scene(&spec).unwrap();
        assert!((measured_snr_db(&scene.clean, scene.image.data()) - 25.0).abs() <= 0.5);
    }

    #[test]
    fn shared_scale_is_constant_per_pixel() {
        let scene = generate_scene(&SceneSpec { shared_scale: true, ..small(9) }).unwrap();
        for c in scene.scales.column_iter() {
            assert!(c.iter().all(|&v| v == c[0]));
        }
    }

    #[test]
    fn mixture_noise_is_bounded_and_seeded() {
        let spec = SceneSpec { noise: NoiseModel::Mixture, ..small(10) };
        let a = generate_scene(&spec).unwrap();
        assert_eq!(a, generate_scene(&spec).unwrap());
        let diff = a.image.data() - &a.clean;
        let mean = diff.mean();
        assert!((0.0..=0.011).contains(&mean), "{mean}");
    }

    #[test]
    fn spec_validation_and_strict_json() {
        assert!(SceneSpec { num_endmembers: 50, num_bands: 10, ..SceneSpec::default() }.validate().is_err());
        assert!(SceneSpec { scale_min: 0.0, ..SceneSpec::default() }.validate().is_err());
        assert!(SceneSpec { snr_db: Some(f64::INFINITY), ..SceneSpec::default() }.validate().is_err());
        let spec: SceneSpec = serde_json::from_str(r#"{"rows": 4, "snr_db": null}"#).unwrap();
        assert_eq!(spec.rows, 4);
        assert_eq!(spec.snr_db, None);
        assert!(serde_json::from_str::<SceneSpec>(r#"{"rowz": 4}"#).is_err());
        let back: SceneSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
