use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries of an abundance estimate at or above this value are clamped to zero;
/// anything more negative is rejected.
pub const NEGATIVE_ABUNDANCE_SLACK: f64 = 1e-12;

/// Column-sum tolerance for sum-to-one abundance matrices.
pub const ASC_TOLERANCE: f64 = 1e-9;

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// A band-by-pixel observation matrix (D x N).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperspectralImage {
    data: DMatrix<f64>,
    spatial: Option<(usize, usize)>,
    wavelengths: Option<Vec<f64>>,
}

impl HyperspectralImage {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput(
                "hyperspectral image needs at least one band and one pixel".into(),
            ));
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("hyperspectral image"));
        }
        Ok(Self {
            data,
            spatial: None,
            wavelengths: None,
        })
    }

    /// Attach a raster layout; pixel `k` sits at row `k / cols`, column `k % cols`.
    pub fn with_spatial(mut self, rows: usize, cols: usize) -> Result<Self> {
        if rows * cols != self.num_pixels() {
            return Err(Error::InvalidInput(format!(
                "spatial dims {rows}x{cols} do not cover {} pixels",
                self.num_pixels()
            )));
        }
        self.spatial = Some((rows, cols));
        Ok(self)
    }

    pub fn with_wavelengths(mut self, wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != self.num_bands() {
            return Err(Error::InvalidInput(format!(
                "{} wavelengths for {} bands",
                wavelengths.len(),
                self.num_bands()
            )));
        }
        self.wavelengths = Some(wavelengths);
        Ok(self)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn num_bands(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_pixels(&self) -> usize {
        self.data.ncols()
    }

    pub fn spatial(&self) -> Option<(usize, usize)> {
        self.spatial
    }

    pub fn wavelengths(&self) -> Option<&[f64]> {
        self.wavelengths.as_deref()
    }

    pub fn pixel(&self, k: usize) -> DVector<f64> {
        self.data.column(k).into_owned()
    }
}

/// Endmember signatures stored column-wise (D x P).
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberDictionary {
    data: DMatrix<f64>,
    names: Option<Vec<String>>,
}

impl EndmemberDictionary {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::InvalidInput(
                "endmember dictionary needs at least one band and one endmember".into(),
            ));
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("endmember dictionary"));
        }
        if data.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(
                "endmember signatures must be nonnegative".into(),
            ));
        }
        if let Some(index) = data.column_iter().position(|c| c.iter().all(|&v| v == 0.0)) {
            return Err(Error::ZeroColumn {
                what: "endmember dictionary",
                index,
            });
        }
        Ok(Self { data, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_endmembers() {
            return Err(Error::InvalidInput(format!(
                "{} names for {} endmembers",
                names.len(),
                self.num_endmembers()
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn num_bands(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_endmembers(&self) -> usize {
        self.data.ncols()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }
}

/// Fractional abundances (P x N). `asc_normalized` records whether the
/// non-degenerate columns sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceMatrix {
    data: DMatrix<f64>,
    asc_normalized: bool,
}

impl AbundanceMatrix {
    /// Validates and clamps tiny negatives (down to `-1e-12`) to zero. All-zero
    /// columns are accepted in sum-to-one matrices: they mark degenerate pixels.
    pub fn new(mut data: DMatrix<f64>, asc_normalized: bool) -> Result<Self> {
        if !all_finite(&data) {
            return Err(Error::NonFinite("abundance matrix"));
        }
        for v in data.iter_mut() {
            if *v < -NEGATIVE_ABUNDANCE_SLACK {
                return Err(Error::InvalidInput(format!(
                    "negative abundance {v:e} violates ANC"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if asc_normalized {
            for (k, col) in data.column_iter().enumerate() {
                let sum = col.sum();
                if sum != 0.0 && (sum - 1.0).abs() > ASC_TOLERANCE {
                    return Err(Error::InvalidInput(format!(
                        "column {k} sums to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(Self {
            data,
            asc_normalized,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn asc_normalized(&self) -> bool {
        self.asc_normalized
    }

    pub fn num_endmembers(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_pixels(&self) -> usize {
        self.data.ncols()
    }
}

/// Per-pixel scaling factors (the diagonal of S).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFactors(DVector<f64>);

impl ScalingFactors {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scaling factors"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("scaling factors must be nonnegative".into()));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Spectral variability dictionary E (D x L). L may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VariabilityDictionary(DMatrix<f64>);

impl VariabilityDictionary {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if !all_finite(&data) {
            return Err(Error::NonFinite("variability dictionary"));
        }
        Ok(Self(data))
    }

    /// A dictionary with no atoms, which reduces the model to scaled LMM.
    pub fn empty(num_bands: usize) -> Self {
        Self(DMatrix::zeros(num_bands, 0))
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.0
    }

    pub fn num_bands(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_atoms(&self) -> usize {
        self.0.ncols()
    }

    pub fn atom_norms(&self) -> Vec<f64> {
        self.0.column_iter().map(|c| c.norm()).collect()
    }

    /// ‖AᵀE‖_F.
    pub fn coherence_with(&self, endmembers: &EndmemberDictionary) -> f64 {
        (endmembers.data().transpose() * &self.0).norm()
    }

    /// ‖EᵀE − I‖_F.
    pub fn gram_deviation(&self) -> f64 {
        let l = self.num_atoms();
        (self.0.transpose() * &self.0 - DMatrix::<f64>::identity(l, l)).norm()
    }
}

/// Variability coefficients B (L x N).
#[derive(Debug, Clone, PartialEq)]
pub struct VariabilityCoefficients(DMatrix<f64>);

impl VariabilityCoefficients {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if !all_finite(&data) {
            return Err(Error::NonFinite("variability coefficients"));
        }
        Ok(Self(data))
    }

    pub fn empty(num_pixels: usize) -> Self {
        Self(DMatrix::zeros(0, num_pixels))
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.0
    }
}

/// Regularization weights and the ADMM penalty schedule shared by the
/// pixel-wise unmixer and the dictionary learner.
///
/// `mu0`/`mu_max` play the role of the initial and capped penalty for both
/// solvers (μ for unmixing, ξ for dictionary learning).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub num_atoms: usize,
    pub mu0: f64,
    pub mu_max: f64,
    pub rho: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 2e-3,
            beta: 2e-3,
            gamma: 5e-3,
            eta: 5e-3,
            num_atoms: 100,
            mu0: 1e-3,
            mu_max: 1e6,
            rho: 1.5,
            eps: 1e-6,
            max_iter: 500,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {w}")));
            }
        }
        if self.num_atoms == 0 {
            return Err(Error::Config("num_atoms must be positive".into()));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !(self.mu0 > 0.0 && self.mu0 <= self.mu_max && self.mu_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < mu0 <= mu_max, got mu0={} mu_max={}",
                self.mu0, self.mu_max
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}
