use nalgebra::{DMatrix, DVector};

use super::types::{
    AbundanceMatrix, EndmemberDictionary, HyperspectralImage, ScalingFactors, SolverConfig,
    VariabilityCoefficients, VariabilityDictionary,
};
use crate::error::{Error, Result};

fn dims(m: &DMatrix<f64>) -> (usize, usize) {
    m.shape()
}

fn check_model_dims(
    a: &DMatrix<f64>,
    x: &DMatrix<f64>,
    s: &DVector<f64>,
    e: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<()> {
    if a.ncols() != x.nrows() {
        return Err(Error::mismatch("A", dims(a), "X", dims(x)));
    }
    if s.len() != x.ncols() {
        return Err(Error::mismatch("X", dims(x), "S", (s.len(), 1)));
    }
    if e.nrows() != a.nrows() {
        return Err(Error::mismatch("A", dims(a), "E", dims(e)));
    }
    if e.ncols() != b.nrows() {
        return Err(Error::mismatch("E", dims(e), "B", dims(b)));
    }
    if e.ncols() > 0 && b.ncols() != x.ncols() {
        return Err(Error::mismatch("X", dims(x), "B", dims(b)));
    }
    Ok(())
}

/// `A·X·diag(S) + E·B` on raw matrices. With L = 0 the variability term is
/// skipped entirely, so unit scales reproduce `A·X` bit for bit.
pub(crate) fn reconstruct_raw(
    a: &DMatrix<f64>,
    x: &DMatrix<f64>,
    s: &DVector<f64>,
    e: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_model_dims(a, x, s, e, b)?;
    let mut out = a * x;
    for (mut col, &sk) in out.column_iter_mut().zip(s.iter()) {
        col *= sk;
    }
    if e.ncols() > 0 {
        out += e * b;
    }
    Ok(out)
}

/// Reconstructs the image under the augmented mixing model: column k is
/// `S_k·(A x_k) + E b_k`.
pub fn reconstruct(
    endmembers: &EndmemberDictionary,
    abundances: &AbundanceMatrix,
    scales: &ScalingFactors,
    dictionary: &VariabilityDictionary,
    coefficients: &VariabilityCoefficients,
) -> Result<DMatrix<f64>> {
    reconstruct_raw(
        endmembers.data(),
        abundances.data(),
        scales.values(),
        dictionary.data(),
        coefficients.data(),
    )
}

/// Individual terms of the full objective; `total()` sums them.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveTerms {
    pub data_fit: f64,
    pub sparsity: f64,
    pub coefficient_energy: f64,
    pub coherence: f64,
    pub orthogonality: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.data_fit + self.sparsity + self.coefficient_energy + self.coherence + self.orthogonality
    }
}

pub(crate) fn objective_terms_raw(
    y: &DMatrix<f64>,
    a: &DMatrix<f64>,
    x: &DMatrix<f64>,
    s: &DVector<f64>,
    e: &DMatrix<f64>,
    b: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<ObjectiveTerms> {
    let recon = reconstruct_raw(a, x, s, e, b)?;
    if recon.shape() != y.shape() {
        return Err(Error::mismatch("Y", dims(y), "AXS+EB", dims(&recon)));
    }
    let mut terms = ObjectiveTerms {
        data_fit: 0.5 * (y - recon).norm_squared(),
        ..ObjectiveTerms::default()
    };
    if cfg.alpha != 0.0 {
        terms.sparsity = cfg.alpha * x.iter().map(|v| v.abs()).sum::<f64>();
    }
    if e.ncols() > 0 {
        if cfg.beta != 0.0 {
            terms.coefficient_energy = 0.5 * cfg.beta * b.norm_squared();
        }
        if cfg.gamma != 0.0 {
            terms.coherence = 0.5 * cfg.gamma * (a.transpose() * e).norm_squared();
        }
        if cfg.eta != 0.0 {
            let l = e.ncols();
            let gram = e.transpose() * e - DMatrix::<f64>::identity(l, l);
            terms.orthogonality = 0.5 * cfg.eta * gram.norm_squared();
        }
    }
    Ok(terms)
}

/// `½‖Y−AXS−EB‖²_F + α‖X‖₁,₁ + (β/2)‖B‖²_F + (γ/2)‖AᵀE‖²_F + (η/2)‖EᵀE−I‖²_F`.
pub fn objective_value(
    image: &HyperspectralImage,
    endmembers: &EndmemberDictionary,
    abundances: &AbundanceMatrix,
    scales: &ScalingFactors,
    dictionary: &VariabilityDictionary,
    coefficients: &VariabilityCoefficients,
    cfg: &SolverConfig,
) -> Result<f64> {
    objective_terms_raw(
        image.data(),
        endmembers.data(),
        abundances.data(),
        scales.values(),
        dictionary.data(),
        coefficients.data(),
        cfg,
    )
    .map(|t| t.total())
}

/// Scalar shrinkage `max(0, |v| − t)·sign(v)` with `sign(0) = +1`.
#[inline]
pub fn shrink(v: f64, t: f64) -> f64 {
    let mag = (v.abs() - t).max(0.0);
    if v >= 0.0 {
        mag
    } else {
        -mag
    }
}

/// Elementwise soft threshold.
pub fn soft_threshold(v: &DVector<f64>, t: f64) -> DVector<f64> {
    debug_assert!(t >= 0.0);
    v.map(|vi| shrink(vi, t))
}

/// Cosines between every endmember column and every column of `samples`,
/// ordered endmember-major. Zero-norm sample columns give cosine 0.
pub fn coherence_stats(endmembers: &DMatrix<f64>, samples: &DMatrix<f64>) -> Result<Vec<f64>> {
    if endmembers.nrows() != samples.nrows() {
        return Err(Error::mismatch(
            "A",
            dims(endmembers),
            "V",
            dims(samples),
        ));
    }
    if endmembers.ncols() == 0 || samples.ncols() == 0 {
        return Err(Error::InvalidInput("coherence needs at least one column on each side".into()));
    }
    let sample_norms: Vec<f64> = samples.column_iter().map(|c| c.norm()).collect();
    let mut out = Vec::with_capacity(endmembers.ncols() * samples.ncols());
    for (i, a) in endmembers.column_iter().enumerate() {
        let an = a.norm();
        if an == 0.0 {
            return Err(Error::ZeroColumn {
                what: "endmember dictionary",
                index: i,
            });
        }
        for (v, &vn) in samples.column_iter().zip(&sample_norms) {
            if vn == 0.0 {
                out.push(0.0);
            } else {
                out.push((a.dot(&v) / (an * vn)).clamp(-1.0, 1.0));
            }
        }
    }
    Ok(out)
}
