//! Classical comparison unmixers: FCLSU, CLSU, SCLSU, SUnSAL and scaled SUnSAL.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AbundanceMatrix, EndmemberDictionary, HyperspectralImage, ScalingFactors, SolverConfig};
use crate::nnls::{solve_fclsu_pixel, solve_nnls, DEFAULT_FCLSU_DELTA, DEFAULT_NNLS_TOL};
use crate::output::{PixelStatus, Unmixing};
use crate::su::{PixelSolver, DEGENERATE_SUM};

/// Sparsity weight used for SUnSAL and SSUnSAL unless configured otherwise.
pub const DEFAULT_SPARSITY: f64 = 6e-3;

fn check_dims(image: &HyperspectralImage, endmembers: &EndmemberDictionary) -> Result<()> {
    if image.num_bands() != endmembers.num_bands() {
        return Err(Error::mismatch(
            "Y",
            image.data().shape(),
            "A",
            endmembers.data().shape(),
        ));
    }
    Ok(())
}

fn per_pixel<F>(image: &HyperspectralImage, p: usize, solve: F) -> Result<(DMatrix<f64>, Vec<PixelStatus>)>
where
    F: Fn(DVector<f64>) -> Result<(DVector<f64>, PixelStatus)> + Sync,
{
    let y = image.data();
    let cols: Vec<(DVector<f64>, PixelStatus)> = (0..image.num_pixels())
        .into_par_iter()
        .map(|k| solve(y.column(k).into_owned()).map_err(|e| e.at_pixel(k)))
        .collect::<Result<_>>()?;
    let mut x = DMatrix::zeros(p, cols.len());
    let mut status = Vec::with_capacity(cols.len());
    for (k, (col, st)) in cols.into_iter().enumerate() {
        x.set_column(k, &col);
        status.push(st);
    }
    Ok((x, status))
}

/// Rescales every column to sum to one and returns the sums as scaling
/// factors; columns summing to at most 1e-12 become zero with zero scale.
pub fn scale_normalize(
    x: DMatrix<f64>,
    mut status: Vec<PixelStatus>,
) -> Result<(AbundanceMatrix, ScalingFactors, Vec<PixelStatus>)> {
    let mut x = x;
    let mut s = DVector::zeros(x.ncols());
    for (k, mut col) in x.column_iter_mut().enumerate() {
        let sum = col.sum();
        if sum > DEGENERATE_SUM {
            col /= sum;
            s[k] = sum;
        } else {
            col.fill(0.0);
            status[k] = PixelStatus::Degenerate;
        }
    }
    Ok((AbundanceMatrix::new(x, true)?, ScalingFactors::new(s)?, status))
}

/// Fully constrained least squares (nonnegative, sum-to-one).
pub fn unmix_fclsu(image: &HyperspectralImage, endmembers: &EndmemberDictionary) -> Result<Unmixing> {
    unmix_fclsu_with_delta(image, endmembers, DEFAULT_FCLSU_DELTA)
}

pub fn unmix_fclsu_with_delta(
    image: &HyperspectralImage,
    endmembers: &EndmemberDictionary,
    delta: f64,
) -> Result<Unmixing> {
    check_dims(image, endmembers)?;
    let a = endmembers.data();
    let (x, status) = per_pixel(image, a.ncols(), |y| {
        Ok((solve_fclsu_pixel(a, &y, delta)?, PixelStatus::Converged))
    })?;
    Ok(Unmixing {
        abundances: AbundanceMatrix::new(x, true)?,
        scales: None,
        coefficients: None,
        status,
    })
}

/// Nonnegative least squares without the sum-to-one constraint.
pub fn unmix_clsu(image: &HyperspectralImage, endmembers: &EndmemberDictionary) -> Result<Unmixing> {
    check_dims(image, endmembers)?;
    let a = endmembers.data();
    let (x, status) = per_pixel(image, a.ncols(), |y| {
        Ok((solve_nnls(a, &y, DEFAULT_NNLS_TOL)?, PixelStatus::Converged))
    })?;
    Ok(Unmixing {
        abundances: AbundanceMatrix::new(x, false)?,
        scales: None,
        coefficients: None,
        status,
    })
}

/// Scaled CLSU: NNLS followed by `Ŝ_k = 1ᵀx_k`, `x̂_k = x_k / Ŝ_k`.
pub fn unmix_sclsu(image: &HyperspectralImage, endmembers: &EndmemberDictionary) -> Result<Unmixing> {
    let clsu = unmix_clsu(image, endmembers)?;
    let (abundances, scales, status) = scale_normalize(clsu.abundances.into_data(), clsu.status)?;
    Ok(Unmixing {
        abundances,
        scales: Some(scales),
        coefficients: None,
        status,
    })
}

/// ℓ₁-regularized NNLS by ADMM, using the pixel kernel of the augmented-model
/// unmixer restricted to the abundance splitting and the penalty schedule in
/// `cfg` (`mu0`, `rho`, `mu_max`, `eps`, `max_iter`). Pixels that hit
/// `max_iter` are flagged `NotConverged` and still returned.
pub fn unmix_sunsal(
    image: &HyperspectralImage,
    endmembers: &EndmemberDictionary,
    lambda_sparse: f64,
    cfg: &SolverConfig,
) -> Result<Unmixing> {
    check_dims(image, endmembers)?;
    let a = endmembers.data();
    let empty = DMatrix::zeros(a.nrows(), 0);
    let solver = PixelSolver::sparse(a, &empty, lambda_sparse, cfg)?;
    let (x, status) = per_pixel(image, a.ncols(), |y| {
        let sol = solver.solve(&y, None)?;
        let status = sol.status();
        Ok((sol.abundances, status))
    })?;
    Ok(Unmixing {
        abundances: AbundanceMatrix::new(x, false)?,
        scales: None,
        coefficients: None,
        status,
    })
}

/// SUnSAL followed by the same scale normalization as SCLSU.
pub fn unmix_ssunsal(
    image: &HyperspectralImage,
    endmembers: &EndmemberDictionary,
    lambda_sparse: f64,
    cfg: &SolverConfig,
) -> Result<Unmixing> {
    let raw = unmix_sunsal(image, endmembers, lambda_sparse, cfg)?;
    let (abundances, scales, status) = scale_normalize(raw.abundances.into_data(), raw.status)?;
    Ok(Unmixing {
        abundances,
        scales: Some(scales),
        coefficients: None,
        status,
    })
}
