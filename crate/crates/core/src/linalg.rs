//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky(m: DMatrix<f64>, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    m.cholesky()
        .ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

/// Least squares `min ‖m z − rhs‖` via thin QR, falling back to an SVD
/// pseudo-inverse when the columns are (numerically) dependent.
pub(crate) fn least_squares(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let k = m.ncols();
    if k == 0 {
        return DVector::zeros(0);
    }
    if m.nrows() >= k {
        let qr = m.clone().qr();
        let r = qr.r();
        let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let well_posed = (0..k).all(|i| r[(i, i)].abs() > 1e-12 * max_diag.max(f64::MIN_POSITIVE));
        if well_posed {
            let qty = qr.q().transpose() * rhs;
            if let Some(z) = r.solve_upper_triangular(&qty) {
                return z;
            }
        }
    }
    m.clone()
        .svd(true, true)
        .solve(rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(k))
}

/// `rows x cols` matrix with orthonormal columns: the orthogonal factor of a
/// standard-normal draw, sign-fixed so that R has a positive diagonal.
pub(crate) fn random_orthonormal<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if cols > rows {
        return Err(Error::InvalidInput(format!(
            "cannot draw {cols} orthonormal columns in dimension {rows}"
        )));
    }
    let draw = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = draw.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(q)
}
