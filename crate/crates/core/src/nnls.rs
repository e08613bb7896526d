//! Constrained least-squares kernels: vector NNLS (Lawson–Hanson active set),
//! the scalar NNLS used for per-pixel scaling, and sum-to-one constrained NNLS
//! through a weighted augmentation row.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::least_squares;

pub const DEFAULT_NNLS_TOL: f64 = 1e-10;
pub const DEFAULT_FCLSU_DELTA: f64 = 1e3;

/// Solves `min ½‖y − A x‖²` subject to `x ≥ 0`.
///
/// Terminates when the dual vector `w = Aᵀ(y − A x)` satisfies
/// `w_j ≤ tol·(1 + ‖Aᵀy‖∞)` on the active (zero) set. Exceeding the internal
/// iteration cap returns [`Error::NotConverged`] with the best iterate.
pub fn solve_nnls(a: &DMatrix<f64>, y: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    if a.nrows() != y.len() {
        return Err(Error::mismatch("A", a.shape(), "y", (y.len(), 1)));
    }
    if a.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("NNLS input"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("NNLS tolerance must be positive, got {tol}")));
    }
    if let Some(index) = a.column_iter().position(|c| c.iter().all(|&v| v == 0.0)) {
        return Err(Error::ZeroColumn { what: "NNLS design matrix", index });
    }

    let p = a.ncols();
    let aty = a.transpose() * y;
    let threshold = tol * (1.0 + aty.amax());
    let mut x = DVector::<f64>::zeros(p);
    let mut passive = vec![false; p];
    let max_outer = 3 * p + 30;

    let dual = |x: &DVector<f64>| a.transpose() * (y - a * x);

    let mut w = aty.clone();
    for _ in 0..max_outer {
        // Most violated active constraint.
        let candidate = (0..p)
            .filter(|&j| !passive[j] && w[j] > threshold)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else {
            return Ok(x);
        };
        passive[j] = true;

        let mut first = true;
        loop {
            let z = passive_solve(a, y, &passive);
            if z.iter().zip(&passive).all(|(&zi, &in_p)| !in_p || zi > 0.0) {
                x = z;
                break;
            }
            if first && z[j] <= 0.0 {
                // Round-off made the entering variable unusable; its dual
                // value is only marginally positive, so stop considering it.
                passive[j] = false;
                w[j] = 0.0;
                break;
            }
            first = false;
            let mut step = 1.0f64;
            for q in 0..p {
                if passive[q] && z[q] <= 0.0 {
                    let denom = x[q] - z[q];
                    if denom > 0.0 {
                        step = step.min(x[q] / denom);
                    }
                }
            }
            x += (&z - &x) * step;
            for q in 0..p {
                if passive[q] && x[q] <= 0.0 {
                    passive[q] = false;
                    x[q] = 0.0;
                }
            }
            if !passive.iter().any(|&b| b) {
                break;
            }
        }
        if w[j] != 0.0 || passive[j] {
            w = dual(&x);
        }
    }

    Err(Error::NotConverged {
        solver: "nnls",
        iterations: max_outer,
        best: x.as_slice().to_vec(),
    })
}

fn passive_solve(a: &DMatrix<f64>, y: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = a.select_columns(&idx);
    let zs = least_squares(&sub, y);
    let mut z = DVector::zeros(passive.len());
    for (k, &i) in idx.iter().enumerate() {
        z[i] = zs[k];
    }
    z
}

/// `argmin_{s ≥ 0} ½‖r − s z‖²`, i.e. `max(0, zᵀr / zᵀz)`; zero when `z = 0`.
pub fn solve_scalar_nnls(z: &DVector<f64>, r: &DVector<f64>) -> Result<f64> {
    if z.len() != r.len() {
        return Err(Error::mismatch("z", (z.len(), 1), "r", (r.len(), 1)));
    }
    if z.iter().chain(r.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scalar NNLS input"));
    }
    let zz = z.norm_squared();
    if zz == 0.0 {
        return Ok(0.0);
    }
    Ok((z.dot(r) / zz).max(0.0))
}

/// Fully constrained (nonnegative, sum-to-one) least squares for one pixel.
///
/// The sum-to-one constraint enters as an extra row `δ·1ᵀ x = δ`; the NNLS
/// result is then renormalized so that its entries sum to one exactly.
pub fn solve_fclsu_pixel(a: &DMatrix<f64>, y: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    if a.nrows() != y.len() {
        return Err(Error::mismatch("A", a.shape(), "y", (y.len(), 1)));
    }
    let (d, p) = a.shape();
    let mut aug = DMatrix::from_element(d + 1, p, delta);
    aug.view_mut((0, 0), (d, p)).copy_from(a);
    let mut rhs = DVector::from_element(d + 1, delta);
    rhs.rows_mut(0, d).copy_from(y);
    let mut x = solve_nnls(&aug, &rhs, DEFAULT_NNLS_TOL)?;
    let sum = x.sum();
    if sum > 0.0 {
        x /= sum;
    }
    Ok(x)
}
