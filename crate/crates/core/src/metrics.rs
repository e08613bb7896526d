//! Evaluation metrics: abundance and reconstruction RMSE, average spectral
//! angle, endmember matching and argmax-classification accuracy.

use nalgebra::{DMatrix, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AbundanceMatrix;

fn same_shape(what_a: &'static str, a: &DMatrix<f64>, what_b: &'static str, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::mismatch(what_a, a.shape(), what_b, b.shape()));
    }
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::InvalidInput("metric inputs must be non-empty".into()));
    }
    Ok(())
}

/// Mean over columns of the per-column root mean square difference.
fn mean_column_rmse(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let rows = a.nrows() as f64;
    let total: f64 = a
        .column_iter()
        .zip(b.column_iter())
        .map(|(ca, cb)| ((ca - cb).norm_squared() / rows).sqrt())
        .sum();
    total / a.ncols() as f64
}

/// Abundance RMSE: `(1/N) Σ_k sqrt((1/P) Σ_p (x_kp − x̂_kp)²)`.
pub fn armse(x_true: &DMatrix<f64>, x_est: &DMatrix<f64>) -> Result<f64> {
    same_shape("X_true", x_true, "X_est", x_est)?;
    Ok(mean_column_rmse(x_true, x_est))
}

/// Reconstruction RMSE: `(1/N) Σ_k sqrt((1/D) Σ_d (y_kd − ŷ_kd)²)`.
pub fn rrmse(y: &DMatrix<f64>, y_hat: &DMatrix<f64>) -> Result<f64> {
    same_shape("Y", y, "Y_hat", y_hat)?;
    Ok(mean_column_rmse(y, y_hat))
}

/// Spectral angle in radians, or `None` when either vector has zero norm.
pub fn spectral_angle(a: DVectorView<f64>, b: DVectorView<f64>) -> Option<f64> {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return None;
    }
    Some((a.dot(&b) / denom).clamp(-1.0, 1.0).acos())
}

/// Average spectral angle plus the pixels whose angle was undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAngles {
    pub mean: f64,
    /// Columns with a zero-norm spectrum; each contributed angle 0.
    pub degenerate: Vec<usize>,
}

pub fn asam_detailed(y: &DMatrix<f64>, y_hat: &DMatrix<f64>) -> Result<SpectralAngles> {
    same_shape("Y", y, "Y_hat", y_hat)?;
    let mut total = 0.0;
    let mut degenerate = Vec::new();
    for (k, (a, b)) in y.column_iter().zip(y_hat.column_iter()).enumerate() {
        match spectral_angle(a, b) {
            Some(angle) => total += angle,
            None => degenerate.push(k),
        }
    }
    Ok(SpectralAngles {
        mean: total / y.ncols() as f64,
        degenerate,
    })
}

/// Average spectral angle mapper in radians.
pub fn asam(y: &DMatrix<f64>, y_hat: &DMatrix<f64>) -> Result<f64> {
    asam_detailed(y, y_hat).map(|r| r.mean)
}

/// Largest problem solved by exhaustive search in [`match_endmembers`].
const EXHAUSTIVE_LIMIT: usize = 8;

/// Assigns each estimated endmember to a reference endmember so that the total
/// spectral angle is minimal. Returns `perm` with `perm[i]` the reference
/// column matched to estimated column `i`.
pub fn match_endmembers(a_est: &DMatrix<f64>, a_ref: &DMatrix<f64>) -> Result<Vec<usize>> {
    same_shape("A_est", a_est, "A_ref", a_ref)?;
    let p = a_est.ncols();
    let mut cost = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            cost[(i, j)] = spectral_angle(a_est.column(i), a_ref.column(j))
                .unwrap_or(std::f64::consts::FRAC_PI_2);
        }
    }
    if p <= EXHAUSTIVE_LIMIT {
        Ok(exhaustive_assignment(&cost))
    } else {
        Ok(hungarian(&cost))
    }
}

fn exhaustive_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    fn recurse(
        cost: &DMatrix<f64>,
        row: usize,
        used: &mut [bool],
        current: &mut Vec<usize>,
        acc: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        let p = cost.nrows();
        if row == p {
            if acc < best.0 {
                *best = (acc, current.clone());
            }
            return;
        }
        for j in 0..p {
            if !used[j] {
                used[j] = true;
                current.push(j);
                recurse(cost, row + 1, used, current, acc + cost[(row, j)], best);
                current.pop();
                used[j] = false;
            }
        }
    }
    let p = cost.nrows();
    let mut best = (f64::INFINITY, (0..p).collect());
    recurse(cost, 0, &mut vec![false; p], &mut Vec::with_capacity(p), 0.0, &mut best);
    best.1
}

/// Minimum-cost assignment on a square cost matrix (potential-based
/// Hungarian method, O(n³)).
fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    // 1-based arrays; index 0 is a virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    perm
}

/// Class of each pixel: index of its largest abundance, lowest index on ties.
/// All-zero columns have no class.
pub fn argmax_labels(x: &DMatrix<f64>) -> Vec<Option<usize>> {
    x.column_iter()
        .map(|c| {
            if c.iter().all(|&v| v == 0.0) {
                return None;
            }
            let mut best = 0;
            for (p, &v) in c.iter().enumerate() {
                if v > c[best] {
                    best = p;
                }
            }
            Some(best)
        })
        .collect()
}

/// Overall accuracy (percent) of argmax classification against reference
/// labels. `None` labels are masked out and excluded from the count;
/// degenerate estimate columns count as mismatches.
pub fn overall_accuracy(labels_ref: &[Option<usize>], x_est: &AbundanceMatrix) -> Result<f64> {
    let x = x_est.data();
    if labels_ref.len() != x.ncols() {
        return Err(Error::mismatch("labels", (labels_ref.len(), 1), "X_est", x.shape()));
    }
    let predicted = argmax_labels(x);
    let mut total = 0usize;
    let mut hits = 0usize;
    for (reference, pred) in labels_ref.iter().zip(&predicted) {
        if let Some(r) = reference {
            total += 1;
            if *pred == Some(*r) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InvalidInput("every reference label is masked".into()));
    }
    Ok(100.0 * hits as f64 / total as f64)
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub run_id: String,
    pub algorithm: String,
    #[serde(rename = "aRMSE")]
    pub armse: Option<f64>,
    #[serde(rename = "rRMSE")]
    pub rrmse: Option<f64>,
    #[serde(rename = "aSAM")]
    pub asam: Option<f64>,
    #[serde(rename = "OA")]
    pub oa: Option<f64>,
    pub wall_ms: f64,
}
