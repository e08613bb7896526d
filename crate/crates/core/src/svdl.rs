//! Joint variability-dictionary learning and unmixing.
//!
//! Alternating ADMM on `Y ≈ A·X·diag(s) + E·B` with `A` fixed. Splittings:
//! `M = X·diag(s)`, `G = X` (ℓ₁), `H = X` (nonnegativity), `T = s`
//! (nonnegativity), `Q = E` (coherence and orthogonality). Each iteration
//! updates, in order, M, B, X (then renormalizes columns), s, E, Q, G, H, T,
//! the five multipliers, and finally the penalty ξ.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::unmix_sclsu;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, random_orthonormal};
use crate::model::{
    objective_terms_raw, shrink, AbundanceMatrix, EndmemberDictionary, HyperspectralImage,
    ScalingFactors, SolverConfig, VariabilityCoefficients, VariabilityDictionary,
};
use crate::output::PixelStatus;

/// Column sums at or below this mark a pixel as degenerate.
pub const DEGENERATE_SUM: f64 = 1e-12;

/// Frobenius norms checked for termination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SvdlResiduals {
    /// ‖G − X‖
    pub sparse_gap: f64,
    /// ‖H − X‖
    pub nonneg_gap: f64,
    /// ‖M − X·diag(s)‖
    pub product_gap: f64,
    /// ‖Q − E‖
    pub dictionary_gap: f64,
    /// ‖T − s‖
    pub scale_gap: f64,
    /// ‖E − E_prev‖
    pub dictionary_step: f64,
}

impl SvdlResiduals {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.sparse_gap,
            self.nonneg_gap,
            self.product_gap,
            self.dictionary_gap,
            self.scale_gap,
            self.dictionary_step,
        ]
    }

    pub fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }

    pub fn below(&self, eps: f64) -> bool {
        self.as_array().iter().all(|&r| r < eps)
    }
}

/// Per-iteration series; entry 0 describes the initialization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SvdlDiagnostics {
    pub objective: Vec<f64>,
    /// ‖AᵀE‖_F
    pub coherence: Vec<f64>,
    /// ‖EᵀE − I‖_F
    pub gram_deviation: Vec<f64>,
    pub residuals: Vec<SvdlResiduals>,
    pub xi: Vec<f64>,
}

impl SvdlDiagnostics {
    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }
}

/// Full optimizer state. `s`, `t` and `delta` hold the diagonals of the
/// N×N scale matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdlState {
    pub x: DMatrix<f64>,
    pub s: DVector<f64>,
    pub e: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub t: DVector<f64>,
    pub q: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub delta: DVector<f64>,
    pub xi: f64,
    pub iter: usize,
    pub converged: bool,
    pub residuals: SvdlResiduals,
    /// Pixels whose abundance column summed to (almost) zero in the last
    /// X-update.
    pub degenerate: Vec<bool>,
    pub history: SvdlDiagnostics,
}

/// Result of [`learn_svdl`].
#[derive(Debug, Clone)]
pub struct SvdlOutput {
    pub dictionary: VariabilityDictionary,
    pub abundances: AbundanceMatrix,
    pub scales: ScalingFactors,
    pub coefficients: VariabilityCoefficients,
    pub status: Vec<PixelStatus>,
    pub state: SvdlState,
}

/// Per-iteration series of objective, coherence, Gram deviation, the six
/// residuals and ξ.
pub fn svdl_diagnostics(state: &SvdlState) -> &SvdlDiagnostics {
    &state.history
}

/// Learns a variability dictionary with `cfg.num_atoms` atoms together with
/// abundances, scales and coefficients.
pub fn learn_svdl(
    image: &HyperspectralImage,
    endmembers: &EndmemberDictionary,
    cfg: &SolverConfig,
) -> Result<SvdlOutput> {
    learn_svdl_observed(image, endmembers, cfg, |_| Ok(()))
}

/// [`learn_svdl`] with a callback invoked after every iteration, e.g. to
/// checkpoint the state. An error from the callback aborts learning.
pub fn learn_svdl_observed<F>(
    image: &HyperspectralImage,
    endmembers: &EndmemberDictionary,
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<SvdlOutput>
where
    F: FnMut(&SvdlState) -> Result<()>,
{
    cfg.validate()?;
    let y = image.data();
    let a = endmembers.data();
    if y.nrows() != a.nrows() {
        return Err(Error::mismatch("Y", y.shape(), "A", a.shape()));
    }
    let d = a.nrows();
    let p = a.ncols();
    let n = y.ncols();
    let l = cfg.num_atoms;
    if l > d {
        return Err(Error::Config(format!(
            "num_atoms ({l}) cannot exceed the number of bands ({d})"
        )));
    }

    let init = unmix_sclsu(image, endmembers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let e0 = random_orthonormal(d, l, &mut rng)?;

    let mut st = SvdlState {
        x: init.abundances.into_data(),
        s: DVector::from_element(n, 1.0),
        e: e0,
        b: DMatrix::zeros(l, n),
        g: DMatrix::zeros(p, n),
        h: DMatrix::zeros(p, n),
        m: DMatrix::zeros(p, n),
        t: DVector::zeros(n),
        q: DMatrix::zeros(d, l),
        lambda: DMatrix::zeros(p, n),
        v: DMatrix::zeros(p, n),
        omega: DMatrix::zeros(p, n),
        pi: DMatrix::zeros(d, l),
        delta: DVector::zeros(n),
        xi: cfg.mu0,
        iter: 0,
        converged: false,
        residuals: SvdlResiduals::default(),
        degenerate: init.status.iter().map(|&s| s == PixelStatus::Degenerate).collect(),
        history: SvdlDiagnostics::default(),
    };
    st.residuals = residuals(&st, &st.e);
    record(&mut st, y, a, cfg)?;

    let at = a.transpose();
    let aty = &at * y;
    let ata = &at * a;
    let aat = a * &at;
    let eye_p = DMatrix::<f64>::identity(p, p);
    let eye_l = DMatrix::<f64>::identity(l, l);
    let eye_d = DMatrix::<f64>::identity(d, d);

    while st.iter < cfg.max_iter {
        st.iter += 1;
        let xi = st.xi;
        let e_prev = st.e.clone();
        let q_prev = st.q.clone();

        // M: (AᵀA + ξI) M = AᵀY − AᵀE B + ξ X diag(s) − Ω
        let mut xs = st.x.clone();
        scale_columns(&mut xs, &st.s);
        let rhs = &aty - (&at * &st.e) * &st.b + xs * xi - &st.omega;
        st.m = cholesky(&ata + &eye_p * xi, "AᵀA + ξI")?.solve(&rhs);

        // B: (EᵀE + βI) B = Eᵀ(Y − A M)
        let fit = y - a * &st.m;
        let gram = st.e.transpose() * &st.e + &eye_l * cfg.beta;
        let chol = cholesky(gram, "EᵀE + βI (use beta > 0)")?;
        st.b = chol.solve(&(st.e.transpose() * &fit));

        // X, column-wise closed form followed by sum-to-one renormalization.
        for k in 0..n {
            let sk = st.s[k];
            let denom = xi * sk * sk + 2.0 * xi;
            let mut col = (st.g.column(k) + st.h.column(k)) * xi
                + st.lambda.column(k)
                + st.v.column(k)
                + st.omega.column(k) * sk
                + st.m.column(k) * (xi * sk);
            col /= denom;
            let sum = col.sum();
            if sum <= DEGENERATE_SUM {
                col.fill(0.0);
                st.degenerate[k] = true;
            } else {
                col /= sum;
                st.degenerate[k] = false;
            }
            st.x.set_column(k, &col);
        }

        // s, restricted to the diagonal.
        for k in 0..n {
            let xk = st.x.column(k);
            let num = xi * xk.dot(&st.m.column(k)) + xk.dot(&st.omega.column(k)) + xi * st.t[k] + st.delta[k];
            st.s[k] = num / (xi * xk.norm_squared() + xi);
        }

        // E = ((Y − A M) Bᵀ + ξQ + Π)(BBᵀ + ξI)⁻¹, solved through the transpose.
        let rhs = &fit * st.b.transpose() + &st.q * xi + &st.pi;
        let bbt = &st.b * st.b.transpose() + &eye_l * xi;
        st.e = cholesky(bbt, "BBᵀ + ξI")?.solve(&rhs.transpose()).transpose();

        // Q: (γAAᵀ + η Q_p Q_pᵀ + ξI) Q = η Q_p + ξE − Π
        let lhs = &aat * cfg.gamma + (&q_prev * q_prev.transpose()) * cfg.eta + &eye_d * xi;
        let rhs = &q_prev * cfg.eta + &st.e * xi - &st.pi;
        st.q = cholesky(lhs, "γAAᵀ + ηQQᵀ + ξI")?.solve(&rhs);

        let thresh = cfg.alpha / xi;
        st.g = st.x.zip_map(&st.lambda, |x, lam| shrink(x - lam / xi, thresh));
        st.h = st.x.zip_map(&st.v, |x, v| (x - v / xi).max(0.0));
        st.t = st.s.zip_map(&st.delta, |s, del| (s - del / xi).max(0.0));

        let mut xs = st.x.clone();
        scale_columns(&mut xs, &st.s);
        st.lambda += (&st.g - &st.x) * xi;
        st.v += (&st.h - &st.x) * xi;
        st.omega += (&st.m - &xs) * xi;
        st.pi += (&st.q - &st.e) * xi;
        st.delta += (&st.t - &st.s) * xi;

        st.xi = (cfg.rho * xi).min(cfg.mu_max);
        st.residuals = residuals(&st, &e_prev);
        record(&mut st, y, a, cfg)?;
        observer(&st)?;

        if st.residuals.below(cfg.eps) {
            st.converged = true;
            break;
        }
    }

    finish(st)
}

fn scale_columns(m: &mut DMatrix<f64>, s: &DVector<f64>) {
    for (mut col, &sk) in m.column_iter_mut().zip(s.iter()) {
        col *= sk;
    }
}

fn residuals(st: &SvdlState, e_prev: &DMatrix<f64>) -> SvdlResiduals {
    let mut xs = st.x.clone();
    scale_columns(&mut xs, &st.s);
    SvdlResiduals {
        sparse_gap: (&st.g - &st.x).norm(),
        nonneg_gap: (&st.h - &st.x).norm(),
        product_gap: (&st.m - xs).norm(),
        dictionary_gap: (&st.q - &st.e).norm(),
        scale_gap: (&st.t - &st.s).norm(),
        dictionary_step: (&st.e - e_prev).norm(),
    }
}

fn record(st: &mut SvdlState, y: &DMatrix<f64>, a: &DMatrix<f64>, cfg: &SolverConfig) -> Result<()> {
    let objective = objective_terms_raw(y, a, &st.x, &st.s, &st.e, &st.b, cfg)?.total();
    let l = st.e.ncols();
    let h = &mut st.history;
    h.objective.push(objective);
    h.coherence.push((a.transpose() * &st.e).norm());
    h.gram_deviation.push((st.e.transpose() * &st.e - DMatrix::<f64>::identity(l, l)).norm());
    h.residuals.push(st.residuals);
    h.xi.push(st.xi);
    Ok(())
}

/// Projects the final iterate onto the model's constraint set: abundance
/// columns onto the simplex (via clamping and renormalization), scales onto
/// the nonnegative half-line. Degenerate pixels get zero abundance, scale
/// and coefficients.
fn finish(st: SvdlState) -> Result<SvdlOutput> {
    let n = st.x.ncols();
    let mut x = st.x.map(|v| v.max(0.0));
    let mut s = st.s.map(|v| v.max(0.0));
    let mut b = st.b.clone();
    let mut status = Vec::with_capacity(n);
    let running = if st.converged {
        PixelStatus::Converged
    } else {
        PixelStatus::NotConverged
    };
    for k in 0..n {
        let sum = x.column(k).sum();
        if st.degenerate[k] || sum <= DEGENERATE_SUM {
            x.column_mut(k).fill(0.0);
            s[k] = 0.0;
            b.column_mut(k).fill(0.0);
            status.push(PixelStatus::Degenerate);
        } else {
            x.column_mut(k).unscale_mut(sum);
            status.push(running);
        }
    }
    Ok(SvdlOutput {
        dictionary: VariabilityDictionary::new(st.e.clone())?,
        abundances: AbundanceMatrix::new(x, true)?,
        scales: ScalingFactors::new(s)?,
        coefficients: VariabilityCoefficients::new(b)?,
        status,
        state: st,
    })
}
