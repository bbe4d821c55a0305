//! VARFI and finite-order VAR models, fractional differencing weights and
//! the truncation that turns one into the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Stability margin on the companion spectral radius.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// Lower (exclusive) and upper (exclusive) bounds of the differencing exponent.
pub const D_MIN: f64 = -0.5;
pub const D_MAX: f64 = 1.0;

/// A VARFI(p, d) model `A(L) diag((1-L)^d) X_n = E_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarfiModel {
    /// AR coefficient matrices `A_1 .. A_p`, each `M x M`.
    pub ar: Vec<Mat>,
    /// Per-channel fractional differencing exponents.
    pub d: Vec<f64>,
    /// Innovation covariance.
    pub sigma: Mat,
    pub labels: Vec<String>,
}

/// A VAR(m) model `X_n = sum_k B_k X_{n-k} + E_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub coeffs: Vec<Mat>,
    pub sigma: Mat,
    pub labels: Vec<String>,
}

fn check_covariance(sigma: &Mat, dim: usize) -> Result<()> {
    if sigma.nrows() != dim || sigma.ncols() != dim {
        return Err(Error::Argument(format!(
            "innovation covariance must be {dim}x{dim}, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if !linalg::all_finite(sigma) || !linalg::is_symmetric(sigma, 1e-12) {
        return Err(Error::Argument(
            "innovation covariance must be finite and symmetric".into(),
        ));
    }
    if !linalg::is_positive_definite(sigma) {
        return Err(Error::Argument(
            "innovation covariance must be positive definite".into(),
        ));
    }
    Ok(())
}

fn check_coeffs(coeffs: &[Mat], dim: usize) -> Result<()> {
    for (k, a) in coeffs.iter().enumerate() {
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::Argument(format!(
                "lag {} coefficient must be {dim}x{dim}, got {}x{}",
                k + 1,
                a.nrows(),
                a.ncols()
            )));
        }
        if !linalg::all_finite(a) {
            return Err(Error::Argument(format!("lag {} coefficient is not finite", k + 1)));
        }
    }
    Ok(())
}

fn check_labels(labels: &[String], dim: usize) -> Result<()> {
    if labels.len() != dim {
        return Err(Error::Argument(format!(
            "expected {dim} channel labels, got {}",
            labels.len()
        )));
    }
    Ok(())
}

pub fn check_d(d: f64) -> Result<()> {
    if !(d > D_MIN && d < D_MAX) {
        return Err(Error::Domain(format!(
            "differencing exponent {d} outside ({D_MIN}, {D_MAX})"
        )));
    }
    Ok(())
}

/// Default labels `X1, X2, ...`.
pub fn default_labels(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("X{i}")).collect()
}

impl VarfiModel {
    pub fn new(ar: Vec<Mat>, d: Vec<f64>, sigma: Mat, labels: Vec<String>) -> Result<Self> {
        let dim = d.len();
        if dim == 0 {
            return Err(Error::Argument("model needs at least one channel".into()));
        }
        check_coeffs(&ar, dim)?;
        check_covariance(&sigma, dim)?;
        check_labels(&labels, dim)?;
        for &di in &d {
            check_d(di)?;
        }
        Ok(Self { ar, d, sigma, labels })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn order(&self) -> usize {
        self.ar.len()
    }

    pub fn channel(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl VarModel {
    pub fn new(coeffs: Vec<Mat>, sigma: Mat, labels: Vec<String>) -> Result<Self> {
        let dim = sigma.nrows();
        if dim == 0 {
            return Err(Error::Argument("model needs at least one channel".into()));
        }
        check_coeffs(&coeffs, dim)?;
        check_covariance(&sigma, dim)?;
        check_labels(&labels, dim)?;
        Ok(Self { coeffs, sigma, labels })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn companion(&self) -> Mat {
        linalg::companion(&self.coeffs, self.dim())
    }
}

/// Weights of `(1-L)^d` up to lag `q` by the ratio recursion.
///
/// No domain check: callers that need one go through [`fracdiff_coeffs`].
pub(crate) fn fracdiff_weights(d: f64, q: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(q + 1);
    g.push(1.0);
    for k in 1..=q {
        let kf = k as f64;
        g.push(g[k - 1] * (kf - 1.0 - d) / kf);
    }
    g
}

/// Coefficients `G_0 .. G_q` of the fractional differencing operator `(1-L)^d`.
pub fn fracdiff_coeffs(d: f64, q: usize) -> Result<Vec<f64>> {
    check_d(d)?;
    Ok(fracdiff_weights(d, q))
}

/// Approximates a VARFI model by the VAR(p+q) obtained from truncating the
/// fractional integration at lag `q`.
pub fn truncate_to_var(model: &VarfiModel, q: usize) -> Result<VarModel> {
    let p = model.order();
    if q < p {
        return Err(Error::Argument(format!(
            "truncation lag q={q} must be at least the AR order p={p}"
        )));
    }
    let dim = model.dim();
    let weights: Vec<Vec<f64>> = model
        .d
        .iter()
        .map(|&d| fracdiff_coeffs(d, q))
        .collect::<Result<_>>()?;
    // G_k as a diagonal matrix; A_i * G_k scales column c of A_i by G_k^(c).
    let g = |k: usize| Mat::from_diagonal(&nalgebra::DVector::from_fn(dim, |c, _| weights[c][k]));
    let a_times_g = |i: usize, k: usize| {
        let mut out = model.ar[i - 1].clone();
        for c in 0..dim {
            let w = weights[c][k];
            out.column_mut(c).scale_mut(w);
        }
        out
    };

    let m = p + q;
    let mut coeffs = Vec::with_capacity(m);
    for k in 1..=m {
        let b = if k <= q {
            let mut b = -g(k);
            for i in 1..=k.min(p) {
                b += a_times_g(i, k - i);
            }
            b
        } else {
            let mut b = Mat::zeros(dim, dim);
            for i in 0..=(p + q - k) {
                b += a_times_g(i + k - q, q - i);
            }
            b
        };
        coeffs.push(b);
    }
    Ok(VarModel {
        coeffs,
        sigma: model.sigma.clone(),
        labels: model.labels.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DClass {
    Stationary,
    MeanReverting,
}

impl DClass {
    pub fn of(d: f64) -> Self {
        if d < 0.5 {
            DClass::Stationary
        } else {
            DClass::MeanReverting
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub spectral_radius: f64,
    pub stable: bool,
    /// Per-channel classification of the differencing exponent; empty for
    /// plain VAR models.
    pub channels: Vec<DClass>,
}

impl StationarityReport {
    pub fn is_stationary(&self) -> bool {
        self.stable && self.channels.iter().all(|c| *c == DClass::Stationary)
    }
}

/// Anything with a VAR lag polynomial that can be checked for stability.
pub trait LagPolynomial {
    fn lag_coeffs(&self) -> &[Mat];
    fn channels(&self) -> usize;
    fn exponents(&self) -> &[f64] {
        &[]
    }
}

impl LagPolynomial for VarfiModel {
    fn lag_coeffs(&self) -> &[Mat] {
        &self.ar
    }
    fn channels(&self) -> usize {
        self.dim()
    }
    fn exponents(&self) -> &[f64] {
        &self.d
    }
}

impl LagPolynomial for VarModel {
    fn lag_coeffs(&self) -> &[Mat] {
        &self.coeffs
    }
    fn channels(&self) -> usize {
        self.dim()
    }
}

pub fn check_stationarity<M: LagPolynomial + ?Sized>(model: &M) -> StationarityReport {
    let radius = linalg::spectral_radius(&linalg::companion(model.lag_coeffs(), model.channels()));
    StationarityReport {
        spectral_radius: radius,
        stable: radius < 1.0 - STABILITY_MARGIN,
        channels: model.exponents().iter().map(|&d| DClass::of(d)).collect(),
    }
}
