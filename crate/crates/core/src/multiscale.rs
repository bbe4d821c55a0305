//! Rescaling of a VAR process to a coarser time scale.
//!
//! The process is low-pass filtered with a linear-phase FIR filter, written
//! in innovations state-space form, and decimated; the decimated model is
//! brought back to innovations form by solving a Riccati equation. Partial
//! variances of any channel subset come from the innovations of the
//! corresponding observation submodel.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{check_stationarity, VarModel};
use crate::riccati::{self, DareOptions};

/// Linear-phase FIR low-pass filter `D(L) = sum_k D_k L^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub order: usize,
    pub cutoff: f64,
    pub taps: Vec<f64>,
}

impl FilterSpec {
    pub fn bypass() -> Self {
        Self {
            order: 0,
            cutoff: 0.5,
            taps: vec![1.0],
        }
    }

    pub fn is_bypass(&self) -> bool {
        self.taps.len() == 1
    }

    /// Taps with the leading and trailing exact zeros removed.
    ///
    /// Leading zeros are a delay common to every channel, which leaves the
    /// joint law of a stationary process unchanged.
    pub fn effective_taps(&self) -> &[f64] {
        let first = self.taps.iter().position(|&t| t != 0.0).unwrap_or(0);
        let last = self.taps.iter().rposition(|&t| t != 0.0).unwrap_or(0);
        &self.taps[first..=last.max(first)]
    }

    /// Complex frequency response `D(e^{-i 2 pi f})` as `(re, im)`.
    pub fn response(&self, f: f64) -> (f64, f64) {
        self.taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, &d)| {
            let w = 2.0 * PI * f * k as f64;
            (re + d * w.cos(), im - d * w.sin())
        })
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        let (re, im) = self.response(f);
        re.hypot(im)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    // Exact zeros at nonzero integers; the window edges land on them whenever
    // the scale divides r/2.
    if (x - x.round()).abs() < 1e-12 {
        return 0.0;
    }
    (PI * x).sin() / (PI * x)
}

/// Hamming-windowed sinc low-pass of even order `r` and cutoff `cutoff`
/// (cycles/sample), normalized to unit DC gain.
///
/// A cutoff of 0.5 removes nothing and yields the bypass filter `D = [1]`.
pub fn fir_lowpass(r: usize, cutoff: f64) -> Result<FilterSpec> {
    if !(cutoff > 0.0 && cutoff <= 0.5) {
        return Err(Error::Argument(format!("cutoff {cutoff} outside (0, 0.5]")));
    }
    if r < 2 || !r.is_multiple_of(2) {
        return Err(Error::Argument(format!("filter order {r} must be even and >= 2")));
    }
    if cutoff == 0.5 {
        return Ok(FilterSpec::bypass());
    }
    let half = r / 2;
    let mut taps = vec![0.0; r + 1];
    for k in 0..=half {
        let window = 0.54 - 0.46 * (2.0 * PI * k as f64 / r as f64).cos();
        let h = 2.0 * cutoff * sinc(2.0 * cutoff * (k as f64 - half as f64)) * window;
        taps[k] = h;
        taps[r - k] = h;
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(FilterSpec {
        order: r,
        cutoff,
        taps,
    })
}

/// Innovations-form state-space model
///
/// ```text
/// Z_{n+1} = A Z_n + K E_n
/// X_n     = C Z_n + E_n,     cov(E_n) = V
/// ```
#[derive(Debug, Clone)]
pub struct IssModel {
    a: Mat,
    c: Mat,
    k: Mat,
    v: Mat,
}

impl IssModel {
    /// Validates shapes, covariance and stability of `A`.
    pub fn new(a: Mat, c: Mat, k: Mat, v: Mat) -> Result<Self> {
        let n = a.nrows();
        let p = c.nrows();
        if !a.is_square() || c.ncols() != n || k.shape() != (n, p) || v.shape() != (p, p) {
            return Err(Error::Argument(format!(
                "inconsistent state-space shapes: A {:?}, C {:?}, K {:?}, V {:?}",
                a.shape(),
                c.shape(),
                k.shape(),
                v.shape()
            )));
        }
        if !linalg::is_symmetric(&v, 1e-9) || !linalg::is_positive_definite(&v) {
            return Err(Error::IllPosed("innovation covariance must be positive definite".into()));
        }
        let radius = linalg::spectral_radius(&a);
        if radius >= 1.0 - crate::model::STABILITY_MARGIN {
            return Err(Error::Unstable { radius });
        }
        Ok(Self { a, c, k, v })
    }

    /// Caller guarantees the invariants (stable `A`, positive-definite `V`).
    pub(crate) fn from_parts(a: Mat, c: Mat, k: Mat, v: Mat) -> Self {
        Self { a, c, k, v }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn k(&self) -> &Mat {
        &self.k
    }

    pub fn v(&self) -> &Mat {
        &self.v
    }

    /// Output autocovariance `Gamma_l = E[X_{n+l} X_n']` for lags `0..=max_lag`.
    pub fn autocovariance(&self, max_lag: usize) -> Result<Vec<Mat>> {
        // Stationary state covariance: Pi = A Pi A' + K V K'.
        let q = &self.k * &self.v * self.k.transpose();
        let pi = riccati::lyapunov(&self.a, &q, &DareOptions::default())?;
        let mut out = Vec::with_capacity(max_lag + 1);
        out.push(&self.c * &pi * self.c.transpose() + &self.v);
        // Gamma_l = C A^{l-1} (A Pi C' + K V) for l >= 1.
        let mut g = &self.a * &pi * self.c.transpose() + &self.k * &self.v;
        for _ in 1..=max_lag {
            out.push(&self.c * &g);
            g = &self.a * g;
        }
        Ok(out)
    }
}

/// Innovations state-space form of the filtered process
/// `B(L) X^(r)_n = D(L) E_n`, with state
/// `Z_n = [X^(r)_{n-1} .. X^(r)_{n-m}, E_{n-1} .. E_{n-r}]`.
///
/// `r` counts the effective taps of the filter (exact zero end taps are
/// dropped, see [`FilterSpec::effective_taps`]).
pub fn varma_to_iss(var: &VarModel, filt: &FilterSpec) -> Result<IssModel> {
    let report = check_stationarity(var);
    if !report.stable {
        return Err(Error::Unstable {
            radius: report.spectral_radius,
        });
    }
    let dim = var.dim();
    let m = var.order();
    let taps = filt.effective_taps();
    let r = taps.len() - 1;
    let d0 = taps[0];
    if d0 == 0.0 {
        return Err(Error::Argument("filter tap D_0 must be nonzero".into()));
    }
    let n = dim * (m + r);

    let mut c = Mat::zeros(dim, n);
    for (k, b) in var.coeffs.iter().enumerate() {
        c.view_mut((0, k * dim), (dim, dim)).copy_from(b);
    }
    for k in 1..=r {
        for i in 0..dim {
            c[(i, (m + k - 1) * dim + i)] = taps[k];
        }
    }

    let mut a = Mat::zeros(n, n);
    if m > 0 {
        a.view_mut((0, 0), (dim, n)).copy_from(&c);
    }
    for blk in 1..m {
        for i in 0..dim {
            a[(blk * dim + i, (blk - 1) * dim + i)] = 1.0;
        }
    }
    for blk in 1..r {
        for i in 0..dim {
            a[((m + blk) * dim + i, (m + blk - 1) * dim + i)] = 1.0;
        }
    }

    let mut k = Mat::zeros(n, dim);
    for i in 0..dim {
        if m > 0 {
            k[(i, i)] = 1.0;
        }
        if r > 0 {
            k[(m * dim + i, i)] = 1.0 / d0;
        }
    }
    let v = &var.sigma * (d0 * d0);
    Ok(IssModel::from_parts(a, c, k, v))
}

/// Minimal (observer-canonical) innovations form of the filtered process,
/// with state dimension `M * max(m, r)`.
///
/// Describes the same process as [`varma_to_iss`]: `X_n = s^1_n + e_n` and
/// `s^i_{n+1} = B_i X_n + s^{i+1}_n + (D_i / D_0) e_n` with `e_n = D_0 E_n`.
pub fn varma_to_iss_minimal(var: &VarModel, filt: &FilterSpec) -> Result<IssModel> {
    let report = check_stationarity(var);
    if !report.stable {
        return Err(Error::Unstable {
            radius: report.spectral_radius,
        });
    }
    let dim = var.dim();
    let m = var.order();
    let taps = filt.effective_taps();
    let r = taps.len() - 1;
    let d0 = taps[0];
    if d0 == 0.0 {
        return Err(Error::Argument("filter tap D_0 must be nonzero".into()));
    }
    let blocks = m.max(r);
    let n = dim * blocks;
    let mut a = Mat::zeros(n, n);
    let mut k = Mat::zeros(n, dim);
    let mut c = Mat::zeros(dim, n);
    for i in 0..dim {
        if n > 0 {
            c[(i, i)] = 1.0;
        }
    }
    for blk in 0..blocks {
        if let Some(b) = var.coeffs.get(blk) {
            a.view_mut((blk * dim, 0), (dim, dim)).copy_from(b);
            k.view_mut((blk * dim, 0), (dim, dim)).copy_from(b);
        }
        if blk + 1 < blocks {
            for i in 0..dim {
                a[(blk * dim + i, (blk + 1) * dim + i)] = 1.0;
            }
        }
        if blk < r {
            let theta = taps[blk + 1] / d0;
            for i in 0..dim {
                k[(blk * dim + i, i)] += theta;
            }
        }
    }
    let v = &var.sigma * (d0 * d0);
    Ok(IssModel::from_parts(a, c, k, v))
}

/// Innovations form of the model observed every `tau` steps.
pub fn downsample_iss(iss: &IssModel, tau: usize) -> Result<IssModel> {
    downsample_iss_with(iss, tau, &DareOptions::default())
}

pub fn downsample_iss_with(iss: &IssModel, tau: usize, opts: &DareOptions) -> Result<IssModel> {
    if tau == 0 {
        return Err(Error::Argument("scale must be >= 1".into()));
    }
    let n = iss.state_dim();
    let kv = &iss.k * &iss.v;
    let kvk = &kv * iss.k.transpose();
    let mut a_pow = DMatrix::<f64>::identity(n, n);
    let mut q = Mat::zeros(n, n);
    for _ in 0..tau {
        q += &a_pow * &kvk * a_pow.transpose();
        a_pow = &iss.a * a_pow;
    }
    linalg::symmetrize(&mut q);
    // a_pow is now A^tau; the cross term uses A^(tau-1).
    let s = if tau == 1 {
        kv
    } else {
        let mut p = DMatrix::<f64>::identity(n, n);
        for _ in 0..tau - 1 {
            p = &iss.a * p;
        }
        p * kv
    };
    let sol = riccati::solve_unchecked(&a_pow, &iss.c, &q, &iss.v, &s, opts)?;
    Ok(IssModel::from_parts(a_pow, iss.c.clone(), sol.gain, sol.innov_cov))
}

/// Innovation covariance of the submodel observing only channels `subset`
/// (in the given order).
pub fn submodel_innovations(iss: &IssModel, subset: &[usize], opts: &DareOptions) -> Result<Mat> {
    let p = iss.obs_dim();
    if subset.is_empty() {
        return Err(Error::Argument("channel subset must be nonempty".into()));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= p) {
        return Err(Error::Argument(format!("channel {bad} out of range (model has {p})")));
    }
    let kv = &iss.k * &iss.v;
    let mut q = &kv * iss.k.transpose();
    linalg::symmetrize(&mut q);
    let c_a = linalg::select_rows(&iss.c, subset);
    let r_a = linalg::select_square(&iss.v, subset);
    let s_a = linalg::select_cols(&kv, subset);
    let sol = riccati::solve_unchecked(&iss.a, &c_a, &q, &r_a, &s_a, opts)?;
    Ok(sol.innov_cov)
}

/// Prediction-error variance of channel `target` given the past of the
/// channels in `subset` (which must contain `target`).
pub fn partial_variance(iss: &IssModel, subset: &[usize], target: usize) -> Result<f64> {
    partial_variance_with(iss, subset, target, &DareOptions::default())
}

pub fn partial_variance_with(
    iss: &IssModel,
    subset: &[usize],
    target: usize,
    opts: &DareOptions,
) -> Result<f64> {
    let pos = subset
        .iter()
        .position(|&i| i == target)
        .ok_or_else(|| Error::Argument(format!("target {target} not in subset {subset:?}")))?;
    let cov = submodel_innovations(iss, subset, opts)?;
    positive(cov[(pos, pos)])
}

fn positive(v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::IllPosed(format!("partial variance {v} is not positive")))
    }
}

/// Per-model cache of submodel innovation covariances keyed by the sorted
/// channel subset.
#[derive(Debug)]
pub struct PartialVariances<'a> {
    iss: &'a IssModel,
    opts: DareOptions,
    cache: Mutex<HashMap<Vec<usize>, Mat>>,
}

impl<'a> PartialVariances<'a> {
    pub fn new(iss: &'a IssModel, opts: DareOptions) -> Self {
        Self {
            iss,
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &IssModel {
        self.iss
    }

    pub fn get(&self, subset: &[usize], target: usize) -> Result<f64> {
        let mut key = subset.to_vec();
        key.sort_unstable();
        key.dedup();
        let pos = key
            .iter()
            .position(|&i| i == target)
            .ok_or_else(|| Error::Argument(format!("target {target} not in subset {subset:?}")))?;
        if key.len() == self.iss.obs_dim() {
            return positive(self.iss.v[(target, target)]);
        }
        if let Some(cov) = self.cache.lock().expect("cache poisoned").get(&key) {
            return positive(cov[(pos, pos)]);
        }
        let cov = submodel_innovations(self.iss, &key, &self.opts)?;
        let v = cov[(pos, pos)];
        self.cache.lock().expect("cache poisoned").insert(key, cov);
        positive(v)
    }
}
