//! Two-stage semi-parametric VARFI identification: local Whittle estimates
//! of each `d`, fractional pre-filtering, then OLS VAR fitting with BIC order
//! selection.

use nalgebra::SymmetricEigen;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{check_stationarity, fracdiff_weights, VarfiModel};

pub const MIN_SERIES_LEN: usize = 64;
pub const D_SEARCH_LOWER: f64 = -0.5;
pub const D_SEARCH_UPPER: f64 = 1.0 - 1e-6;
pub const GOLDEN_TOL: f64 = 1e-6;
/// Estimated `d` at or above this rejects the channel as nonstationary.
pub const NONSTATIONARY_D: f64 = 0.95;
pub const DEFAULT_BANDWIDTH: f64 = 0.65;

/// Relative eigenvalue floor of the scaled regressor Gram matrix.
const COLLINEARITY_TOL: f64 = 1e-10;

/// Periodogram ordinates `(lambda_k, I(lambda_k))` for `k = 1 ..= N/2`.
pub fn periodogram(x: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = x.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_SERIES_LEN,
            got: n,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 2.0 * std::f64::consts::PI * n as f64;
    Ok((1..=n / 2)
        .map(|k| {
            let lambda = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (lambda, buf[k].norm_sqr() / norm)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DEstimate {
    pub d: f64,
    /// Number of Fourier frequencies used.
    pub bandwidth: usize,
    /// Estimate sits at the upper search bound (nonstationary warning).
    pub at_boundary: bool,
}

/// Local Whittle objective `R(d)` on the first `m` ordinates.
pub fn whittle_objective(pgram: &[(f64, f64)], m: usize, d: f64) -> f64 {
    let band = &pgram[..m];
    let mf = m as f64;
    let mean_log = band.iter().map(|(l, _)| l.ln()).sum::<f64>() / mf;
    let g = band.iter().map(|(l, i)| l.powf(2.0 * d) * i).sum::<f64>() / mf;
    g.ln() - 2.0 * d * mean_log
}

/// Minimizes `f` over `[a, b]` by golden-section search.
pub fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Local Whittle estimate from precomputed ordinates and bandwidth `m`.
pub fn whittle_from_periodogram(pgram: &[(f64, f64)], m: usize) -> Result<DEstimate> {
    if m == 0 || m > pgram.len() {
        return Err(Error::Argument(format!(
            "bandwidth {m} outside 1..={}",
            pgram.len()
        )));
    }
    if pgram[..m].iter().all(|&(_, i)| i == 0.0) {
        return Err(Error::DegenerateInput(
            "periodogram is zero over the estimation band".into(),
        ));
    }
    let d = golden_section(D_SEARCH_LOWER, D_SEARCH_UPPER, GOLDEN_TOL, |d| {
        whittle_objective(pgram, m, d)
    });
    Ok(DEstimate {
        d,
        bandwidth: m,
        at_boundary: d >= D_SEARCH_UPPER - 2.0 * GOLDEN_TOL,
    })
}

pub fn whittle_bandwidth(n: usize, exponent: f64) -> usize {
    ((n as f64).powf(exponent).floor() as usize).clamp(1, n / 2)
}

/// Local Whittle estimate of the memory parameter of `x`.
pub fn whittle_local_d(x: &[f64], bandwidth_exponent: f64) -> Result<DEstimate> {
    if !(bandwidth_exponent > 0.0 && bandwidth_exponent < 1.0) {
        return Err(Error::Argument(format!(
            "bandwidth exponent {bandwidth_exponent} outside (0, 1)"
        )));
    }
    let pgram = periodogram(x)?;
    whittle_from_periodogram(&pgram, whittle_bandwidth(x.len(), bandwidth_exponent))
}

/// Applies `(1-L)^d` truncated at lag `q`, using only available history at
/// the start so the output keeps the input length.
pub fn fractional_filter(x: &[f64], d: f64, q: usize) -> Result<Vec<f64>> {
    if !d.is_finite() {
        return Err(Error::Domain(format!("d must be finite, got {d}")));
    }
    if q == 0 {
        return Err(Error::Argument("truncation lag q must be >= 1".into()));
    }
    let g = fracdiff_weights(d, q);
    Ok((0..x.len())
        .map(|n| (0..=n.min(q)).map(|k| g[k] * x[n - k]).sum())
        .collect())
}

/// Lag cross-product sums for OLS fits of every order up to `max_lag`.
struct LagGram<'a> {
    x: &'a [Vec<f64>],
    max_lag: usize,
    /// Blocks `(k, l)` over `n in max_lag..N`, indexed `[k*M + i][l*M + j]`.
    base: Mat,
}

impl<'a> LagGram<'a> {
    fn new(x: &'a [Vec<f64>], max_lag: usize) -> Self {
        let dim = x.len();
        let n = x[0].len();
        let w = dim * (max_lag + 1);
        let mut base = Mat::zeros(w, w);
        let mut row = vec![0.0; w];
        for t in max_lag..n {
            for k in 0..=max_lag {
                for i in 0..dim {
                    row[k * dim + i] = x[i][t - k];
                }
            }
            for a in 0..w {
                let ra = row[a];
                for b in a..w {
                    base[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..w {
            for b in 0..a {
                base[(a, b)] = base[(b, a)];
            }
        }
        Self { x, max_lag, base }
    }

    /// Cross products over `n in p..N` for lags `0..=p`.
    fn gram(&self, p: usize) -> Mat {
        let dim = self.x.len();
        let w = dim * (p + 1);
        let mut g = self.base.view((0, 0), (w, w)).into_owned();
        let mut row = vec![0.0; w];
        for t in p..self.max_lag {
            for k in 0..=p {
                for i in 0..dim {
                    row[k * dim + i] = self.x[i][t - k];
                }
            }
            for a in 0..w {
                for b in 0..w {
                    g[(a, b)] += row[a] * row[b];
                }
            }
        }
        g
    }
}

/// Result of a least-squares VAR fit.
#[derive(Debug, Clone, PartialEq)]
pub struct VarFit {
    /// `B_1 .. B_p`.
    pub coeffs: Vec<Mat>,
    pub sigma: Mat,
}

fn check_channels(x: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = x.first() else {
        return Err(Error::ChannelCount("no channels".into()));
    };
    let n = first.len();
    if x.iter().any(|c| c.len() != n) {
        return Err(Error::Argument("channels have different lengths".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample".into()));
    }
    Ok(n)
}

fn fit_from_gram(g: &Mat, dim: usize, p: usize, n_eff: usize) -> Result<VarFit> {
    let syy = g.view((0, 0), (dim, dim)).into_owned();
    if p == 0 {
        let sigma = syy / n_eff as f64;
        return Ok(VarFit {
            coeffs: Vec::new(),
            sigma,
        });
    }
    let w = dim * p;
    let zz = g.view((dim, dim), (w, w)).into_owned();
    let zy = g.view((dim, 0), (w, dim)).into_owned();

    // Collinearity check on the correlation-scaled Gram matrix.
    let scale: Vec<f64> = (0..w).map(|a| zz[(a, a)].sqrt()).collect();
    if scale.contains(&0.0) {
        let bad = scale.iter().position(|&s| s == 0.0).unwrap() % dim;
        return Err(Error::SingularFit {
            channels: vec![bad.to_string()],
        });
    }
    let corr = Mat::from_fn(w, w, |a, b| zz[(a, b)] / (scale[a] * scale[b]));
    let eig = SymmetricEigen::new(corr);
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    if lmin < COLLINEARITY_TOL * w as f64 {
        let v = eig.eigenvectors.column(imin);
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut channels: Vec<usize> = (0..w)
            .filter(|&a| v[a].abs() > 0.1 * vmax)
            .map(|a| a % dim)
            .collect();
        channels.sort_unstable();
        channels.dedup();
        return Err(Error::SingularFit {
            channels: channels.iter().map(usize::to_string).collect(),
        });
    }
    let chol = zz.clone().cholesky().ok_or_else(|| Error::SingularFit {
        channels: (0..dim).map(|c| c.to_string()).collect(),
    })?;
    let beta = chol.solve(&zy); // w x dim, stacked B_k'
    let mut sigma = (syy - zy.transpose() * &beta) / n_eff as f64;
    linalg::symmetrize(&mut sigma);
    let coeffs = (0..p)
        .map(|k| beta.view((k * dim, 0), (dim, dim)).transpose())
        .collect();
    Ok(VarFit { coeffs, sigma })
}

fn name_channels(err: Error, labels: Option<&[String]>) -> Error {
    match (err, labels) {
        (Error::SingularFit { channels }, Some(labels)) => Error::SingularFit {
            channels: channels
                .iter()
                .map(|c| c.parse::<usize>().ok().and_then(|i| labels.get(i)).cloned().unwrap_or_else(|| c.clone()))
                .collect(),
        },
        (e, _) => e,
    }
}

/// Least-squares VAR(p) fit without intercept; residual covariance uses the
/// divisor `N - p`. Channels are `x[channel][sample]`.
pub fn ols_var_fit(x: &[Vec<f64>], p: usize) -> Result<VarFit> {
    let n = check_channels(x)?;
    let dim = x.len();
    if n <= dim * p + 10 {
        return Err(Error::InsufficientData {
            needed: dim * p + 11,
            got: n,
        });
    }
    let fit = fit_from_gram(&LagGram::new(x, p).gram(p), dim, p, n - p)?;
    check_residual_covariance(&fit.sigma, dim)?;
    Ok(fit)
}

fn check_residual_covariance(sigma: &Mat, dim: usize) -> Result<()> {
    if linalg::is_positive_definite(sigma) && sigma.determinant() > 0.0 {
        return Ok(());
    }
    Err(Error::SingularFit {
        channels: (0..dim).map(|c| c.to_string()).collect(),
    })
}

/// Criterion value `N ln det(Sigma_p) + p M^2 ln N`.
pub fn bic_value(sigma: &Mat, n: usize, p: usize) -> f64 {
    let m = sigma.nrows() as f64;
    let nf = n as f64;
    nf * sigma.determinant().ln() + p as f64 * m * m * nf.ln()
}

/// Order in `1..=p_max` minimizing BIC (ties go to the smaller order).
pub fn bic_select(x: &[Vec<f64>], p_max: usize) -> Result<usize> {
    Ok(bic_scan(x, p_max)?.0)
}

/// BIC-selected order with the BIC value of each candidate order.
pub fn bic_scan(x: &[Vec<f64>], p_max: usize) -> Result<(usize, Vec<f64>)> {
    if p_max == 0 {
        return Err(Error::Argument("p_max must be >= 1".into()));
    }
    let n = check_channels(x)?;
    let dim = x.len();
    if n <= dim * p_max + 10 {
        return Err(Error::InsufficientData {
            needed: dim * p_max + 11,
            got: n,
        });
    }
    let lg = LagGram::new(x, p_max);
    let mut values = Vec::with_capacity(p_max);
    let mut best = (1, f64::INFINITY);
    for p in 1..=p_max {
        let fit = fit_from_gram(&lg.gram(p), dim, p, n - p)?;
        check_residual_covariance(&fit.sigma, dim)?;
        let v = bic_value(&fit.sigma, n, p);
        if v < best.1 {
            best = (p, v);
        }
        values.push(v);
    }
    Ok((best.0, values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub q: usize,
    pub p_max: usize,
    pub bandwidth: f64,
    /// Fixed order, bypassing BIC (the only way to request `p = 0`).
    pub order: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            q: 50,
            p_max: 20,
            bandwidth: DEFAULT_BANDWIDTH,
            order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(skip)]
    pub model: Option<VarfiModel>,
    pub d: Vec<DEstimate>,
    pub p: usize,
    pub bic: Vec<f64>,
    /// Leading filtered samples computed from truncated history.
    pub burn_in: usize,
    pub stationary: bool,
    pub spectral_radius: f64,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn model(&self) -> &VarfiModel {
        self.model.as_ref().expect("fit report carries its model")
    }
}

/// Fits a VARFI model: per-channel `d`, fractional filtering, order
/// selection, OLS.
pub fn fit_varfi(x: &[Vec<f64>], labels: &[String], opts: &FitOptions) -> Result<FitReport> {
    let n = check_channels(x)?;
    if labels.len() != x.len() {
        return Err(Error::Argument(format!("{} labels for {} channels", labels.len(), x.len())));
    }
    if n < MIN_SERIES_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_SERIES_LEN,
            got: n,
        });
    }
    let mut warnings = Vec::new();
    let mut d = Vec::with_capacity(x.len());
    for (c, series) in x.iter().enumerate() {
        let est = whittle_local_d(series, opts.bandwidth)?;
        if est.d >= NONSTATIONARY_D {
            return Err(Error::NonstationarySubject {
                channel: labels[c].clone(),
                d: est.d,
            });
        }
        if est.at_boundary {
            warnings.push(format!("channel {}: d estimate at the search bound", labels[c]));
        }
        if est.d >= 0.5 {
            warnings.push(format!(
                "channel {}: d = {:.4} >= 0.5 (nonstationary, mean reverting)",
                labels[c], est.d
            ));
        }
        d.push(est);
    }
    let filtered = x
        .iter()
        .zip(&d)
        .map(|(s, e)| fractional_filter(s, e.d, opts.q))
        .collect::<Result<Vec<_>>>()?;
    let (p, bic) = match opts.order {
        Some(p) => (p, Vec::new()),
        None => bic_scan(&filtered, opts.p_max).map_err(|e| name_channels(e, Some(labels)))?,
    };
    if p > opts.q {
        return Err(Error::Argument(format!("selected order {p} exceeds q={}", opts.q)));
    }
    let fit = ols_var_fit(&filtered, p).map_err(|e| name_channels(e, Some(labels)))?;
    let model = VarfiModel::new(
        fit.coeffs,
        d.iter().map(|e| e.d).collect(),
        fit.sigma,
        labels.to_vec(),
    )?;
    let report = check_stationarity(&model);
    if !report.stable {
        warnings.push(format!(
            "fitted VAR part is unstable (spectral radius {:.6})",
            report.spectral_radius
        ));
    }
    Ok(FitReport {
        d,
        p,
        bic,
        burn_in: opts.q.min(n),
        stationary: report.is_stationary(),
        spectral_radius: report.spectral_radius,
        warnings,
        model: Some(model),
    })
}
