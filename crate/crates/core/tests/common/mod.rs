#![allow(dead_code)]

use msid::linalg::Mat;
use msid::model::{default_labels, VarfiModel, VarModel};
use msid::multiscale::IssModel;
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stable VARFI model with `d` drawn from `d_range`.
pub fn random_model(rng: &mut ChaCha8Rng, dim: usize, d_range: (f64, f64)) -> VarfiModel {
    loop {
        let p = rng.gen_range(1..=2);
        let ar: Vec<Mat> = (0..p)
            .map(|_| Mat::from_fn(dim, dim, |_, _| rng.gen_range(-0.6..0.6)))
            .collect();
        let l = Mat::from_fn(dim, dim, |i, j| if j <= i { rng.gen_range(-1.0..1.0) } else { 0.0 });
        let sigma = &l * l.transpose() + Mat::identity(dim, dim) * 0.2;
        let d = (0..dim).map(|_| rng.gen_range(d_range.0..=d_range.1)).collect();
        let Ok(m) = VarfiModel::new(ar, d, sigma, default_labels(dim)) else {
            continue;
        };
        if msid::model::check_stationarity(&m).spectral_radius < 0.95 {
            return m;
        }
    }
}

/// Coefficients of the matrix polynomial product `A(L) G(L)` written as
/// `I - sum B_k L^k`, by brute-force convolution.
pub fn convolution_oracle(model: &VarfiModel, q: usize) -> Vec<Mat> {
    let dim = model.dim();
    let p = model.order();
    // Polynomial coefficients: A(L) = I - sum A_i L^i ; G(L) = diag(sum G_k L^k).
    let mut a_poly = vec![Mat::identity(dim, dim)];
    for a in &model.ar {
        a_poly.push(-a);
    }
    let g: Vec<Vec<f64>> = model
        .d
        .iter()
        .map(|&d| {
            // binomial series of (1 - L)^d by explicit products
            (0..=q)
                .map(|k| (0..k).fold(1.0, |acc, j| acc * (j as f64 - d) / (j as f64 + 1.0)))
                .collect()
        })
        .collect();
    let mut out = vec![Mat::zeros(dim, dim); p + q + 1];
    for (i, ai) in a_poly.iter().enumerate() {
        for k in 0..=q {
            let gk = Mat::from_diagonal(&nalgebra::DVector::from_fn(dim, |c, _| g[c][k]));
            out[i + k] += ai * gk;
        }
    }
    out.into_iter().skip(1).map(|c| -c).collect()
}

/// Draws `n` samples from a VAR after `burn` discarded samples.
pub fn simulate_var(var: &VarModel, n: usize, burn: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = var.dim();
    let chol = var.sigma.clone().cholesky().unwrap().l();
    let mut r = rng(seed);
    let total = n + burn;
    let mut x = vec![vec![0.0; total]; dim];
    let mut z = vec![0.0; dim];
    for t in 0..total {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut r);
        }
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += chol[(i, j)] * z[j];
            }
            for (k, b) in var.coeffs.iter().enumerate() {
                if t > k {
                    for j in 0..dim {
                        acc += b[(i, j)] * x[j][t - k - 1];
                    }
                }
            }
            x[i][t] = acc;
        }
    }
    for c in &mut x {
        c.drain(..burn);
    }
    x
}

/// Least-squares regression oracle over a common sample: the Gram matrix of
/// `[x_t, x_{t-1}, ..., x_{t-L}]` for `t in L..N`.
pub struct RegressionOracle {
    dim: usize,
    lags: usize,
    width: usize,
    rows: usize,
    gram: Vec<f64>,
}

impl RegressionOracle {
    pub fn new(x: &[Vec<f64>], lags: usize) -> Self {
        let dim = x.len();
        let n = x[0].len();
        let width = dim * (lags + 1);
        let mut gram = vec![0.0; width * width];
        let mut row = vec![0.0; width];
        for t in lags..n {
            for k in 0..=lags {
                for i in 0..dim {
                    row[k * dim + i] = x[i][t - k];
                }
            }
            for a in 0..width {
                let ra = row[a];
                for (g, rb) in gram[a * width + a..(a + 1) * width].iter_mut().zip(&row[a..]) {
                    *g += ra * rb;
                }
            }
        }
        for a in 0..width {
            for b in 0..a {
                gram[a * width + b] = gram[b * width + a];
            }
        }
        Self {
            dim,
            lags,
            width,
            rows: n - lags,
            gram,
        }
    }

    /// Residual variance of `x_target` regressed on `lags` past values of `subset`.
    pub fn partial_variance(&self, subset: &[usize], target: usize) -> f64 {
        let idx: Vec<usize> = (1..=self.lags)
            .flat_map(|k| subset.iter().map(move |&c| k * self.dim + c))
            .collect();
        let g = |a: usize, b: usize| self.gram[a * self.width + b];
        let zz = DMatrix::from_fn(idx.len(), idx.len(), |a, b| g(idx[a], idx[b]));
        let zy = nalgebra::DVector::from_fn(idx.len(), |a, _| g(idx[a], target));
        let beta = zz.cholesky().expect("regressors full rank").solve(&zy);
        (g(target, target) - zy.dot(&beta)) / self.rows as f64
    }

    pub fn te(&self, source: usize, target: usize) -> f64 {
        0.5 * (self.partial_variance(&[target], target) / self.partial_variance(&[source, target], target)).ln()
    }

    pub fn joint_te(&self, sources: (usize, usize), target: usize) -> f64 {
        let all = [sources.0, sources.1, target];
        0.5 * (self.partial_variance(&[target], target) / self.partial_variance(&all, target)).ln()
    }
}

/// Autocovariances `Gamma(0..=max_lag)` of a VAR by solving the companion
/// Lyapunov equation through its Kronecker form.
pub fn var_autocovariance(var: &VarModel, max_lag: usize) -> Vec<Mat> {
    let dim = var.dim();
    let f = msid::linalg::companion(&var.coeffs, dim);
    let n = f.nrows();
    let mut q = Mat::zeros(n, n);
    q.view_mut((0, 0), (dim, dim)).copy_from(&var.sigma);
    let kron = f.kronecker(&f);
    let lhs = Mat::identity(n * n, n * n) - kron;
    let vecq = nalgebra::DVector::from_column_slice(q.as_slice());
    let vecp = lhs.lu().solve(&vecq).unwrap();
    let p = Mat::from_column_slice(n, n, vecp.as_slice());
    let mut out = Vec::with_capacity(max_lag + 1);
    let mut fp = p;
    for _ in 0..=max_lag {
        out.push(fp.view((0, 0), (dim, dim)).into_owned());
        fp = &f * fp;
    }
    out
}

/// Sample autocovariance `(1/N) sum (x_{t+h} - mean)(x_t - mean)'`.
pub fn sample_autocovariance(x: &[Vec<f64>], max_lag: usize) -> Vec<Mat> {
    let dim = x.len();
    let n = x[0].len();
    let means: Vec<f64> = x.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    (0..=max_lag)
        .map(|h| {
            Mat::from_fn(dim, dim, |i, j| {
                (0..n - h)
                    .map(|t| (x[i][t + h] - means[i]) * (x[j][t] - means[j]))
                    .sum::<f64>()
                    / n as f64
            })
        })
        .collect()
}

/// Transfer function `I + C (zI - A)^{-1} K` of an innovations model at `z`.
pub fn iss_transfer(iss: &IssModel, z: Complex<f64>) -> DMatrix<Complex<f64>> {
    let c = iss.c().map(|v| Complex::new(v, 0.0));
    let a = iss.a().map(|v| Complex::new(v, 0.0));
    let k = iss.k().map(|v| Complex::new(v, 0.0));
    let n = a.nrows();
    let resolvent = (DMatrix::<Complex<f64>>::identity(n, n) * z - a)
        .lu()
        .try_inverse()
        .unwrap();
    DMatrix::<Complex<f64>>::identity(c.nrows(), c.nrows()) + c * resolvent * k
}

/// Spectral density matrix `H V H*` of an innovations model at frequency `f`.
pub fn iss_spectrum(iss: &IssModel, f: f64) -> DMatrix<Complex<f64>> {
    let z = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * f);
    let h = iss_transfer(iss, z);
    let v = iss.v().map(|v| Complex::new(v, 0.0));
    &h * v * h.adjoint()
}

pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}
