//! Benchmark cardiovascular model, VARFI realizations and the two
//! memory-parameter sweep experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infodecomp::{decompose_multiscale, DecomposeSettings, DecompositionProfile};
use crate::io::series::{SeriesMeta, TimeSeriesSet};
use crate::linalg::Mat;
use crate::model::{check_stationarity, truncate_to_var, VarfiModel};

/// Name of the innovation generator recorded in series metadata.
pub const GENERATOR: &str = "ChaCha8Rng+StandardNormal";
pub const DEFAULT_BURN_IN: usize = 10_000;
pub const DEFAULT_Q: usize = 50;

/// Channel order of the benchmark model.
pub const R: usize = 0;
pub const S: usize = 1;
pub const H: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkParams {
    pub rho_r: f64,
    pub f_r: f64,
    pub rho_s: f64,
    pub f_s: f64,
    pub rho_h: f64,
    pub f_h: f64,
    pub a_sr: f64,
    pub a_hr: f64,
    pub a_sh: f64,
    pub a_hs: f64,
    /// `(d_r, d_s, d_h)`.
    pub d: [f64; 3],
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            rho_r: 0.9,
            f_r: 0.25,
            rho_s: 0.8,
            f_s: 0.1,
            rho_h: 0.8,
            f_h: 0.1,
            a_sr: 1.0,
            a_hr: 1.0,
            a_sh: 0.1,
            a_hs: 0.4,
            d: [0.0; 3],
        }
    }
}

impl BenchmarkParams {
    pub fn uncoupled(self) -> Self {
        Self {
            a_sr: 0.0,
            a_hr: 0.0,
            a_sh: 0.0,
            a_hs: 0.0,
            ..self
        }
    }

    pub fn with_d(self, d: [f64; 3]) -> Self {
        Self { d, ..self }
    }
}

/// Three-channel `(R, S, H)` VARFI(2, d) model with unit-variance innovations.
pub fn benchmark_var(params: &BenchmarkParams) -> Result<VarfiModel> {
    let poles = [
        (params.rho_r, params.f_r),
        (params.rho_s, params.f_s),
        (params.rho_h, params.f_h),
    ];
    for &(rho, f) in &poles {
        if !(0.0..1.0).contains(&rho) || !(0.0..=0.5).contains(&f) {
            return Err(Error::Domain(format!(
                "pole modulus must lie in [0, 1) and frequency in [0, 0.5], got rho={rho}, f={f}"
            )));
        }
    }
    let mut a1 = Mat::zeros(3, 3);
    let mut a2 = Mat::zeros(3, 3);
    for (c, &(rho, f)) in poles.iter().enumerate() {
        a1[(c, c)] = 2.0 * rho * (2.0 * std::f64::consts::PI * f).cos();
        a2[(c, c)] = -rho * rho;
    }
    a1[(S, R)] = params.a_sr;
    a1[(H, R)] = params.a_hr;
    a1[(H, S)] = params.a_hs;
    a2[(S, H)] = params.a_sh;
    VarfiModel::new(
        vec![a1, a2],
        params.d.to_vec(),
        Mat::identity(3, 3),
        ["R", "S", "H"].map(String::from).to_vec(),
    )
}

/// Draws `n` samples of the VAR(p+q) truncation of `model`, discarding
/// `burn_in` initial samples.
pub fn simulate_realization(
    model: &VarfiModel,
    n: usize,
    seed: u64,
    q: usize,
    burn_in: usize,
) -> Result<TimeSeriesSet> {
    let report = check_stationarity(model);
    if !report.stable {
        return Err(Error::Unstable {
            radius: report.spectral_radius,
        });
    }
    let var = truncate_to_var(model, q)?;
    let dim = model.dim();
    let m = var.order();
    let chol = model
        .sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllPosed("innovation covariance is not positive definite".into()))?
        .l();
    // Row-major coefficient copies for the inner loop.
    let coeffs: Vec<Vec<f64>> = var
        .coeffs
        .iter()
        .map(|b| (0..dim * dim).map(|ij| b[(ij / dim, ij % dim)]).collect())
        .collect();

    let total = burn_in + n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Interleaved samples: x[t * dim + i].
    let mut x = vec![0.0; total * dim];
    let mut z = vec![0.0; dim];
    for t in 0..total {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for i in 0..dim {
            let mut acc: f64 = (0..=i).map(|j| chol[(i, j)] * z[j]).sum();
            for (k, b) in coeffs.iter().enumerate().take(m.min(t)) {
                let past = &x[(t - k - 1) * dim..(t - k) * dim];
                let row = &b[i * dim..(i + 1) * dim];
                acc += row.iter().zip(past).map(|(a, b)| a * b).sum::<f64>();
            }
            x[t * dim + i] = acc;
        }
    }
    let data = (0..dim)
        .map(|i| (burn_in..total).map(|t| x[t * dim + i]).collect())
        .collect();
    TimeSeriesSet::new(
        model.labels.clone(),
        data,
        SeriesMeta {
            seed: Some(seed),
            generator: Some(GENERATOR.into()),
            ..SeriesMeta::default()
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    /// Sweeps `d_s` with `d_r = 0.1`, `d_h = 0.45`.
    SourceMemory,
    /// Sweeps `d_h` with `d_r = 0.1`, `d_s = 0.25`.
    TargetMemory,
}

impl Experiment {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Experiment::SourceMemory),
            2 => Ok(Experiment::TargetMemory),
            _ => Err(Error::Argument(format!("experiment must be 1 or 2, got {n}"))),
        }
    }

    /// Label of the swept parameter.
    pub fn swept(self) -> &'static str {
        match self {
            Experiment::SourceMemory => "d_s",
            Experiment::TargetMemory => "d_h",
        }
    }

    /// `(d_r, d_s, d_h)` at swept value `x`.
    pub fn d_at(self, x: f64) -> [f64; 3] {
        match self {
            Experiment::SourceMemory => [0.1, x, 0.45],
            Experiment::TargetMemory => [0.1, 0.25, x],
        }
    }

    pub fn model_at(self, x: f64) -> Result<VarfiModel> {
        benchmark_var(&BenchmarkParams::default().with_d(self.d_at(x)))
    }
}

pub const SWEEP_MAX: f64 = 0.7;

/// `n` equally spaced points on `[0, 0.7]`, endpoints included.
pub fn sweep_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| SWEEP_MAX * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Theoretical profiles of the decomposition `(S, R) -> H` along the sweep,
/// ordered by swept value.
pub fn sweep_experiment(
    which: Experiment,
    n_points: usize,
    settings: &DecomposeSettings,
) -> Result<Vec<(f64, DecompositionProfile)>> {
    if n_points == 0 {
        return Err(Error::Argument("n_points must be >= 1".into()));
    }
    sweep_grid(n_points)
        .into_iter()
        .map(|x| {
            let model = which.model_at(x)?;
            Ok((x, decompose_multiscale(&model, H, (S, R), settings)?))
        })
        .collect()
}
