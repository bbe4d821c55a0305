//! Transfer entropies and their interaction (IID) and minimum-mutual-
//! information (PID) decompositions, from state-space partial variances.
//!
//! All quantities are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_stationarity, truncate_to_var, DClass, VarfiModel};
use crate::multiscale::{
    downsample_iss_with, fir_lowpass, varma_to_iss_minimal, FilterSpec, IssModel, PartialVariances,
};
use crate::riccati::DareOptions;

/// Rounding slack below zero that is reported as exactly zero.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// Measures for one target and source pair at one time scale.
///
/// `i` and `k` are the two sources, `j` the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMeasures {
    pub tau: usize,
    /// Transfer entropy from source `i` to the target.
    pub t_i: f64,
    /// Transfer entropy from source `k` to the target.
    pub t_k: f64,
    /// Joint transfer entropy from both sources.
    pub t_joint: f64,
    /// Interaction transfer entropy (positive: net synergy).
    pub interaction: f64,
    pub redundancy: f64,
    pub synergy: f64,
    pub unique_i: f64,
    pub unique_k: f64,
}

impl ScaleMeasures {
    pub const COLUMNS: [&'static str; 9] = ["tau", "T_i", "T_k", "T_joint", "I", "R", "S", "U_i", "U_k"];

    /// Builds the record from the three transfer entropies.
    pub fn from_transfer_entropies(tau: usize, t_i: f64, t_k: f64, t_joint: f64) -> Result<Self> {
        let t_i = clamp_nonnegative("T_i", t_i)?;
        let t_k = clamp_nonnegative("T_k", t_k)?;
        let t_joint = clamp_nonnegative("T_joint", t_joint)?;
        let interaction = iid_decompose(t_i, t_k, t_joint);
        let pid = pid_mmi(t_i, t_k, t_joint)?;
        Ok(Self {
            tau,
            t_i,
            t_k,
            t_joint,
            interaction,
            redundancy: pid.redundancy,
            synergy: pid.synergy,
            unique_i: pid.unique_i,
            unique_k: pid.unique_k,
        })
    }

    /// The eight measure values in column order (without `tau`).
    pub fn values(&self) -> [f64; 8] {
        [
            self.t_i,
            self.t_k,
            self.t_joint,
            self.interaction,
            self.redundancy,
            self.synergy,
            self.unique_i,
            self.unique_k,
        ]
    }

    /// Same record with sources exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            t_i: self.t_k,
            t_k: self.t_i,
            unique_i: self.unique_k,
            unique_k: self.unique_i,
            ..*self
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            tau: self.tau,
            t_i: self.t_i * factor,
            t_k: self.t_k * factor,
            t_joint: self.t_joint * factor,
            interaction: self.interaction * factor,
            redundancy: self.redundancy * factor,
            synergy: self.synergy * factor,
            unique_i: self.unique_i * factor,
            unique_k: self.unique_k * factor,
        }
    }
}

fn clamp_nonnegative(name: &'static str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NegativeMeasure { name, value: v });
    }
    if v >= 0.0 {
        Ok(v)
    } else if v >= -NEGATIVE_SLACK {
        Ok(0.0)
    } else {
        Err(Error::NegativeMeasure { name, value: v })
    }
}

/// Interaction transfer entropy `I = T_ik - T_i - T_k`.
pub fn iid_decompose(t_i: f64, t_k: f64, t_joint: f64) -> f64 {
    t_joint - (t_i + t_k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidAtoms {
    pub unique_i: f64,
    pub unique_k: f64,
    pub redundancy: f64,
    pub synergy: f64,
}

/// Minimum-mutual-information PID: redundancy is the smaller individual
/// transfer entropy.
pub fn pid_mmi(t_i: f64, t_k: f64, t_joint: f64) -> Result<PidAtoms> {
    if !(t_i <= t_joint + NEGATIVE_SLACK && t_k <= t_joint + NEGATIVE_SLACK) {
        return Err(Error::InconsistentMeasures {
            t_i,
            t_k,
            t_ik: t_joint,
        });
    }
    let redundancy = t_i.min(t_k);
    let synergy = (t_joint - (t_i + t_k)) + redundancy;
    Ok(PidAtoms {
        unique_i: t_i - redundancy,
        unique_k: t_k - redundancy,
        redundancy,
        synergy: if (-NEGATIVE_SLACK..0.0).contains(&synergy) {
            0.0
        } else {
            synergy
        },
    })
}

fn half_log_ratio(num: f64, den: f64) -> f64 {
    0.5 * (num / den).ln()
}

fn check_channel(iss: &IssModel, c: usize) -> Result<()> {
    if c >= iss.obs_dim() {
        return Err(Error::Argument(format!(
            "channel {c} out of range (model has {})",
            iss.obs_dim()
        )));
    }
    Ok(())
}

/// Transfer entropy from channel `source` to `target`, conditioning on the
/// target's own past only.
pub fn transfer_entropy(iss: &IssModel, source: usize, target: usize) -> Result<f64> {
    let pv = PartialVariances::new(iss, DareOptions::default());
    transfer_entropy_cached(&pv, source, target)
}

pub fn transfer_entropy_cached(pv: &PartialVariances<'_>, source: usize, target: usize) -> Result<f64> {
    check_channel(pv.model(), source)?;
    check_channel(pv.model(), target)?;
    if source == target {
        return Err(Error::Argument("source and target must differ".into()));
    }
    let own = pv.get(&[target], target)?;
    let with_source = pv.get(&[source, target], target)?;
    Ok(half_log_ratio(own, with_source))
}

/// Joint transfer entropy from two sources, using the full-model innovation
/// variance of the target.
pub fn joint_te(iss: &IssModel, sources: (usize, usize), target: usize) -> Result<f64> {
    let pv = PartialVariances::new(iss, DareOptions::default());
    joint_te_cached(&pv, sources, target)
}

pub fn joint_te_cached(pv: &PartialVariances<'_>, sources: (usize, usize), target: usize) -> Result<f64> {
    let (i, k) = sources;
    for c in [i, k, target] {
        check_channel(pv.model(), c)?;
    }
    if i == k || i == target || k == target {
        return Err(Error::Argument("sources and target must be distinct".into()));
    }
    let own = pv.get(&[target], target)?;
    let full = pv.model().v()[(target, target)];
    if !(full > 0.0) {
        return Err(Error::IllPosed(format!("innovation variance {full} is not positive")));
    }
    Ok(half_log_ratio(own, full))
}

/// All measures for one state-space model.
pub fn scale_measures(
    iss: &IssModel,
    tau: usize,
    sources: (usize, usize),
    target: usize,
    opts: &DareOptions,
) -> Result<ScaleMeasures> {
    let pv = PartialVariances::new(iss, *opts);
    let t_joint = joint_te_cached(&pv, sources, target)?;
    let t_i = transfer_entropy_cached(&pv, sources.0, target)?;
    let t_k = transfer_entropy_cached(&pv, sources.1, target)?;
    ScaleMeasures::from_transfer_entropies(tau, t_i, t_k, t_joint)
}

/// Settings of the multiscale pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeSettings {
    /// Truncation lag of the fractional integration.
    pub q: usize,
    /// FIR filter order.
    pub r: usize,
    pub scales: Vec<usize>,
    #[serde(skip, default)]
    pub dare: DareOptions,
}

impl Default for DecomposeSettings {
    fn default() -> Self {
        Self {
            q: 50,
            r: 48,
            scales: (1..=12).collect(),
            dare: DareOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_hash: String,
    pub settings: DecomposeSettings,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionProfile {
    pub target: String,
    /// Source labels in `(i, k)` order.
    pub sources: (String, String),
    pub scales: Vec<usize>,
    pub measures: Vec<ScaleMeasures>,
    pub provenance: Provenance,
}

impl DecompositionProfile {
    pub fn at_scale(&self, tau: usize) -> Option<&ScaleMeasures> {
        self.measures.iter().find(|m| m.tau == tau)
    }
}

/// Low-pass filter used at scale `tau` (bypass at `tau = 1`).
pub fn scale_filter(r: usize, tau: usize) -> Result<FilterSpec> {
    if tau == 0 {
        return Err(Error::Argument("scales must be >= 1".into()));
    }
    if tau == 1 {
        return Ok(FilterSpec::bypass());
    }
    fir_lowpass(r, 0.5 / tau as f64)
}

/// Multiscale decomposition of the transfer from sources `(i, k)` to
/// `target` for a VARFI model.
pub fn decompose_multiscale(
    model: &VarfiModel,
    target: usize,
    sources: (usize, usize),
    settings: &DecomposeSettings,
) -> Result<DecompositionProfile> {
    let dim = model.dim();
    let (i, k) = sources;
    for c in [i, k, target] {
        if c >= dim {
            return Err(Error::Argument(format!("channel {c} out of range (model has {dim})")));
        }
    }
    if i == k || i == target || k == target {
        return Err(Error::Argument("sources and target must be distinct".into()));
    }
    if settings.scales.is_empty() {
        return Err(Error::Argument("at least one scale is required".into()));
    }
    if settings.scales.windows(2).any(|w| w[0] >= w[1]) || settings.scales[0] == 0 {
        return Err(Error::Argument(
            "scales must be >= 1 and strictly increasing".into(),
        ));
    }

    let report = check_stationarity(model);
    if !report.stable {
        return Err(Error::Unstable {
            radius: report.spectral_radius,
        });
    }
    let mut warnings = Vec::new();
    for (c, class) in report.channels.iter().enumerate() {
        if *class == DClass::MeanReverting {
            warnings.push(format!(
                "channel {} has d = {} >= 0.5 (nonstationary, mean reverting)",
                model.labels[c], model.d[c]
            ));
        }
    }

    let var = truncate_to_var(model, settings.q)?;
    let mut measures = Vec::with_capacity(settings.scales.len());
    for (index, &tau) in settings.scales.iter().enumerate() {
        let at_scale = || -> Result<ScaleMeasures> {
            let filt = scale_filter(settings.r, tau)?;
            let iss = varma_to_iss_minimal(&var, &filt)?;
            let ds = downsample_iss_with(&iss, tau, &settings.dare)?;
            scale_measures(&ds, tau, sources, target, &settings.dare)
        };
        measures.push(at_scale().map_err(|e| Error::Scale {
            index,
            tau,
            source: Box::new(e),
        })?);
    }

    Ok(DecompositionProfile {
        target: model.labels[target].clone(),
        sources: (model.labels[i].clone(), model.labels[k].clone()),
        scales: settings.scales.clone(),
        measures,
        provenance: Provenance {
            model_hash: crate::io::model_json::model_hash(model, settings.q),
            settings: settings.clone(),
            warnings,
        },
    })
}
