//! Analysis configuration: defaults < JSON file < `MSID_*` environment < flags.

use serde::{Deserialize, Serialize};

use super::profile::Unit;
use crate::error::{Error, Result};
use crate::infodecomp::DecomposeSettings;
use crate::riccati::DareOptions;

pub const ENV_PREFIX: &str = "MSID_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub q: usize,
    pub r: usize,
    pub scales: Vec<usize>,
    pub p_max: usize,
    pub bandwidth: f64,
    pub dare_tol: f64,
    pub dare_max_iter: usize,
    pub unit: Unit,
    pub target: Option<String>,
    pub sources: Option<Vec<String>>,
    /// Series shorter than this produce a warning (not an error).
    pub min_length_warning: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            q: 50,
            r: 48,
            scales: (1..=12).collect(),
            p_max: 20,
            bandwidth: 0.65,
            dare_tol: 1e-12,
            dare_max_iter: 10_000,
            unit: Unit::Nats,
            target: None,
            sources: None,
            min_length_warning: 400,
        }
    }
}

/// Environment keys (after the prefix) understood by [`AnalysisConfig::apply_env`].
pub const ENV_KEYS: [&str; 11] = [
    "Q",
    "R",
    "SCALES",
    "P_MAX",
    "BANDWIDTH",
    "DARE_TOL",
    "DARE_MAX_ITER",
    "UNIT",
    "TARGET",
    "SOURCES",
    "MIN_LENGTH_WARNING",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

/// `"12"` is `1..=12`; `"a..b"` or `"a-b"` an inclusive range; otherwise a comma list.
pub fn parse_scales(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    let range = s.split_once("..").or_else(|| s.split_once('-'));
    let scales = if let Some((a, b)) = range {
        let a: usize = parse_num("scales", a)?;
        let b: usize = parse_num("scales", b.trim_start_matches('='))?;
        (a..=b).collect()
    } else if s.contains(',') {
        s.split(',')
            .map(|t| parse_num("scales", t))
            .collect::<Result<Vec<usize>>>()?
    } else {
        let n: usize = parse_num("scales", s)?;
        (1..=n).collect()
    };
    Ok(scales)
}

pub fn parse_sources(s: &str) -> Result<Vec<String>> {
    let v: Vec<String> = s.split(',').map(|t| t.trim().to_string()).collect();
    if v.len() != 2 || v.iter().any(String::is_empty) {
        return Err(Error::Config(format!("sources must be two labels like S,R, got {s:?}")));
    }
    Ok(v)
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies `MSID_*` variables from `vars`; unknown `MSID_*` names are errors.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let v = v.as_ref();
            let name = k.as_ref();
            match key {
                "Q" => self.q = parse_num(name, v)?,
                "R" => self.r = parse_num(name, v)?,
                "SCALES" => self.scales = parse_scales(v)?,
                "P_MAX" => self.p_max = parse_num(name, v)?,
                "BANDWIDTH" => self.bandwidth = parse_num(name, v)?,
                "DARE_TOL" => self.dare_tol = parse_num(name, v)?,
                "DARE_MAX_ITER" => self.dare_max_iter = parse_num(name, v)?,
                "UNIT" => self.unit = v.parse()?,
                "TARGET" => self.target = Some(v.to_string()),
                "SOURCES" => self.sources = Some(parse_sources(v)?),
                "MIN_LENGTH_WARNING" => self.min_length_warning = parse_num(name, v)?,
                _ => {
                    return Err(Error::Config(format!(
                        "unknown environment variable {name} (known: {})",
                        ENV_KEYS.map(|k| format!("{ENV_PREFIX}{k}")).join(", ")
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.q == 0 {
            return bad("q must be >= 1".into());
        }
        if self.r < 2 || !self.r.is_multiple_of(2) {
            return bad(format!("r must be an even order >= 2, got {}", self.r));
        }
        if self.scales.is_empty() || self.scales[0] == 0 || self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("scales must be >= 1 and strictly increasing, got {:?}", self.scales));
        }
        if self.p_max == 0 {
            return bad("p_max must be >= 1".into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth < 1.0) {
            return bad(format!("bandwidth exponent must lie in (0, 1), got {}", self.bandwidth));
        }
        if !(self.dare_tol > 0.0 && self.dare_tol < 1e-3) {
            return bad(format!("dare_tol must lie in (0, 1e-3), got {}", self.dare_tol));
        }
        if self.dare_max_iter == 0 {
            return bad("dare_max_iter must be >= 1".into());
        }
        if let Some(s) = &self.sources {
            if s.len() != 2 {
                return bad("sources must name exactly two channels".into());
            }
            if s[0] == s[1] || self.target.as_ref().is_some_and(|t| s.contains(t)) {
                return bad("sources and target must be distinct".into());
            }
        }
        Ok(())
    }

    pub fn dare_options(&self) -> DareOptions {
        DareOptions {
            tol: self.dare_tol,
            max_iter: self.dare_max_iter,
            ..DareOptions::default()
        }
    }

    pub fn decompose_settings(&self) -> DecomposeSettings {
        DecomposeSettings {
            q: self.q,
            r: self.r,
            scales: self.scales.clone(),
            dare: self.dare_options(),
        }
    }

    pub fn hash(&self) -> String {
        super::model_json::short_hash(self)
    }
}
